// Latest-wins rate limiter for pointer-driven messages: emits immediately
// when the rate budget allows, otherwise remembers only the newest value and
// flushes it when the window reopens. Never exceeds maxHz, never queues.

export interface Clock {
  now(): number;                                    // milliseconds
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

export const systemClock: Clock = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
};

export function latestWinsThrottle<T>(
  emit: (value: T) => void,
  maxHz: number,
  clock: Clock = systemClock,
): (value: T) => void {
  const interval = 1000 / maxHz;
  let lastEmit = -Infinity;
  let pending: { value: T } | null = null;
  let timer: unknown = null;

  const flush = () => {
    timer = null;
    if (pending !== null) {
      const v = pending.value;
      pending = null;
      lastEmit = clock.now();
      emit(v);
    }
  };

  return (value: T) => {
    const now = clock.now();
    if (now - lastEmit >= interval && timer === null) {
      lastEmit = now;
      emit(value);
      return;
    }
    pending = { value };
    if (timer === null) {
      timer = clock.setTimeout(flush, Math.max(0, interval - (now - lastEmit)));
    }
  };
}
