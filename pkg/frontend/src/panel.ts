// Control panel actions: every user action becomes one control message; the
// server acknowledges by a later world_state reflecting it (rejections come
// back as error messages and surface in the badge).

import { GatewayClient } from "./client.js";

export class ControlPanel {
  constructor(private readonly client: GatewayClient) {}

  pause(): void {
    this.client.sendControl({ action: "pause" });
  }

  resume(): void {
    this.client.sendControl({ action: "resume" });
  }

  reset(): void {
    this.client.sendControl({ action: "reset" });
  }

  loadScene(path: string): void {
    this.client.sendControl({ action: "load_scene", path });
  }

  setRobots(count: number): void {
    if (!Number.isInteger(count) || count < 1) {
      this.client.view.errorBadge = "robot count must be a positive integer";
      return;
    }
    this.client.sendControl({ action: "set_robots", count });
  }

  selectRobot(id: number | null): void {
    this.client.view.selectedRobot = id;
  }

  graspSelected(): void {
    const id = this.client.view.selectedRobot;
    if (id === null) {
      this.client.view.errorBadge = "select a robot first";
      return;
    }
    this.client.sendControl({ action: "grasp", robot: id, lift: true });
  }

  placeSelected(x: number, y: number): void {
    const id = this.client.view.selectedRobot;
    if (id === null) {
      this.client.view.errorBadge = "select a robot first";
      return;
    }
    this.client.sendControl({ action: "place", robot: id, x, y });
  }
}
