/**
 * Browser bootstrap: wires the renderers to the API client, keeps at
 * most one decision/apply request in flight, and refreshes the list
 * whenever the server's snapshot counter advances (long-poll).
 */

import { ApiClient, ApiError } from "./api.js";
import { groupCards } from "./model.js";
import {
  renderBanner, renderDiff, renderGroups, renderNoPlan, renderToast,
} from "./render.js";

export class Panel {
  private busy = false;
  private counter = 0;
  private stopped = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {}

  async start(): Promise<void> {
    this.root.addEventListener("click", (ev) => {
      void this.onClick(ev);
    });
    await this.refresh();
    void this.pollLoop();
  }

  stop(): void {
    this.stopped = true;
  }

  async refresh(): Promise<void> {
    try {
      const payload = await this.client.specs();
      this.root.innerHTML = renderGroups(groupCards(payload.records));
    } catch (err) {
      this.root.innerHTML = renderBanner(
        `Cannot reach the side-car: ${String(err)}`, true);
    }
  }

  private async pollLoop(): Promise<void> {
    while (!this.stopped) {
      try {
        const payload = await this.client.events(this.counter);
        if (payload.counter > this.counter) {
          this.counter = payload.counter;
          await this.refresh();
        }
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 2000));
      }
    }
  }

  private toast(message: string): void {
    const el = document.createElement("div");
    el.innerHTML = renderToast(message);
    this.root.prepend(el);
    setTimeout(() => el.remove(), 4000);
  }

  private async onClick(ev: Event): Promise<void> {
    const target = ev.target as HTMLElement | null;
    if (!target || !(target instanceof HTMLButtonElement)) return;
    const action = target.dataset.action;
    if (!action) return;
    if (action === "retry") {
      await this.refresh();
      return;
    }
    const id = target.dataset.id;
    if (!id || this.busy) return;
    this.busy = true;
    try {
      if (action === "decide") {
        await this.client.decide(
          id, target.dataset.status as "accepted" | "rejected" | "soft");
        await this.refresh();
      } else if (action === "diff") {
        const slot = this.root.querySelector(
          `[data-diff-for="${id}"]`) as HTMLElement | null;
        if (slot) {
          try {
            const plan = await this.client.fix(id);
            slot.innerHTML = renderDiff(plan);
          } catch (err) {
            slot.innerHTML = renderNoPlan(
              err instanceof ApiError ? err.reason : String(err));
          }
        }
      } else if (action === "apply") {
        try {
          await this.client.applyFix(id);
          this.toast("Fix applied.");
        } catch (err) {
          if (err instanceof ApiError && err.status === 409) {
            this.toast("The workspace changed under this plan; refreshed.");
          } else {
            this.toast(`Apply failed: ${String(err)}`);
          }
        }
        await this.refresh();
      }
    } finally {
      this.busy = false;
    }
  }
}

export function mount(): Panel {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const panel = new Panel(root, new ApiClient(""));
  void panel.start();
  return panel;
}

declare global {
  interface Window {
    vibeguardPanel?: Panel;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.vibeguardPanel = mount();
}
