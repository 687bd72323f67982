/**
 * Fixed-interval polling loop with an injectable scheduler, so tests can
 * drive time by hand. The interval stays at or under two seconds: a card
 * must appear promptly after a party sends its request.
 */

export const POLL_INTERVAL_MS = 1500;

export type Scheduler = (callback: () => void, ms: number) => unknown;

export interface PollerOptions {
  tick: () => Promise<void>;
  intervalMs?: number;
  schedule?: Scheduler;
}

export class Poller {
  private readonly tick: () => Promise<void>;
  private readonly intervalMs: number;
  private readonly schedule: Scheduler;
  private running = false;

  constructor(options: PollerOptions) {
    this.tick = options.tick;
    this.intervalMs = options.intervalMs ?? POLL_INTERVAL_MS;
    if (this.intervalMs > 2000) {
      throw new Error("poll interval must not exceed 2000 ms");
    }
    this.schedule = options.schedule ?? ((cb, ms) => setTimeout(cb, ms));
  }

  start(): void {
    if (this.running) {
      return;
    }
    this.running = true;
    void this.loop();
  }

  stop(): void {
    this.running = false;
  }

  private async loop(): Promise<void> {
    if (!this.running) {
      return;
    }
    try {
      await this.tick();
    } catch {
      // tick reports its own failures (connection banner); keep polling
    }
    if (this.running) {
      this.schedule(() => void this.loop(), this.intervalMs);
    }
  }
}
