// Reconnect backoff: exponential up to a 1 s steady state, so a dead
// gateway sees at most one connection attempt per second.

export const INITIAL_DELAY_MS = 250;
export const MAX_DELAY_MS = 1000;

export class Backoff {
  private attempt = 0;

  nextDelayMs(): number {
    const delay = Math.min(MAX_DELAY_MS, INITIAL_DELAY_MS * 2 ** this.attempt);
    this.attempt += 1;
    return delay;
  }

  reset(): void {
    this.attempt = 0;
  }
}
