/**
 * Fixed-capacity, time-ordered sample buffer backing the live plots.
 *
 * Samples arrive as (t, value) pairs; out-of-order samples (t older than the
 * newest kept sample) are dropped so the buffer stays monotone after a
 * server reset or replay. A sample can carry a gap marker, which the plot
 * renders as a break in the line (used after reconnects and dropped
 * broadcasts).
 */

export interface Sample {
  t: number;
  value: number;
  gap: boolean;
}

export class TimeSeriesBuffer {
  readonly capacity: number;
  private samples: Sample[] = [];

  constructor(capacity: number) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new Error(`buffer capacity must be a positive integer, got ${capacity}`);
    }
    this.capacity = capacity;
  }

  get length(): number {
    return this.samples.length;
  }

  get last(): Sample | null {
    return this.samples.length ? this.samples[this.samples.length - 1] : null;
  }

  /** Append a sample; returns false if it was dropped to keep time order. */
  push(t: number, value: number, gap = false): boolean {
    const last = this.last;
    if (last !== null && t < last.t) {
      return false;
    }
    this.samples.push({ t, value, gap });
    if (this.samples.length > this.capacity) {
      this.samples.splice(0, this.samples.length - this.capacity);
    }
    return true;
  }

  clear(): void {
    this.samples = [];
  }

  toArray(): readonly Sample[] {
    return this.samples;
  }
}
