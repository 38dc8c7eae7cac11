/**
 * Decision timing for explanation screens.
 *
 * Uses a monotonic clock: wall-clock adjustments (NTP, DST) must never
 * corrupt the measured render-to-submit interval.
 */

export type MonotonicNow = () => number;

export class DecisionTimer {
    private startedAt: number | null = null;

    constructor(private readonly now: MonotonicNow = () => performance.now()) {}

    /** Call exactly when the explanation becomes visible. */
    start(): void {
        this.startedAt = this.now();
    }

    get running(): boolean {
        return this.startedAt !== null;
    }

    /** Milliseconds since start(), as the integer the service expects. */
    stop(): number {
        if (this.startedAt === null) {
            throw new Error('timer was never started');
        }
        const elapsed = Math.max(0, Math.round(this.now() - this.startedAt));
        this.startedAt = null;
        return elapsed;
    }
}
