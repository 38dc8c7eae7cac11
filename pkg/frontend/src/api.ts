/**
 * Typed client for the study service.
 *
 * Every write carries a deterministic idempotency key derived from the
 * step it belongs to, so a retried or re-submitted request (flaky network,
 * back navigation) is acknowledged without appending a second event.
 */

import type { Ack, CreatedSession, Demographics, TaskView } from './types.js';

export type FetchLike = (
    input: string,
    init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown>; text(): Promise<string> }>;

export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly detail: string,
    ) {
        super(`service returned ${status}: ${detail}`);
    }
}

const RETRYABLE_STATUS = new Set([502, 503, 504]);

export interface ApiClientOptions {
    fetchImpl?: FetchLike;
    retries?: number;
    retryDelayMs?: number;
    sleep?: (ms: number) => Promise<void>;
}

export class ApiClient {
    private readonly fetchImpl: FetchLike;
    private readonly retries: number;
    private readonly retryDelayMs: number;
    private readonly sleep: (ms: number) => Promise<void>;

    constructor(
        readonly baseUrl: string,
        options: ApiClientOptions = {},
    ) {
        this.fetchImpl =
            options.fetchImpl ?? (fetch as unknown as FetchLike).bind(globalThis);
        this.retries = options.retries ?? 3;
        this.retryDelayMs = options.retryDelayMs ?? 250;
        this.sleep =
            options.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
    }

    async createSession(demographics: Demographics): Promise<CreatedSession> {
        return (await this.post('/sessions', { ...demographics })) as CreatedSession;
    }

    async nextTask(sessionId: string): Promise<TaskView> {
        return (await this.request('GET', `/sessions/${sessionId}/next`)) as TaskView;
    }

    async submitSeedRating(
        sessionId: string,
        taskIndex: number,
        score: number,
    ): Promise<Ack> {
        return (await this.post(`/sessions/${sessionId}/seed-ratings`, {
            task_index: taskIndex,
            score,
            idempotency_key: `seed-${taskIndex}`,
        })) as Ack;
    }

    async submitExplanationRating(
        sessionId: string,
        trialIndex: number,
        r: number,
        tMs: number,
    ): Promise<Ack> {
        return (await this.post(
            `/sessions/${sessionId}/trials/${trialIndex}/explanation-rating`,
            { r, t_ms: tMs, idempotency_key: `trial-${trialIndex}-r` },
        )) as Ack;
    }

    async submitDetailRating(
        sessionId: string,
        trialIndex: number,
        rPrime: number,
    ): Promise<Ack> {
        return (await this.post(
            `/sessions/${sessionId}/trials/${trialIndex}/detail-rating`,
            { r_prime: rPrime, idempotency_key: `trial-${trialIndex}-rprime` },
        )) as Ack;
    }

    async submitLikert(
        sessionId: string,
        style: string,
        metric: string,
        score: number,
    ): Promise<Ack> {
        return (await this.post(`/sessions/${sessionId}/likert`, {
            style,
            metric,
            score,
            idempotency_key: `likert-${style}-${metric}`,
        })) as Ack;
    }

    async exportLog(): Promise<string> {
        const response = await this.fetchImpl(`${this.baseUrl}/export?format=ndjson`);
        return response.text();
    }

    private async post(path: string, body: unknown): Promise<unknown> {
        return this.request('POST', path, body);
    }

    /** One logical request; network failures and 5xx are retried with the
     * same body, which keeps the idempotency key stable. */
    private async request(
        method: string,
        path: string,
        body?: unknown,
    ): Promise<unknown> {
        let lastError: unknown = null;
        for (let attempt = 0; attempt <= this.retries; attempt += 1) {
            if (attempt > 0) {
                await this.sleep(this.retryDelayMs * attempt);
            }
            try {
                const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
                    method,
                    headers: { 'Content-Type': 'application/json' },
                    body: body === undefined ? undefined : JSON.stringify(body),
                });
                if (RETRYABLE_STATUS.has(response.status)) {
                    lastError = new ApiError(response.status, 'transient upstream error');
                    continue;
                }
                if (response.status >= 400) {
                    const detail = await response
                        .json()
                        .then((d) => JSON.stringify(d))
                        .catch(() => '');
                    throw new ApiError(response.status, detail);
                }
                return await response.json();
            } catch (error) {
                if (error instanceof ApiError) {
                    throw error;
                }
                lastError = error;
            }
        }
        throw lastError instanceof Error
            ? lastError
            : new Error('request failed after retries');
    }
}
