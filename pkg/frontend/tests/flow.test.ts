import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { SessionFlow, type TaskPresenter } from '../src/flow.js';
import { DecisionTimer } from '../src/timer.js';
import { FakeService } from './fake_service.js';

const DEMOGRAPHICS = {
    age_band: '26-35',
    gender: 'female',
    education: 'master',
    occupation: 'researcher',
    movie_frequency: 'weekly',
};

function scriptedPresenter(): TaskPresenter {
    return {
        seedRating: async (task) => ({ score: (task.task_index % 5) + 1 }),
        explanationRating: async () => ({ r: 4, tMs: 1234 }),
        detailRating: async () => ({ rPrime: 3 }),
        likert: async () => ({ score: 4 }),
    };
}

function client(service: FakeService): ApiClient {
    return new ApiClient('http://fake', {
        fetchImpl: service.fetch,
        retryDelayMs: 0,
        sleep: async () => undefined,
    });
}

describe('SessionFlow', () => {
    it('completes the full 61-event protocol walk', async () => {
        const service = new FakeService();
        const flow = new SessionFlow(client(service), scriptedPresenter());
        const result = await flow.run(DEMOGRAPHICS);
        expect(result.sessionId).toBe('fake-1');
        // 12 seeds + 6 r + 6 r' + 36 likert answered through the UI loop.
        expect(result.steps).toBe(60);
        // Including session creation, the service recorded 61 events.
        expect(service.events).toHaveLength(61);
        const kinds = service.events.map((e) => e.type);
        expect(kinds.filter((k) => k === 'seed_rating')).toHaveLength(12);
        expect(kinds.filter((k) => k === 'explanation_rating')).toHaveLength(6);
        expect(kinds.filter((k) => k === 'detail_rating')).toHaveLength(6);
        expect(kinds.filter((k) => k === 'likert')).toHaveLength(36);
    });

    it('covers every style/metric questionnaire cell exactly once', async () => {
        const service = new FakeService();
        await new SessionFlow(client(service), scriptedPresenter()).run(
            DEMOGRAPHICS,
        );
        const cells = service.events
            .filter((e) => e.type === 'likert')
            .map((e) => `${e.body.style}:${e.body.metric}`);
        expect(new Set(cells).size).toBe(36);
    });

    it('reports the session id as soon as it is known', async () => {
        const service = new FakeService();
        let seen: string | null = null;
        const flow = new SessionFlow(
            client(service),
            scriptedPresenter(),
            (id) => {
                seen = id;
            },
        );
        await flow.run(DEMOGRAPHICS);
        expect(seen).toBe('fake-1');
    });

    it('survives transient network failures without duplicating events', async () => {
        const service = new FakeService();
        const flow = new SessionFlow(client(service), scriptedPresenter());
        // Fail the first attempt of an early write; the retry reuses the
        // same idempotency key, so the event count stays exact.
        service.failNextRequests = 1;
        await flow.run(DEMOGRAPHICS);
        expect(service.events).toHaveLength(61);
    });

    it('measured decision time reaches the service within tolerance', async () => {
        const service = new FakeService();
        const timer = new DecisionTimer();
        const references: number[] = [];
        const presenter: TaskPresenter = {
            ...scriptedPresenter(),
            explanationRating: async (task) => {
                timer.start();
                const begin = performance.now();
                await new Promise((r) => setTimeout(r, 60 + 20 * task.trial_index));
                references[task.trial_index] = performance.now() - begin;
                return { r: 4, tMs: timer.stop() };
            },
        };
        await new SessionFlow(client(service), presenter).run(DEMOGRAPHICS);
        for (let k = 0; k < 6; k += 1) {
            expect(Math.abs(service.recordedTms(k) - references[k])).toBeLessThanOrEqual(
                50,
            );
        }
    });

    it('resumes an existing session without creating a new one', async () => {
        const service = new FakeService();
        const api = client(service);
        await api.submitSeedRating('fake-1', 0, 3); // pre-existing progress
        const flow = new SessionFlow(api, scriptedPresenter());
        const result = await flow.run(DEMOGRAPHICS, 'fake-1');
        expect(result.sessionId).toBe('fake-1');
        const creations = service.events.filter(
            (e) => e.type === 'session_created',
        );
        expect(creations).toHaveLength(0);
        expect(service.events).toHaveLength(60);
    });
});
