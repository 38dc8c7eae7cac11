/**
 * The session walker: repeatedly asks the service what comes next and
 * presents it.  All protocol logic lives on the server; this loop only
 * renders tasks and posts answers, so it works identically in a browser
 * and in headless tests.
 */

import type { ApiClient } from './api.js';
import type {
    Demographics,
    LikertTask,
    SeedRatingTask,
    TaskView,
    TrialDetailTask,
    TrialExplanationTask,
} from './types.js';

/**
 * The UI side of the flow.  Each handler presents one task and resolves
 * with the participant's answer; the explanation handler also reports the
 * render-to-submit time it measured.
 */
export interface TaskPresenter {
    seedRating(task: SeedRatingTask): Promise<{ score: number }>;
    explanationRating(
        task: TrialExplanationTask,
    ): Promise<{ r: number; tMs: number }>;
    detailRating(task: TrialDetailTask): Promise<{ rPrime: number }>;
    likert(task: LikertTask): Promise<{ score: number }>;
    complete?(task: TaskView): void;
}

export interface FlowResult {
    sessionId: string;
    steps: number;
}

export class SessionFlow {
    constructor(
        private readonly api: ApiClient,
        private readonly presenter: TaskPresenter,
        /** Called as soon as the session id is known (for resume links). */
        private readonly onSession?: (sessionId: string) => void,
    ) {}

    /** Run a session to completion; pass `resumeSessionId` to continue an
     * existing one instead of creating a new session. */
    async run(
        demographics: Demographics,
        resumeSessionId?: string,
    ): Promise<FlowResult> {
        let sessionId = resumeSessionId;
        if (!sessionId) {
            const created = await this.api.createSession(demographics);
            sessionId = created.session_id;
        }
        this.onSession?.(sessionId);
        let steps = 0;
        for (;;) {
            const task = await this.api.nextTask(sessionId);
            if (task.kind === 'complete') {
                this.presenter.complete?.(task);
                return { sessionId, steps };
            }
            steps += 1;
            if (task.kind === 'seed_rating') {
                const { score } = await this.presenter.seedRating(task);
                await this.api.submitSeedRating(sessionId, task.task_index, score);
            } else if (task.kind === 'trial_explanation') {
                const { r, tMs } = await this.presenter.explanationRating(task);
                await this.api.submitExplanationRating(
                    sessionId,
                    task.trial_index,
                    r,
                    tMs,
                );
            } else if (task.kind === 'trial_detail') {
                const { rPrime } = await this.presenter.detailRating(task);
                await this.api.submitDetailRating(sessionId, task.trial_index, rPrime);
            } else if (task.kind === 'likert') {
                const { score } = await this.presenter.likert(task);
                await this.api.submitLikert(sessionId, task.style, task.metric, score);
            } else {
                throw new Error(`unknown task kind: ${(task as { kind: string }).kind}`);
            }
        }
    }
}
