/** Wire types mirroring the study service's JSON payloads. */

export interface MovieView {
    movie_id: string;
    title: string;
    director: string;
    actors: string[];
    genres: string[];
    year: number;
}

export interface Progress {
    answered?: number;
    completed?: number;
    total: number;
}

export interface SeedRatingTask {
    kind: 'seed_rating';
    task_index: number;
    movie: MovieView;
    situation: Record<string, string>;
    progress: Progress;
}

/** Blinded view: explanation text and an opaque handle only. */
export interface TrialExplanationTask {
    kind: 'trial_explanation';
    trial_index: number;
    trial_handle: string;
    explanation_text: string;
    progress: Progress;
}

export interface TrialDetailTask {
    kind: 'trial_detail';
    trial_index: number;
    style: string;
    explanation_text: string;
    movie: MovieView;
    progress: Progress;
}

export interface LikertTask {
    kind: 'likert';
    style: string;
    metric: string;
    metric_description: string;
    progress: Progress;
}

export interface CompleteTask {
    kind: 'complete';
    export: string;
}

export type TaskView =
    | SeedRatingTask
    | TrialExplanationTask
    | TrialDetailTask
    | LikertTask
    | CompleteTask;

export interface Demographics {
    age_band: string;
    gender: string;
    education: string;
    occupation: string;
    movie_frequency: string;
}

export interface CreatedSession {
    session_id: string;
    next: TaskView;
}

export interface Ack {
    ok: boolean;
    seq: number;
    session_seq: number;
    session_id: string;
    phase: string;
}
