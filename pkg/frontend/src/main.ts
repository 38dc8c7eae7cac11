/**
 * Browser bootstrap: demographics form, then the single-page task loop.
 *
 * Configuration comes from the URL: `?service=<base url>` points at the
 * study service, and `&session=<id>` resumes an interrupted session (the
 * same link is offered whenever a request ultimately fails).
 */

import { ApiClient } from './api.js';
import { SessionFlow, type TaskPresenter } from './flow.js';
import { DecisionTimer } from './timer.js';
import { UI } from './strings.js';
import type { Demographics, TaskView, TrialExplanationTask } from './types.js';
import {
    renderComplete,
    renderDetailTask,
    renderExplanationTask,
    renderLikertTask,
    renderSeedTask,
} from './views.js';

const DEMOGRAPHIC_FIELDS: Array<{ name: keyof Demographics; label: string; options: string[] }> = [
    { name: 'age_band', label: 'Age', options: ['18-25', '26-35', '36-45', '46-55', '56+'] },
    { name: 'gender', label: 'Gender', options: ['female', 'male', 'non-binary', 'prefer not to say'] },
    { name: 'education', label: 'Highest education', options: ['secondary', 'bachelor', 'master', 'doctorate'] },
    { name: 'occupation', label: 'Occupation', options: ['student', 'researcher', 'engineer', 'teacher', 'other'] },
    { name: 'movie_frequency', label: 'How often do you watch movies?', options: ['rarely', 'monthly', 'weekly', 'several times a week'] },
];

function appRoot(): HTMLElement {
    const root = document.getElementById('app');
    if (!root) throw new Error('missing #app container');
    return root;
}

/** Render a task and resolve with the chosen score once submitted. */
function presentAndAwaitScore(html: string, onRendered?: () => void): Promise<number> {
    const root = appRoot();
    root.innerHTML = html;
    onRendered?.();
    return new Promise((resolve) => {
        const submit = root.querySelector<HTMLButtonElement>('button.submit');
        const radios = root.querySelectorAll<HTMLInputElement>('input[type=radio]');
        if (!submit) throw new Error('renderer produced no submit control');
        radios.forEach((radio) =>
            radio.addEventListener('change', () => {
                submit.disabled = false;
            }),
        );
        submit.addEventListener('click', (event) => {
            event.preventDefault();
            const chosen = root.querySelector<HTMLInputElement>(
                'input[type=radio]:checked',
            );
            if (!chosen) return; // nothing selected: no request is sent
            resolve(Number(chosen.value));
        });
    });
}

function domPresenter(): TaskPresenter {
    const timer = new DecisionTimer();
    return {
        async seedRating(task) {
            return { score: await presentAndAwaitScore(renderSeedTask(task)) };
        },
        async explanationRating(task: TrialExplanationTask) {
            // The timer starts the moment the blinded explanation renders.
            const r = await presentAndAwaitScore(renderExplanationTask(task), () =>
                timer.start(),
            );
            return { r, tMs: timer.stop() };
        },
        async detailRating(task) {
            return { rPrime: await presentAndAwaitScore(renderDetailTask(task)) };
        },
        async likert(task) {
            return { score: await presentAndAwaitScore(renderLikertTask(task)) };
        },
        complete(task: TaskView) {
            if (task.kind === 'complete') {
                appRoot().innerHTML = renderComplete(task);
            }
        },
    };
}

function collectDemographics(): Promise<Demographics> {
    const root = appRoot();
    const fields = DEMOGRAPHIC_FIELDS.map(({ name, label, options }) => {
        const items = options
            .map((o) => `<option value="${o}">${o}</option>`)
            .join('');
        return `<label class="field">${label}<select name="${name}">${items}</select></label>`;
    }).join('');
    root.innerHTML =
        `<section class="demographics"><h2>${UI.appTitle}</h2>` +
        `<form>${fields}<button type="submit" class="submit">Start</button></form></section>`;
    return new Promise((resolve) => {
        const form = root.querySelector('form');
        form?.addEventListener('submit', (event) => {
            event.preventDefault();
            const data = new FormData(form);
            resolve(
                Object.fromEntries(
                    DEMOGRAPHIC_FIELDS.map(({ name }) => [name, String(data.get(name))]),
                ) as unknown as Demographics,
            );
        });
    });
}

function resumeLink(serviceUrl: string, sessionId: string): string {
    const url = new URL(window.location.href);
    url.searchParams.set('service', serviceUrl);
    url.searchParams.set('session', sessionId);
    return url.toString();
}

export async function start(): Promise<void> {
    const params = new URLSearchParams(window.location.search);
    const serviceUrl = params.get('service') ?? 'http://localhost:8000';
    const resumeId = params.get('session') ?? undefined;
    const api = new ApiClient(serviceUrl);
    let sessionId = resumeId;
    const flow = new SessionFlow(api, domPresenter(), (id) => {
        sessionId = id;
    });
    try {
        const demographics = resumeId
            ? ({} as Demographics)
            : await collectDemographics();
        await flow.run(demographics, resumeId);
    } catch (error) {
        const root = appRoot();
        const link = sessionId ? resumeLink(serviceUrl, sessionId) : null;
        root.innerHTML =
            `<section class="error"><h2>Something went wrong</h2>` +
            `<p>${String(error)}</p>` +
            (link
                ? `<p>${UI.resumeHint}</p><p><a href="${link}">${link}</a></p>`
                : '') +
            `</section>`;
    }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
    void start();
}
