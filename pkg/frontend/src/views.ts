/**
 * Pure renderers: task payload in, HTML string out.
 *
 * Keeping these as string functions makes the blinding contract testable
 * without a browser: the explanation screen's markup is generated from
 * the explanation text and the rating control alone, so no movie metadata
 * can leak into it.
 */

import { anchorsFor, describeSituation, UI } from './strings.js';
import type {
    CompleteTask,
    LikertTask,
    MovieView,
    SeedRatingTask,
    TrialDetailTask,
    TrialExplanationTask,
} from './types.js';

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;')
        .replace(/'/g, '&#39;');
}

function progressLine(done: number, total: number): string {
    return `<p class="progress">${done} of ${total}</p>`;
}

/** Five stars plus a submit button that stays disabled until a score is
 * picked; submission without a selection never fires a request. */
export function renderStarControl(name: string): string {
    const stars = [1, 2, 3, 4, 5]
        .map(
            (score) =>
                `<label class="star"><input type="radio" name="${escapeHtml(name)}"` +
                ` value="${score}"><span>${score}</span></label>`,
        )
        .join('');
    return (
        `<fieldset class="stars" data-rating="${escapeHtml(name)}">${stars}</fieldset>` +
        `<button type="submit" class="submit" disabled>${UI.submit}</button>`
    );
}

export function renderMovieCard(movie: MovieView): string {
    const facts: string[] = [];
    if (movie.director) facts.push(`Directed by ${escapeHtml(movie.director)}`);
    if (movie.actors.length) {
        facts.push(`Starring ${movie.actors.map(escapeHtml).join(', ')}`);
    }
    if (movie.genres.length) {
        facts.push(movie.genres.map(escapeHtml).join(' / '));
    }
    if (movie.year) facts.push(String(movie.year));
    return (
        `<div class="movie-card"><h3>${escapeHtml(movie.title)}</h3>` +
        `<p>${facts.join(' &middot; ')}</p></div>`
    );
}

export function renderSeedTask(task: SeedRatingTask): string {
    const answered = task.progress.answered ?? 0;
    const situation = describeSituation(task.situation)
        .map((line) => `<li>${escapeHtml(line)}</li>`)
        .join('');
    return (
        `<section class="seed-task">` +
        `<h2>${UI.seedHeading}</h2>` +
        progressLine(answered, task.progress.total) +
        renderMovieCard(task.movie) +
        `<p>${UI.seedSituationIntro}</p><ul class="situation">${situation}</ul>` +
        renderStarControl(`seed-${task.task_index}`) +
        `</section>`
    );
}

export function renderExplanationTask(task: TrialExplanationTask): string {
    const done = task.progress.completed ?? 0;
    return (
        `<section class="trial-explanation" data-handle="${escapeHtml(task.trial_handle)}">` +
        `<h2>${UI.explanationHeading}</h2>` +
        progressLine(done, task.progress.total) +
        `<p class="hint">${UI.explanationHint}</p>` +
        `<blockquote class="explanation">${escapeHtml(task.explanation_text)}</blockquote>` +
        renderStarControl(`trial-${task.trial_index}-r`) +
        `</section>`
    );
}

export function renderDetailTask(task: TrialDetailTask): string {
    const done = task.progress.completed ?? 0;
    return (
        `<section class="trial-detail">` +
        `<h2>${UI.detailHeading}</h2>` +
        progressLine(done, task.progress.total) +
        renderMovieCard(task.movie) +
        `<blockquote class="explanation">${escapeHtml(task.explanation_text)}</blockquote>` +
        `<p class="hint">${UI.detailHint}</p>` +
        renderStarControl(`trial-${task.trial_index}-rprime`) +
        `</section>`
    );
}

export function renderLikertTask(task: LikertTask): string {
    const answered = task.progress.answered ?? 0;
    const anchors = anchorsFor(task.metric);
    return (
        `<section class="likert-task">` +
        `<h2>${UI.likertHeading}</h2>` +
        progressLine(answered, task.progress.total) +
        `<p>For the <strong>${escapeHtml(task.style)}</strong> explanation you saw:` +
        ` how would you rate its <strong>${escapeHtml(task.metric)}</strong>?</p>` +
        `<p class="hint">${escapeHtml(task.metric_description)}</p>` +
        `<p class="anchors">1 means ${escapeHtml(anchors.low)}; ` +
        `5 means ${escapeHtml(anchors.high)}.</p>` +
        renderStarControl(`likert-${task.style}-${task.metric}`) +
        `</section>`
    );
}

export function renderComplete(task: CompleteTask): string {
    return (
        `<section class="complete"><h2>${UI.completeHeading}</h2>` +
        `<p>Your responses were recorded (<code>${escapeHtml(task.export)}</code>).</p>` +
        `</section>`
    );
}
