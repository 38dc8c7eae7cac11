/** Localizable labels and per-metric questionnaire anchors. */

export const UI = {
    appTitle: 'Movie study',
    seedHeading: 'Step 1: rate this movie for the situation below',
    seedSituationIntro: 'Imagine yourself in this situation:',
    explanationHeading: 'Would you watch this movie?',
    explanationHint:
        'Only the explanation below is shown. Rate how much you would like ' +
        'this movie, from 1 (not at all) to 5 (very much).',
    detailHeading: 'Now with the full details',
    detailHint: 'Rate the same movie again, now that you can see everything.',
    likertHeading: 'About the explanations you saw',
    completeHeading: 'All done, thank you!',
    submit: 'Submit',
    resumeHint: 'Connection trouble? Use this link to resume your session:',
} as const;

const FACTOR_LABELS: Record<string, string> = {
    Weather: 'the weather is',
    PhysicalWellness: 'you are feeling',
    Location: 'you are at',
    Mood: 'your mood is',
};

export function describeSituation(situation: Record<string, string>): string[] {
    return Object.entries(situation)
        .sort(([a], [b]) => a.localeCompare(b))
        .map(([factor, condition]) => {
            const label = FACTOR_LABELS[factor] ?? `${factor}:`;
            return `${label} ${condition.replace(/_/g, ' ')}`;
        });
}

/**
 * Score anchors per metric: what 1 and 5 mean for this question.  Shown
 * with every questionnaire cell so scores stay comparable across
 * participants.
 */
export const LIKERT_ANCHORS: Record<string, { low: string; high: string }> = {
    Efficiency: {
        low: 'it did not help me decide any faster at all',
        high: 'it helped me decide much faster',
    },
    Effectiveness: {
        low: 'it does not help me make good decisions at all',
        high: 'it helps me make good decisions',
    },
    Persuasiveness: {
        low: 'it did not make the movie any more appealing',
        high: 'it strongly convinced me to watch the movie',
    },
    Satisfaction: {
        low: 'seeing it was unpleasant or useless',
        high: 'seeing it made the system nicer to use',
    },
    Trust: {
        low: 'it did not increase my confidence in the system',
        high: 'it clearly increased my confidence in the system',
    },
    Transparency: {
        low: 'it did not help me understand how the system works',
        high: 'it made the system easy to understand',
    },
};

export function anchorsFor(metric: string): { low: string; high: string } {
    return (
        LIKERT_ANCHORS[metric] ?? {
            low: 'not at all',
            high: 'very much',
        }
    );
}
