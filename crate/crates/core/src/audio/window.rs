use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{validate_events, Label, LabeledEvent, Recording, WINDOW_SAMPLES, WINDOW_SECONDS};

/// One non-overlapping 10 s slice of a recording.
#[derive(Clone, Copy, Debug)]
pub struct AnalysisWindow<'a, T> {
    pub patient_id: &'a str,
    pub index: usize,
    pub start_s: f64,
    pub samples: &'a [T],
    pub label: Option<Label>,
}

/// Number of full windows in `n_samples`; a trailing partial window is dropped.
pub fn window_count(n_samples: usize) -> usize {
    n_samples / WINDOW_SAMPLES
}

/// Splits a recording into unlabeled windows aligned to the recording start.
pub fn split_windows<T: Real>(rec: &Recording<T>) -> Vec<AnalysisWindow<'_, T>> {
    rec.samples()
        .chunks_exact(WINDOW_SAMPLES)
        .enumerate()
        .map(|(index, samples)| AnalysisWindow {
            patient_id: rec.patient_id(),
            index,
            start_s: index as f64 * WINDOW_SECONDS,
            samples,
            label: None,
        })
        .collect()
}

/// Splits a recording into windows and assigns each the class with the largest
/// coverage. Unlabeled time counts towards `Other`, and ties resolve to `Other`.
pub fn window_recording<'a, T: Real>(
    rec: &'a Recording<T>,
    labels: &[LabeledEvent],
) -> Result<Vec<AnalysisWindow<'a, T>>> {
    if let Some(e) = labels.iter().find(|e| e.patient_id != rec.patient_id()) {
        return Err(Error::validation(format!(
            "label for patient {} applied to recording of patient {}",
            e.patient_id,
            rec.patient_id()
        )));
    }
    validate_events(labels)?;

    let mut sorted: Vec<&LabeledEvent> = labels.iter().collect();
    sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));

    let mut windows = split_windows(rec);
    for w in &mut windows {
        w.label = Some(majority_label(&sorted, w.start_s, w.start_s + WINDOW_SECONDS));
    }
    Ok(windows)
}

/// `events` must be sorted by start and non-overlapping, so ends are sorted too.
fn majority_label(events: &[&LabeledEvent], start: f64, end: f64) -> Label {
    let first = events.partition_point(|e| e.end_s <= start);
    let mut coverage = [0.0_f64; 3];
    for e in events[first..].iter().take_while(|e| e.start_s < end) {
        let overlap = e.end_s.min(end) - e.start_s.max(start);
        if overlap > 0.0 {
            coverage[e.label.slot()] += overlap;
        }
    }
    let covered: f64 = coverage.iter().sum();
    coverage[Label::Other.slot()] += (end - start - covered).max(0.0);

    const TIE_EPS: f64 = 1e-9;
    let best = coverage.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut winners = Label::ALL
        .into_iter()
        .filter(|l| coverage[l.slot()] >= best - TIE_EPS);
    match (winners.next(), winners.next()) {
        (Some(only), None) => only,
        _ => Label::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(seconds: usize) -> Recording<f64> {
        let samples = (0..seconds * 16_000)
            .map(|i| ((i % 1000) as f64 / 1000.0) - 0.5)
            .collect();
        Recording::new("p", samples).unwrap()
    }

    fn ev(s: f64, e: f64, l: Label) -> LabeledEvent {
        LabeledEvent::new("p", s, e, l)
    }

    /// Independent coverage oracle: sample the interval on a fine grid.
    fn grid_majority(events: &[LabeledEvent], start: f64, end: f64) -> Label {
        let steps = 10_000;
        let mut counts = [0usize; 3];
        for k in 0..steps {
            let t = start + (k as f64 + 0.5) * (end - start) / steps as f64;
            let l = events
                .iter()
                .find(|e| e.start_s <= t && t < e.end_s)
                .map_or(Label::Other, |e| e.label);
            counts[l.slot()] += 1;
        }
        let max = *counts.iter().max().unwrap();
        let winners: Vec<_> = (0..3).filter(|&i| counts[i] == max).collect();
        if winners.len() == 1 {
            Label::ALL[winners[0]]
        } else {
            Label::Other
        }
    }

    #[test]
    fn trailing_partial_window_dropped() {
        let r = rec(35);
        let w = window_recording(&r, &[]).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w.iter().all(|w| w.samples.len() == WINDOW_SAMPLES));
        assert_eq!(w[2].start_s, 20.0);
    }

    #[test]
    fn full_coverage_and_majority() {
        let r = rec(30);
        let labels = vec![
            ev(0.0, 10.0, Label::OsaSnore),
            ev(10.0, 16.0, Label::SimpleSnore),
            ev(20.0, 25.0, Label::OsaSnore),
        ];
        let w = window_recording(&r, &labels).unwrap();
        assert_eq!(w[0].label, Some(Label::OsaSnore));
        // 6 s simple snore, 4 s unlabeled
        assert_eq!(w[1].label, Some(Label::SimpleSnore));
        assert_eq!(w[1].label, Some(grid_majority(&labels, 10.0, 20.0)));
        // 5 s osa / 5 s unlabeled tie
        assert_eq!(w[2].label, Some(Label::Other));
    }

    #[test]
    fn foreign_or_overlapping_labels_rejected() {
        let r = rec(10);
        let foreign = vec![LabeledEvent::new("q", 0.0, 1.0, Label::Other)];
        assert!(window_recording(&r, &foreign).is_err());
        let overlapping = vec![ev(0.0, 5.0, Label::Other), ev(4.0, 6.0, Label::OsaSnore)];
        assert!(matches!(
            window_recording(&r, &overlapping),
            Err(Error::Validation(_))
        ));
    }

    fn arb_events() -> impl Strategy<Value = Vec<LabeledEvent>> {
        prop::collection::vec((0.1f64..8.0, 0.0f64..4.0, 0usize..3), 0..10).prop_map(|parts| {
            let mut t = 0.0;
            let mut out = Vec::new();
            for (len, gap, l) in parts {
                t += gap;
                out.push(ev(t, t + len, Label::ALL[l]));
                t += len;
            }
            out
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn windows_concatenate_to_prefix(extra in 0usize..WINDOW_SAMPLES) {
            let samples: Vec<f64> = (0..2 * WINDOW_SAMPLES + extra).map(|i| (i % 97) as f64 / 200.0).collect();
            let r = Recording::new("p", samples.clone()).unwrap();
            let w = split_windows(&r);
            prop_assert_eq!(w.len(), window_count(samples.len()));
            let joined: Vec<f64> = w.iter().flat_map(|w| w.samples.iter().copied()).collect();
            prop_assert_eq!(&joined[..], &samples[..2 * WINDOW_SAMPLES]);
        }

        #[test]
        fn majority_matches_oracle_and_ignores_order(events in arb_events(), rot in 0usize..10) {
            let r = rec(40);
            let labelled = window_recording(&r, &events).unwrap();
            let mut permuted = events.clone();
            if !permuted.is_empty() {
                let k = rot % permuted.len();
                permuted.rotate_left(k);
                permuted.reverse();
            }
            let again = window_recording(&r, &permuted).unwrap();
            for (a, b) in labelled.iter().zip(&again) {
                prop_assert_eq!(a.label, b.label);
            }
            for w in &labelled {
                // skip windows whose coverage is within the grid oracle's resolution of a tie
                let oracle = grid_majority(&events, w.start_s, w.start_s + 10.0);
                let near_tie = {
                    let mut cov = [0.0; 3];
                    for e in &events {
                        let o = e.end_s.min(w.start_s + 10.0) - e.start_s.max(w.start_s);
                        if o > 0.0 { cov[e.label.slot()] += o; }
                    }
                    let c: f64 = cov.iter().sum();
                    cov[2] += 10.0 - c;
                    let mut s = cov;
                    s.sort_by(|a, b| b.total_cmp(a));
                    (s[0] - s[1]).abs() < 0.01
                };
                if !near_tie {
                    prop_assert_eq!(w.label, Some(oracle));
                }
            }
        }
    }
}
