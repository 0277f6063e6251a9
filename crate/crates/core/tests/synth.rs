use snore_core::audio::{load_recording, read_labels, Label, WINDOW_SAMPLES};
use snore_core::classifier::LdaConfig;
use snore_core::config::ExtractionConfig;
use snore_core::evaluation::{outer_loop, EvalConfig, ExperimentKind, ExperimentSpec, SelectionMode};
use snore_core::features::index;
use snore_core::pipeline::extract_corpus;
use snore_core::synth::{generate_corpus, write_corpus, Span, SynthSpec};

#[test]
fn corpus_size_follows_spec() {
    let spec = SynthSpec { n_patients: 5, windows_per_class_per_patient: 10, seed: 1, ..SynthSpec::default() };
    let corpus = generate_corpus::<f32>(&spec).unwrap();
    assert_eq!(corpus.recordings.len(), 5);
    for rec in &corpus.recordings {
        assert_eq!(rec.len(), 30 * WINDOW_SAMPLES);
        assert_eq!(rec.duration_s(), 300.0);
    }
    assert_eq!(corpus.labels.len(), 150);
}

#[test]
fn written_corpus_reads_back() {
    let spec = SynthSpec { n_patients: 2, windows_per_class_per_patient: 2, seed: 5, ..SynthSpec::default() };
    let corpus = generate_corpus::<f64>(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), &spec, &corpus).unwrap();
    assert_eq!(manifest.files.len(), 3);
    assert_eq!(read_labels(dir.path().join("labels.csv")).unwrap(), corpus.labels);
    for rec in &corpus.recordings {
        let back = load_recording::<f64>(dir.path().join(format!("{}.wav", rec.patient_id())), rec.patient_id()).unwrap();
        assert_eq!(back.len(), rec.len());
        let worst = back.samples().iter().zip(rec.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 1.0 / 32768.0, "{worst}");
    }
}

#[test]
fn osa_windows_have_f0_in_band() {
    let spec = SynthSpec { n_patients: 2, windows_per_class_per_patient: 4, seed: 9, ..SynthSpec::default() };
    let corpus = generate_corpus::<f64>(&spec).unwrap();
    // Raw audio: residual tones left by spectral subtraction in the pauses
    // between bursts pass the voicing test and bias the mean F0 upwards.
    let raw = ExtractionConfig { denoise: None, ..ExtractionConfig::default() };
    let table = extract_corpus(&corpus.recordings, Some(&corpus.labels), &raw).unwrap();
    let f0: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.label == Some(Label::OsaSnore))
        .map(|r| r.values()[index::F0])
        .collect();
    assert_eq!(f0.len(), 8);
    let mean = f0.iter().sum::<f64>() / f0.len() as f64;
    assert!((60.0..=120.0).contains(&mean), "{mean} from {f0:?}");
}

/// OSA-vs-simple accuracy of the default pipeline on all features as the two
/// F0 bands move apart, with every other class parameter shared.
fn accuracy_at(separation: usize, seed: u64) -> f64 {
    let (osa, simple) = [
        (Span { min: 100.0, max: 140.0 }, Span { min: 100.0, max: 140.0 }),
        (Span { min: 80.0, max: 120.0 }, Span { min: 110.0, max: 150.0 }),
        (Span { min: 60.0, max: 85.0 }, Span { min: 155.0, max: 180.0 }),
    ][separation];
    let mut spec = SynthSpec { n_patients: 4, windows_per_class_per_patient: 6, seed, ..SynthSpec::default() };
    spec.simple_snore = spec.osa_snore.clone();
    spec.osa_snore.f0_hz = osa;
    spec.simple_snore.f0_hz = simple;
    let corpus = generate_corpus::<f64>(&spec).unwrap();
    let table = extract_corpus(&corpus.recordings, Some(&corpus.labels), &ExtractionConfig::default()).unwrap();
    let exp = ExperimentSpec::new(ExperimentKind::OsaVsSimple, SelectionMode::All, seed);
    outer_loop(&table.rows, &exp, &LdaConfig::default(), &EvalConfig::default()).unwrap().accuracy()
}

#[test]
fn wider_f0_separation_raises_accuracy() {
    for seed in [11, 12, 13] {
        let acc: Vec<f64> = (0..3).map(|s| accuracy_at(s, seed)).collect();
        assert!(acc[0] <= acc[1] && acc[1] <= acc[2] && acc[0] < acc[2], "seed {seed}: {acc:?}");
    }
}
