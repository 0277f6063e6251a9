use super::*;

fn small() -> SynthSpec {
    SynthSpec {
        n_patients: 2,
        windows_per_class_per_patient: 2,
        seed: 11,
        ..SynthSpec::default()
    }
}

#[test]
fn labels_tile_recordings() {
    let spec = small();
    let corpus: Corpus<f64> = generate_corpus(&spec).unwrap();
    assert_eq!(corpus.recordings.len(), 2);
    assert_eq!(corpus.labels.len(), 12);
    for rec in &corpus.recordings {
        assert_eq!(rec.len(), 6 * WINDOW_SAMPLES);
        let events: Vec<_> = corpus.labels.iter().filter(|e| e.patient_id == rec.patient_id()).collect();
        for (i, e) in events.iter().enumerate() {
            assert_eq!(e.start_s, 10.0 * i as f64);
            assert_eq!(e.end_s - e.start_s, 10.0);
        }
        for l in Label::ALL {
            assert_eq!(events.iter().filter(|e| e.label == l).count(), 2);
        }
    }
    audio::validate_events(&corpus.labels).unwrap();
}

#[test]
fn same_seed_same_audio() {
    let a: Corpus<f64> = generate_corpus(&small()).unwrap();
    let b: Corpus<f64> = generate_corpus(&small()).unwrap();
    assert_eq!(audio::wav_bytes(&a.recordings[1]), audio::wav_bytes(&b.recordings[1]));
    let c: Corpus<f64> = generate_corpus(&SynthSpec { seed: 12, ..small() }).unwrap();
    assert_ne!(audio::wav_bytes(&a.recordings[0]), audio::wav_bytes(&c.recordings[0]));
}

#[test]
fn degenerate_spec_rejected() {
    let mut spec = small();
    spec.osa_snore.f0_hz = Span::new(100.0, 100.0);
    assert!(generate_corpus::<f64>(&spec).is_err());
    let mut spec = small();
    spec.other.snr_db = Span::new(f64::NEG_INFINITY, 0.0);
    assert!(spec.validate().is_err());
    assert!(SynthSpec { n_patients: 0, ..small() }.validate().is_err());
}

#[test]
fn patient_ids_are_padded() {
    let spec = SynthSpec { n_patients: 12, ..small() };
    let ids = spec.patient_ids();
    assert_eq!(ids[0], "p01");
    assert_eq!(ids[11], "p12");
}
