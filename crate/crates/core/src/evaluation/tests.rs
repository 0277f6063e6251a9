use super::*;
use crate::synth::{planted_feature_rows, PlantedSpec};

fn rows_with_counts(counts: &[(usize, usize)]) -> Vec<FeatureVector<f64>> {
    let mut rows = Vec::new();
    for (p, &(osa, simple)) in counts.iter().enumerate() {
        for w in 0..osa + simple {
            let label = if w < osa { Label::OsaSnore } else { Label::SimpleSnore };
            let mut values = vec![0.0; 50];
            values[0] = w as f64;
            rows.push(FeatureVector::new(format!("p{p}"), w, Some(label), values).unwrap());
        }
    }
    rows
}

#[test]
fn label_mapping() {
    use ExperimentKind::*;
    assert_eq!(SnoreVsOther.map(Label::OsaSnore), Some(Class::Snore));
    assert_eq!(SnoreVsOther.map(Label::SimpleSnore), Some(Class::Snore));
    assert_eq!(OsaVsSimple.map(Label::Other), None);
    assert_eq!(Direct3Class.map(Label::Other), Some(Class::Other));
    assert_eq!("osa-vs-simple".parse::<ExperimentKind>().unwrap(), OsaVsSimple);
    let mut spec = ExperimentSpec::new(OsaVsSimple, SelectionMode::All, 0);
    assert_eq!(spec.balancing, Balancing::PerPatientEqual);
    spec.balancing = Balancing::None;
    assert!(spec.validate().is_err());
}

#[test]
fn balancing_undersamples_majority() {
    let rows = rows_with_counts(&[(10, 30), (5, 5)]);
    let kept = balance_per_patient(&rows, ExperimentKind::OsaVsSimple, 4);
    let count = |p: &str, l: Label| kept.iter().filter(|r| r.patient_id == p && r.label == Some(l)).count();
    assert_eq!((count("p0", Label::OsaSnore), count("p0", Label::SimpleSnore)), (10, 10));
    let p1: Vec<_> = kept.iter().filter(|r| r.patient_id == "p1").collect();
    let orig: Vec<_> = rows.iter().filter(|r| r.patient_id == "p1").collect();
    assert_eq!(p1, orig);
    let again = balance_per_patient(&rows, ExperimentKind::OsaVsSimple, 4);
    assert_eq!(kept, again);
    let other = balance_per_patient(&rows, ExperimentKind::OsaVsSimple, 5);
    assert_ne!(kept, other);
}

#[test]
fn patients_missing_a_class_are_skipped() {
    let rows = rows_with_counts(&[(3, 3), (0, 4), (2, 5)]);
    let spec = ExperimentSpec::new(ExperimentKind::OsaVsSimple, SelectionMode::All, 0);
    let data = Dataset::prepare(&rows, &spec).unwrap();
    assert_eq!(data.patients, vec!["p0", "p2"]);
    assert_eq!(data.skipped, vec!["p1"]);
    assert_eq!(data.samples.len(), 10);
}

#[test]
fn one_fold_per_patient_and_leak_detection() {
    let rows: Vec<FeatureVector<f64>> = planted_feature_rows(&PlantedSpec {
        n_patients: 6,
        windows_per_class_per_patient: 5,
        ..PlantedSpec::default()
    })
    .unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::SnoreVsOther, SelectionMode::Forward, 1);
    let data = Dataset::prepare(&rows, &spec).unwrap();
    let plans = plan_outer_folds(&data);
    assert_eq!(plans.len(), 6);
    let cfg = EvalConfig::default();
    let mut leaky = plans[2].clone();
    leaky.train.push(leaky.test[0]);
    assert!(matches!(
        run_fold(&data, &leaky, &spec, &LdaConfig::default(), &cfg),
        Err(Error::Leakage { count: 1, .. })
    ));
    let report = outer_loop(&rows, &spec, &LdaConfig::default(), &cfg).unwrap();
    assert_eq!(report.folds.len(), 6);
    assert_eq!(report.n_windows, 60);
}

#[test]
fn too_few_patients_refused() {
    let rows: Vec<FeatureVector<f64>> = planted_feature_rows(&PlantedSpec {
        n_patients: 2,
        ..PlantedSpec::default()
    })
    .unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::SnoreVsOther, SelectionMode::All, 0);
    assert!(matches!(
        outer_loop(&rows, &spec, &LdaConfig::default(), &EvalConfig::default()),
        Err(Error::InsufficientPatients { required: 3, found: 2 })
    ));
}

#[test]
fn report_is_deterministic_and_consistent() {
    let rows: Vec<FeatureVector<f64>> = planted_feature_rows(&PlantedSpec {
        n_patients: 5,
        windows_per_class_per_patient: 8,
        separation: 3.0,
        ..PlantedSpec::default()
    })
    .unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::SnoreVsOther, SelectionMode::Forward, 9);
    let a = outer_loop(&rows, &spec, &LdaConfig::default(), &EvalConfig::default()).unwrap();
    let b = outer_loop(&rows, &spec, &LdaConfig::default(), &EvalConfig::default()).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    for m in &a.metrics {
        let (v, lo, hi) = (m.value.unwrap(), m.ci_lower.unwrap(), m.ci_upper.unwrap());
        assert!((0.0..=1.0).contains(&v) && lo <= v && v <= hi, "{m:?}");
    }
    assert_eq!(a.selection_tally.iter().sum::<usize>() as f64, a.mean_selected_features * 5.0);
    for f in &a.folds {
        let mut s = f.selected_features.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), f.selected_features.len());
    }
    let mut csv = Vec::new();
    a.write_summary_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().nth(1).unwrap().starts_with("snore-vs-other,forward,accuracy,,"));
}
