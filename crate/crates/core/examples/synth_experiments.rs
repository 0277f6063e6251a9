//! Generates a synthetic corpus, extracts features and runs the three
//! experiments. Usage: synth_experiments [spec.json] [features_cache.csv]

use std::time::Instant;

use snore_core::classifier::LdaConfig;
use snore_core::config::ExtractionConfig;
use snore_core::evaluation::{outer_loop, EvalConfig, ExperimentKind, ExperimentSpec, SelectionMode};
use snore_core::features::{read_feature_csv, write_feature_csv, FeatureVector};
use snore_core::pipeline::extract_corpus;
use snore_core::synth::{generate_corpus, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let spec: SynthSpec = match args.get(1) {
        Some(p) if p != "-" => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        _ => SynthSpec::default(),
    };
    let cache = args.get(2);
    let t = Instant::now();
    let rows: Vec<FeatureVector<f64>> = match cache.filter(|p| std::path::Path::new(p).exists()) {
        Some(p) => read_feature_csv(std::fs::File::open(p)?)?,
        None => {
            let corpus = generate_corpus::<f64>(&spec)?;
            eprintln!("generated in {:.1?}", t.elapsed());
            let rows = extract_corpus(&corpus.recordings, Some(&corpus.labels), &ExtractionConfig::default())?.rows;
            if let Some(p) = cache {
                write_feature_csv(std::fs::File::create(p)?, &rows)?;
            }
            rows
        }
    };
    eprintln!("features ready in {:.1?}", t.elapsed());
    for kind in ExperimentKind::ALL {
        for selection in [SelectionMode::Forward, SelectionMode::All] {
            let t = Instant::now();
            let report = outer_loop(&rows, &ExperimentSpec::new(kind, selection, spec.seed), &LdaConfig::default(), &EvalConfig::default())?;
            println!(
                "{kind:>15} {selection:?}: accuracy {:.4}  mean selected {:.1}  ({:.1?})",
                report.accuracy(),
                report.mean_selected_features,
                t.elapsed()
            );
        }
    }
    Ok(())
}
