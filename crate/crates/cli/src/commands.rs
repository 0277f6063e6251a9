use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use snore_core::audio::{load_recording, read_labels, write_wav, Recording, WINDOW_SECONDS};
use snore_core::classifier::{load_model, save_model};
use snore_core::config::PipelineConfig;
use snore_core::denoise::{estimate_noise, spectral_subtract, DenoiseConfig};
use snore_core::evaluation::{outer_loop, train_model, ExperimentSpec, SelectionMode};
use snore_core::features::{read_feature_csv, write_feature_csv, FeatureSidecar};
use snore_core::pipeline::extract_corpus;
use snore_core::synth::{generate_corpus, write_corpus, SynthSpec};
use snore_core::{FeatureVector, LdaModel};

use crate::{ClassifyArgs, Cli, Command, DenoiseArgs, EvaluateArgs, ExperimentArgs, ExtractArgs, SynthArgs, TrainArgs};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::Denoise(args) => denoise(args, &config),
        Command::Extract(args) => extract(args, &config),
        Command::Evaluate(args) => evaluate(args, &config),
        Command::Train(args) => train(args, &config),
        Command::Classify(args) => classify(args, &config),
    }
}

/// `features.csv` -> `features.csv.meta.json`.
fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .with_context(|| format!("cannot derive a patient id from {}", path.display()))
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec: SynthSpec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SynthSpec::default(),
    };
    if let Some(n) = args.patients {
        spec.n_patients = n;
    }
    if let Some(w) = args.windows {
        spec.windows_per_class_per_patient = w;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let corpus = generate_corpus::<f64>(&spec)?;
    let manifest = write_corpus(&args.out, &spec, &corpus)?;
    log::info!(
        "wrote {} recordings and {} labels to {} (spec digest {})",
        corpus.recordings.len(),
        corpus.labels.len(),
        args.out.display(),
        manifest.spec_digest
    );
    Ok(())
}

#[derive(Serialize)]
struct DenoiseSidecar<'a> {
    config_digest: String,
    denoise: &'a DenoiseConfig,
    snr_before_db: Option<f64>,
    snr_after_db: Option<f64>,
}

fn snr_db(clean: &[f64], estimate: &[f64]) -> f64 {
    let signal: f64 = clean.iter().map(|c| c * c).sum();
    let error: f64 = clean.iter().zip(estimate).map(|(c, e)| (c - e) * (c - e)).sum();
    10.0 * (signal / error).log10()
}

fn denoise(args: DenoiseArgs, config: &PipelineConfig) -> Result<()> {
    let cfg = config.extraction.denoise.clone().unwrap_or_default();
    let id = file_stem(&args.input)?;
    let rec: Recording<f64> = load_recording(&args.input, &id)?;
    let out = spectral_subtract(&rec, &estimate_noise(&rec, &cfg)?, &cfg)?;
    write_wav(&args.output, &out)?;

    let (mut before, mut after) = (None, None);
    if let Some(path) = &args.reference {
        let clean: Recording<f64> = load_recording(path, &id)?;
        if clean.len() != rec.len() {
            bail!("reference has {} samples, input has {}", clean.len(), rec.len());
        }
        let b = snr_db(clean.samples(), rec.samples());
        let a = snr_db(clean.samples(), out.samples());
        println!("snr_before_db={b:.2} snr_after_db={a:.2} gain_db={:.2}", a - b);
        (before, after) = (Some(b), Some(a));
    }
    write_json(
        &sidecar_path(&args.output),
        &DenoiseSidecar {
            config_digest: snore_core::config::digest_json(&cfg),
            denoise: &cfg,
            snr_before_db: before,
            snr_after_db: after,
        },
    )
}

fn load_wav_dir(dir: &Path) -> Result<Vec<Recording<f64>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")));
    paths.sort();
    if paths.is_empty() {
        bail!("no .wav files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| Ok(load_recording(p, &file_stem(p)?)?))
        .collect()
}

fn extract(args: ExtractArgs, config: &PipelineConfig) -> Result<()> {
    let recordings = load_wav_dir(&args.wav_dir)?;
    let labels = args.labels.as_ref().map(read_labels).transpose()?;
    let table = extract_corpus(&recordings, labels.as_deref(), &config.extraction)?;
    let mut bytes = Vec::new();
    write_feature_csv(&mut bytes, &table.rows)?;
    fs::write(&args.out, bytes).with_context(|| format!("writing {}", args.out.display()))?;
    write_json(
        &sidecar_path(&args.out),
        &FeatureSidecar::new(config.extraction.clone(), table.lpc_failures),
    )?;
    if table.lpc_failures > 0 {
        log::warn!("{} sub-frames had a failed LPC recursion; their formants are 0", table.lpc_failures);
    }
    log::info!("wrote {} feature rows to {}", table.rows.len(), args.out.display());
    Ok(())
}

/// Feature rows plus the extraction digest recorded next to them, if any.
fn load_features(path: &Path) -> Result<(Vec<FeatureVector>, Option<String>)> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = read_feature_csv(file).with_context(|| format!("parsing {}", path.display()))?;
    let meta = sidecar_path(path);
    let digest = if meta.exists() {
        let text = fs::read_to_string(&meta).with_context(|| format!("reading {}", meta.display()))?;
        let sidecar: FeatureSidecar =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", meta.display()))?;
        Some(sidecar.config_digest)
    } else {
        log::warn!("{} not found; outputs will carry no feature-config digest", meta.display());
        None
    };
    Ok((rows, digest))
}

fn experiment_spec(args: &ExperimentArgs, config: &PipelineConfig) -> ExperimentSpec {
    ExperimentSpec::new(args.experiment, args.selection, args.seed.unwrap_or(config.seed))
}

fn evaluate(args: EvaluateArgs, config: &PipelineConfig) -> Result<()> {
    let (rows, digest) = load_features(&args.features)?;
    let spec = experiment_spec(&args.experiment, config);
    let mut eval = config.evaluation.clone();
    if let Some(n) = args.ci_resamples {
        eval.ci_resamples = n;
    }
    let mut report = outer_loop(&rows, &spec, &config.lda, &eval)?;
    report.feature_config_digest = digest.clone();

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let selection = match spec.selection {
        SelectionMode::All => "all",
        SelectionMode::Forward => "forward",
    };
    let stem = format!("{}-{selection}", spec.kind.as_str());
    let json_path = args.out_dir.join(format!("{stem}.json"));
    fs::write(&json_path, report.to_json()? + "\n").with_context(|| format!("writing {}", json_path.display()))?;

    let mut csv = Vec::new();
    if let Some(d) = &digest {
        writeln!(csv, "# config_digest={d}")?;
    }
    report.write_summary_csv(&mut csv)?;
    let csv_path = args.out_dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    log::info!(
        "{stem}: accuracy {:.1}% over {} windows, mean {:.1} features selected",
        100.0 * report.accuracy(),
        report.n_windows,
        report.mean_selected_features
    );
    Ok(())
}

fn train(args: TrainArgs, config: &PipelineConfig) -> Result<()> {
    let (rows, digest) = load_features(&args.features)?;
    let spec = experiment_spec(&args.experiment, config);
    let mut model = train_model(&rows, &spec, &config.lda, &config.evaluation, args.exclude_patient.as_deref())?;
    if let Some(d) = digest {
        model = model.with_feature_config_digest(d);
    }
    fs::write(&args.out, save_model(&model)?).with_context(|| format!("writing {}", args.out.display()))?;
    log::info!("model uses features {:?}", model.selected_features());
    Ok(())
}

fn classify(args: ClassifyArgs, config: &PipelineConfig) -> Result<()> {
    let bytes = fs::read(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model: LdaModel = load_model(&bytes).with_context(|| format!("loading {}", args.model.display()))?;
    let digest = config.extraction.digest();
    match model.feature_config_digest() {
        Some(d) if d == digest => {}
        Some(d) => bail!("model was trained on features with config digest {d}, but the current extraction config has digest {digest}"),
        None => bail!("model carries no feature-config digest; cannot verify it matches the extraction config"),
    }
    let id = match args.patient_id {
        Some(id) => id,
        None => file_stem(&args.wav)?,
    };
    let rec: Recording<f64> = load_recording(&args.wav, &id)?;
    let table = extract_corpus(std::slice::from_ref(&rec), None, &config.extraction)?;
    if table.rows.is_empty() {
        bail!("{} is shorter than one {WINDOW_SECONDS} s window", args.wav.display());
    }

    let mut out = Vec::new();
    writeln!(out, "# config_digest={digest}")?;
    writeln!(out, "patient_id,start_s,end_s,label")?;
    let predicted: Vec<_> = table.rows.iter().map(|r| model.predict(r.values()).class).collect();
    let mut start = 0;
    for end in 1..=predicted.len() {
        if end == predicted.len() || predicted[end] != predicted[start] {
            writeln!(
                out,
                "{id},{},{},{}",
                start as f64 * WINDOW_SECONDS,
                end as f64 * WINDOW_SECONDS,
                predicted[start]
            )?;
            start = end;
        }
    }
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
