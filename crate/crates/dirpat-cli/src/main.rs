//! `dirpat`: batch frontend for descriptor encoding, feature extraction,
//! SVM training and prediction, cross-validation, and synthetic data.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand};

use dirpat::classifier::{train_ovo_svm, OvoSvmModel, SvmConfig};
use dirpat::compass::compass_masks;
use dirpat::encoders::{encode, CodeMap, Method};
use dirpat::error::{Error, Result};
use dirpat::evaluation::{
    cross_validate, extract_features, load_manifest, synth_dataset, Dataset, PipelineConfig,
    SynthConfig,
};
use dirpat::features::{
    region_histograms, write_features_csv, FeatureRecord, Normalization, RegionGrid,
};
use dirpat::imaging::GrayImage;

#[derive(Parser)]
#[command(
    name = "dirpat",
    version,
    about = "Directional-pattern descriptors, region histograms, and SVM evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the eight compass masks.
    Masks,
    /// Encode one image into a code map.
    Encode(EncodeArgs),
    /// Render a saved code map as a PGM visualization.
    ExportCodemap(ExportArgs),
    /// Extract feature vectors for every manifest image into a CSV file.
    Features(FeaturesArgs),
    /// Train a one-vs-one linear SVM on a manifest.
    Train(TrainArgs),
    /// Label images with a saved model.
    Predict(PredictArgs),
    /// Run stratified N-fold cross-validation on a manifest.
    Crossval(CrossvalArgs),
    /// Generate the synthetic oriented-grating dataset.
    Synth(SynthArgs),
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<RegionGrid, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_norm(s: &str) -> std::result::Result<Normalization, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_bounded(s: &str, min: usize, max: usize, what: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|_| format!("{what} must be a number"))?;
    if v < min || v > max {
        return Err(if max == usize::MAX {
            format!("{what} must be at least {min}")
        } else {
            format!("{what} must be in {min}..={max}")
        });
    }
    Ok(v)
}

fn parse_jobs(s: &str) -> std::result::Result<usize, String> {
    parse_bounded(s, 1, usize::MAX, "--jobs")
}

fn parse_folds(s: &str) -> std::result::Result<usize, String> {
    parse_bounded(s, 2, usize::MAX, "--folds")
}

fn parse_epochs(s: &str) -> std::result::Result<usize, String> {
    parse_bounded(s, 1, usize::MAX, "--epochs")
}

fn parse_classes(s: &str) -> std::result::Result<usize, String> {
    parse_bounded(s, 2, 8, "--classes")
}

fn parse_per_class(s: &str) -> std::result::Result<usize, String> {
    parse_bounded(s, 1, usize::MAX, "--per-class")
}

fn parse_size(s: &str) -> std::result::Result<usize, String> {
    parse_bounded(s, 16, usize::MAX, "--size")
}

#[derive(Args)]
#[command(group(ArgGroup::new("output").required(true).multiple(true).args(["out", "out_pgm"])))]
struct EncodeArgs {
    /// Input image (PGM or PNG).
    #[arg(long = "in")]
    input: PathBuf,
    /// Descriptor: RETRAIN, LBP, CSLBP, LDP, or LDN.
    #[arg(long, default_value = "RETRAIN", value_parser = parse_method)]
    method: Method,
    /// Write the code map in DPCM binary form.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a PGM visualization of the code map.
    #[arg(long)]
    out_pgm: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Code map in DPCM binary form.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output PGM path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Manifest CSV (path,label[,subject]).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "RETRAIN", value_parser = parse_method)]
    method: Method,
    /// Region grid as ROWSxCOLS.
    #[arg(long, default_value = "7x6", value_parser = parse_grid)]
    grid: RegionGrid,
    /// Histogram normalization: RAW or L1.
    #[arg(long, default_value = "RAW", value_parser = parse_norm)]
    norm: Normalization,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all processors).
    #[arg(long, value_parser = parse_jobs)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "RETRAIN", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "7x6", value_parser = parse_grid)]
    grid: RegionGrid,
    #[arg(long, default_value = "RAW", value_parser = parse_norm)]
    norm: Normalization,
    /// SVM soft-margin parameter.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Training epochs per class pair.
    #[arg(long, default_value_t = 100, value_parser = parse_epochs)]
    epochs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output model path (DPSVM binary).
    #[arg(long)]
    out: PathBuf,
    /// Also write a JSON export of the model.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, value_parser = parse_jobs)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    /// Saved DPSVM model.
    #[arg(long)]
    model: PathBuf,
    /// Images to label.
    #[arg(required = true)]
    images: Vec<PathBuf>,
}

#[derive(Args)]
struct CrossvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "RETRAIN", value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "7x6", value_parser = parse_grid)]
    grid: RegionGrid,
    #[arg(long, default_value = "RAW", value_parser = parse_norm)]
    norm: Normalization,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 10, value_parser = parse_folds)]
    folds: usize,
    /// Seed for fold assignment and SVM training.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 100, value_parser = parse_epochs)]
    epochs: usize,
    /// Keep each subject's images in a single fold (needs a subject column).
    #[arg(long)]
    subject_independent: bool,
    /// Write the JSON report here.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Write the confusion matrix as CSV here.
    #[arg(long)]
    confusion_csv: Option<PathBuf>,
    #[arg(long, value_parser = parse_jobs)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Orientation classes (2-8).
    #[arg(long, default_value_t = 4, value_parser = parse_classes)]
    classes: usize,
    #[arg(long, default_value_t = 50, value_parser = parse_per_class)]
    per_class: usize,
    /// Square image side length (>= 16).
    #[arg(long, default_value_t = 64, value_parser = parse_size)]
    size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for the images and manifest.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when a pipe reader closes early (e.g. `dirpat masks | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Masks => {
            let rendered: Vec<String> =
                compass_masks().iter().map(|m| m.to_string()).collect();
            println!("{}", rendered.join("\n\n"));
            Ok(())
        }
        Command::Encode(args) => {
            let img = GrayImage::load(&args.input)?;
            let map = encode(&img, args.method)?;
            if let Some(out) = &args.out {
                map.save(out)?;
            }
            if let Some(out_pgm) = &args.out_pgm {
                map.to_visualization().save_pgm(out_pgm)?;
            }
            Ok(())
        }
        Command::ExportCodemap(args) => {
            let map = CodeMap::load(&args.input)?;
            map.to_visualization().save_pgm(&args.out)?;
            Ok(())
        }
        Command::Features(args) => {
            configure_jobs(args.jobs)?;
            let dataset = load_manifest(&args.manifest)?;
            let features = extract_features(&dataset, args.method, args.grid, args.norm)?;
            let records: Vec<FeatureRecord> = dataset
                .samples()
                .iter()
                .zip(features)
                .map(|(sample, vector)| FeatureRecord {
                    id: sample_id(&args.manifest, &sample.path),
                    label: sample.label.clone(),
                    vector,
                })
                .collect();
            let file = fs::File::create(&args.out)?;
            write_features_csv(file, &records)?;
            println!(
                "wrote {} feature rows ({}, grid {}, norm {}) to {}",
                records.len(),
                args.method,
                args.grid,
                args.norm,
                args.out.display()
            );
            Ok(())
        }
        Command::Train(args) => {
            configure_jobs(args.jobs)?;
            let dataset = load_manifest(&args.manifest)?;
            let features = extract_features(&dataset, args.method, args.grid, args.norm)?;
            let labels: Vec<String> =
                dataset.samples().iter().map(|s| s.label.clone()).collect();
            let config = SvmConfig {
                c: args.c,
                epochs: args.epochs,
                seed: args.seed,
            };
            let model = train_ovo_svm(&features, &labels, &config)?;
            model.save(&args.out)?;
            if let Some(json) = &args.json {
                fs::write(json, model.to_json())?;
            }
            println!(
                "trained {} pairwise models over {} classes; model written to {}",
                model.pairwise_models().len(),
                model.classes().len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Predict(args) => {
            let model = OvoSvmModel::load(&args.model)?;
            let meta = model.feature_meta();
            for path in &args.images {
                let annotate = |e: Error| e.annotate(format!("image {}", path.display()));
                let img = GrayImage::load(path).map_err(annotate)?;
                let codes = encode(&img, meta.method).map_err(annotate)?;
                let feature =
                    region_histograms(&codes, meta.grid, meta.norm).map_err(annotate)?;
                let label = model.predict(&feature)?;
                println!("{}\t{label}", path.display());
            }
            Ok(())
        }
        Command::Crossval(args) => {
            configure_jobs(args.jobs)?;
            let dataset = load_manifest(&args.manifest)?;
            let pipeline = PipelineConfig {
                method: args.method,
                grid: args.grid,
                norm: args.norm,
                svm: SvmConfig {
                    c: args.c,
                    epochs: args.epochs,
                    seed: args.seed,
                },
                subject_independent: args.subject_independent,
            };
            let report = cross_validate(&dataset, &pipeline, args.folds, args.seed)?;
            print!("{}", report.to_text());
            fs::write(&args.out, report.to_json_pretty())?;
            if let Some(csv) = &args.confusion_csv {
                fs::write(csv, report.confusion_csv())?;
            }
            Ok(())
        }
        Command::Synth(args) => {
            let config = SynthConfig {
                classes: args.classes,
                per_class: args.per_class,
                size: args.size,
                seed: args.seed,
            };
            let dataset: Dataset = synth_dataset(&config, &args.out_dir)?;
            println!(
                "wrote {} images across {} classes to {} (manifest.csv included)",
                dataset.len(),
                dataset.class_names().len(),
                args.out_dir.display()
            );
            Ok(())
        }
    }
}

/// Feature-row id: the image path relative to the manifest directory when
/// possible, the full path otherwise.
fn sample_id(manifest: &Path, image: &Path) -> String {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    image
        .strip_prefix(base)
        .unwrap_or(image)
        .display()
        .to_string()
}
