use std::error::Error as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use viewlab::clipgen::{write_geometry, GenConfig};
use viewlab::harness::{
    evaluate, metrics, plot, predictions, profile_from_predictions, profile_rows,
    records::{read_rows_file, write_rows_file},
    run_preset, AlignClassifier, Classifier, ClassifierKind, ExperimentConfig,
    GeneralizationProfile, ManifestSource, PlotPanel, PredictionRecord, Preset, ViewSource,
};
use viewlab::mlp::{save_model, train_on_manifest, AugmentConfig, TrainConfig};
use viewlab::oracles::{LcClassifier, LcConfig, Match2dConfig, Matcher, ViewLibrary};
use viewlab::render::{
    emit_dataset, load_geometry, read_manifest, ArrayStorage, DatasetSpec, GridDesc, RasterImage,
    Representation, DEFAULT_BINS,
};
use viewlab::scene::{Axes, Camera, Composition, ViewSelection};
use viewlab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "viewlab",
    version,
    about = "Paperclip view-generalization toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate paperclip geometry, one JSON file per class.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        classes: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a geometry directory over a pose grid into a dataset.
    Render(RenderArgs),
    /// Score a classical oracle on a points dataset.
    Oracle {
        #[arg(long, value_enum)]
        kind: OracleKind,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_parser = parse_views)]
        train_views: ViewSelection,
        #[arg(long, value_enum, default_value_t = EvalGrid::Single)]
        eval_grid: EvalGrid,
        /// Keep only the first N classes.
        #[arg(long)]
        classes: Option<usize>,
        /// Also write per-view predictions in the external CSV schema.
        #[arg(long)]
        predictions_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the coordinate-array MLP on a dataset.
    TrainMlp {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_parser = parse_views)]
        train_views: ViewSelection,
        #[arg(long)]
        classes: Option<usize>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment preset and write results, summary and plots.
    Run {
        #[arg(long, value_parser = parse_preset)]
        preset: Preset,
        #[arg(long, value_parser = parse_classifier)]
        classifier: ClassifierKind,
        #[arg(long, default_value_t = 100)]
        classes: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Class counts for the classes-sweep preset.
        #[arg(long, value_delimiter = ',')]
        sweep_classes: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        eval_grid: Option<EvalGrid>,
        /// Read views from a points dataset instead of generating clips.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Prediction CSV for the external classifier.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions produced outside this tool.
    Evaluate {
        #[arg(long)]
        external: PathBuf,
        #[arg(long, value_parser = parse_views)]
        train_views: ViewSelection,
        #[arg(long, value_enum, default_value_t = EvalGrid::Single)]
        eval_grid: EvalGrid,
        #[arg(long, default_value = "external")]
        condition: String,
        /// Bin width in degrees for single-axis profiles.
        #[arg(long, default_value_t = 1.0)]
        stride: f64,
        /// Bin width in degrees for axis-pair profiles.
        #[arg(long, default_value_t = 10.0)]
        dual_stride: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RenderArgs {
    #[arg(long)]
    geometry: PathBuf,
    /// Comma-separated axes, e.g. `x,y,z` or `xy`.
    #[arg(long, value_delimiter = ',', value_parser = parse_axes, default_value = "y")]
    axes: Vec<Axes>,
    #[arg(long, default_value_t = 1.0)]
    stride: f64,
    #[arg(long, default_value_t = 10.0)]
    dual_stride: f64,
    /// Full protocol: every axis and pair at the default strides.
    #[arg(long)]
    full: bool,
    #[arg(long, value_parser = parse_repr, default_value = "wireframe")]
    repr: Representation,
    #[arg(long, value_enum, default_value_t = CameraKind::Perspective)]
    camera: CameraKind,
    #[arg(long)]
    distance: Option<f64>,
    #[arg(long, default_value_t = 224)]
    size: u32,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    binary_coords: bool,
    #[arg(long)]
    intrinsic: bool,
    #[arg(long, value_parser = parse_views)]
    train_views: Option<ViewSelection>,
    /// Directory of PNG/JPEG backgrounds.
    #[arg(long)]
    bg_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = AugmentKind::None)]
    augment: AugmentKind,
}

impl TrainArgs {
    fn apply(&self, mut tc: TrainConfig) -> TrainConfig {
        if let Some(e) = self.epochs {
            tc.epochs = e;
        }
        if let Some(lr) = self.lr {
            tc.lr = lr;
        }
        if let Some(b) = self.batch_size {
            tc.batch_size = b;
        }
        if let Some(s) = self.train_seed {
            tc.seed = s;
        }
        tc.augment = match self.augment {
            AugmentKind::None => AugmentConfig::none(),
            AugmentKind::Flip => AugmentConfig {
                flip: true,
                ..AugmentConfig::none()
            },
            AugmentKind::Scale => AugmentConfig {
                scale_jitter: Some([0.5, 1.0]),
                ..AugmentConfig::none()
            },
            AugmentKind::Crop => AugmentConfig::crop(),
        };
        tc
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Match2d,
    Lc,
    Align3d,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EvalGrid {
    Single,
    Dual,
    All,
}

impl EvalGrid {
    fn axes(self) -> Vec<Axes> {
        match self {
            EvalGrid::Single => Axes::SINGLE.to_vec(),
            EvalGrid::Dual => Axes::DUAL.to_vec(),
            EvalGrid::All => Axes::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CameraKind {
    Orthographic,
    Perspective,
}

#[derive(Clone, Copy, ValueEnum)]
enum AugmentKind {
    None,
    Flip,
    Scale,
    Crop,
}

fn parse_views(s: &str) -> std::result::Result<ViewSelection, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_axes(s: &str) -> std::result::Result<Axes, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_repr(s: &str) -> std::result::Result<Representation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_classifier(s: &str) -> std::result::Result<ClassifierKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = e.source();
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen { seed, classes, out } => {
            let run = write_geometry(&GenConfig::with_seed(seed), classes, &out)?;
            eprintln!("wrote {} clips to {}", run.files.len(), out.display());
            Ok(())
        }
        Command::Render(args) => render(args),
        Command::Oracle {
            kind,
            manifest,
            train_views,
            eval_grid,
            classes,
            predictions_out,
            out,
        } => {
            let manifest = read_manifest(&manifest)?;
            let mut source = ManifestSource::new(&manifest)?;
            if let Some(n) = classes {
                source.truncate_classes(n);
            }
            let mut lib = ViewLibrary::new();
            for k in source.class_ids() {
                for pose in train_views.poses() {
                    lib.insert(k, pose.clone(), source.view(k, &pose)?);
                }
            }
            let classifier: Box<dyn Classifier> = match kind {
                OracleKind::Match2d => Box::new(Matcher::new(&lib, Match2dConfig::default())?),
                OracleKind::Lc => Box::new(LcClassifier::new(&lib, LcConfig::default())?),
                OracleKind::Align3d => Box::new(AlignClassifier::from_library(&lib)?),
            };
            let training = train_views.poses();
            let mut rows = Vec::new();
            let mut preds = Vec::new();
            let eval_axes: Vec<Axes> = eval_grid
                .axes()
                .into_iter()
                .filter(|a| manifest.grid.axes.contains(a))
                .collect();
            if eval_axes.is_empty() {
                return Err(Error::InvalidConfig(
                    "dataset has no poses on the requested evaluation grid".into(),
                ));
            }
            for axes in eval_axes {
                // bins follow the grid the dataset was rendered on
                let stride = if axes.is_dual() {
                    manifest.grid.dual_stride
                } else {
                    manifest.grid.single_stride
                };
                let profile = evaluate(classifier.as_ref(), &source, axes, stride, &training)?;
                report(&profile, &train_views);
                rows.extend(profile_rows(&profile, kind_name(kind), 0));
                if predictions_out.is_some() {
                    preds.extend(predictions(classifier.as_ref(), &source, axes, stride)?);
                }
            }
            write_rows_file(&out, &rows)?;
            if let Some(path) = predictions_out {
                write_rows_file(&path, &preds)?;
            }
            Ok(())
        }
        Command::TrainMlp {
            manifest,
            train_views,
            classes,
            train,
            out,
        } => {
            let manifest = read_manifest(&manifest)?;
            let tc = train.apply(TrainConfig::default());
            let (model, log) = train_on_manifest(&manifest, &train_views, classes, &tc)?;
            if let Some(last) = log.epochs.last() {
                eprintln!(
                    "epochs {} loss {:.4} train accuracy {:.3}",
                    log.epochs.len(),
                    last.loss,
                    log.final_train_accuracy
                );
            }
            save_model(&out, &model)
        }
        Command::Run {
            preset,
            classifier,
            classes,
            seeds,
            sweep_classes,
            eval_grid,
            dataset,
            predictions,
            train,
            out,
        } => {
            let mut config = ExperimentConfig::new(preset, classifier);
            config.classes = classes;
            config.seeds = seeds;
            if let Some(s) = sweep_classes {
                config.sweep_classes = s;
            }
            if let Some(g) = eval_grid {
                config.eval_axes = g.axes();
            }
            config.dataset = dataset;
            config.predictions = predictions;
            config.train = train.apply(config.train);
            config.out_dir = Some(out.clone());
            let bundle = run_preset(&config)?;
            for (name, mean) in bundle.mean_by_condition(Axes::Y) {
                println!("{name}\ty mean {mean:.3}");
            }
            eprintln!("results in {}", out.display());
            Ok(())
        }
        Command::Evaluate {
            external,
            train_views,
            eval_grid,
            condition,
            stride,
            dual_stride,
            seed,
            out,
        } => {
            let recs: Vec<PredictionRecord> = read_rows_file(&external)?;
            let training = train_views.poses();
            let profiles = eval_grid
                .axes()
                .into_iter()
                .filter(|a| recs.iter().any(|r| r.axes == *a))
                .map(|a| {
                    profile_from_predictions(
                        &recs,
                        a,
                        if a.is_dual() { dual_stride } else { stride },
                        &training,
                        Composition::default(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            if profiles.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "{} has no predictions on the requested evaluation grid",
                    external.display()
                )));
            }
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let rows: Vec<_> = profiles
                .iter()
                .flat_map(|p| profile_rows(p, &condition, seed))
                .collect();
            write_rows_file(&out.join("results.csv"), &rows)?;
            for p in &profiles {
                report(p, &train_views);
            }
            let panels: Vec<PlotPanel> = profiles.iter().map(PlotPanel::new).collect();
            let svg_path = out.join("profiles.svg");
            fs::write(&svg_path, plot(&condition, &panels)).map_err(|e| Error::io(&svg_path, e))
        }
    }
}

fn render(args: RenderArgs) -> Result<()> {
    let objects = load_geometry(&args.geometry, args.seed)?;
    if objects.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no geometry in {}",
            args.geometry.display()
        )));
    }
    let mut camera = match args.camera {
        CameraKind::Orthographic => Camera::orthographic(args.size),
        CameraKind::Perspective => Camera::perspective(args.size),
    };
    if let Some(d) = args.distance {
        camera.distance = d;
    }
    let mut grid = if args.full {
        GridDesc::full()
    } else {
        GridDesc {
            axes: args.axes.clone(),
            single_stride: args.stride,
            dual_stride: args.dual_stride,
            ..GridDesc::full()
        }
    };
    if args.intrinsic {
        grid.composition = Composition::Intrinsic;
    }
    let mut spec = DatasetSpec::new(args.seed, args.repr, camera, grid);
    spec.bins = args.bins;
    spec.train_views = args.train_views;
    if args.binary_coords {
        spec.storage = ArrayStorage::Binary;
    }
    if let Some(dir) = &args.bg_dir {
        spec.backgrounds = load_backgrounds(dir)?;
    }
    let manifest = emit_dataset(&objects, &spec, &args.out)?;
    eprintln!(
        "wrote {} records for {} classes to {}",
        manifest.records.len(),
        manifest.classes,
        args.out.display()
    );
    Ok(())
}

fn load_backgrounds(dir: &Path) -> Result<Vec<RasterImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|x| x.to_str())
                .is_some_and(|x| matches!(x.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no PNG or JPEG backgrounds in {}",
            dir.display()
        )));
    }
    paths.iter().map(|p| RasterImage::load(p)).collect()
}

fn kind_name(kind: OracleKind) -> &'static str {
    match kind {
        OracleKind::Match2d => "match2d",
        OracleKind::Lc => "lc",
        OracleKind::Align3d => "align3d",
    }
}

fn report(profile: &GeneralizationProfile, views: &ViewSelection) {
    let angles: &[f64] = if profile.axes == Axes::from(views.axis) {
        &views.angles
    } else {
        &[]
    };
    let m = metrics(profile, angles, None);
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    println!(
        "{}\tmean {:.3}\tintermediate {}\textrapolation {}",
        m.axes,
        m.mean,
        opt(m.intermediate),
        opt(m.extrapolation)
    );
}
