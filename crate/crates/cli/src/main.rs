use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brickscan_core::bake::{load_map_set, Modality, SurfaceMapSet};
use brickscan_core::cascade::CascadeModel;
use brickscan_core::pipeline::{
    bake_to_dir, build_dataset, build_wall, cascade_params, detect_maps, enrich, evaluate, read_text, render_overlay,
    report_file, run_all, sweep_csv, sweep_neighbors, train_model, write_text, write_wall, AnnotationsFile, Config,
    DetectionsFile, EnrichedFile, JsonFormat, PipelineError, WallRole,
};
use brickscan_core::raster::Depth;
use brickscan_core::sampler::{load_dataset, save_dataset};
use brickscan_core::wall::obj::read_obj;
use brickscan_core::{Gray, Scalar};
use clap::{Args, Parser, Subcommand};

type Cfg = Config<Scalar>;

/// Synthetic brick walls, surface maps and Haar cascade brick detection.
#[derive(Debug, Parser)]
#[command(name = "brickscan", version)]
struct Cli {
    /// Configuration file (brickscan.toml); flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Global seed; every stage seed is derived from it.
    #[arg(long, global = true, env = "BRICKSCAN_SEED")]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "BRICKSCAN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a wall from a pattern and write wall.obj and annotations.json.
    GenWall(GenWall),
    /// Bake an OBJ into map PNGs and a maps.json sidecar.
    Bake(Bake),
    /// Render positive and negative samples with a manifest.
    GenDataset(GenDataset),
    /// Train a cascade from a dataset directory.
    Train(Train),
    /// Run a cascade over baked maps.
    Detect(Detect),
    /// Score detections against wall annotations.
    Evaluate(Evaluate),
    /// Detect once and evaluate across several min_neighbors values.
    SweepNeighbors(SweepNeighbors),
    /// Run every stage end to end into one output directory.
    All(All),
}

#[derive(Debug, Args)]
struct GenWall {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Which configured wall to build; fixes the brick and the seed.
    #[arg(long, default_value = "eval")]
    role: WallRole,
    /// Built-in pattern name or pattern file, instead of the configured one.
    #[arg(long)]
    pattern: Option<String>,
}

#[derive(Debug, Args)]
struct Bake {
    #[arg(long, value_name = "FILE")]
    obj: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Role of the wall, for the AO seed.
    #[arg(long, default_value = "eval")]
    role: WallRole,
    /// mm per pixel.
    #[arg(long)]
    pixel_size: Option<Scalar>,
    /// Border around the mesh, mm.
    #[arg(long)]
    margin: Option<Scalar>,
    /// Height range mapped onto [0, 1], mm.
    #[arg(long)]
    depth_range: Option<Scalar>,
    #[arg(long)]
    rays_per_pixel: Option<u32>,
    /// Also write height_preview.png stretched to its own min and max; for viewing only.
    #[arg(long)]
    preview: bool,
}

#[derive(Debug, Args)]
struct GenDataset {
    /// Wall directory (annotations.json) to crop negatives from.
    #[arg(long, value_name = "DIR")]
    train_wall: PathBuf,
    /// Baked maps of the training wall.
    #[arg(long, value_name = "DIR")]
    train_maps: PathBuf,
    #[arg(long, value_name = "DIR", requires = "decoy_maps")]
    decoy_wall: Option<PathBuf>,
    #[arg(long, value_name = "DIR", requires = "decoy_wall")]
    decoy_maps: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    modality: Option<Modality>,
    #[arg(long)]
    positives: Option<usize>,
    #[arg(long)]
    wall_negatives: Option<usize>,
    #[arg(long)]
    decoy_negatives: Option<usize>,
    /// Crop positives from the training wall instead of single-brick scenes.
    #[arg(long)]
    in_situ: bool,
}

#[derive(Debug, Args)]
struct Train {
    #[arg(long, value_name = "DIR")]
    dataset: PathBuf,
    /// Cascade JSON to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Training log; defaults to training_log.json next to the model.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    #[arg(long)]
    f_target: Option<Scalar>,
    #[arg(long)]
    f_max: Option<Scalar>,
    #[arg(long)]
    d_min: Option<Scalar>,
    #[arg(long)]
    max_stages: Option<usize>,
    #[arg(long)]
    stage_negatives: Option<usize>,
}

#[derive(Debug, Args)]
struct DetectFlags {
    /// Map channel to scan; defaults to the one the model was trained on.
    #[arg(long)]
    modality: Option<Modality>,
    #[arg(long)]
    eps: Option<Scalar>,
    #[arg(long)]
    scale_factor: Option<Scalar>,
    /// Also scan the image turned a quarter turn.
    #[arg(long)]
    rotate_pass: bool,
}

#[derive(Debug, Args)]
struct Detect {
    #[arg(long, value_name = "DIR")]
    maps: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Directory for detections.json, enriched.json and overlay.png.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    min_neighbors: Option<usize>,
    #[command(flatten)]
    flags: DetectFlags,
}

#[derive(Debug, Args)]
struct Evaluate {
    #[arg(long, value_name = "FILE")]
    detections: PathBuf,
    #[arg(long, value_name = "FILE")]
    annotations: PathBuf,
    /// Report JSON to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long)]
    iou_threshold: Option<Scalar>,
}

#[derive(Debug, Args)]
struct SweepNeighbors {
    #[arg(long, value_name = "DIR")]
    maps: PathBuf,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    annotations: PathBuf,
    /// CSV to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Comma-separated min_neighbors values.
    #[arg(long, value_delimiter = ',')]
    neighbors: Option<Vec<usize>>,
    #[arg(long)]
    iou_threshold: Option<Scalar>,
    #[command(flatten)]
    flags: DetectFlags,
}

#[derive(Debug, Args)]
struct All {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => Cfg::load(path)?,
        None => Cfg::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    // Parallelism never changes results, so the override stays out of the
    // recorded config.
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(cfg.threads))
        .build_global()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;

    match cli.command {
        Command::GenWall(a) => gen_wall(&cfg, a),
        Command::Bake(a) => bake(cfg, a),
        Command::GenDataset(a) => gen_dataset(cfg, a),
        Command::Train(a) => train(cfg, a),
        Command::Detect(a) => detect(cfg, a),
        Command::Evaluate(a) => evaluate_cmd(cfg, a),
        Command::SweepNeighbors(a) => sweep(cfg, a),
        Command::All(a) => all(&cfg, a),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn load_model(path: &Path) -> Result<CascadeModel<Scalar>, PipelineError> {
    CascadeModel::from_json(&read_text(path)?).map_err(|e| PipelineError::format(path, e))
}

fn load_annotations(path: &Path) -> Result<AnnotationsFile<Scalar>, PipelineError> {
    AnnotationsFile::load(path)
}

fn load_maps(dir: &Path) -> Result<SurfaceMapSet<Scalar>, PipelineError> {
    Ok(load_map_set(dir)?)
}

/// The channel to scan: the flag, else the model's training input.
fn channel(maps: &SurfaceMapSet<Scalar>, model: &CascadeModel<Scalar>, flag: Option<Modality>) -> Result<Gray, PipelineError> {
    let modality = match flag {
        Some(m) => m,
        None => model.metadata.input.parse().map_err(PipelineError::Config)?,
    };
    Ok(maps.channel(modality))
}

fn apply_detect_flags(cfg: &mut Cfg, f: &DetectFlags) {
    set(&mut cfg.detect.eps, f.eps);
    set(&mut cfg.detect.scale_factor, f.scale_factor);
    cfg.detect.rotate_pass |= f.rotate_pass;
}

fn gen_wall(cfg: &Cfg, a: GenWall) -> Result<(), PipelineError> {
    cfg.validate()?;
    let pattern = match a.pattern.as_deref().or(a.role.pattern(cfg)) {
        Some(p) => p.to_string(),
        None => return Err(PipelineError::Config(format!("no pattern configured for the {} wall", a.role.name()))),
    };
    let wall = build_wall(cfg, a.role, &pattern)?;
    write_wall(&wall, &a.out)?;
    println!("{} bricks, {} triangles -> {}", wall.annotations.len(), wall.mesh.triangles.len(), a.out.display());
    Ok(())
}

fn bake(mut cfg: Cfg, a: Bake) -> Result<(), PipelineError> {
    set(&mut cfg.bake.pixel_size, a.pixel_size);
    set(&mut cfg.bake.margin, a.margin);
    set(&mut cfg.bake.maps.depth_range, a.depth_range);
    set(&mut cfg.bake.maps.rays_per_pixel, a.rays_per_pixel);
    cfg.validate()?;
    let bytes = std::fs::read(&a.obj).map_err(|source| PipelineError::Io { path: a.obj.clone(), source })?;
    let mesh = read_obj::<Scalar>(&bytes).map_err(|e| PipelineError::format(&a.obj, e))?;
    let maps = bake_to_dir(&mesh, &cfg.bake, a.role.maps_seed(cfg.seed), &a.out)?;
    if a.preview {
        maps.height.normalized_min_max().save_png(&a.out.join("height_preview.png"), Depth::Eight)?;
    }
    let (w, h) = maps.dims();
    println!("{w}x{h} px maps -> {}", a.out.display());
    Ok(())
}

fn gen_dataset(mut cfg: Cfg, a: GenDataset) -> Result<(), PipelineError> {
    let d = &mut cfg.dataset;
    set(&mut d.modality, a.modality);
    set(&mut d.positives, a.positives);
    set(&mut d.wall_negatives, a.wall_negatives);
    set(&mut d.decoy_negatives, a.decoy_negatives);
    d.in_situ |= a.in_situ;
    if a.decoy_wall.is_none() {
        d.decoy_negatives = 0;
    }
    cfg.validate()?;
    let train = (load_annotations(&a.train_wall.join("annotations.json"))?, load_maps(&a.train_maps)?);
    let decoy = match (&a.decoy_wall, &a.decoy_maps) {
        (Some(w), Some(m)) => Some((load_annotations(&w.join("annotations.json"))?, load_maps(m)?)),
        _ => None,
    };
    let data = build_dataset(
        &cfg,
        (&train.0.annotations, &train.1),
        decoy.as_ref().map(|(w, m)| (w.annotations.as_slice(), m)),
    )?;
    save_dataset(&data, &a.out)?;
    println!("{} samples -> {}", data.samples.len(), a.out.display());
    Ok(())
}

fn train(mut cfg: Cfg, a: Train) -> Result<(), PipelineError> {
    let t = &mut cfg.train;
    set(&mut t.f_target, a.f_target);
    set(&mut t.f_max, a.f_max);
    set(&mut t.d_min, a.d_min);
    set(&mut t.max_stages, a.max_stages);
    if a.stage_negatives.is_some() {
        t.stage_negatives = a.stage_negatives;
    }
    cfg.validate()?;
    let data = load_dataset(&a.dataset)?;
    let model = train_model(&data, &cascade_params(&cfg), data.manifest.modality.name())?;
    write_text(&a.out, &model.to_json())?;
    let log = a.log.unwrap_or_else(|| a.out.with_file_name("training_log.json"));
    write_text(&log, &(serde_json::to_string_pretty(&model.metadata).expect("metadata serializes") + "\n"))?;
    let m = &model.metadata;
    println!(
        "{} stages, detection {:.4}, false positives {:.6} -> {}",
        m.stages.len(),
        m.cumulative_detection,
        m.cumulative_fpr,
        a.out.display()
    );
    Ok(())
}

fn detect(mut cfg: Cfg, a: Detect) -> Result<(), PipelineError> {
    set(&mut cfg.detect.min_neighbors, a.min_neighbors);
    apply_detect_flags(&mut cfg, &a.flags);
    cfg.validate()?;
    let maps = load_maps(&a.maps)?;
    let model = load_model(&a.model)?;
    let img = channel(&maps, &model, a.flags.modality)?;
    let dets = detect_maps(&img, &maps.frame, &model, &cfg.detect)?;
    dets.save(&a.out.join("detections.json"))?;
    EnrichedFile::new(enrich(&dets.detections, &maps.frame, &cfg.catalog())).save(&a.out.join("enriched.json"))?;
    render_overlay(&img, &dets.detections, &cfg.overlay).save_png(&a.out.join("overlay.png"))?;
    println!("{} detections -> {}", dets.detections.len(), a.out.display());
    Ok(())
}

fn evaluate_cmd(mut cfg: Cfg, a: Evaluate) -> Result<(), PipelineError> {
    set(&mut cfg.evaluate.iou_threshold, a.iou_threshold);
    cfg.validate()?;
    let dets = DetectionsFile::<Scalar>::load(&a.detections)?;
    let truth = load_annotations(&a.annotations)?;
    let report = evaluate(&dets.detections, &truth.annotations, &dets.frame, cfg.evaluate.iou_threshold);
    println!(
        "precision {:.3}, recall {:.3} (H {:.3}, V {:.3}), mean labels per brick {:.3}",
        report.precision,
        report.recall,
        report.recall_h,
        report.recall_v,
        report.mean_labels_per_brick()
    );
    report_file(report, &dets).save(&a.out)
}

fn sweep(mut cfg: Cfg, a: SweepNeighbors) -> Result<(), PipelineError> {
    set(&mut cfg.evaluate.sweep, a.neighbors);
    set(&mut cfg.evaluate.iou_threshold, a.iou_threshold);
    apply_detect_flags(&mut cfg, &a.flags);
    cfg.validate()?;
    let maps = load_maps(&a.maps)?;
    let model = load_model(&a.model)?;
    let truth = load_annotations(&a.annotations)?;
    let img = channel(&maps, &model, a.flags.modality)?;
    let rows: Vec<_> = sweep_neighbors(
        &img,
        &maps.frame,
        &model,
        &cfg.detect,
        &truth.annotations,
        &cfg.evaluate.sweep,
        cfg.evaluate.iou_threshold,
    )?
    .into_iter()
    .map(|(row, _)| row)
    .collect();
    let csv = sweep_csv(&rows);
    write_text(&a.out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn all(cfg: &Cfg, a: All) -> Result<(), PipelineError> {
    let summary = run_all(cfg, &a.out)?;
    let r = &summary.report;
    println!(
        "{} stages; {} detections at min_neighbors {}: recall H {:.3}, V {:.3} -> {}",
        summary.model.stages.len(),
        r.detections,
        cfg.detect.min_neighbors,
        r.recall_h,
        r.recall_v,
        a.out.display()
    );
    Ok(())
}
