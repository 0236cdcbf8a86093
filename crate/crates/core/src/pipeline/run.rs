use std::path::Path;

use serde::{Deserialize, Serialize};

use super::formats::{JsonFormat, ReportFile, REPORT_FORMAT};
use super::{
    create_dir, enrich, evaluate, load_pattern_text, render_overlay, write_text, AnnotationsFile, BakeConfig, Config,
    DetectionsFile, EnrichedFile, EvalReport, PipelineError,
};
use crate::bake::{bake_map_set, frame_from_mesh, load_map_set, save_map_set, Modality, OrthoFrame, SurfaceMapSet};
use crate::cascade::{
    detect_candidates, group_rectangles, train_cascade, CascadeModel, CascadeParams, DetectParams, IntegralImage,
    TrainError, WindowSet,
};
use crate::raster::GrayRaster;
use crate::sampler::{generate_negatives, generate_positives, generate_positives_in_situ, save_dataset, Dataset};
use crate::scalar::Real;
use crate::seed;
use crate::wall::{generate_wall, parse_pattern_with, Annotation, BrickSpec, WallModel};

const TAG_EVAL_WALL: u64 = seed::tag("eval-wall");
const TAG_TRAIN_WALL: u64 = seed::tag("train-wall");
const TAG_DECOY_WALL: u64 = seed::tag("decoy-wall");
const TAG_MAPS: u64 = seed::tag("maps");
const TAG_POSITIVES: u64 = seed::tag("positives");
const TAG_NEGATIVES: u64 = seed::tag("negatives");
const TAG_CASCADE: u64 = seed::tag("cascade");

pub const SWEEP_HEADER: &str = "min_neighbors,detections,precision,recall,recall_H,recall_V,mean_labels_per_brick";

/// Writes `wall.obj` and `annotations.json` into `dir`.
pub fn write_wall<T: Real>(wall: &WallModel<T>, dir: &Path) -> Result<(), PipelineError> {
    create_dir(dir)?;
    write_text(&dir.join("wall.obj"), &crate::wall::obj::obj_string(&wall.mesh))?;
    AnnotationsFile::new(wall.seed, wall.annotations.clone()).save(&dir.join("annotations.json"))
}

/// Frames the mesh from the front and bakes all maps with AO seed `seed`.
pub fn bake_mesh<T: Real>(mesh: &crate::mesh::TriangleMesh<T>, cfg: &BakeConfig<T>, seed: u64) -> Result<SurfaceMapSet<T>, PipelineError> {
    let frame = frame_from_mesh(mesh, cfg.pixel_size, cfg.margin)?;
    let params = crate::bake::MapParams { seed, ..cfg.maps.clone() };
    Ok(bake_map_set(mesh, &frame, &params)?)
}

/// Positives from single-brick scenes (or the training wall when
/// `in_situ`), followed by the training-wall and decoy negatives. Each wall
/// is given by its annotations and baked maps.
pub fn build_dataset<T: Real>(
    cfg: &Config<T>,
    train: (&[Annotation<T>], &SurfaceMapSet<T>),
    decoy: Option<(&[Annotation<T>], &SurfaceMapSet<T>)>,
) -> Result<Dataset<T>, PipelineError> {
    let d = &cfg.dataset;
    let pos_seed = seed::derive(cfg.seed, TAG_POSITIVES, 0);
    let mut data = if d.in_situ {
        generate_positives_in_situ(d.positives, train.0, train.1, &d.positive, d.modality, pos_seed)?
    } else {
        generate_positives(d.positives, &cfg.brick, &d.positive, d.modality, pos_seed)?
    };
    let sources = [(Some(train), d.wall_negatives), (decoy, d.decoy_negatives)];
    for (k, (source, n)) in sources.into_iter().enumerate() {
        if let (Some((annotations, maps)), true) = (source, n > 0) {
            let s = seed::derive(cfg.seed, TAG_NEGATIVES, k as u64);
            data = data.merge(generate_negatives(n, annotations, maps, &d.negative, d.modality, s)?)?;
        }
    }
    Ok(data)
}

/// Trains a cascade on the dataset's images.
pub fn train_model<T: Real>(data: &Dataset<T>, params: &CascadeParams<T>, input: &str) -> Result<CascadeModel<T>, PipelineError> {
    let set = |label| WindowSet::new(data.images(label).map(IntegralImage::new).collect());
    train_cascade(&set(crate::sampler::Label::Positive), &set(crate::sampler::Label::Negative), params, input).map_err(|e| match e {
        TrainError::StageInfeasible { stage, reason, .. } => PipelineError::Train { stage, reason },
        TrainError::Cascade(e) => PipelineError::Cascade(e),
    })
}

/// Runs the cascade over one map channel and groups the hits.
pub fn detect_maps<T: Real>(
    img: &GrayRaster<T>,
    frame: &OrthoFrame<T>,
    model: &CascadeModel<T>,
    params: &DetectParams<T>,
) -> Result<DetectionsFile<T>, PipelineError> {
    let candidates = detect_candidates(img, model, params)?;
    Ok(DetectionsFile::new(frame.clone(), params, group_rectangles(&candidates, params.min_neighbors, params.eps)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    pub min_neighbors: usize,
    pub detections: usize,
    pub precision: T,
    pub recall: T,
    pub recall_h: T,
    pub recall_v: T,
    pub mean_labels_per_brick: T,
}

/// Detects once and regroups the candidates at each `min_neighbors`.
/// Returns the rows with the full report of each setting.
#[allow(clippy::too_many_arguments)]
pub fn sweep_neighbors<T: Real>(
    img: &GrayRaster<T>,
    frame: &OrthoFrame<T>,
    model: &CascadeModel<T>,
    params: &DetectParams<T>,
    annotations: &[Annotation<T>],
    neighbors: &[usize],
    iou_threshold: T,
) -> Result<Vec<(SweepRow<T>, EvalReport<T>)>, PipelineError> {
    let candidates = detect_candidates(img, model, params)?;
    Ok(neighbors
        .iter()
        .map(|&mn| {
            let dets = group_rectangles(&candidates, mn, params.eps);
            let report = evaluate(&dets, annotations, frame, iou_threshold);
            let row = SweepRow {
                min_neighbors: mn,
                detections: dets.len(),
                precision: report.precision,
                recall: report.recall,
                recall_h: report.recall_h,
                recall_v: report.recall_v,
                mean_labels_per_brick: report.mean_labels_per_brick(),
            };
            (row, report)
        })
        .collect())
}

pub fn sweep_csv<T: Real>(rows: &[SweepRow<T>]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.min_neighbors, r.detections, r.precision, r.recall, r.recall_h, r.recall_v, r.mean_labels_per_brick
        ));
    }
    out
}

/// Wraps the evaluation of `dets` for saving.
pub fn report_file<T: Real>(report: EvalReport<T>, dets: &DetectionsFile<T>) -> ReportFile<T> {
    ReportFile {
        format: REPORT_FORMAT.into(),
        min_neighbors: dets.min_neighbors,
        eps: dets.eps,
        mean_labels_per_brick: report.mean_labels_per_brick(),
        report,
    }
}

/// The three walls of an end-to-end run. Each role fixes its pattern,
/// brick and derived seeds, so separate commands reproduce `all`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallRole {
    Eval,
    Train,
    Decoy,
}

impl WallRole {
    pub const ALL: [WallRole; 3] = [WallRole::Eval, WallRole::Train, WallRole::Decoy];

    pub fn name(self) -> &'static str {
        match self {
            WallRole::Eval => "eval",
            WallRole::Train => "train",
            WallRole::Decoy => "decoy",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }

    /// The configured pattern; `None` for a disabled decoy.
    pub fn pattern<T: Real>(self, cfg: &Config<T>) -> Option<&str> {
        match self {
            WallRole::Eval => Some(&cfg.walls.eval_pattern),
            WallRole::Train => Some(&cfg.walls.train_pattern),
            WallRole::Decoy => cfg.walls.decoy_pattern.as_deref(),
        }
    }

    pub fn brick<T: Real>(self, cfg: &Config<T>) -> BrickSpec<T> {
        match self {
            WallRole::Decoy => BrickSpec { face_length: cfg.walls.decoy_face_length, ..cfg.brick.clone() },
            _ => cfg.brick.clone(),
        }
    }

    pub fn wall_seed(self, seed: u64) -> u64 {
        let tag = match self {
            WallRole::Eval => TAG_EVAL_WALL,
            WallRole::Train => TAG_TRAIN_WALL,
            WallRole::Decoy => TAG_DECOY_WALL,
        };
        seed::derive(seed, tag, 0)
    }

    pub fn maps_seed(self, seed: u64) -> u64 {
        seed::derive(seed, TAG_MAPS, self.index())
    }
}

impl std::str::FromStr for WallRole {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| format!("unknown wall role {s:?} (eval, train, decoy)"))
    }
}

/// Builds a wall from `pattern` (a built-in name or a file) with the
/// role's brick and seed.
pub fn build_wall<T: Real>(cfg: &Config<T>, role: WallRole, pattern: &str) -> Result<WallModel<T>, PipelineError> {
    let brick = role.brick(cfg);
    let text = load_pattern_text(pattern)?;
    let parsed = parse_pattern_with(&text, &cfg.walls.pattern_config(&brick))?;
    Ok(generate_wall(&parsed, &brick, role.wall_seed(cfg.seed))?)
}

/// Cascade parameters with the stage seed derived from the global seed.
pub fn cascade_params<T: Real>(cfg: &Config<T>) -> CascadeParams<T> {
    CascadeParams { seed: seed::derive(cfg.seed, TAG_CASCADE, 0), ..cfg.train.clone() }
}

/// Bakes `mesh` into `dir` and reads the maps back, so callers see exactly
/// what a later command loading `dir` would.
pub fn bake_to_dir<T: Real>(mesh: &crate::mesh::TriangleMesh<T>, cfg: &BakeConfig<T>, seed: u64, dir: &Path) -> Result<SurfaceMapSet<T>, PipelineError> {
    let maps = bake_mesh(mesh, cfg, seed)?;
    create_dir(dir)?;
    save_map_set(&maps, dir)?;
    Ok(load_map_set(dir)?)
}

fn wall_stage<T: Real>(cfg: &Config<T>, role: WallRole, out: &Path) -> Result<Option<(WallModel<T>, SurfaceMapSet<T>)>, PipelineError> {
    let Some(pattern) = role.pattern(cfg) else { return Ok(None) };
    let wall = build_wall(cfg, role, pattern)?;
    write_wall(&wall, &out.join("walls").join(role.name()))?;
    let maps = bake_to_dir(&wall.mesh, &cfg.bake, role.maps_seed(cfg.seed), &out.join("maps").join(role.name()))?;
    Ok(Some((wall, maps)))
}

/// What [`run_all`] measured, for callers that want numbers without
/// reading the output tree back.
#[derive(Clone, Debug)]
pub struct AllSummary<T: Real> {
    pub model: CascadeModel<T>,
    pub eval_wall: WallModel<T>,
    pub frame: OrthoFrame<T>,
    pub sweep: Vec<(SweepRow<T>, EvalReport<T>)>,
    pub report: EvalReport<T>,
}

/// The whole pipeline from one configuration into `out`:
///
/// ```text
/// config.toml              effective configuration
/// walls/{eval,train,decoy} wall.obj, annotations.json
/// maps/{eval,train,decoy}  map PNGs, maps.json
/// dataset/                 sample PNGs, manifest.json
/// cascade.json             trained model
/// training_log.json        per-stage training report
/// detections.json          eval-wall detections at detect.min_neighbors
/// enriched.json            detections with orientation, class and depth
/// overlay.png              detections drawn over the eval map
/// report.json              evaluation of detections.json
/// sweep.csv                evaluation across evaluate.sweep
/// ```
pub fn run_all<T: Real>(cfg: &Config<T>, out: &Path) -> Result<AllSummary<T>, PipelineError> {
    cfg.validate()?;
    create_dir(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml())?;

    let present = |r: WallRole| wall_stage(cfg, r, out)?.ok_or_else(|| PipelineError::Config(format!("{} wall missing", r.name())));
    let (eval_wall, eval_maps) = present(WallRole::Eval)?;
    let (train_wall, train_maps) = present(WallRole::Train)?;
    let decoy = wall_stage(cfg, WallRole::Decoy, out)?;

    let data = build_dataset(
        cfg,
        (&train_wall.annotations, &train_maps),
        decoy.as_ref().map(|(w, m)| (w.annotations.as_slice(), m)),
    )?;
    save_dataset(&data, &out.join("dataset"))?;

    let model = train_model(&data, &cascade_params(cfg), cfg.dataset.modality.name())?;
    write_text(&out.join("cascade.json"), &model.to_json())?;
    let log = serde_json::to_string_pretty(&model.metadata).expect("metadata serializes") + "\n";
    write_text(&out.join("training_log.json"), &log)?;

    let img = eval_maps.channel(cfg.dataset.modality);
    let frame = eval_maps.frame.clone();
    let dets = detect_maps(&img, &frame, &model, &cfg.detect)?;
    dets.save(&out.join("detections.json"))?;
    EnrichedFile::new(enrich(&dets.detections, &frame, &cfg.catalog())).save(&out.join("enriched.json"))?;
    let overlay_path = out.join("overlay.png");
    render_overlay(&img, &dets.detections, &cfg.overlay).save_png(&overlay_path)?;

    let report = evaluate(&dets.detections, &eval_wall.annotations, &frame, cfg.evaluate.iou_threshold);
    report_file(report.clone(), &dets).save(&out.join("report.json"))?;
    let sweep = sweep_neighbors(
        &img,
        &frame,
        &model,
        &cfg.detect,
        &eval_wall.annotations,
        &cfg.evaluate.sweep,
        cfg.evaluate.iou_threshold,
    )?;
    let rows: Vec<SweepRow<T>> = sweep.iter().map(|(r, _)| r.clone()).collect();
    write_text(&out.join("sweep.csv"), &sweep_csv(&rows))?;

    Ok(AllSummary { model, eval_wall, frame, sweep, report })
}

/// Modality names accepted on the command line.
pub fn parse_modality(s: &str) -> Result<Modality, PipelineError> {
    s.parse().map_err(PipelineError::Config)
}
