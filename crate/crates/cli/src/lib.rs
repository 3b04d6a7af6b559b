//! Subcommands of the `dasc` tool.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dasc_core::config::RunConfig;
use dasc_core::dasc::{compute_dasc, DascParams, DescriptorField};
use dasc_core::error::{DascError, Result};
use dasc_core::formats;
use dasc_core::geofield::{
    appearance_features_color, appearance_features_gray, fit_sparse_fields, propagate,
    superpixel_affinity, GeometricFieldMap, PropagationStatus,
};
use dasc_core::gidasc::compute_gi_dasc;
use dasc_core::image::{Image, RgbImage};
use dasc_core::learn::{build_training_features, select_top_patterns, train_linear_svm};
use dasc_core::lss::compute_lss;
use dasc_core::matching::{
    bad_pixel_rate, endpoint_error, label_transfer_error, match_flow_wta, match_stereo_wta,
    transfer_labels, FlowField,
};
use dasc_core::oracle::compute_dasc_oracle;
use dasc_core::pattern::{enumerate_candidate_patterns, random_patterns, SamplingPatternSet};
use dasc_core::superpixel::{segment_superpixels, segment_superpixels_color, SuperpixelMap};
use dasc_core::wmsd::{detect_wmsd, Keypoint};

#[derive(Debug, Parser)]
#[command(name = "dasc", version, about = "Dense adaptive self-correlation descriptors and matching")]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set dasc.dim=64`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Random seed (same as `--set seed=N`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dense descriptor field of one image.
    Compute(ComputeArgs),
    /// Learn sampling patterns from a manifest of window pairs.
    Learn(LearnArgs),
    /// WMSD keypoints of one image.
    Detect(DetectArgs),
    /// SLIC superpixels of one image.
    Segment(SegmentArgs),
    /// Fit sparse fields from keypoints and propagate them over superpixels.
    Propagate(PropagateArgs),
    /// Geometry-invariant descriptors from superpixels and fields.
    GiCompute(GiComputeArgs),
    /// Winner-takes-all stereo over two descriptor dumps.
    MatchStereo(MatchStereoArgs),
    /// Winner-takes-all flow over two descriptor dumps.
    MatchFlow(MatchFlowArgs),
    /// Evaluate disparity, flow or label-transfer results.
    Eval(EvalArgs),
    /// Full geometry-invariant pipeline on an image pair.
    Pipeline(PipelineArgs),
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Pattern file; random patterns from the candidate grid otherwise.
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// Use the brute-force reference path.
    #[arg(long, conflicts_with = "lss")]
    pub oracle: bool,
    /// Compute the local self-similarity baseline instead.
    #[arg(long)]
    pub lss: bool,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// CSV of `path_a,path_b,label`.
    #[arg(short, long)]
    pub manifest: PathBuf,
    /// Output pattern file.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Output model file; defaults to the pattern path with `.model` appended.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Candidate pattern file; the full grid enumeration otherwise.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Number of patterns kept; `dasc.dim` by default.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// 16-bit PGM label map.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub keypoints: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GiComputeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub fields: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub patterns: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchStereoArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// `.pfm`, or 16-bit PGM scaled by `match.disparity_scale`.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub max_disp: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MatchFlowArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Middlebury `.flo`.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub radius: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, requires = "gt_disparity")]
    pub disparity: Option<PathBuf>,
    #[arg(long)]
    pub gt_disparity: Option<PathBuf>,
    #[arg(long, requires = "gt_flow")]
    pub flow: Option<PathBuf>,
    #[arg(long)]
    pub gt_flow: Option<PathBuf>,
    #[arg(long, requires = "gt_labels")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub gt_labels: Option<PathBuf>,
    /// Nonzero pixels are evaluated; valid ground truth otherwise.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Write `name value` lines here as well as to stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Field files for image A and image B, bypassing detection. A file with
    /// a single entry applies to every superpixel.
    #[arg(long, num_args = 2, value_names = ["FIELDS_A", "FIELDS_B"])]
    pub fields_from: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// Label annotations of A and B for the label-transfer error.
    #[arg(long, num_args = 2, value_names = ["LABELS_A", "LABELS_B"])]
    pub annotations: Option<Vec<PathBuf>>,
    /// Ground-truth flow from A to B.
    #[arg(long)]
    pub gt_flow: Option<PathBuf>,
    /// Keep only the flow and the metrics.
    #[arg(long)]
    pub no_persist: bool,
}

/// Exit status for an error: 2 I/O, 3 format or invalid input, 4 degenerate
/// data, 5 internal.
pub fn exit_code(err: &DascError) -> i32 {
    match err {
        DascError::Io { .. } => 2,
        DascError::Format(_) | DascError::Parameter(_) | DascError::Dimension(_) => 3,
        DascError::Degenerate(_) | DascError::UndefinedMetric(_) => 4,
        DascError::NonFinite { .. } => 5,
    }
}

/// Effective configuration: defaults, then the file, then `--set`, then `--seed`.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| DascError::Format(format!("--set expects KEY=VALUE, got '{o}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Compute(a) => cmd_compute(&cfg, &a),
        Command::Learn(a) => cmd_learn(&cfg, &a),
        Command::Detect(a) => cmd_detect(&cfg, &a),
        Command::Segment(a) => cmd_segment(&cfg, &a),
        Command::Propagate(a) => cmd_propagate(&cfg, &a),
        Command::GiCompute(a) => cmd_gi_compute(&cfg, &a),
        Command::MatchStereo(a) => cmd_match_stereo(&cfg, &a),
        Command::MatchFlow(a) => cmd_match_flow(&cfg, &a),
        Command::Eval(a) => cmd_eval(&cfg, &a),
        Command::Pipeline(a) => cmd_pipeline(&cfg, &a),
        Command::Config => {
            print!("{}", cfg.serialize());
            Ok(())
        }
    }
}

/// Wall-clock stages printed as `stage <name> <seconds>` plus a total.
struct Timer {
    start: Instant,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now }
    }

    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        println!("stage {name} {:.4}", (now - self.last).as_secs_f64());
        self.last = now;
    }

    fn total(&self) {
        println!("total {:.4}", self.start.elapsed().as_secs_f64());
    }
}

/// Pattern file from the argument or `paths.patterns`, else `dasc.dim`
/// seeded random candidates.
fn load_patterns(cfg: &RunConfig, arg: Option<&Path>) -> Result<SamplingPatternSet> {
    let from_cfg = (!cfg.patterns.is_empty()).then(|| PathBuf::from(&cfg.patterns));
    match arg.map(Path::to_path_buf).or(from_cfg) {
        Some(p) => formats::read_patterns(&p),
        None => {
            let candidates = enumerate_candidate_patterns(&cfg.grid()?);
            random_patterns(&candidates, cfg.dim.min(candidates.len()), cfg.seed)
        }
    }
}

fn cmd_compute(cfg: &RunConfig, a: &ComputeArgs) -> Result<()> {
    let mut timer = Timer::new();
    let img = formats::load_gray(&a.input)?;
    timer.stage("load");
    let field = if a.lss {
        let f = compute_lss(&img, &cfg.lss_params())?;
        timer.stage("lss");
        f
    } else {
        let params = cfg.dasc_params()?;
        let patterns = load_patterns(cfg, a.patterns.as_deref())?;
        timer.stage("patterns");
        let f = if a.oracle {
            compute_dasc_oracle(&img, &patterns, &params, false)?
        } else {
            compute_dasc(&img, &patterns, &params)?
        };
        timer.stage(if a.oracle { "oracle" } else { "descriptor" });
        f
    };
    formats::write_descriptors(&a.output, &field)?;
    timer.stage("write");
    timer.total();
    log::info!("{}x{}x{} descriptors to {}", field.width(), field.height(), field.dim(), a.output.display());
    Ok(())
}

fn cmd_learn(cfg: &RunConfig, a: &LearnArgs) -> Result<()> {
    let params = cfg.dasc_params()?;
    let pairs = formats::load_training_pairs(&a.manifest)?;
    let candidates = match &a.candidates {
        Some(p) => formats::read_patterns(p)?,
        None => enumerate_candidate_patterns(&cfg.grid()?),
    };
    let count = a.count.unwrap_or(cfg.dim);
    log::info!("learning {count} of {} candidates from {} pairs", candidates.len(), pairs.len());
    let features = build_training_features(&pairs, &candidates, &params, cfg.sigma_r)?;
    let labels: Vec<bool> = pairs.iter().map(|p| p.matched).collect();
    let training = train_linear_svm(&features, &labels, cfg.svm_config())?;
    let selected = select_top_patterns(&training.model, &candidates, count)?;
    formats::write_patterns(&a.output, &selected)?;
    let model_path = a.model.clone().unwrap_or_else(|| {
        let mut s = a.output.clone().into_os_string();
        s.push(".model");
        PathBuf::from(s)
    });
    formats::write_model(&model_path, &training.model)?;
    println!(
        "accuracy {:.4}",
        training.model.accuracy(&features, &labels)
    );
    Ok(())
}

fn detect(cfg: &RunConfig, img: &Image) -> Result<Vec<Keypoint>> {
    let kps = detect_wmsd(img, &cfg.wmsd_params()?)?;
    log::info!("{} keypoints", kps.len());
    Ok(kps)
}

fn cmd_detect(cfg: &RunConfig, a: &DetectArgs) -> Result<()> {
    let img = formats::load_gray(&a.input)?;
    let kps = detect(cfg, &img)?;
    formats::write_keypoints(&a.output, &kps)?;
    println!("keypoints {}", kps.len());
    Ok(())
}

/// Grayscale plus the color image when the file has one.
fn load_image(path: &Path) -> Result<(Image, Option<RgbImage>)> {
    let color = formats::load_rgb(path)?;
    let gray = match &color {
        Some(c) => dasc_core::image::to_grayscale(c),
        None => formats::load_gray(path)?,
    };
    Ok((gray, color))
}

fn segment(cfg: &RunConfig, gray: &Image, color: Option<&RgbImage>) -> Result<SuperpixelMap> {
    let sp = match color {
        Some(c) => segment_superpixels_color(c, &cfg.slic_params())?,
        None => segment_superpixels(gray, &cfg.slic_params())?,
    };
    log::info!("{} superpixels", sp.count());
    Ok(sp)
}

fn cmd_segment(cfg: &RunConfig, a: &SegmentArgs) -> Result<()> {
    let (gray, color) = load_image(&a.input)?;
    let sp = segment(cfg, &gray, color.as_ref())?;
    formats::write_labels(&a.output, &sp)?;
    println!("superpixels {}", sp.count());
    Ok(())
}

/// Sparse fit and propagation; falls back to unit fields without keypoints.
fn geometric_fields(
    cfg: &RunConfig,
    gray: &Image,
    color: Option<&RgbImage>,
    sp: &SuperpixelMap,
    kps: &[Keypoint],
) -> Result<GeometricFieldMap> {
    if kps.is_empty() {
        log::warn!("no keypoints; using unit geometric fields");
        return Ok(GeometricFieldMap::unit(sp.count()));
    }
    let sparse = fit_sparse_fields(kps, sp, cfg.wmsd_base_sigma)?;
    let feats = match color {
        Some(c) => appearance_features_color(sp, c)?,
        None => appearance_features_gray(sp, gray)?,
    };
    let aff = superpixel_affinity(sp, &feats, cfg.lambda_c, cfg.lambda_p)?;
    let out = propagate(&sparse, &aff, cfg.mu)?;
    if out.status == PropagationStatus::NoConstraints {
        log::warn!("no superpixel holds a keypoint; using unit geometric fields");
    }
    log::info!("propagation residual {:.3e} after {} iterations", out.residual, out.iterations);
    Ok(out.fields)
}

fn cmd_propagate(cfg: &RunConfig, a: &PropagateArgs) -> Result<()> {
    let (gray, color) = load_image(&a.input)?;
    let sp = formats::read_labels(&a.labels)?;
    if sp.width() != gray.width() || sp.height() != gray.height() {
        return Err(DascError::Dimension("label map and image differ in size".into()));
    }
    let kps = formats::read_keypoints(&a.keypoints)?;
    let fields = geometric_fields(cfg, &gray, color.as_ref(), &sp, &kps)?;
    formats::write_fields(&a.output, &fields)?;
    Ok(())
}

/// Field file matched to a segmentation; a single entry is broadcast.
fn load_fields(path: &Path, count: usize) -> Result<GeometricFieldMap> {
    let f = formats::read_fields(path)?;
    if f.len() == 1 && count != 1 {
        return Ok(GeometricFieldMap::uniform(count, f.g_rho[0], f.g_theta[0]));
    }
    if f.len() != count {
        return Err(DascError::Format(format!(
            "{}: {} field entries for {count} superpixels",
            path.display(),
            f.len()
        )));
    }
    Ok(f)
}

fn cmd_gi_compute(cfg: &RunConfig, a: &GiComputeArgs) -> Result<()> {
    let mut timer = Timer::new();
    let img = formats::load_gray(&a.input)?;
    let sp = formats::read_labels(&a.labels)?;
    let fields = load_fields(&a.fields, sp.count())?;
    let patterns = load_patterns(cfg, a.patterns.as_deref())?;
    timer.stage("load");
    let field = compute_gi_dasc(&img, &sp, &fields, &patterns, &cfg.dasc_params()?, cfg.blur)?;
    timer.stage("gi-descriptor");
    formats::write_descriptors(&a.output, &field)?;
    timer.stage("write");
    timer.total();
    Ok(())
}

fn cmd_match_stereo(cfg: &RunConfig, a: &MatchStereoArgs) -> Result<()> {
    let l = formats::read_descriptors(&a.left)?;
    let r = formats::read_descriptors(&a.right)?;
    let d = match_stereo_wta(&l, &r, a.max_disp.unwrap_or(cfg.max_disp))?;
    formats::write_disparity(&a.output, &d, cfg.disparity_scale)
}

fn cmd_match_flow(cfg: &RunConfig, a: &MatchFlowArgs) -> Result<()> {
    let fa = formats::read_descriptors(&a.a)?;
    let fb = formats::read_descriptors(&a.b)?;
    let flow = match_flow_wta(&fa, &fb, a.radius.unwrap_or(cfg.flow_radius))?;
    formats::write_flo(&a.output, &flow)
}

fn read_mask(path: Option<&Path>, len: usize, default: impl Fn(usize) -> bool) -> Result<Vec<bool>> {
    match path {
        Some(p) => {
            let (_, _, values) = formats::read_label_image(p)?;
            if values.len() != len {
                return Err(DascError::Dimension(format!("{}: mask size differs", p.display())));
            }
            Ok(values.into_iter().map(|v| v != 0).collect())
        }
        None => Ok((0..len).map(default).collect()),
    }
}

fn cmd_eval(cfg: &RunConfig, a: &EvalArgs) -> Result<()> {
    let mut metrics: Vec<(&str, f64)> = Vec::new();
    if let (Some(est), Some(gt)) = (&a.disparity, &a.gt_disparity) {
        let est = formats::read_disparity(est, cfg.disparity_scale)?;
        let gt = formats::read_disparity(gt, cfg.disparity_scale)?;
        let mask = read_mask(a.mask.as_deref(), gt.valid.len(), |p| gt.valid[p])?;
        metrics.push(("bad_pixel_rate", bad_pixel_rate(&est, &gt, cfg.bad_threshold, &mask)?));
    }
    if let (Some(est), Some(gt)) = (&a.flow, &a.gt_flow) {
        let est = formats::read_flo(est)?;
        let gt = formats::read_flo(gt)?;
        let mask = read_mask(a.mask.as_deref(), gt.valid.len(), |p| gt.valid[p])?;
        metrics.push(("endpoint_error", endpoint_error(&est, &gt, &mask)?));
    }
    if let (Some(est), Some(gt)) = (&a.labels, &a.gt_labels) {
        let (_, _, est) = formats::read_label_image(est)?;
        let (_, _, gt) = formats::read_label_image(gt)?;
        metrics.push(("label_transfer_error", label_transfer_error(&est, &gt)?));
    }
    if metrics.is_empty() {
        return Err(DascError::Parameter(
            "nothing to evaluate: give --disparity, --flow or --labels with their ground truth".into(),
        ));
    }
    for (k, v) in &metrics {
        println!("{k} {v}");
    }
    if let Some(out) = &a.output {
        formats::write_metrics(out, &metrics)?;
    }
    Ok(())
}

struct View {
    gray: Image,
    labels: SuperpixelMap,
    keypoints: Option<Vec<Keypoint>>,
    fields: GeometricFieldMap,
    descriptors: DescriptorField,
}

fn pipeline_view(
    cfg: &RunConfig,
    params: &DascParams,
    patterns: &SamplingPatternSet,
    path: &Path,
    injected: Option<&Path>,
) -> Result<View> {
    let (gray, color) = load_image(path)?;
    let labels = segment(cfg, &gray, color.as_ref())?;
    let (keypoints, fields) = match injected {
        Some(f) => (None, load_fields(f, labels.count())?),
        None => {
            let kps = detect(cfg, &gray)?;
            let fields = geometric_fields(cfg, &gray, color.as_ref(), &labels, &kps)?;
            (Some(kps), fields)
        }
    };
    let descriptors = compute_gi_dasc(&gray, &labels, &fields, patterns, params, cfg.blur)?;
    Ok(View {
        gray,
        labels,
        keypoints,
        fields,
        descriptors,
    })
}

fn cmd_pipeline(cfg: &RunConfig, a: &PipelineArgs) -> Result<()> {
    let mut timer = Timer::new();
    std::fs::create_dir_all(&a.out_dir).map_err(|e| DascError::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    let params = cfg.dasc_params()?;
    let patterns = load_patterns(cfg, a.patterns.as_deref())?;
    let injected = a.fields_from.as_deref();
    let va = pipeline_view(cfg, &params, &patterns, &a.a, injected.map(|f| f[0].as_path()))?;
    timer.stage("image-a");
    let vb = pipeline_view(cfg, &params, &patterns, &a.b, injected.map(|f| f[1].as_path()))?;
    timer.stage("image-b");
    if va.gray.width() != vb.gray.width() || va.gray.height() != vb.gray.height() {
        return Err(DascError::Dimension("pipeline images differ in size".into()));
    }
    let flow = match_flow_wta(&va.descriptors, &vb.descriptors, cfg.flow_radius)?;
    timer.stage("match");

    let out = |name: &str| a.out_dir.join(name);
    formats::write_flo(&out("flow.flo"), &flow)?;
    if !a.no_persist {
        for (tag, v) in [("a", &va), ("b", &vb)] {
            if let Some(kps) = &v.keypoints {
                formats::write_keypoints(&out(&format!("keypoints_{tag}.txt")), kps)?;
            }
            formats::write_labels(&out(&format!("labels_{tag}.pgm")), &v.labels)?;
            formats::write_fields(&out(&format!("fields_{tag}.txt")), &v.fields)?;
            formats::write_descriptors(&out(&format!("descriptors_{tag}.bin")), &v.descriptors)?;
        }
    }

    let mut metrics: Vec<(&str, f64)> = Vec::new();
    if let Some(gt) = &a.gt_flow {
        let gt = formats::read_flo(gt)?;
        let epe = endpoint_error(&flow, &gt, &gt.valid)?;
        metrics.push(("endpoint_error", epe));
        metrics.push(("flow_outlier_rate", flow_outlier_rate(&flow, &gt, cfg.bad_threshold)?));
    }
    if let Some(ann) = &a.annotations {
        let (_, _, la) = formats::read_label_image(&ann[0])?;
        let (_, _, lb) = formats::read_label_image(&ann[1])?;
        let moved = transfer_labels(&flow, &lb)?;
        metrics.push(("label_transfer_error", label_transfer_error(&moved, &la)?));
    }
    metrics.push(("mean_match_distance", mean_match_distance(&va.descriptors, &vb.descriptors, &flow)));
    for (k, v) in &metrics {
        println!("{k} {v}");
    }
    formats::write_metrics(&out("metrics.txt"), &metrics)?;
    timer.stage("write");
    timer.total();
    Ok(())
}

/// Fraction of valid ground-truth pixels whose endpoint error exceeds
/// `threshold`; invalid estimates count as outliers.
fn flow_outlier_rate(flow: &FlowField, gt: &FlowField, threshold: f64) -> Result<f64> {
    let mut total = 0usize;
    let mut bad = 0usize;
    for p in 0..gt.values.len() {
        if !gt.valid[p] {
            continue;
        }
        total += 1;
        let [u, v] = flow.values[p];
        let [gu, gv] = gt.values[p];
        if !flow.valid[p] || (u - gu).hypot(v - gv) > threshold {
            bad += 1;
        }
    }
    if total == 0 {
        return Err(DascError::UndefinedMetric("no valid ground-truth flow".into()));
    }
    Ok(bad as f64 / total as f64)
}

/// Mean Euclidean descriptor distance along the estimated flow.
fn mean_match_distance(a: &DescriptorField, b: &DescriptorField, flow: &FlowField) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let [u, v] = flow.get(x, y);
            let (tx, ty) = ((x as f64 + u) as usize, (y as f64 + v) as usize);
            sum += a.distance_sq(x, y, b, tx, ty).sqrt();
        }
    }
    sum / (w * h) as f64
}
