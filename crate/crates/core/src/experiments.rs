//! End-to-end runs: scene draw, beam scan, clutter filtering, target search,
//! estimation and detection, plus the Monte-Carlo sweeps and their output
//! files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beams::{make_scan_plan, BeamPlan};
use crate::clutter::{find_peaks, normalize_by_gain, scan_spectrum, write_spectrum_csv, FilterSpec, IirFilter};
use crate::crb::{crb_eta_t, fim_blocks, CrbRecord, CrbResult};
use crate::detector::{beta_threshold, roc_curve, sample_grid, write_roc_csv, GlrDetector, GlrModel, RocCurve, RocSetup};
use crate::echo::{EchoSynthesizer, EchoTensor};
use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::music::{estimate_candidate, write_estimates_csv, EstimationResult};
use crate::scene::{generate_scene, snr_to_noise_var, Scene, SystemConfig};

// seed streams, so that scene, noise and each sweep draw independently
const STREAM_SCENE: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SWEEP: u64 = 3;
const STREAM_ROC: u64 = 4;

/// Where the scene comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    /// Use the two reference targets instead of random ones.
    pub reference: bool,
    pub n_targets: usize,
    pub n_scatterers: usize,
    /// Scene seed; derived from the run seed when absent.
    pub seed: Option<u64>,
    /// Load the scene from a JSON file instead of drawing it.
    pub file: Option<PathBuf>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec { reference: true, n_targets: 2, n_scatterers: 400, seed: None, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSpec {
    pub sector_deg: (f64, f64),
    pub n_beams: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { sector_deg: (-60.0, 60.0), n_beams: 61 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpec {
    /// Peaks must exceed this multiple of the spectrum median.
    pub rel_threshold: f64,
    /// Keep at most this many strongest peaks.
    pub max_candidates: Option<usize>,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec { rel_threshold: 3.0, max_candidates: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSpec {
    pub n_range: usize,
    pub n_angle: usize,
    /// Largest range the clutter grid spans (m).
    pub r_max: f64,
    pub p_fa: f64,
    /// Explicit threshold; otherwise derived from `p_fa`.
    pub gamma: Option<f64>,
    pub model: GlrModel,
    /// Estimates farther than this many beam steps from the scan direction
    /// are discarded before detection.
    pub coverage_gate_steps: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec {
            n_range: 8,
            n_angle: 4,
            r_max: 7.0,
            p_fa: 1e-3,
            gamma: None,
            model: GlrModel::Joint,
            coverage_gate_steps: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub snr_list_db: Vec<f64>,
    pub n_trials: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { snr_list_db: vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0], n_trials: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RocSpec {
    pub snr_list_db: Vec<f64>,
    pub n_trials: usize,
    pub n_thresholds: usize,
    /// Index of the target whose presence is tested.
    pub target: usize,
}

impl Default for RocSpec {
    fn default() -> Self {
        RocSpec { snr_list_db: vec![-50.0, -40.0, -30.0, -20.0, -10.0], n_trials: 500, n_thresholds: 200, target: 0 }
    }
}

/// Everything a run depends on. SNR is 10 log10(1/σ²) with unit-power
/// target reflection coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemConfig,
    pub scene: SceneSpec,
    pub scan: ScanSpec,
    pub search_filter: FilterSpec,
    pub estimation_filter: FilterSpec,
    pub search: SearchSpec,
    pub detector: DetectorSpec,
    pub sweep: SweepSpec,
    pub roc: RocSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            system: SystemConfig::default(),
            scene: SceneSpec::default(),
            scan: ScanSpec::default(),
            search_filter: FilterSpec::search_default(),
            estimation_filter: FilterSpec::estimation_default(),
            search: SearchSpec::default(),
            detector: DetectorSpec::default(),
            sweep: SweepSpec::default(),
            roc: RocSpec::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config, or the config embedded in a run manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = match value.get("config") {
            Some(c) if value.get("config_hash").is_some() => c.clone(),
            _ => value,
        };
        let cfg: ExperimentConfig = serde_json::from_value(inner)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.search_filter.design()?;
        self.estimation_filter.design()?;
        if self.search_filter.warmup >= self.system.n_sym || self.estimation_filter.warmup + 2 > self.system.n_sym {
            return Err(Error::InvalidConfig("filter warmup leaves too few symbols".into()));
        }
        let d = &self.detector;
        if !(d.p_fa > 0.0 && d.p_fa < 1.0) {
            return Err(Error::InvalidConfig(format!("p_fa {} outside (0, 1)", d.p_fa)));
        }
        if let Some(g) = d.gamma {
            if !(g > 0.0) {
                return Err(Error::InvalidConfig("gamma must be positive".into()));
            }
        } else if d.model == GlrModel::PerSlice {
            return Err(Error::InvalidConfig("the per-slice model needs an explicit gamma".into()));
        }
        if !(d.coverage_gate_steps > 0.0) || !(self.search.rel_threshold > 0.0) {
            return Err(Error::InvalidConfig("gate and peak threshold must be positive".into()));
        }
        if self.sweep.n_trials == 0 || self.roc.n_trials == 0 || self.roc.n_thresholds < 2 {
            return Err(Error::InvalidConfig("trial and threshold counts too small".into()));
        }
        if self.scene.file.is_none() && self.scene.reference && self.scene.n_targets != 2 {
            return Err(Error::InvalidConfig("the reference scene has exactly two targets".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn scene_seed(&self) -> u64 {
        self.scene.seed.unwrap_or_else(|| derive_seed(self.seed, STREAM_SCENE))
    }

    pub fn build_scene(&self) -> Result<Scene> {
        if let Some(path) = &self.scene.file {
            return Scene::from_json(&fs::read_to_string(path)?);
        }
        if self.scene.reference {
            Ok(Scene::reference(self.scene.n_scatterers, self.scene_seed()))
        } else {
            generate_scene(&self.system, self.scene.n_targets, self.scene.n_scatterers, self.scene_seed())
        }
    }

    pub fn build_plan(&self) -> Result<BeamPlan> {
        let (lo, hi) = self.scan.sector_deg;
        make_scan_plan(&self.system, (lo.to_radians(), hi.to_radians()), self.scan.n_beams)
    }

    /// Noise seed of scan `b` in a single pipeline run.
    pub fn scan_noise_seed(&self, b: usize) -> u64 {
        derive_seed(derive_seed(self.seed, STREAM_NOISE), b as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub wall_s: f64,
}

/// A failure confined to one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub scan: usize,
    pub stage: String,
    pub kind: String,
    pub message: String,
}

impl StageError {
    fn new(scan: usize, stage: &str, e: &Error) -> Self {
        StageError { scan, stage: stage.into(), kind: e.kind().into(), message: e.to_string() }
    }
}

#[derive(Default)]
struct Timer {
    stages: Vec<StageTiming>,
}

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTiming { stage: stage.into(), wall_s: start.elapsed().as_secs_f64() });
        out
    }
}

/// Last pipeline stage to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Until {
    Spectrum,
    Estimates,
    Detections,
}

/// One GLRT decision for an estimated candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub estimate: EstimationResult,
    pub in_coverage: bool,
    /// None when the candidate was gated out or undetectable.
    pub statistic: Option<f64>,
    pub gamma: f64,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub scene: Scene,
    pub plan: BeamPlan,
    pub spectrum: Vec<f64>,
    pub candidates: Vec<usize>,
    pub estimates: Vec<EstimationResult>,
    pub detections: Vec<DetectionRecord>,
    pub errors: Vec<StageError>,
    pub timings: Vec<StageTiming>,
}

impl RunReport {
    /// Estimates of the candidates that passed the GLRT.
    pub fn detected(&self) -> Vec<EstimationResult> {
        self.detections.iter().filter(|d| d.detected).map(|d| d.estimate).collect()
    }
}

/// Threshold the detector uses under `spec`.
pub fn detection_threshold(spec: &DetectorSpec, detector: &GlrDetector) -> Result<f64> {
    match spec.gamma {
        Some(g) => Ok(g),
        None => beta_threshold(spec.p_fa, detector.residual_dim()),
    }
}

/// Beam scan, clutter filtering, peak search, estimation and detection.
/// Failures of one scan are recorded and stop only that scan's later stages.
pub fn run_pipeline(cfg: &ExperimentConfig, until: Until) -> Result<RunReport> {
    cfg.validate()?;
    let sys = &cfg.system;
    let mut timer = Timer::default();
    let scene = cfg.build_scene()?;
    let plan = cfg.build_plan()?;
    let synth = EchoSynthesizer::new(&scene, sys)?;
    let raw: Vec<EchoTensor> = timer.time("synthesize", || {
        (0..plan.len())
            .into_par_iter()
            .map(|b| synth.synthesize(&plan, b, sys.noise_var, cfg.scan_noise_seed(b)))
            .collect::<Result<_>>()
    })?;
    let normalized: Vec<EchoTensor> = timer.time("normalize", || {
        raw.par_iter().map(|y| normalize_by_gain(y, &plan, sys)).collect::<Result<_>>()
    })?;
    let search = cfg.search_filter.design()?;
    let filtered: Vec<EchoTensor> = timer.time("filter", || {
        normalized.par_iter().map(|y| cfg.search_filter.apply(&search, y)).collect::<Result<_>>()
    })?;
    let spectrum = timer.time("spectrum", || scan_spectrum(&filtered))?;
    let candidates = timer.time("peaks", || {
        let mut peaks = find_peaks(&spectrum, cfg.search.rel_threshold);
        if let Some(k) = cfg.search.max_candidates {
            peaks.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]).then(a.cmp(&b)));
            peaks.truncate(k);
            peaks.sort_unstable();
        }
        peaks
    });
    let mut report = RunReport {
        scene,
        plan,
        spectrum,
        candidates,
        estimates: Vec::new(),
        detections: Vec::new(),
        errors: Vec::new(),
        timings: Vec::new(),
    };
    if until >= Until::Estimates {
        let est_filter = cfg.estimation_filter.design()?;
        let results: Vec<(usize, Result<EstimationResult>)> = timer.time("estimate", || {
            report
                .candidates
                .par_iter()
                .map(|&b| {
                    let r = cfg.estimation_filter.apply(&est_filter, &normalized[b]).and_then(|y| estimate_candidate(&y, b, sys));
                    (b, r)
                })
                .collect()
        });
        for (b, r) in results {
            match r {
                Ok(e) => report.estimates.push(e),
                Err(e) => report.errors.push(StageError::new(b, "estimate", &e)),
            }
        }
    }
    if until >= Until::Detections {
        let gate = cfg.detector.coverage_gate_steps * report.plan.step();
        let plan = &report.plan;
        let results: Vec<(usize, Result<DetectionRecord>)> = timer.time("detect", || {
            report
                .estimates
                .par_iter()
                .map(|e| (e.scan, detect_candidate(cfg, plan, &raw[e.scan], e, gate)))
                .collect()
        });
        for (b, r) in results {
            match r {
                Ok(d) => report.detections.push(d),
                Err(e) => report.errors.push(StageError::new(b, "detect", &e)),
            }
        }
    }
    report.timings = timer.stages;
    Ok(report)
}

fn detect_candidate(cfg: &ExperimentConfig, plan: &BeamPlan, y: &EchoTensor, e: &EstimationResult, gate: f64) -> Result<DetectionRecord> {
    let d = &cfg.detector;
    let grid = sample_grid(e.scan, plan, &cfg.system, d.n_range, d.n_angle, d.r_max)?;
    let detector = GlrDetector::new(grid, plan, &cfg.system, d.model)?;
    let gamma = detection_threshold(d, &detector)?;
    let in_coverage = (e.theta_hat - plan.directions[e.scan]).abs() <= gate;
    if !in_coverage {
        return Ok(DetectionRecord { estimate: *e, in_coverage, statistic: None, gamma, detected: false });
    }
    let candidate = crate::scene::Frequencies { range: e.psi_r_hat, doppler: e.psi_d_hat, spatial: e.psi_s_hat };
    match detector.statistic(y, &candidate) {
        Ok(o) => Ok(DetectionRecord { estimate: *e, in_coverage, statistic: Some(o.statistic), gamma, detected: o.statistic > gamma }),
        Err(Error::Undetectable { .. }) => Ok(DetectionRecord { estimate: *e, in_coverage, statistic: None, gamma, detected: false }),
        Err(err) => Err(err),
    }
}

/// Writes `b,theta_deg,range_m,speed_mps,in_coverage,statistic,gamma,detected` rows.
pub fn write_detections_csv<W: std::io::Write>(out: W, rows: &[DetectionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["b", "theta_deg", "range_m", "speed_mps", "in_coverage", "statistic", "gamma", "detected"])?;
    for d in rows {
        let e = &d.estimate;
        w.write_record([
            e.scan.to_string(),
            format!("{}", e.theta_hat.to_degrees()),
            format!("{}", e.range_hat),
            format!("{}", e.speed_hat),
            d.in_coverage.to_string(),
            d.statistic.map(|t| format!("{t:e}")).unwrap_or_default(),
            format!("{:e}", d.gamma),
            d.detected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Provenance of one command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub errors: Vec<StageError>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        Manifest {
            library_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            config_hash: cfg.hash(),
            config: cfg.clone(),
            stages: Vec::new(),
            outputs: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

/// Opens `out_dir/name` for writing and records it in the manifest.
fn create(out_dir: &Path, name: &str, manifest: &mut Manifest) -> Result<BufWriter<File>> {
    manifest.outputs.push(name.into());
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

fn write_filter(out_dir: &Path, name: &str, f: &IirFilter, manifest: &mut Manifest) -> Result<()> {
    manifest.outputs.push(name.into());
    fs::write(out_dir.join(name), f.to_json()?)?;
    Ok(())
}

/// Runs the pipeline up to `until` and writes its CSVs, the filter
/// coefficients and the manifest into `out_dir`.
pub fn run_and_write(cfg: &ExperimentConfig, until: Until, command: &str, out_dir: &Path) -> Result<(RunReport, Manifest)> {
    fs::create_dir_all(out_dir)?;
    let report = run_pipeline(cfg, until)?;
    let mut m = Manifest::new(command, cfg);
    report.plan.write_csv(create(out_dir, "plan.csv", &mut m)?)?;
    write_filter(out_dir, "search_filter.json", &cfg.search_filter.design()?, &mut m)?;
    write_spectrum_csv(create(out_dir, "spectrum.csv", &mut m)?, &report.plan, &report.spectrum)?;
    if until >= Until::Estimates {
        write_filter(out_dir, "estimation_filter.json", &cfg.estimation_filter.design()?, &mut m)?;
        write_estimates_csv(create(out_dir, "estimates.csv", &mut m)?, &report.estimates)?;
    }
    if until >= Until::Detections {
        write_detections_csv(create(out_dir, "detections.csv", &mut m)?, &report.detections)?;
    }
    m.stages = report.timings.clone();
    m.errors = report.errors.clone();
    m.write(out_dir)?;
    Ok((report, m))
}

/// Draws the scene and writes it with the raw echo of every scan
/// (`echo_bNNN.bin`), the beam plan and the filter coefficients.
pub fn simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut timer = Timer::default();
    let mut m = Manifest::new("simulate", cfg);
    let scene = cfg.build_scene()?;
    let plan = cfg.build_plan()?;
    m.outputs.push("scene.json".into());
    fs::write(out_dir.join("scene.json"), scene.to_json()?)?;
    plan.write_csv(create(out_dir, "plan.csv", &mut m)?)?;
    write_filter(out_dir, "search_filter.json", &cfg.search_filter.design()?, &mut m)?;
    write_filter(out_dir, "estimation_filter.json", &cfg.estimation_filter.design()?, &mut m)?;
    let synth = EchoSynthesizer::new(&scene, &cfg.system)?;
    let echoes: Vec<EchoTensor> = timer.time("synthesize", || {
        (0..plan.len())
            .into_par_iter()
            .map(|b| synth.synthesize(&plan, b, cfg.system.noise_var, cfg.scan_noise_seed(b)))
            .collect::<Result<_>>()
    })?;
    timer.time("write", || -> Result<()> {
        for y in &echoes {
            let name = format!("echo_b{:03}.bin", y.scan);
            y.write_binary(create(out_dir, &name, &mut m)?)?;
        }
        Ok(())
    })?;
    m.stages = timer.stages;
    m.write(out_dir)?;
    Ok(m)
}

/// Beam whose coverage contains target `i`, if any.
fn target_beam(scene: &Scene, plan: &BeamPlan, i: usize) -> Result<usize> {
    let t = scene
        .targets
        .get(i)
        .ok_or_else(|| Error::InvalidArgument(format!("scene has no target {i}")))?;
    plan.beam_for(t.theta)
        .ok_or_else(|| Error::InvalidArgument(format!("target {i} lies outside the scan sector")))
}

/// Kinematic CRB of every target in the scan that covers it, at unit noise
/// variance. Row `i` of the result belongs to target `i`.
pub fn target_crbs(scene: &Scene, plan: &BeamPlan, sys: &SystemConfig) -> Result<Vec<[f64; 3]>> {
    let unit = sys.with_noise_var(1.0);
    (0..scene.targets.len())
        .map(|i| {
            let b = target_beam(scene, plan, i)?;
            let crb: CrbResult = crb_eta_t(&fim_blocks(b, scene, plan, &unit)?, scene.targets.len())?;
            Ok([crb.theta_var(i), crb.range_var(i), crb.speed_var(i)])
        })
        .collect()
}

/// CRB record at the configured noise variance.
pub fn crb_record(cfg: &ExperimentConfig) -> Result<CrbRecord> {
    cfg.validate()?;
    let sigma2 = cfg.system.noise_var;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidConfig("the bound needs a positive noise variance".into()));
    }
    let scene = cfg.build_scene()?;
    let plan = cfg.build_plan()?;
    let rows = target_crbs(&scene, &plan, &cfg.system)?;
    Ok(CrbRecord {
        snr_db: -10.0 * sigma2.log10(),
        crb_theta_rad2: rows.iter().map(|r| r[0] * sigma2).collect(),
        crb_r_m2: rows.iter().map(|r| r[1] * sigma2).collect(),
        crb_v_mps2: rows.iter().map(|r| r[2] * sigma2).collect(),
    })
}

pub fn write_crb(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(CrbRecord, Manifest)> {
    fs::create_dir_all(out_dir)?;
    let mut timer = Timer::default();
    let rec = timer.time("crb", || crb_record(cfg))?;
    let mut m = Manifest::new("crb", cfg);
    m.outputs.push("crb.json".into());
    fs::write(out_dir.join("crb.json"), serde_json::to_string_pretty(&rec)?)?;
    m.stages = timer.stages;
    m.write(out_dir)?;
    Ok((rec, m))
}

/// One (SNR, parameter) cell of the efficiency sweep. `param` is
/// `theta_tN` (rad²), `range_tN` (m²) or `speed_tN` ((m/s)²) for target N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub param: String,
    pub mse: f64,
    pub crb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Trials whose estimate failed, per (SNR index, target).
    pub failures: Vec<(f64, usize, usize)>,
}

impl SweepReport {
    pub fn row(&self, snr_db: f64, param: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.param == param)
    }
}

/// Monte-Carlo MSE of each target's estimates in its own scan against the
/// CRB, which is computed once and scaled linearly in σ².
pub fn sweep_snr(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let sys = &cfg.system;
    let scene = cfg.build_scene()?;
    let plan = cfg.build_plan()?;
    let crbs = target_crbs(&scene, &plan, sys)?;
    let synth = EchoSynthesizer::new(&scene, sys)?;
    let filt = cfg.estimation_filter.design()?;
    let base = derive_seed(cfg.seed, STREAM_SWEEP);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, t) in scene.targets.iter().enumerate() {
        let b = target_beam(&scene, &plan, i)?;
        let clean = synth.noiseless(&plan, b)?;
        for (k, &snr_db) in cfg.sweep.snr_list_db.iter().enumerate() {
            let var = snr_to_noise_var(snr_db);
            let stream = derive_seed(derive_seed(base, i as u64), k as u64);
            let errs: Vec<Option<[f64; 3]>> = (0..cfg.sweep.n_trials)
                .into_par_iter()
                .map(|n| {
                    let mut y = clean.clone();
                    y.add_noise(var, derive_seed(stream, n as u64));
                    let est = normalize_by_gain(&y, &plan, sys)
                        .and_then(|yn| cfg.estimation_filter.apply(&filt, &yn))
                        .and_then(|yc| estimate_candidate(&yc, b, sys));
                    est.ok().map(|e| [e.theta_hat - t.theta, e.range_hat - t.range, e.speed_hat - t.speed])
                })
                .collect();
            let ok: Vec<[f64; 3]> = errs.iter().flatten().copied().collect();
            let failed = errs.len() - ok.len();
            if failed > 0 {
                failures.push((snr_db, i, failed));
            }
            for (j, name) in ["theta", "range", "speed"].iter().enumerate() {
                let mse = if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|e| e[j] * e[j]).sum::<f64>() / ok.len() as f64
                };
                rows.push(SweepRow { snr_db, param: format!("{name}_t{i}"), mse, crb: crbs[i][j] * var });
            }
        }
    }
    Ok(SweepReport { rows, failures })
}

/// Writes `snr_db,param,mse,crb` rows.
pub fn write_sweep_csv<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["snr_db", "param", "mse", "crb"])?;
    for r in rows {
        w.write_record([format!("{}", r.snr_db), r.param.clone(), format!("{:e}", r.mse), format!("{:e}", r.crb)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(SweepReport, Manifest)> {
    fs::create_dir_all(out_dir)?;
    let mut timer = Timer::default();
    let rep = timer.time("sweep", || sweep_snr(cfg))?;
    let mut m = Manifest::new("sweep-snr", cfg);
    write_sweep_csv(create(out_dir, "sweep.csv", &mut m)?, &rep.rows)?;
    m.stages = timer.stages;
    m.write(out_dir)?;
    Ok((rep, m))
}

/// H0 and H1 scenes for the ROC: the full scene with and without the tested target.
pub fn roc_scenes(scene: &Scene, target: usize) -> Result<(Scene, Scene)> {
    if target >= scene.targets.len() {
        return Err(Error::InvalidArgument(format!("scene has no target {target}")));
    }
    let mut h0 = scene.clone();
    h0.targets.remove(target);
    Ok((h0, scene.clone()))
}

/// ROC of the tested target's true frequencies in the scan covering it.
pub fn roc_experiment(cfg: &ExperimentConfig) -> Result<Vec<RocCurve>> {
    cfg.validate()?;
    let scene = cfg.build_scene()?;
    let plan = cfg.build_plan()?;
    let i = cfg.roc.target;
    let (h0, h1) = roc_scenes(&scene, i)?;
    let beam = target_beam(&scene, &plan, i)?;
    let d = &cfg.detector;
    let setup = RocSetup {
        beam,
        candidate: scene.targets[i].frequencies(&cfg.system),
        n_range: d.n_range,
        n_angle: d.n_angle,
        r_max: d.r_max,
        model: d.model,
        seed: derive_seed(cfg.seed, STREAM_ROC),
    };
    roc_curve(&h0, &h1, &cfg.system, &plan, &setup, &cfg.roc.snr_list_db, cfg.roc.n_trials, cfg.roc.n_thresholds)
}

pub fn write_roc(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<RocCurve>, Manifest)> {
    fs::create_dir_all(out_dir)?;
    let mut timer = Timer::default();
    let curves = timer.time("roc", || roc_experiment(cfg))?;
    let mut m = Manifest::new("roc", cfg);
    write_roc_csv(create(out_dir, "roc.csv", &mut m)?, &curves)?;
    m.stages = timer.stages;
    m.write(out_dir)?;
    Ok((curves, m))
}
