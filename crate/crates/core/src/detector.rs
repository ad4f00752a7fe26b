//! GLRT rejection of false moving-target candidates against a sampled
//! range-spatial clutter subspace, plus threshold calibration and ROC curves.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beams::BeamPlan;
use crate::echo::{steering_rx, EchoSynthesizer, EchoTensor};
use crate::error::{Error, Result};
use crate::linalg::{column_space_basis, derive_seed};
use crate::scene::{snr_to_noise_var, Frequencies, Scene, SystemConfig};

/// Relative singular-value cutoff for clutter bases and pseudo-inverses.
pub const BASIS_REL_TOL: f64 = 1e-10;
/// Candidates with aᴴP⊥a below this fraction of ‖a‖² are undetectable.
pub const UNDETECTABLE_REL: f64 = 1e-12;
/// Residual energy below this fraction of ‖y‖² counts as exactly explained data.
pub const ZERO_RESIDUAL_REL: f64 = 1e-20;

/// Range-spatial frequency grid of one scan, range index outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionGrid {
    pub scan: usize,
    pub n_range: usize,
    pub n_angle: usize,
    /// (ψ̃_r, ψ̃_s) pairs.
    pub points: Vec<(f64, f64)>,
}

impl DetectionGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Uniform tensor grid: ψ̃_r over [0, ψ_r(r_max)], ψ̃_s over the spatial
/// frequency image of beam `b`'s coverage. A single point sits at the centre.
pub fn sample_grid(b: usize, plan: &BeamPlan, cfg: &SystemConfig, n_range: usize, n_angle: usize, r_max: f64) -> Result<DetectionGrid> {
    if b >= plan.len() {
        return Err(Error::InvalidArgument(format!("beam index {b} out of range")));
    }
    if n_range == 0 || n_angle == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point per axis".into()));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::InvalidArgument(format!("maximum range {r_max} must be positive")));
    }
    let n_g = n_range * n_angle;
    let dof = cfg.m_rx * cfg.n_sub * cfg.n_sym;
    if n_g >= dof {
        return Err(Error::InvalidArgument(format!(
            "grid of {n_g} points leaves no residual degrees of freedom out of {dof}"
        )));
    }
    let (lo, hi) = plan.coverage(b);
    let psi_r = linspace(0.0, cfg.range_frequency(r_max), n_range);
    let psi_s = linspace(cfg.spatial_frequency(lo), cfg.spatial_frequency(hi), n_angle);
    let points = psi_r.iter().flat_map(|&r| psi_s.iter().map(move |&s| (r, s))).collect();
    Ok(DetectionGrid { scan: b, n_range, n_angle, points })
}

/// Ã_{b,l}: column n is g̃ e^{−j2π l ψ̃_r} a_{s,r}(ψ̃_s). Clutter carries no
/// Doppler, so the same matrix serves every symbol.
pub fn clutter_basis(grid: &DetectionGrid, l: usize, plan: &BeamPlan, cfg: &SystemConfig) -> Result<DMatrix<Complex64>> {
    let g = plan.g_tilde(grid.scan, cfg)?;
    let cols: Vec<DVector<Complex64>> = grid
        .points
        .iter()
        .map(|&(psi_r, psi_s)| steering_rx(psi_s, cfg.m_rx) * (g * Complex64::from_polar(1.0, -TAU * l as f64 * psi_r)))
        .collect();
    Ok(DMatrix::from_columns(&cols))
}

/// P⊥ = I − Ã(ÃᴴÃ)⁺Ãᴴ, formed from an orthonormal basis of the column space.
pub fn perp_projector(a_tilde: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let q = column_space_basis(a_tilde, BASIS_REL_TOL);
    DMatrix::identity(a_tilde.nrows(), a_tilde.nrows()) - &q * q.adjoint()
}

fn pinv(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if a.ncols() == 0 || a.nrows() == 0 || a.iter().all(|z| z.norm() == 0.0) {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let smax = a.clone().svd(false, false).singular_values.max();
    a.clone()
        .pseudo_inverse(BASIS_REL_TOL * smax)
        .expect("non-negative tolerance")
}

/// How the clutter subspace is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlrModel {
    /// One projector per receive vector; target range and Doppler phases
    /// cancel in every term, so only the spatial signature separates target
    /// from clutter.
    PerSlice,
    /// One projector on the whole stacked echo, where clutter spans
    /// 1_P ⊗ [Ã_0; …; Ã_{L−1}] and the target keeps its range and Doppler
    /// signature.
    Joint,
}

/// Test statistic and ML nuisance estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrOutcome {
    pub statistic: f64,
    pub sigma2_hat_h0: f64,
    pub sigma2_hat_h1: f64,
    pub alpha_hat: Complex64,
    /// Clutter coefficients under H0 and H1.
    pub clutter_hat_h0: DVector<Complex64>,
    pub clutter_hat_h1: DVector<Complex64>,
    pub model: GlrModel,
}

/// Declares a target when t > γ.
pub fn detect(outcome: &GlrOutcome, gamma: f64) -> bool {
    outcome.statistic > gamma
}

/// Target response a_{b,l,p} stacked in echo storage order.
pub fn target_response(candidate: &Frequencies, g_tilde: Complex64, cfg: &SystemConfig) -> Vec<Complex64> {
    let ar = steering_rx(candidate.spatial, cfg.m_rx);
    let mut out = Vec::with_capacity(cfg.m_rx * cfg.n_sub * cfg.n_sym);
    for p in 0..cfg.n_sym {
        for l in 0..cfg.n_sub {
            let s = g_tilde * Complex64::from_polar(1.0, TAU * (p as f64 * candidate.doppler - l as f64 * candidate.range));
            out.extend(ar.iter().map(|z| z * s));
        }
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn energy(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// GLRT for one scan with the clutter projectors computed once and reused
/// for every candidate and Monte-Carlo trial.
#[derive(Debug, Clone)]
pub struct GlrDetector {
    pub grid: DetectionGrid,
    pub model: GlrModel,
    cfg: SystemConfig,
    g_tilde: Complex64,
    // per subcarrier (PerSlice): projector and pseudo-inverse of Ã_l
    slice_perp: Vec<DMatrix<Complex64>>,
    slice_pinv: Vec<DMatrix<Complex64>>,
    // Joint: orthonormal basis and pseudo-inverse of the per-symbol block B
    joint_basis: DMatrix<Complex64>,
    joint_pinv: DMatrix<Complex64>,
}

impl GlrDetector {
    pub fn new(grid: DetectionGrid, plan: &BeamPlan, cfg: &SystemConfig, model: GlrModel) -> Result<Self> {
        let g_tilde = plan.g_tilde(grid.scan, cfg)?;
        let slices: Vec<DMatrix<Complex64>> = (0..cfg.n_sub)
            .map(|l| clutter_basis(&grid, l, plan, cfg))
            .collect::<Result<_>>()?;
        let (mut slice_perp, mut slice_pinv) = (Vec::new(), Vec::new());
        let (mut joint_basis, mut joint_pinv) = (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
        match model {
            GlrModel::PerSlice => {
                slice_perp = slices.iter().map(perp_projector).collect();
                slice_pinv = slices.iter().map(pinv).collect();
            }
            GlrModel::Joint => {
                let (m, n_g) = (cfg.m_rx, grid.len());
                let mut block = DMatrix::zeros(m * cfg.n_sub, n_g);
                for (l, a) in slices.iter().enumerate() {
                    block.view_mut((l * m, 0), (m, n_g)).copy_from(a);
                }
                joint_basis = column_space_basis(&block, BASIS_REL_TOL);
                joint_pinv = pinv(&block);
            }
        }
        Ok(GlrDetector { grid, model, cfg: *cfg, g_tilde, slice_perp, slice_pinv, joint_basis, joint_pinv })
    }

    /// Residual degrees of freedom M_r L P − rank of the clutter subspace.
    pub fn residual_dim(&self) -> usize {
        let total = self.cfg.m_rx * self.cfg.n_sub * self.cfg.n_sym;
        match self.model {
            GlrModel::Joint => total - self.joint_basis.ncols(),
            GlrModel::PerSlice => {
                let rank: usize = self
                    .slice_perp
                    .iter()
                    .map(|p| self.cfg.m_rx - p.trace().re.round() as usize)
                    .sum();
                total - rank * self.cfg.n_sym
            }
        }
    }

    /// P⊥ applied to a stacked vector in echo storage order.
    pub fn project_out(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (m, n_sub, n_sym) = (self.cfg.m_rx, self.cfg.n_sub, self.cfg.n_sym);
        let block = m * n_sub;
        match self.model {
            GlrModel::PerSlice => {
                let mut out = Vec::with_capacity(v.len());
                for p in 0..n_sym {
                    for l in 0..n_sub {
                        let start = p * block + l * m;
                        let y = DVector::from_column_slice(&v[start..start + m]);
                        out.extend((&self.slice_perp[l] * y).iter());
                    }
                }
                out
            }
            GlrModel::Joint => {
                let mut mean = DVector::<Complex64>::zeros(block);
                for p in 0..n_sym {
                    for (k, z) in v[p * block..(p + 1) * block].iter().enumerate() {
                        mean[k] += z;
                    }
                }
                mean /= Complex64::new(n_sym as f64, 0.0);
                let proj = &self.joint_basis * (self.joint_basis.adjoint() * mean);
                v.iter().enumerate().map(|(i, z)| z - proj[i % block]).collect()
            }
        }
    }

    fn clutter_coefficients(&self, v: &[Complex64]) -> DVector<Complex64> {
        let (m, n_sub, n_sym) = (self.cfg.m_rx, self.cfg.n_sub, self.cfg.n_sym);
        let block = m * n_sub;
        match self.model {
            GlrModel::PerSlice => {
                // summed per-slice least-squares fits, as in the closed form
                let mut acc = DVector::zeros(self.grid.len());
                for p in 0..n_sym {
                    for l in 0..n_sub {
                        let start = p * block + l * m;
                        acc += &self.slice_pinv[l] * DVector::from_column_slice(&v[start..start + m]);
                    }
                }
                acc
            }
            GlrModel::Joint => {
                let mut mean = DVector::<Complex64>::zeros(block);
                for p in 0..n_sym {
                    for (k, z) in v[p * block..(p + 1) * block].iter().enumerate() {
                        mean[k] += z;
                    }
                }
                &self.joint_pinv * (mean / Complex64::new(n_sym as f64, 0.0))
            }
        }
    }

    /// Statistic and nuisance estimates for a candidate on the raw echo `y`.
    pub fn statistic(&self, y: &EchoTensor, candidate: &Frequencies) -> Result<GlrOutcome> {
        y.check_shape(&self.cfg)?;
        if !(candidate.range.is_finite() && candidate.doppler.is_finite() && candidate.spatial.is_finite()) {
            return Err(Error::InvalidArgument("candidate frequencies must be finite".into()));
        }
        let cfg = &self.cfg;
        let n_total = (cfg.m_rx * cfg.n_sub * cfg.n_sym) as f64;
        let a = target_response(candidate, self.g_tilde, cfg);
        let py = self.project_out(&y.data);
        let pa = self.project_out(&a);
        let resid0 = energy(&py);
        let sigma2_h0 = resid0 / n_total;
        let (explained, alpha_hat) = match self.model {
            GlrModel::Joint => {
                let den = dot(&a, &pa).re;
                let ratio = den / energy(&a);
                if !(ratio >= UNDETECTABLE_REL) {
                    return Err(Error::Undetectable { ratio });
                }
                let num = dot(&pa, &y.data);
                (num.norm_sqr() / den, num / den)
            }
            GlrModel::PerSlice => {
                let m = cfg.m_rx;
                let mut explained = 0.0;
                let mut alpha = Complex64::new(0.0, 0.0);
                for s in 0..(cfg.n_sub * cfg.n_sym) {
                    let r = s * m..(s + 1) * m;
                    let den = dot(&a[r.clone()], &pa[r.clone()]).re;
                    let ratio = den / energy(&a[r.clone()]);
                    if !(ratio >= UNDETECTABLE_REL) {
                        return Err(Error::Undetectable { ratio });
                    }
                    let num = dot(&pa[r.clone()], &y.data[r]);
                    explained += num.norm_sqr() / den;
                    alpha += num / den;
                }
                (explained, alpha)
            }
        };
        let zero_residual = resid0 <= ZERO_RESIDUAL_REL * energy(&y.data);
        let statistic = if zero_residual { 0.0 } else { explained / (n_total * sigma2_h0) };
        let sigma2_h1 = if zero_residual { 0.0 } else { (sigma2_h0 - explained / n_total).max(0.0) };
        let clutter_hat_h0 = self.clutter_coefficients(&y.data);
        let shifted: Vec<Complex64> = y.data.iter().zip(&a).map(|(v, t)| v - alpha_hat * t).collect();
        let clutter_hat_h1 = self.clutter_coefficients(&shifted);
        Ok(GlrOutcome {
            statistic,
            sigma2_hat_h0: sigma2_h0,
            sigma2_hat_h1: sigma2_h1,
            alpha_hat,
            clutter_hat_h0,
            clutter_hat_h1,
            model: self.model,
        })
    }

    /// Threshold giving false-alarm probability `p_fa` under white noise
    /// (joint model): t then follows Beta(1, n − 1) with n the residual
    /// dimension, so P(t > γ) = (1 − γ)^{n−1}.
    pub fn threshold_for_pfa(&self, p_fa: f64) -> Result<f64> {
        if self.model != GlrModel::Joint {
            return Err(Error::InvalidArgument("analytic threshold is only available for the joint model".into()));
        }
        beta_threshold(p_fa, self.residual_dim())
    }
}

/// γ with (1 − γ)^{n−1} = p_fa.
pub fn beta_threshold(p_fa: f64, residual_dim: usize) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidArgument(format!("false-alarm probability {p_fa} outside (0, 1)")));
    }
    if residual_dim < 2 {
        return Err(Error::InvalidArgument("residual dimension must be at least 2".into()));
    }
    Ok(1.0 - p_fa.powf(1.0 / (residual_dim - 1) as f64))
}

/// Per-slice statistic exactly as the closed-form criterion prints it.
pub fn glr_statistic(y: &EchoTensor, candidate: &Frequencies, grid: &DetectionGrid, plan: &BeamPlan, cfg: &SystemConfig) -> Result<GlrOutcome> {
    GlrDetector::new(grid.clone(), plan, cfg, GlrModel::PerSlice)?.statistic(y, candidate)
}

/// Same criterion with one projector over the stacked echo.
pub fn glr_statistic_joint(y: &EchoTensor, candidate: &Frequencies, grid: &DetectionGrid, plan: &BeamPlan, cfg: &SystemConfig) -> Result<GlrOutcome> {
    GlrDetector::new(grid.clone(), plan, cfg, GlrModel::Joint)?.statistic(y, candidate)
}

/// Threshold whose exceedance rate over `h0` samples is closest to `p_fa`.
pub fn empirical_threshold(h0: &[f64], p_fa: f64) -> Result<f64> {
    if h0.is_empty() || !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidArgument("need H0 samples and p_fa in (0, 1)".into()));
    }
    let mut s = h0.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = ((p_fa * n as f64).round() as usize).min(n - 1);
    Ok(s[n - 1 - k])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub gamma: f64,
    pub p_fa: f64,
    pub p_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub snr_db: f64,
    /// Thresholds descending, so both rates are nondecreasing.
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Best detection rate reachable at a false-alarm rate of at most `p_fa`.
    pub fn detection_at(&self, p_fa: f64) -> f64 {
        self.points
            .iter()
            .filter(|pt| pt.p_fa <= p_fa)
            .map(|pt| pt.p_d)
            .fold(0.0, f64::max)
    }
}

fn exceed_fraction(sorted: &[f64], gamma: f64) -> f64 {
    let below = sorted.partition_point(|v| *v <= gamma);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// Empirical ROC from H0 and H1 statistic samples.
///
/// Thresholds are `n_thresholds` order statistics of the pooled samples plus
/// one value below all of them, so the curve runs from (0, 0) to (1, 1).
pub fn roc_from_statistics(h0: &[f64], h1: &[f64], n_thresholds: usize) -> Result<Vec<RocPoint>> {
    if h0.is_empty() || h1.is_empty() || n_thresholds < 2 {
        return Err(Error::InvalidArgument("ROC needs samples under both hypotheses and two thresholds".into()));
    }
    let mut s0 = h0.to_vec();
    let mut s1 = h1.to_vec();
    s0.sort_by(f64::total_cmp);
    s1.sort_by(f64::total_cmp);
    let mut pooled: Vec<f64> = s0.iter().chain(&s1).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len();
    let mut gammas: Vec<f64> = (0..n_thresholds)
        .map(|k| pooled[((n - 1) as f64 * k as f64 / (n_thresholds - 1) as f64).round() as usize])
        .collect();
    gammas.push(pooled[0] - 1.0);
    gammas.sort_by(|a, b| b.total_cmp(a));
    gammas.dedup();
    Ok(gammas
        .into_iter()
        .map(|gamma| RocPoint { gamma, p_fa: exceed_fraction(&s0, gamma), p_d: exceed_fraction(&s1, gamma) })
        .collect())
}

/// Monte-Carlo settings for [`roc_curve`].
#[derive(Debug, Clone, Copy)]
pub struct RocSetup {
    pub beam: usize,
    pub candidate: Frequencies,
    pub n_range: usize,
    pub n_angle: usize,
    pub r_max: f64,
    pub model: GlrModel,
    pub seed: u64,
}

/// Statistics of `n_trials` noisy echoes of `scene` in `setup.beam`.
pub fn monte_carlo_statistics(
    synth: &EchoSynthesizer,
    detector: &GlrDetector,
    plan: &BeamPlan,
    candidate: &Frequencies,
    noise_var: f64,
    n_trials: usize,
    stream: u64,
) -> Result<Vec<f64>> {
    let clean = synth.noiseless(plan, detector.grid.scan)?;
    (0..n_trials)
        .into_par_iter()
        .map(|k| {
            let mut y = clean.clone();
            y.add_noise(noise_var, derive_seed(stream, k as u64));
            detector.statistic(&y, candidate).map(|o| o.statistic)
        })
        .collect()
}

/// ROC per SNR: H0 echoes come from `scene_h0`, H1 echoes from `scene_h1`,
/// both tested for the same candidate in the same beam.
#[allow(clippy::too_many_arguments)]
pub fn roc_curve(
    scene_h0: &Scene,
    scene_h1: &Scene,
    cfg: &SystemConfig,
    plan: &BeamPlan,
    setup: &RocSetup,
    snr_list: &[f64],
    n_trials: usize,
    n_thresholds: usize,
) -> Result<Vec<RocCurve>> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let grid = sample_grid(setup.beam, plan, cfg, setup.n_range, setup.n_angle, setup.r_max)?;
    let detector = GlrDetector::new(grid, plan, cfg, setup.model)?;
    let s0 = EchoSynthesizer::new(scene_h0, cfg)?;
    let s1 = EchoSynthesizer::new(scene_h1, cfg)?;
    snr_list
        .iter()
        .enumerate()
        .map(|(k, &snr_db)| {
            let var = snr_to_noise_var(snr_db);
            let base = derive_seed(setup.seed, k as u64);
            let h0 = monte_carlo_statistics(&s0, &detector, plan, &setup.candidate, var, n_trials, derive_seed(base, 0))?;
            let h1 = monte_carlo_statistics(&s1, &detector, plan, &setup.candidate, var, n_trials, derive_seed(base, 1))?;
            Ok(RocCurve { snr_db, points: roc_from_statistics(&h0, &h1, n_thresholds)? })
        })
        .collect()
}

/// Writes `snr_db,gamma,p_fa,p_d` rows.
pub fn write_roc_csv<W: Write>(out: W, curves: &[RocCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["snr_db", "gamma", "p_fa", "p_d"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([format!("{}", c.snr_db), format!("{:e}", p.gamma), format!("{}", p.p_fa), format!("{}", p.p_d)])?;
        }
    }
    w.flush()?;
    Ok(())
}
