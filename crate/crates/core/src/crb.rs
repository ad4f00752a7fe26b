//! Fisher information and Cramér-Rao bound for the kinematic parameters of
//! the moving targets, with scatterer kinematics and all reflection
//! coefficients treated as nuisance parameters.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beams::BeamPlan;
use crate::echo::{steering_rx, steering_tx};
use crate::error::{Error, Result};
use crate::linalg::pinv_symmetric;
use crate::scene::{Scene, SystemConfig, SPEED_OF_LIGHT};

/// Relative eigenvalue cutoff of the pseudo-inverse of the α block.
pub const F3_PINV_TOL: f64 = 1e-10;

/// A scene element by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Target(usize),
    Scatterer(usize),
}

// Geometry of one element: spatial frequency, angle, range and (for targets) speed.
struct Geometry {
    theta: f64,
    range: f64,
    speed: Option<f64>,
}

fn geometry(scene: &Scene, e: Element) -> Result<Geometry> {
    match e {
        Element::Target(i) => scene
            .targets
            .get(i)
            .map(|t| Geometry { theta: t.theta, range: t.range, speed: Some(t.speed) })
            .ok_or_else(|| Error::InvalidArgument(format!("target {i} does not exist"))),
        Element::Scatterer(i) => scene
            .scatterers
            .get(i)
            .map(|s| Geometry { theta: s.theta, range: s.range, speed: None })
            .ok_or_else(|| Error::InvalidArgument(format!("scatterer {i} does not exist"))),
    }
}

// Response a = a_d a_r g a_{s,r} and its partials in θ, r and v.
struct Partials {
    value: DVector<Complex64>,
    d_theta: DVector<Complex64>,
    d_range: DVector<Complex64>,
    d_speed: Option<DVector<Complex64>>,
}

fn partials(g: &Geometry, b: usize, l: usize, p: usize, plan: &BeamPlan, cfg: &SystemConfig) -> Partials {
    let lambda = cfg.wavelength();
    let psi_s = cfg.spatial_frequency(g.theta);
    let psi_r = cfg.range_frequency(g.range);
    let w = &plan.weights[b];
    let at = steering_tx(psi_s, w.len());
    let mut gain = Complex64::new(0.0, 0.0);
    let mut dgain = Complex64::new(0.0, 0.0);
    for (k, (a, x)) in at.iter().zip(w.iter()).enumerate() {
        gain += a * x;
        dgain += Complex64::new(0.0, TAU * k as f64) * a * x;
    }
    let mut phase = -TAU * l as f64 * psi_r;
    if let Some(v) = g.speed {
        phase += TAU * p as f64 * cfg.doppler_frequency(v);
    }
    let scalar = Complex64::from_polar(1.0, phase);
    let ar = steering_rx(psi_s, cfg.m_rx);
    let value = ar.map(|z| z * gain * scalar);
    let dpsi_dtheta = cfg.d_spacing * g.theta.cos() / lambda;
    let d_theta = DVector::from_fn(cfg.m_rx, |m, _| {
        let dar = Complex64::new(0.0, TAU * m as f64) * ar[m];
        (dgain * ar[m] + gain * dar) * scalar * dpsi_dtheta
    });
    let dr = Complex64::new(0.0, -TAU * l as f64 * 2.0 * cfg.delta_f / SPEED_OF_LIGHT);
    let d_range = value.map(|z| z * dr);
    let d_speed = g.speed.map(|_| {
        let dv = Complex64::new(0.0, TAU * p as f64 * 2.0 * cfg.symbol_interval() / lambda);
        value.map(|z| z * dv)
    });
    Partials { value, d_theta, d_range, d_speed }
}

/// a_{b,n,l,p}: the receive vector one unit reflection coefficient of the
/// element would produce in scan `b` at subcarrier `l`, symbol `p`.
pub fn response_vector(b: usize, element: Element, l: usize, p: usize, scene: &Scene, plan: &BeamPlan, cfg: &SystemConfig) -> Result<DVector<Complex64>> {
    check_beam(plan, b)?;
    Ok(partials(&geometry(scene, element)?, b, l, p, plan, cfg).value)
}

fn check_beam(plan: &BeamPlan, b: usize) -> Result<()> {
    if b >= plan.len() {
        return Err(Error::InvalidArgument(format!("beam index {b} out of range")));
    }
    Ok(())
}

/// Derivative matrices at (l, p): targets as [∂θ…, ∂r…, ∂v…] (M_r × 3N_t) and
/// scatterers as [∂θ…, ∂r…] (M_r × 2N_s). Each column differentiates its own
/// element's response.
pub fn derivative_matrices(b: usize, l: usize, p: usize, scene: &Scene, plan: &BeamPlan, cfg: &SystemConfig) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    check_beam(plan, b)?;
    let (nt, ns, m) = (scene.targets.len(), scene.scatterers.len(), cfg.m_rx);
    let mut dt = DMatrix::zeros(m, 3 * nt);
    let mut ds = DMatrix::zeros(m, 2 * ns);
    for i in 0..nt {
        let d = partials(&geometry(scene, Element::Target(i))?, b, l, p, plan, cfg);
        dt.set_column(i, &d.d_theta);
        dt.set_column(nt + i, &d.d_range);
        dt.set_column(2 * nt + i, d.d_speed.as_ref().expect("targets move"));
    }
    for i in 0..ns {
        let d = partials(&geometry(scene, Element::Scatterer(i))?, b, l, p, plan, cfg);
        ds.set_column(i, &d.d_theta);
        ds.set_column(ns + i, &d.d_range);
    }
    Ok((dt, ds))
}

/// Blocks of the Fisher information over (η, Re α, Im α), where
/// η = (θᵗ…, rᵗ…, vᵗ…, θˢ…, rˢ…) and α stacks targets then scatterers.
#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks {
    pub f1: DMatrix<f64>,
    pub f2: DMatrix<f64>,
    pub f3: DMatrix<f64>,
    pub sigma2: f64,
    pub n_targets: usize,
    pub n_scatterers: usize,
    // the same blocks at unit noise variance; the bound is computed from these
    // so that it is exactly linear in σ²
    unit: Box<[DMatrix<f64>; 3]>,
}

impl FimBlocks {
    /// The full symmetric information matrix [[f1, f2], [f2ᵀ, f3]].
    pub fn assembled(&self) -> DMatrix<f64> {
        let (n1, n2) = (self.f1.nrows(), self.f3.nrows());
        let mut full = DMatrix::zeros(n1 + n2, n1 + n2);
        full.view_mut((0, 0), (n1, n1)).copy_from(&self.f1);
        full.view_mut((0, n1), (n1, n2)).copy_from(&self.f2);
        full.view_mut((n1, 0), (n2, n1)).copy_from(&self.f2.transpose());
        full.view_mut((n1, n1), (n2, n2)).copy_from(&self.f3);
        full
    }

    /// Same geometry at another noise level; every block scales as 1/σ².
    pub fn at_noise_var(&self, sigma2: f64) -> FimBlocks {
        let k = self.sigma2 / sigma2;
        FimBlocks {
            f1: &self.f1 * k,
            f2: &self.f2 * k,
            f3: &self.f3 * k,
            sigma2,
            ..self.clone()
        }
    }
}

/// Information on σ² itself, M_r L P / σ⁴; its cross terms with (η, α) vanish.
pub fn fim_noise_variance(cfg: &SystemConfig) -> f64 {
    (cfg.m_rx * cfg.n_sub * cfg.n_sym) as f64 / (cfg.noise_var * cfg.noise_var)
}

/// Stacked Jacobian of the noiseless echo over every (l, p): returns
/// (J¹ = [Ȧᵗ D_αᵗ, Ȧˢ D_αˢ], A = [Aᵗ, Aˢ]) with rows in echo storage order.
pub fn stacked_jacobian(b: usize, scene: &Scene, plan: &BeamPlan, cfg: &SystemConfig) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    check_beam(plan, b)?;
    let (nt, ns, m) = (scene.targets.len(), scene.scatterers.len(), cfg.m_rx);
    let rows = m * cfg.n_sub * cfg.n_sym;
    let n1 = 3 * nt + 2 * ns;
    let mut j = DMatrix::zeros(rows, n1);
    let mut a = DMatrix::zeros(rows, nt + ns);
    let put = |col: usize, row0: usize, v: &DVector<Complex64>, scale: Complex64, dst: &mut DMatrix<Complex64>| {
        for (k, z) in v.iter().enumerate() {
            dst[(row0 + k, col)] = z * scale;
        }
    };
    for p in 0..cfg.n_sym {
        for l in 0..cfg.n_sub {
            let row0 = (p * cfg.n_sub + l) * m;
            for (i, t) in scene.targets.iter().enumerate() {
                let d = partials(&geometry(scene, Element::Target(i))?, b, l, p, plan, cfg);
                put(i, row0, &d.d_theta, t.alpha, &mut j);
                put(nt + i, row0, &d.d_range, t.alpha, &mut j);
                put(2 * nt + i, row0, d.d_speed.as_ref().expect("targets move"), t.alpha, &mut j);
                put(i, row0, &d.value, Complex64::new(1.0, 0.0), &mut a);
            }
            for (i, s) in scene.scatterers.iter().enumerate() {
                let d = partials(&geometry(scene, Element::Scatterer(i))?, b, l, p, plan, cfg);
                put(3 * nt + i, row0, &d.d_theta, s.alpha, &mut j);
                put(3 * nt + ns + i, row0, &d.d_range, s.alpha, &mut j);
                put(nt + i, row0, &d.value, Complex64::new(1.0, 0.0), &mut a);
            }
        }
    }
    Ok((j, a))
}

fn split(m: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Fisher information blocks for scan `b` at the configured noise variance.
pub fn fim_blocks(b: usize, scene: &Scene, plan: &BeamPlan, cfg: &SystemConfig) -> Result<FimBlocks> {
    if !(cfg.noise_var > 0.0) {
        return Err(Error::InvalidArgument("the Fisher information needs a positive noise variance".into()));
    }
    scene.validate()?;
    let (j, a) = stacked_jacobian(b, scene, plan, cfg)?;
    let (jr, ji) = split(&j);
    let (ar, ai) = split(&a);
    let k = 2.0;
    // real arithmetic: Re(XᴴY) = XrᵀYr + XiᵀYi, Im(XᴴY) = XrᵀYi − XiᵀYr
    let f1 = (jr.transpose() * &jr + ji.transpose() * &ji) * k;
    let re_ja = jr.transpose() * &ar + ji.transpose() * &ai;
    let im_ja = jr.transpose() * &ai - ji.transpose() * &ar;
    let re_g = ar.transpose() * &ar + ai.transpose() * &ai;
    let im_g = ar.transpose() * &ai - ai.transpose() * &ar;
    let (n1, n2) = (f1.nrows(), a.ncols());
    let mut f2 = DMatrix::zeros(n1, 2 * n2);
    f2.view_mut((0, 0), (n1, n2)).copy_from(&(re_ja * k));
    f2.view_mut((0, n2), (n1, n2)).copy_from(&(im_ja * -k));
    let mut f3 = DMatrix::zeros(2 * n2, 2 * n2);
    f3.view_mut((0, 0), (n2, n2)).copy_from(&(&re_g * k));
    f3.view_mut((0, n2), (n2, n2)).copy_from(&(&im_g * -k));
    f3.view_mut((n2, 0), (n2, n2)).copy_from(&(&im_g * k));
    f3.view_mut((n2, n2), (n2, n2)).copy_from(&(&re_g * k));
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let unit = Box::new([sym(f1), f2, sym(f3)]);
    let inv = 1.0 / cfg.noise_var;
    Ok(FimBlocks {
        f1: &unit[0] * inv,
        f2: &unit[1] * inv,
        f3: &unit[2] * inv,
        sigma2: cfg.noise_var,
        n_targets: scene.targets.len(),
        n_scatterers: scene.scatterers.len(),
        unit,
    })
}

/// Bound on the target kinematics, ordered [θ…, r…, v…].
#[derive(Debug, Clone, PartialEq)]
pub struct CrbResult {
    pub crb_matrix: DMatrix<f64>,
    pub n_targets: usize,
    pub sigma2: f64,
}

impl CrbResult {
    pub fn theta_var(&self, n: usize) -> f64 {
        self.crb_matrix[(n, n)]
    }

    pub fn range_var(&self, n: usize) -> f64 {
        let k = self.n_targets + n;
        self.crb_matrix[(k, k)]
    }

    pub fn speed_var(&self, n: usize) -> f64 {
        let k = 2 * self.n_targets + n;
        self.crb_matrix[(k, k)]
    }

    /// Standard deviations (rad, m, m/s) per target.
    pub fn std_devs(&self) -> Vec<[f64; 3]> {
        (0..self.n_targets)
            .map(|n| [self.theta_var(n).sqrt(), self.range_var(n).sqrt(), self.speed_var(n).sqrt()])
            .collect()
    }

    /// The bound is proportional to σ².
    pub fn at_noise_var(&self, sigma2: f64) -> CrbResult {
        CrbResult {
            crb_matrix: &self.crb_matrix * (sigma2 / self.sigma2),
            n_targets: self.n_targets,
            sigma2,
        }
    }

    pub fn to_record(&self, snr_db: f64) -> CrbRecord {
        CrbRecord {
            snr_db,
            crb_theta_rad2: (0..self.n_targets).map(|n| self.theta_var(n)).collect(),
            crb_r_m2: (0..self.n_targets).map(|n| self.range_var(n)).collect(),
            crb_v_mps2: (0..self.n_targets).map(|n| self.speed_var(n)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbRecord {
    pub snr_db: f64,
    pub crb_theta_rad2: Vec<f64>,
    pub crb_r_m2: Vec<f64>,
    pub crb_v_mps2: Vec<f64>,
}

/// Effective information S = f1 − f2 f3⁺ f2ᵀ, inverted, leading 3N_t block.
/// Evaluated at unit noise variance and scaled, so it is exactly linear in σ².
pub fn crb_eta_t(blocks: &FimBlocks, n_targets: usize) -> Result<CrbResult> {
    let [f1, f2, f3] = &*blocks.unit;
    let n1 = f1.nrows();
    if 3 * n_targets > n1 {
        return Err(Error::InvalidArgument(format!("{n_targets} targets exceed the information size {n1}")));
    }
    let f3p = pinv_symmetric(f3, F3_PINV_TOL);
    let s = f1 - f2 * f3p * f2.transpose();
    let s = (&s + s.transpose()) * 0.5;
    let inv = match s.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("effective Fisher information is not invertible".into()))?,
    };
    if !inv.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular("effective Fisher information is not invertible".into()));
    }
    let k = 3 * n_targets;
    let crb = inv.view((0, 0), (k, k)).into_owned();
    if (0..k).any(|i| crb[(i, i)] < 0.0) {
        return Err(Error::Singular("effective Fisher information is indefinite".into()));
    }
    let crb = (&crb + crb.transpose()) * (0.5 * blocks.sigma2);
    Ok(CrbResult { crb_matrix: crb, n_targets, sigma2: blocks.sigma2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echo::synthesize_echo;
    use crate::scene::{generate_scene, Scatterer, Target};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small() -> (SystemConfig, BeamPlan) {
        let cfg = SystemConfig { m_tx: 8, m_rx: 4, n_sub: 4, n_sym: 4, ..SystemConfig::default() }.with_noise_var(0.5);
        let plan = BeamPlan::default_for(&cfg).unwrap();
        (cfg, plan)
    }

    #[test]
    fn scatterer_response_is_symbol_independent() {
        let (cfg, plan) = small();
        let scene = generate_scene(&cfg, 1, 3, 2).unwrap();
        let a0 = response_vector(10, Element::Scatterer(1), 2, 0, &scene, &plan, &cfg).unwrap();
        let a3 = response_vector(10, Element::Scatterer(1), 2, 3, &scene, &plan, &cfg).unwrap();
        assert_eq!(a0, a3);
        assert!(response_vector(10, Element::Scatterer(9), 0, 0, &scene, &plan, &cfg).is_err());
    }

    #[test]
    fn responses_reproduce_echo() {
        let (cfg, plan) = small();
        let cfg0 = cfg.with_noise_var(0.0);
        let scene = generate_scene(&cfg, 2, 5, 3).unwrap();
        let b = 25;
        let y = synthesize_echo(&scene, &plan, b, &cfg0, 0).unwrap();
        for p in 0..cfg.n_sym {
            for l in 0..cfg.n_sub {
                let mut acc = DVector::zeros(cfg.m_rx);
                for (i, t) in scene.targets.iter().enumerate() {
                    acc += response_vector(b, Element::Target(i), l, p, &scene, &plan, &cfg).unwrap() * t.alpha;
                }
                for (i, s) in scene.scatterers.iter().enumerate() {
                    acc += response_vector(b, Element::Scatterer(i), l, p, &scene, &plan, &cfg).unwrap() * s.alpha;
                }
                for m in 0..cfg.m_rx {
                    assert!((acc[m] - y.get(m, l, p)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_antenna_collapses_to_scalar() {
        let (cfg, plan) = small();
        let cfg1 = SystemConfig { m_rx: 1, ..cfg };
        let t = Target { theta: 0.3, range: 2.0, speed: 1.5, alpha: c(1.0, 0.0) };
        let scene = Scene { targets: vec![t], scatterers: vec![] };
        let a = response_vector(40, Element::Target(0), 2, 3, &scene, &plan, &cfg1).unwrap();
        assert_eq!(a.len(), 1);
        let f = t.frequencies(&cfg1);
        let want = crate::beams::transmit_gain(f.spatial, &plan.weights[40])
            * Complex64::from_polar(1.0, TAU * (3.0 * f.doppler - 2.0 * f.range));
        assert!((a[0] - want).norm() < 1e-12);
    }

    #[test]
    fn zero_index_phase_derivatives_vanish() {
        let (cfg, plan) = small();
        let scene = generate_scene(&cfg, 2, 2, 4).unwrap();
        let (dt, ds) = derivative_matrices(30, 0, 0, &scene, &plan, &cfg).unwrap();
        assert_eq!(dt.shape(), (4, 6));
        assert_eq!(ds.shape(), (4, 4));
        for k in 2..6 {
            assert!(dt.column(k).norm() == 0.0);
        }
        assert!(ds.column(2).norm() == 0.0 && ds.column(3).norm() == 0.0);
        assert!(dt.column(0).norm() > 0.0 && ds.column(0).norm() > 0.0);
    }

    fn perturbed(scene: &Scene, col: usize, h: f64) -> Scene {
        let (nt, ns) = (scene.targets.len(), scene.scatterers.len());
        let mut s = scene.clone();
        match col {
            k if k < nt => s.targets[k].theta += h,
            k if k < 2 * nt => s.targets[k - nt].range += h,
            k if k < 3 * nt => s.targets[k - 2 * nt].speed += h,
            k if k < 3 * nt + ns => s.scatterers[k - 3 * nt].theta += h,
            k => s.scatterers[k - 3 * nt - ns].range += h,
        }
        s
    }

    #[test]
    fn derivatives_match_central_differences() {
        let cfg = SystemConfig::default();
        let plan = BeamPlan::default_for(&cfg).unwrap();
        let h = 1e-6;
        for seed in 0..5 {
            let scene = generate_scene(&cfg, 2, 3, seed).unwrap();
            let (l, p, b) = (5, 7, 20 + seed as usize);
            let (dt, ds) = derivative_matrices(b, l, p, &scene, &plan, &cfg).unwrap();
            let (nt, ns) = (2, 3);
            for col in 0..(3 * nt + 2 * ns) {
                let sp = perturbed(&scene, col, h);
                let sm = perturbed(&scene, col, -h);
                let el = if col < 3 * nt { Element::Target(col % nt) } else { Element::Scatterer((col - 3 * nt) % ns) };
                let ap = response_vector(b, el, l, p, &sp, &plan, &cfg).unwrap();
                let am = response_vector(b, el, l, p, &sm, &plan, &cfg).unwrap();
                let fd = (ap - am) / Complex64::new(2.0 * h, 0.0);
                let an = if col < 3 * nt { dt.column(col).into_owned() } else { ds.column(col - 3 * nt).into_owned() };
                let rel = (&an - &fd).norm() / an.norm();
                assert!(rel < 1e-4, "seed {seed} column {col}: {rel}");
            }
        }
    }

    #[test]
    fn blocks_scale_with_noise() {
        let (cfg, plan) = small();
        let scene = generate_scene(&cfg, 1, 2, 6).unwrap();
        let f = fim_blocks(30, &scene, &plan, &cfg).unwrap();
        let g = fim_blocks(30, &scene, &plan, &cfg.with_noise_var(1.0)).unwrap();
        assert!((&f.f1 * 0.5 - &g.f1).norm() < 1e-12 * f.f1.norm());
        assert!((&f.f2 * 0.5 - &g.f2).norm() < 1e-12 * f.f2.norm());
        assert!((&f.f3 * 0.5 - &g.f3).norm() < 1e-12 * f.f3.norm());
        assert!((f.f1.clone() - f.f1.transpose()).norm() < 1e-10);
        let full = f.assembled();
        let ev = full.clone().symmetric_eigen().eigenvalues;
        assert!(ev.min() >= -1e-8 * full.trace());
        assert!(fim_blocks(30, &scene, &plan, &cfg.with_noise_var(0.0)).is_err());
        assert!((fim_noise_variance(&cfg) - 64.0 / 0.25).abs() < 1e-12);
    }

    // Gaussian FIM identity with the mean differentiated numerically through
    // the echo synthesizer: F = (2/σ²) Re(Dᴴ D).
    fn numeric_fim(scene: &Scene, plan: &BeamPlan, cfg: &SystemConfig, b: usize) -> DMatrix<f64> {
        let cfg0 = cfg.with_noise_var(0.0);
        let t = scene.targets[0];
        let mean = |s: &Scene| DVector::from_vec(synthesize_echo(s, plan, b, &cfg0, 0).unwrap().data);
        let h = 1e-6;
        let mut cols: Vec<DVector<Complex64>> = Vec::new();
        let steps: Vec<Box<dyn Fn(&mut Target, f64)>> = vec![
            Box::new(|t, d| t.theta += d),
            Box::new(|t, d| t.range += d),
            Box::new(|t, d| t.speed += d),
            Box::new(|t, d| t.alpha += Complex64::new(d, 0.0)),
            Box::new(|t, d| t.alpha += Complex64::new(0.0, d)),
        ];
        for step in &steps {
            let mut tp = t;
            step(&mut tp, h);
            let mut tm = t;
            step(&mut tm, -h);
            let sp = Scene { targets: vec![tp], scatterers: vec![] };
            let sm = Scene { targets: vec![tm], scatterers: vec![] };
            cols.push((mean(&sp) - mean(&sm)) / Complex64::new(2.0 * h, 0.0));
        }
        let d = DMatrix::from_columns(&cols);
        (d.adjoint() * d).map(|z| z.re * 2.0 / cfg.noise_var)
    }

    #[test]
    fn matches_numeric_fim_single_target() {
        let (cfg, plan) = small();
        let t = Target { theta: 0.2, range: 3.1, speed: 2.2, alpha: c(0.8, -0.5) };
        let scene = Scene { targets: vec![t], scatterers: vec![] };
        let b = plan.nearest_beam(0.2);
        let blocks = fim_blocks(b, &scene, &plan, &cfg).unwrap();
        let full = blocks.assembled();
        let num = numeric_fim(&scene, &plan, &cfg, b);
        let rel = (&full - &num).norm() / num.norm();
        assert!(rel < 0.01, "{rel}");
        let crb = crb_eta_t(&blocks, 1).unwrap();
        let want = num.try_inverse().unwrap();
        for k in 0..3 {
            assert!((crb.crb_matrix[(k, k)] / want[(k, k)] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn crb_linear_in_noise() {
        let (cfg, plan) = small();
        let scene = generate_scene(&cfg, 2, 3, 9).unwrap();
        let mut ratios = Vec::new();
        for s2 in [0.01, 0.1, 1.0] {
            let c = crb_eta_t(&fim_blocks(12, &scene, &plan, &cfg.with_noise_var(s2)).unwrap(), 2).unwrap();
            ratios.push(c.crb_matrix.diagonal() / s2);
        }
        for r in &ratios[1..] {
            for k in 0..6 {
                assert!((r[k] / ratios[0][k] - 1.0).abs() < 1e-9);
            }
        }
        let c = crb_eta_t(&fim_blocks(12, &scene, &plan, &cfg).unwrap(), 2).unwrap();
        let scaled = c.at_noise_var(2.0);
        assert!((scaled.theta_var(1) / c.theta_var(1) - 4.0).abs() < 1e-12);
        let rec = c.to_record(3.0);
        assert_eq!(rec.crb_r_m2.len(), 2);
        assert_eq!(rec.crb_v_mps2[1], c.speed_var(1));
    }

    #[test]
    fn scatterer_never_helps() {
        let (cfg, plan) = small();
        let t = Target { theta: 0.35, range: 2.5, speed: 1.1, alpha: c(0.4, 0.9) };
        let b = plan.nearest_beam(0.35);
        let alone = Scene { targets: vec![t], scatterers: vec![] };
        let base = crb_eta_t(&fim_blocks(b, &alone, &plan, &cfg).unwrap(), 1).unwrap();
        for (k, (dth, r)) in [(0.004, 2.6), (-0.006, 5.0), (0.0, 1.2)].iter().enumerate() {
            let s = Scatterer { theta: 0.35 + dth, range: *r, alpha: c(0.5, 0.2 * k as f64) };
            let with = Scene { targets: vec![t], scatterers: vec![s] };
            let bound = crb_eta_t(&fim_blocks(b, &with, &plan, &cfg).unwrap(), 1).unwrap();
            for i in 0..3 {
                assert!(bound.crb_matrix[(i, i)] >= base.crb_matrix[(i, i)] * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn rejects_too_many_targets() {
        let (cfg, plan) = small();
        let scene = generate_scene(&cfg, 1, 0, 1).unwrap();
        let f = fim_blocks(3, &scene, &plan, &cfg).unwrap();
        assert!(crb_eta_t(&f, 2).is_err());
    }
}
