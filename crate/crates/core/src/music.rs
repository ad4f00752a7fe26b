//! Root-MUSIC frequency estimation and the snapshot rearrangements that turn a
//! filtered echo into angle, range and Doppler estimates.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::echo::EchoTensor;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigh, polynomial_roots};
use crate::scene::SystemConfig;

/// Which physical axis a snapshot matrix samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Spatial,
    Range,
    Doppler,
}

impl Axis {
    /// Exponent sign of the steering model along this axis.
    pub fn sign(self) -> f64 {
        match self {
            Axis::Range => -1.0,
            Axis::Spatial | Axis::Doppler => 1.0,
        }
    }
}

/// M × I matrix of snapshots sharing one sinusoidal component.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: DMatrix<Complex64>,
    pub axis: Axis,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<Complex64>, axis: Axis) -> Result<Self> {
        if data.nrows() < 2 || data.ncols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "snapshot matrix must be at least 2 x 2, got {} x {}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(SnapshotMatrix { data, axis })
    }

    pub fn sign(&self) -> f64 {
        self.axis.sign()
    }

    /// R̂ = F Fᴴ / I.
    pub fn sample_covariance(&self) -> DMatrix<Complex64> {
        let i = self.data.ncols() as f64;
        (&self.data * self.data.adjoint()).map(|z| z / i)
    }
}

/// Eigenvectors of the M−1 smallest eigenvalues of R̂ (single-source model).
pub fn noise_subspace(f: &SnapshotMatrix) -> Result<DMatrix<Complex64>> {
    let r = f.sample_covariance();
    let (_, vecs) = hermitian_eigh(&r)?;
    let m = vecs.nrows();
    Ok(vecs.columns(0, m - 1).into_owned())
}

/// Coefficients (lowest power first) of z^{M−1} pᴴ(z) C p(z) with C = V_n V_nᴴ:
/// entry d + M − 1 is the sum of the d-th diagonal of C.
pub fn music_polynomial(vn: &DMatrix<Complex64>) -> Vec<Complex64> {
    let m = vn.nrows();
    let c = vn * vn.adjoint();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m - 1];
    for i in 0..m {
        for k in 0..m {
            coeffs[k + m - 1 - i] += c[(i, k)];
        }
    }
    coeffs
}

/// Wraps a frequency into (−0.5, 0.5].
pub fn wrap_frequency(psi: f64) -> f64 {
    let w = psi - psi.round();
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

/// Roots this close to the unit circle are treated as lying on it.
pub const UNIT_CIRCLE_TOL: f64 = 1e-6;

/// Root-MUSIC output with the full root set for diagnostics.
#[derive(Debug, Clone)]
pub struct RootMusic {
    pub psi: f64,
    pub root: Complex64,
    pub roots: Vec<Complex64>,
}

pub fn root_music(f: &SnapshotMatrix) -> Result<RootMusic> {
    if !f.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("snapshot matrix"));
    }
    let vn = noise_subspace(f)?;
    let roots = polynomial_roots(&music_polynomial(&vn))?;
    // Noiseless data put a double root on the circle, which rounding may split
    // along the circle rather than across it; such roots count as inside.
    let gap = |z: &Complex64| (z.norm() - 1.0).abs();
    let mut best: Option<Complex64> = None;
    for z in roots.iter().copied().filter(|z| z.norm() < 1.0 + UNIT_CIRCLE_TOL) {
        best = match best {
            None => Some(z),
            Some(b) if gap(&z) < gap(&b) || (gap(&z) == gap(&b) && z.re > b.re) => Some(z),
            keep => keep,
        };
    }
    let root = best.ok_or(Error::NoInsideRoot)?;
    let psi = wrap_frequency(f.sign() * root.arg() / TAU);
    Ok(RootMusic { psi, root, roots })
}

/// ψ̂ ∈ (−0.5, 0.5] of the dominant tone.
pub fn root_music_frequency(f: &SnapshotMatrix) -> Result<f64> {
    Ok(root_music(f)?.psi)
}

fn check_window(y: &EchoTensor) -> Result<usize> {
    let p_eff = y.effective_symbols();
    if p_eff < 2 {
        return Err(Error::InvalidArgument(format!("only {p_eff} symbols remain after the transient")));
    }
    Ok(p_eff)
}

/// M_r × (L·P_eff), columns ordered l fastest then p.
pub fn build_spatial_snapshots(y: &EchoTensor) -> Result<SnapshotMatrix> {
    let p_eff = check_window(y)?;
    let (m_rx, n_sub, p0) = (y.m_rx, y.n_sub, y.valid_from);
    let data = DMatrix::from_fn(m_rx, n_sub * p_eff, |m, col| y.get(m, col % n_sub, p0 + col / n_sub));
    SnapshotMatrix::new(data, Axis::Spatial)
}

/// L × (M_r·P_eff), columns ordered m_r fastest then p.
pub fn build_range_snapshots(y: &EchoTensor) -> Result<SnapshotMatrix> {
    let p_eff = check_window(y)?;
    let (m_rx, n_sub, p0) = (y.m_rx, y.n_sub, y.valid_from);
    let data = DMatrix::from_fn(n_sub, m_rx * p_eff, |l, col| y.get(col % m_rx, l, p0 + col / m_rx));
    SnapshotMatrix::new(data, Axis::Range)
}

/// P_eff × (M_r·L), columns ordered m_r fastest then l.
pub fn build_doppler_snapshots(y: &EchoTensor) -> Result<SnapshotMatrix> {
    let p_eff = check_window(y)?;
    let (m_rx, p0) = (y.m_rx, y.valid_from);
    let data = DMatrix::from_fn(p_eff, m_rx * y.n_sub, |p, col| y.get(col % m_rx, col / m_rx, p0 + p));
    SnapshotMatrix::new(data, Axis::Doppler)
}

/// Kinematic estimate of the single target assumed in a candidate scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub scan: usize,
    /// rad
    pub theta_hat: f64,
    /// m, in the unambiguous interval [0, c/(2Δf))
    pub range_hat: f64,
    /// m/s, from the wrapped Doppler frequency
    pub speed_hat: f64,
    pub psi_s_hat: f64,
    pub psi_r_hat: f64,
    pub psi_d_hat: f64,
}

/// Root-MUSIC along the three axes of a filtered candidate echo, converted to
/// physical units. A negative range frequency is read modulo one so the range
/// stays in the unambiguous interval.
pub fn estimate_candidate(y_check: &EchoTensor, b: usize, cfg: &SystemConfig) -> Result<EstimationResult> {
    y_check.check_shape(cfg)?;
    let psi_s = root_music_frequency(&build_spatial_snapshots(y_check)?)?;
    let psi_r = root_music_frequency(&build_range_snapshots(y_check)?)?;
    let psi_d = root_music_frequency(&build_doppler_snapshots(y_check)?)?;
    let theta = cfg.angle_from_spatial(psi_s)?;
    Ok(EstimationResult {
        scan: b,
        theta_hat: theta,
        range_hat: cfg.range_from_frequency(psi_r.rem_euclid(1.0)),
        speed_hat: cfg.speed_from_frequency(psi_d),
        psi_s_hat: psi_s,
        psi_r_hat: psi_r,
        psi_d_hat: psi_d,
    })
}

/// Writes `b,theta_deg,range_m,speed_mps,psi_s,psi_r,psi_d` rows.
pub fn write_estimates_csv<W: Write>(out: W, rows: &[EstimationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["b", "theta_deg", "range_m", "speed_mps", "psi_s", "psi_r", "psi_d"])?;
    for e in rows {
        w.write_record([
            e.scan.to_string(),
            format!("{}", e.theta_hat.to_degrees()),
            format!("{}", e.range_hat),
            format!("{}", e.speed_hat),
            format!("{}", e.psi_s_hat),
            format!("{}", e.psi_r_hat),
            format!("{}", e.psi_d_hat),
        ])?;
    }
    w.flush()?;
    Ok(())
}
