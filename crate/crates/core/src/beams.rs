//! Scan plan: beam directions, coverage intervals, probing weights and the
//! boresight gain used to normalize echoes.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::echo::{steering_tx};
use crate::error::{Error, Result};
use crate::scene::{Scene, SystemConfig};

/// Default relative floor on |g̃| as a fraction of √M_t.
pub const DEFAULT_GAIN_FLOOR_REL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPlan {
    /// Beam directions θ̃_b (rad), ascending.
    pub directions: Vec<f64>,
    /// Half-width of each closed coverage interval (rad).
    pub coverage_halfwidth: f64,
    /// Unit-norm transmit weight per beam, constant over subcarriers and symbols.
    pub weights: Vec<DVector<Complex64>>,
    /// Absolute floor on |g̃| below which normalization is refused.
    pub gain_floor: f64,
}

/// Conjugate transmit steering vector scaled to unit norm.
pub fn beamformer_weight(theta_tilde: f64, cfg: &SystemConfig) -> DVector<Complex64> {
    let scale = 1.0 / (cfg.m_tx as f64).sqrt();
    steering_tx(cfg.spatial_frequency(theta_tilde), cfg.m_tx).map(|z| z.conj() * scale)
}

/// Transmit gain a_{s,t}(ψ_s)ᵀ x toward spatial frequency ψ_s.
pub fn transmit_gain(psi_s: f64, weight: &DVector<Complex64>) -> Complex64 {
    let m = weight.len();
    let a = steering_tx(psi_s, m);
    a.iter().zip(weight.iter()).map(|(ai, xi)| ai * xi).sum()
}

/// Beams uniformly spaced over `sector = (lo, hi)` with conjugate weights.
pub fn make_scan_plan(cfg: &SystemConfig, sector: (f64, f64), n_beams: usize) -> Result<BeamPlan> {
    cfg.validate()?;
    let (lo, hi) = sector;
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(lo.is_finite() && hi.is_finite() && lo.abs() < half_pi && hi.abs() < half_pi) {
        return Err(Error::InvalidArgument("scan sector must lie inside (-pi/2, pi/2)".into()));
    }
    if n_beams == 0 {
        return Err(Error::InvalidArgument("at least one beam is required".into()));
    }
    if lo > hi || (lo == hi && n_beams > 1) {
        return Err(Error::InvalidArgument(format!(
            "sector ({lo}, {hi}) cannot hold {n_beams} distinct beams"
        )));
    }
    let (directions, halfwidth) = if n_beams == 1 {
        // one beam centred on the sector covers it exactly
        (vec![0.5 * (lo + hi)], 0.5 * (hi - lo))
    } else {
        let step = (hi - lo) / (n_beams - 1) as f64;
        let dirs = (0..n_beams)
            .map(|b| if b + 1 == n_beams { hi } else { lo + step * b as f64 })
            .collect();
        (dirs, 0.5 * step)
    };
    let weights = directions.iter().map(|&t| beamformer_weight(t, cfg)).collect();
    Ok(BeamPlan {
        directions,
        coverage_halfwidth: halfwidth,
        weights,
        gain_floor: DEFAULT_GAIN_FLOOR_REL * (cfg.m_tx as f64).sqrt(),
    })
}

impl BeamPlan {
    /// 61 beams over ±60° (2° steps).
    pub fn default_for(cfg: &SystemConfig) -> Result<BeamPlan> {
        make_scan_plan(cfg, (-60f64.to_radians(), 60f64.to_radians()), 61)
    }

    /// Plan with caller-supplied weights. Weights must have unit norm.
    pub fn with_weights(
        directions: Vec<f64>,
        coverage_halfwidth: f64,
        weights: Vec<DVector<Complex64>>,
        gain_floor: f64,
    ) -> Result<BeamPlan> {
        if directions.is_empty() || directions.len() != weights.len() {
            return Err(Error::InvalidArgument("one weight per beam direction is required".into()));
        }
        if directions.windows(2).any(|w| !(w[0] < w[1]) || w[1] - w[0] > 2.0 * coverage_halfwidth * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument("directions must be ascending without coverage gaps".into()));
        }
        for w in &weights {
            if (w.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("weight norm {} is not 1", w.norm())));
            }
        }
        Ok(BeamPlan { directions, coverage_halfwidth, weights, gain_floor })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Spacing between neighbouring beams (rad); zero for a single beam.
    pub fn step(&self) -> f64 {
        if self.len() < 2 {
            0.0
        } else {
            (self.directions[self.len() - 1] - self.directions[0]) / (self.len() - 1) as f64
        }
    }

    fn check_beam(&self, b: usize) -> Result<()> {
        if b >= self.len() {
            return Err(Error::InvalidArgument(format!("beam index {b} out of range 0..{}", self.len())));
        }
        Ok(())
    }

    /// Closed coverage interval of beam `b`.
    pub fn coverage(&self, b: usize) -> (f64, f64) {
        let c = self.directions[b];
        (c - self.coverage_halfwidth, c + self.coverage_halfwidth)
    }

    pub fn covers(&self, b: usize, theta: f64) -> bool {
        let (lo, hi) = self.coverage(b);
        theta >= lo && theta <= hi
    }

    /// Beam whose coverage contains `theta`; shared boundaries go to the lower index.
    pub fn beam_for(&self, theta: f64) -> Option<usize> {
        (0..self.len()).find(|&b| self.covers(b, theta))
    }

    /// Index of the beam direction nearest to `theta` (lower index on ties).
    pub fn nearest_beam(&self, theta: f64) -> usize {
        let mut best = 0;
        for b in 1..self.len() {
            if (self.directions[b] - theta).abs() < (self.directions[best] - theta).abs() {
                best = b;
            }
        }
        best
    }

    /// Scatterer indices assigned to beam `b` by the coverage rule.
    pub fn scatterers_in_beam(&self, b: usize, scene: &Scene) -> Vec<usize> {
        scene
            .scatterers
            .iter()
            .enumerate()
            .filter(|(_, s)| self.beam_for(s.theta) == Some(b))
            .map(|(i, _)| i)
            .collect()
    }

    /// Beam assigned to each target, if any.
    pub fn target_beams(&self, scene: &Scene) -> Vec<Option<usize>> {
        scene.targets.iter().map(|t| self.beam_for(t.theta)).collect()
    }

    /// Gain of beam `b`'s weight toward spatial frequency `psi_s`.
    pub fn gain_toward(&self, b: usize, psi_s: f64) -> Complex64 {
        transmit_gain(psi_s, &self.weights[b])
    }

    /// Boresight gain g̃_b. The weights do not depend on (l, p), so neither does g̃.
    pub fn g_tilde(&self, b: usize, cfg: &SystemConfig) -> Result<Complex64> {
        self.check_beam(b)?;
        let g = self.gain_toward(b, cfg.spatial_frequency(self.directions[b]));
        if g.norm() < self.gain_floor {
            return Err(Error::GainBelowFloor { beam: b, magnitude: g.norm(), floor: self.gain_floor });
        }
        Ok(g)
    }

    /// Writes `b,theta_deg,halfwidth_deg` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "theta_deg", "halfwidth_deg"])?;
        for (b, t) in self.directions.iter().enumerate() {
            w.write_record([
                b.to_string(),
                format!("{}", t.to_degrees()),
                format!("{}", self.coverage_halfwidth.to_degrees()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spec-style accessor; `l` and `p` are accepted for symmetry with the model
/// but the gain does not depend on them.
pub fn g_tilde(plan: &BeamPlan, b: usize, _l: usize, _p: usize, cfg: &SystemConfig) -> Result<Complex64> {
    plan.g_tilde(b, cfg)
}
