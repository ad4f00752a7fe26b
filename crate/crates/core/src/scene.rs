//! System constants, ground-truth scene elements and randomized scene generation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Array, waveform and noise parameters shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemConfig {
    pub m_tx: usize,
    pub m_rx: usize,
    pub n_sub: usize,
    pub n_sym: usize,
    /// Carrier frequency (Hz).
    pub f_c: f64,
    /// Subcarrier spacing (Hz).
    pub delta_f: f64,
    /// Guard interval (s).
    pub t_guard: f64,
    /// Element spacing (m).
    pub d_spacing: f64,
    /// Noise variance per complex sample.
    pub noise_var: f64,
}

impl Default for SystemConfig {
    /// 64 transmit and 16 receive antennas, 16 subcarriers, 20 symbols at
    /// 60 GHz with 10 MHz spacing, 0.2 ms guard and half-wavelength spacing.
    fn default() -> Self {
        let f_c = 60e9;
        SystemConfig {
            m_tx: 64,
            m_rx: 16,
            n_sub: 16,
            n_sym: 20,
            f_c,
            delta_f: 10e6,
            t_guard: 0.2e-3,
            d_spacing: 0.5 * SPEED_OF_LIGHT / f_c,
            noise_var: 1.0,
        }
    }
}

impl SystemConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// OFDM symbol duration without guard, 1/Δf.
    pub fn symbol_time(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Symbol interval including the guard interval.
    pub fn symbol_interval(&self) -> f64 {
        self.symbol_time() + self.t_guard
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Self {
        self.noise_var = noise_var;
        self
    }

    /// Noise variance for SNR_dB = 10 log10(1/σ²).
    pub fn with_snr_db(self, snr_db: f64) -> Self {
        self.with_noise_var(snr_to_noise_var(snr_db))
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("m_tx", self.m_tx),
            ("m_rx", self.m_rx),
            ("n_sub", self.n_sub),
            ("n_sym", self.n_sym),
        ];
        for (name, v) in counts {
            if v < 2 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 2, got {v}")));
            }
        }
        let positive = [
            ("f_c", self.f_c),
            ("delta_f", self.delta_f),
            ("d_spacing", self.d_spacing),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.t_guard.is_finite() && self.t_guard >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_guard must be nonnegative, got {}", self.t_guard)));
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(Error::InvalidConfig(format!("noise_var must be nonnegative, got {}", self.noise_var)));
        }
        Ok(())
    }

    pub fn spatial_frequency(&self, theta: f64) -> f64 {
        self.d_spacing * theta.sin() / self.wavelength()
    }

    pub fn range_frequency(&self, range: f64) -> f64 {
        2.0 * range * self.delta_f / SPEED_OF_LIGHT
    }

    pub fn doppler_frequency(&self, speed: f64) -> f64 {
        2.0 * speed * self.symbol_interval() / self.wavelength()
    }

    /// Inverse of [`spatial_frequency`](Self::spatial_frequency).
    pub fn angle_from_spatial(&self, psi_s: f64) -> Result<f64> {
        let s = self.wavelength() * psi_s / self.d_spacing;
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::ArcsinDomain(psi_s));
        }
        Ok(s.asin())
    }

    pub fn range_from_frequency(&self, psi_r: f64) -> f64 {
        SPEED_OF_LIGHT * psi_r / (2.0 * self.delta_f)
    }

    pub fn speed_from_frequency(&self, psi_d: f64) -> f64 {
        self.wavelength() * psi_d / (2.0 * self.symbol_interval())
    }
}

pub fn snr_to_noise_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Normalized range, Doppler and spatial frequencies (cycles per sample).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequencies {
    pub range: f64,
    pub doppler: f64,
    pub spatial: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// Angle (rad).
    pub theta: f64,
    /// Range (m).
    pub range: f64,
    /// Radial speed (m/s).
    pub speed: f64,
    pub alpha: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub theta: f64,
    pub range: f64,
    pub alpha: Complex64,
}

impl Target {
    pub fn frequencies(&self, cfg: &SystemConfig) -> Frequencies {
        frequencies_target(self, cfg)
    }
}

impl Scatterer {
    /// `(psi_r, psi_s)`; a stationary scatterer has no Doppler.
    pub fn frequencies(&self, cfg: &SystemConfig) -> (f64, f64) {
        frequencies_scatterer(self, cfg)
    }
}

/// Unwrapped frequencies of a moving target.
pub fn frequencies_target(t: &Target, cfg: &SystemConfig) -> Frequencies {
    Frequencies {
        range: cfg.range_frequency(t.range),
        doppler: cfg.doppler_frequency(t.speed),
        spatial: cfg.spatial_frequency(t.theta),
    }
}

pub fn frequencies_scatterer(s: &Scatterer, cfg: &SystemConfig) -> (f64, f64) {
    (cfg.range_frequency(s.range), cfg.spatial_frequency(s.theta))
}

fn check_geometry(theta: f64, range: f64) -> Result<()> {
    if !(theta.is_finite() && theta.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("angle {theta} rad outside (-pi/2, pi/2)")));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::InvalidArgument(format!("range {range} m must be positive")));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub targets: Vec<Target>,
    pub scatterers: Vec<Scatterer>,
}

/// Kinematics of the two reference targets: (angle deg, range m, speed m/s).
pub const REFERENCE_TARGETS: [(f64, f64, f64); 2] = [(-48.295, 4.281, 3.911), (15.883, 2.670, 1.473)];

impl Scene {
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty() && self.scatterers.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.targets {
            check_geometry(t.theta, t.range)?;
            if !t.speed.is_finite() {
                return Err(Error::InvalidArgument("target speed must be finite".into()));
            }
        }
        for s in &self.scatterers {
            check_geometry(s.theta, s.range)?;
        }
        Ok(())
    }

    /// Smallest pairwise angular distance between targets (rad), or infinity.
    pub fn min_target_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.targets.iter().enumerate() {
            for b in &self.targets[i + 1..] {
                best = best.min((a.theta - b.theta).abs());
            }
        }
        best
    }

    /// The two reference targets with unit-magnitude reflection coefficients of
    /// seeded random phase, plus `n_scatterers` random stationary scatterers.
    pub fn reference(n_scatterers: usize, seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets = REFERENCE_TARGETS
            .iter()
            .map(|&(deg, range, speed)| Target {
                theta: deg.to_radians(),
                range,
                speed,
                alpha: Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
            })
            .collect();
        let scatterers = (0..n_scatterers).map(|_| draw_scatterer(&mut rng)).collect();
        Scene { targets, scatterers }
    }

    /// Copy of the scene without targets (clutter only).
    pub fn clutter_only(&self) -> Scene {
        Scene {
            targets: Vec::new(),
            scatterers: self.scatterers.clone(),
        }
    }

    pub fn merged(&self, other: &Scene) -> Scene {
        let mut out = self.clone();
        out.targets.extend_from_slice(&other.targets);
        out.scatterers.extend_from_slice(&other.scatterers);
        out
    }

    pub fn to_record(&self) -> SceneRecord {
        SceneRecord {
            targets: self
                .targets
                .iter()
                .map(|t| TargetRecord {
                    theta_deg: t.theta.to_degrees(),
                    range_m: t.range,
                    speed_mps: t.speed,
                    alpha_re: t.alpha.re,
                    alpha_im: t.alpha.im,
                })
                .collect(),
            scatterers: self
                .scatterers
                .iter()
                .map(|s| ScattererRecord {
                    theta_deg: s.theta.to_degrees(),
                    range_m: s.range,
                    alpha_re: s.alpha.re,
                    alpha_im: s.alpha.im,
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &SceneRecord) -> Result<Scene> {
        let scene = Scene {
            targets: rec
                .targets
                .iter()
                .map(|t| Target {
                    theta: t.theta_deg.to_radians(),
                    range: t.range_m,
                    speed: t.speed_mps,
                    alpha: Complex64::new(t.alpha_re, t.alpha_im),
                })
                .collect(),
            scatterers: rec
                .scatterers
                .iter()
                .map(|s| Scatterer {
                    theta: s.theta_deg.to_radians(),
                    range: s.range_m,
                    alpha: Complex64::new(s.alpha_re, s.alpha_im),
                })
                .collect(),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Scene> {
        Scene::from_record(&serde_json::from_str(s)?)
    }
}

/// Degree-valued scene document used at the file boundary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    #[serde(default)]
    pub targets: Vec<TargetRecord>,
    #[serde(default)]
    pub scatterers: Vec<ScattererRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub theta_deg: f64,
    pub range_m: f64,
    pub speed_mps: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererRecord {
    pub theta_deg: f64,
    pub range_m: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

/// Supports of the random scene draw.
pub const ANGLE_SUPPORT_DEG: (f64, f64) = (-60.0, 60.0);
pub const RANGE_SUPPORT_M: (f64, f64) = (1.0, 7.0);
pub const SPEED_SUPPORT_MPS: (f64, f64) = (1.0, 4.0);
pub const TARGET_ALPHA_VAR: f64 = 1.0;
pub const SCATTERER_ALPHA_VAR: f64 = 0.5;

/// Default minimum target separation: twice the 2 degree default beam step.
pub const DEFAULT_MIN_SEPARATION_DEG: f64 = 4.0;

/// Draws from CN(0, var): real and imaginary parts i.i.d. N(0, var/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn draw_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(ANGLE_SUPPORT_DEG.0..ANGLE_SUPPORT_DEG.1).to_radians()
}

fn draw_scatterer<R: Rng + ?Sized>(rng: &mut R) -> Scatterer {
    let theta = draw_angle(rng);
    let range = rng.random_range(RANGE_SUPPORT_M.0..RANGE_SUPPORT_M.1);
    let alpha = complex_normal(rng, SCATTERER_ALPHA_VAR);
    Scatterer { theta, range, alpha }
}

/// Randomized scene generator with a minimum target separation.
#[derive(Debug, Clone, Copy)]
pub struct SceneGenerator {
    /// Minimum pairwise target angle separation (rad).
    pub min_separation: f64,
    /// Redraws allowed per target before giving up.
    pub max_redraws: usize,
}

impl Default for SceneGenerator {
    fn default() -> Self {
        SceneGenerator {
            min_separation: DEFAULT_MIN_SEPARATION_DEG.to_radians(),
            max_redraws: 1000,
        }
    }
}

impl SceneGenerator {
    pub fn generate(&self, n_targets: usize, n_scatterers: usize, seed: u64) -> Result<Scene> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut targets: Vec<Target> = Vec::with_capacity(n_targets);
        for _ in 0..n_targets {
            let mut theta = None;
            for _ in 0..=self.max_redraws {
                let cand = draw_angle(&mut rng);
                if targets.iter().all(|t| (t.theta - cand).abs() > self.min_separation) {
                    theta = Some(cand);
                    break;
                }
            }
            let theta = theta.ok_or(Error::OverDenseScene {
                requested: n_targets,
                min_sep_deg: self.min_separation.to_degrees(),
                attempts: self.max_redraws + 1,
            })?;
            let range = rng.random_range(RANGE_SUPPORT_M.0..RANGE_SUPPORT_M.1);
            let speed = rng.random_range(SPEED_SUPPORT_MPS.0..SPEED_SUPPORT_MPS.1);
            let alpha = complex_normal(&mut rng, TARGET_ALPHA_VAR);
            targets.push(Target { theta, range, speed, alpha });
        }
        let scatterers = (0..n_scatterers).map(|_| draw_scatterer(&mut rng)).collect();
        Ok(Scene { targets, scatterers })
    }
}

/// Random scene with the default separation rule. The configuration is
/// validated but the draw itself does not depend on it.
pub fn generate_scene(cfg: &SystemConfig, n_targets: usize, n_scatterers: usize, seed: u64) -> Result<Scene> {
    cfg.validate()?;
    SceneGenerator::default().generate(n_targets, n_scatterers, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_target_one_frequencies() {
        let cfg = SystemConfig::default();
        let lambda = SPEED_OF_LIGHT / 60e9;
        let t_sym = 1e-7 + 2e-4;
        let t = Target {
            theta: (-48.295f64).to_radians(),
            range: 4.281,
            speed: 3.911,
            alpha: Complex64::new(1.0, 0.0),
        };
        let f = t.frequencies(&cfg);
        assert!((f.range - 2.0 * 4.281 * 1e7 / SPEED_OF_LIGHT).abs() < 1e-15);
        assert!((f.doppler - 2.0 * 3.911 * t_sym / lambda).abs() < 1e-12);
        assert!((f.spatial - 0.5 * (-48.295f64).to_radians().sin()).abs() < 1e-15);
        // hand-evaluated values
        assert!((f.range - 0.285599).abs() < 1e-5);
        assert!((f.doppler - 0.313248).abs() < 1e-5);
        assert!((f.spatial + 0.373292).abs() < 1e-5);
    }

    #[test]
    fn zero_angle_and_speed() {
        let cfg = SystemConfig::default();
        let t = Target { theta: 0.0, range: 3.0, speed: 0.0, alpha: Complex64::new(1.0, 0.0) };
        let f = t.frequencies(&cfg);
        assert_eq!(f.spatial, 0.0);
        assert_eq!(f.doppler, 0.0);
    }

    #[test]
    fn aliasing_boundary_range() {
        let cfg = SystemConfig::default();
        assert!((cfg.range_frequency(SPEED_OF_LIGHT / (2.0 * cfg.delta_f)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scatterer_frequencies() {
        let cfg = SystemConfig::default();
        let s = Scatterer { theta: 30f64.to_radians(), range: 1.5, alpha: Complex64::new(1.0, 0.0) };
        let (r, sp) = s.frequencies(&cfg);
        assert!((r - 2.0 * 1.5 * 1e7 / SPEED_OF_LIGHT).abs() < 1e-15);
        assert!((r - 0.1).abs() < 1e-3);
        assert!((sp - 0.25).abs() < 1e-15);
        let s0 = Scatterer { theta: 0.0, ..s };
        assert_eq!(s0.frequencies(&cfg).1, 0.0);
    }

    #[test]
    fn derived_constants() {
        let cfg = SystemConfig::default();
        assert!((cfg.wavelength() - 0.004_996_540_966_666_667).abs() < 1e-15);
        assert!((cfg.symbol_interval() - 2.001e-4).abs() < 1e-18);
        assert!((cfg.speed_from_frequency(1.0) - 12.485).abs() < 1e-3);
        cfg.validate().unwrap();
    }

    #[test]
    fn validate_rejects_small_arrays() {
        let cfg = SystemConfig { m_rx: 1, ..SystemConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = SystemConfig { delta_f: 0.0, ..SystemConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn empty_scene() {
        let s = generate_scene(&SystemConfig::default(), 0, 0, 5).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn generation_is_deterministic_and_in_support() {
        let cfg = SystemConfig::default();
        let a = generate_scene(&cfg, 2, 400, 99).unwrap();
        let b = generate_scene(&cfg, 2, 400, 99).unwrap();
        assert_eq!(a, b);
        for t in &a.targets {
            let deg = t.theta.to_degrees();
            assert!((-60.0..60.0).contains(&deg));
            assert!((1.0..7.0).contains(&t.range));
            assert!((1.0..4.0).contains(&t.speed));
        }
        for s in &a.scatterers {
            assert!((-60.0..60.0).contains(&s.theta.to_degrees()));
            assert!((1.0..7.0).contains(&s.range));
        }
        assert!(a.min_target_separation() > 4f64.to_radians());
    }

    #[test]
    fn over_dense_request_fails() {
        // 120 deg sector cannot hold 40 targets 4 deg apart
        let err = generate_scene(&SystemConfig::default(), 40, 0, 1).unwrap_err();
        assert!(matches!(err, Error::OverDenseScene { .. }));
    }

    #[test]
    fn json_roundtrip() {
        let s = Scene::reference(3, 11);
        let back = Scene::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.targets.len(), 2);
        assert_eq!(back.scatterers.len(), 3);
        for (a, b) in s.targets.iter().zip(&back.targets) {
            assert!((a.theta - b.theta).abs() < 1e-14);
            assert_eq!(a.alpha, b.alpha);
        }
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert!(v["targets"][0]["theta_deg"].as_f64().unwrap() + 48.295 < 1e-12);
    }

    #[test]
    fn reference_alphas_unit_magnitude() {
        let s = Scene::reference(0, 4);
        for t in &s.targets {
            assert!((t.alpha.norm() - 1.0).abs() < 1e-15);
        }
        assert_ne!(Scene::reference(0, 4), Scene::reference(0, 5));
    }
}
