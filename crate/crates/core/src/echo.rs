//! Steering vectors, the echo tensor and echo synthesis from a scene.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beams::BeamPlan;
use crate::error::{Error, Result};
use crate::linalg::derive_seed;
use crate::scene::{complex_normal, Scene, SystemConfig};

fn phase_ramp(psi: f64, n: usize, sign: f64) -> DVector<Complex64> {
    DVector::from_fn(n, |k, _| Complex64::from_polar(1.0, sign * TAU * k as f64 * psi))
}

/// Receive spatial steering vector, entry m is e^{j2π m ψ}.
pub fn steering_rx(psi_s: f64, m_rx: usize) -> DVector<Complex64> {
    phase_ramp(psi_s, m_rx, 1.0)
}

/// Transmit spatial steering vector, entry m is e^{j2π m ψ}.
pub fn steering_tx(psi_s: f64, m_tx: usize) -> DVector<Complex64> {
    phase_ramp(psi_s, m_tx, 1.0)
}

/// Range steering vector across subcarriers, entry l is e^{-j2π l ψ_r}.
pub fn steering_range(psi_r: f64, n_sub: usize) -> DVector<Complex64> {
    phase_ramp(psi_r, n_sub, -1.0)
}

/// Doppler steering vector across symbols, entry p is e^{+j2π p ψ_d}.
pub fn steering_doppler(psi_d: f64, n_sym: usize) -> DVector<Complex64> {
    phase_ramp(psi_d, n_sym, 1.0)
}

/// Processing stage of an [`EchoTensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Raw,
    Normalized,
    Filtered,
}

/// Complex cube indexed (m_r, l, p) for one scan.
///
/// Storage is symbol-major: the receive vector of each (l, p) is contiguous.
/// Symbols before `valid_from` are filter transients and are skipped by the
/// spectrum and snapshot builders.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoTensor {
    pub m_rx: usize,
    pub n_sub: usize,
    pub n_sym: usize,
    pub scan: usize,
    pub stage: Stage,
    pub valid_from: usize,
    pub data: Vec<Complex64>,
}

impl EchoTensor {
    pub fn zeros(m_rx: usize, n_sub: usize, n_sym: usize, scan: usize) -> Self {
        EchoTensor {
            m_rx,
            n_sub,
            n_sym,
            scan,
            stage: Stage::Raw,
            valid_from: 0,
            data: vec![Complex64::new(0.0, 0.0); m_rx * n_sub * n_sym],
        }
    }

    pub fn for_config(cfg: &SystemConfig, scan: usize) -> Self {
        Self::zeros(cfg.m_rx, cfg.n_sub, cfg.n_sym, scan)
    }

    #[inline]
    pub fn index(&self, m: usize, l: usize, p: usize) -> usize {
        (p * self.n_sub + l) * self.m_rx + m
    }

    #[inline]
    pub fn get(&self, m: usize, l: usize, p: usize) -> Complex64 {
        self.data[self.index(m, l, p)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, l: usize, p: usize, v: Complex64) {
        let i = self.index(m, l, p);
        self.data[i] = v;
    }

    /// Receive vector y_{l,p}.
    pub fn snapshot(&self, l: usize, p: usize) -> &[Complex64] {
        let start = self.index(0, l, p);
        &self.data[start..start + self.m_rx]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m_rx, self.n_sub, self.n_sym)
    }

    /// Symbols retained after the transient.
    pub fn effective_symbols(&self) -> usize {
        self.n_sym - self.valid_from
    }

    pub fn check_shape(&self, cfg: &SystemConfig) -> Result<()> {
        if self.shape() != (cfg.m_rx, cfg.n_sub, cfg.n_sym) {
            return Err(Error::ShapeMismatch(format!(
                "tensor {:?} vs configuration ({}, {}, {})",
                self.shape(),
                cfg.m_rx,
                cfg.n_sub,
                cfg.n_sym
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Sum of |y|² over all entries.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&mut self, c: Complex64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    pub fn add_assign(&mut self, other: &EchoTensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch("tensor addition".into()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Adds CN(0, σ²) noise drawn from a generator seeded with `seed`.
    pub fn add_noise(&mut self, noise_var: f64, seed: u64) {
        if noise_var == 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for z in &mut self.data {
            *z += complex_normal(&mut rng, noise_var);
        }
    }

    /// Flat little-endian record: M_r, L, P, b as u32 then (re, im) f64 pairs
    /// in storage order (p outermost, then l, then m_r).
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        for v in [self.m_rx, self.n_sub, self.n_sym, self.scan] {
            let v = u32::try_from(v).map_err(|_| Error::InvalidArgument("dimension exceeds u32".into()))?;
            out.write_all(&v.to_le_bytes())?;
        }
        for z in &self.data {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a record written by [`write_binary`](Self::write_binary). The
    /// result is tagged as a raw echo with no transient.
    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 4];
        let mut header = [0usize; 4];
        for h in &mut header {
            input.read_exact(&mut word)?;
            *h = u32::from_le_bytes(word) as usize;
        }
        let [m_rx, n_sub, n_sym, scan] = header;
        let mut t = EchoTensor::zeros(m_rx, n_sub, n_sym, scan);
        let mut buf = [0u8; 8];
        for z in &mut t.data {
            input.read_exact(&mut buf)?;
            z.re = f64::from_le_bytes(buf);
            input.read_exact(&mut buf)?;
            z.im = f64::from_le_bytes(buf);
        }
        Ok(t)
    }
}

/// Separable response of one scene element, without the beam gain.
#[derive(Debug, Clone)]
struct ElementResponse {
    alpha: Complex64,
    psi_s: f64,
    doppler: Option<DVector<Complex64>>,
    range: DVector<Complex64>,
    spatial: DVector<Complex64>,
}

/// Precomputes every element's steering vectors so that echoes for many
/// scans (and many noise draws) are cheap.
#[derive(Debug, Clone)]
pub struct EchoSynthesizer {
    cfg: SystemConfig,
    elements: Vec<ElementResponse>,
}

impl EchoSynthesizer {
    pub fn new(scene: &Scene, cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        scene.validate()?;
        let mut elements = Vec::with_capacity(scene.targets.len() + scene.scatterers.len());
        for t in &scene.targets {
            let f = t.frequencies(cfg);
            elements.push(ElementResponse {
                alpha: t.alpha,
                psi_s: f.spatial,
                doppler: Some(steering_doppler(f.doppler, cfg.n_sym)),
                range: steering_range(f.range, cfg.n_sub),
                spatial: steering_rx(f.spatial, cfg.m_rx),
            });
        }
        for s in &scene.scatterers {
            let (psi_r, psi_s) = s.frequencies(cfg);
            elements.push(ElementResponse {
                alpha: s.alpha,
                psi_s,
                doppler: None,
                range: steering_range(psi_r, cfg.n_sub),
                spatial: steering_rx(psi_s, cfg.m_rx),
            });
        }
        Ok(EchoSynthesizer { cfg: *cfg, elements })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    /// Noise-free echo of scan `b`; every element contributes through the
    /// beam pattern, in-beam or not.
    pub fn noiseless(&self, plan: &BeamPlan, b: usize) -> Result<EchoTensor> {
        if b >= plan.len() {
            return Err(Error::InvalidArgument(format!("beam index {b} out of range")));
        }
        let cfg = &self.cfg;
        if plan.weights[b].len() != cfg.m_tx {
            return Err(Error::ShapeMismatch("beam weight length differs from m_tx".into()));
        }
        let mut out = EchoTensor::for_config(cfg, b);
        let (m_rx, n_sub) = (cfg.m_rx, cfg.n_sub);
        for e in &self.elements {
            let c = e.alpha * plan.gain_toward(b, e.psi_s);
            for p in 0..cfg.n_sym {
                let cp = match &e.doppler {
                    Some(d) => c * d[p],
                    None => c,
                };
                for l in 0..n_sub {
                    let clp = cp * e.range[l];
                    let start = (p * n_sub + l) * m_rx;
                    for (y, s) in out.data[start..start + m_rx].iter_mut().zip(e.spatial.iter()) {
                        *y += clp * s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Echo of scan `b` plus CN(0, σ²) noise from a stream seeded by `seed`.
    pub fn synthesize(&self, plan: &BeamPlan, b: usize, noise_var: f64, seed: u64) -> Result<EchoTensor> {
        let mut y = self.noiseless(plan, b)?;
        y.add_noise(noise_var, seed);
        Ok(y)
    }
}

/// Echo of scan `b` at the configured noise level. The noise stream is
/// derived from `(seed, b)` so scans are independent and order-free.
pub fn synthesize_echo(scene: &Scene, plan: &BeamPlan, b: usize, cfg: &SystemConfig, seed: u64) -> Result<EchoTensor> {
    EchoSynthesizer::new(scene, cfg)?.synthesize(plan, b, cfg.noise_var, derive_seed(seed, b as u64))
}
