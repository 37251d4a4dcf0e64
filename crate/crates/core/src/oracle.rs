//! Time-domain integration of the classical limit of the Langevin equations,
//! used as an independent check on the analytic spectra when `n̄_th ≫ 1`.
//!
//! Variables are the complex amplitudes `(a, b_X, b_Y)`. The cavity receives
//! no noise (vacuum is dropped); each mechanical amplitude receives complex
//! white noise with `E|dW|² = (Γ_m n̄_th + Γ_n) dt`.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::langevin::{build_drift_matrix, eigensolve};
use crate::model::{Mode, PhysicalParams};
use crate::spectra::{spectrum_ij_weighted, FrequencyGrid, NoiseWeights, Spectrum, SpectrumKind};

pub const SEED_ENV: &str = "POLARITRON_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// `x ← e^{M dt} (x + ξ)`; unconditionally stable for the linear drift.
    ExponentialEuler,
    /// `x ← x + M x dt + ξ`; anti-damps oscillators unless `Ω² dt ≪ Γ`.
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    /// Integration step, s.
    pub dt: f64,
    /// Steps after burn-in.
    pub n_steps: usize,
    pub seed: u64,
    /// Steps discarded before recording starts.
    pub burn_in: usize,
    /// Record every n-th step.
    pub record_every: usize,
    pub scheme: Scheme,
    /// Skip the minimum-duration check.
    pub allow_short: bool,
    /// Disable the stochastic forcing.
    pub noiseless: bool,
    /// Initial `(a, b_X, b_Y)` as `[re, im]` pairs.
    pub initial: [[f64; 2]; 3],
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: 5e-8,
            n_steps: 1_000_000,
            seed: 0,
            burn_in: 0,
            record_every: 1,
            scheme: Scheme::ExponentialEuler,
            allow_short: false,
            noiseless: false,
            initial: [[0.0; 2]; 3],
        }
    }
}

impl TrajectoryConfig {
    /// Largest admissible step, `0.05 / max(κ, Ω_X⁰, Ω_Y⁰, |Δ|)`.
    pub fn max_dt(p: &PhysicalParams) -> f64 {
        0.05 / p.kappa.max(p.omega_x0).max(p.omega_y0).max(p.delta.abs())
    }

    /// Replaces the seed with `POLARITRON_SEED` when that variable parses.
    pub fn seed_from_env(mut self) -> Self {
        if let Some(s) = std::env::var(SEED_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            self.seed = s;
        }
        self
    }

    pub fn validate(&self, p: &PhysicalParams) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidParameter { field, reason });
        if !(self.dt > 0.0 && self.dt < Self::max_dt(p)) {
            return bad("dt", format!("must lie in (0, {:.3e}) s", Self::max_dt(p)));
        }
        if self.n_steps == 0 || self.record_every == 0 {
            return bad("n_steps", "n_steps and record_every must be > 0".into());
        }
        if !self.allow_short {
            let min_rate = 2.0 * slowest_decay(p)?;
            let needed = 50.0 / min_rate;
            let have = self.n_steps as f64 * self.dt;
            if have < needed {
                return bad(
                    "n_steps",
                    format!(
                        "{have:.3e} s is shorter than 50 damping times ({needed:.3e} s); set allow_short to override"
                    ),
                );
            }
        }
        Ok(())
    }
}

fn slowest_decay(p: &PhysicalParams) -> Result<f64> {
    let sol = eigensolve(&build_drift_matrix(p))?;
    let re = sol.eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    if re <= 0.0 {
        let l = sol.eigenvalues.iter().min_by(|a, b| a.re.total_cmp(&b.re)).copied().unwrap_or_default();
        return Err(Error::Unstable { re: l.re, im: l.im });
    }
    Ok(re)
}

/// Real 6×6 generator of `(Re a, Im a, Re b_X, Im b_X, Re b_Y, Im b_Y)`.
pub fn real_generator(p: &PhysicalParams) -> Matrix6<f64> {
    let d = build_drift_matrix(p);
    let mut m = Matrix6::zeros();
    for k in 0..6 {
        let mut z = [Complex64::new(0.0, 0.0); 3];
        z[k / 2] = if k % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
        let v = [z[0], z[0].conj(), z[1], z[1].conj(), z[2], z[2].conj()];
        for (row, out) in [0usize, 2, 4].into_iter().enumerate() {
            let dz: Complex64 = -(0..6).map(|c| d.entry(out + 1, c + 1) * v[c]).sum::<Complex64>();
            m[(2 * row, k)] = dz.re;
            m[(2 * row + 1, k)] = dz.im;
        }
    }
    m
}

/// Per-quadrature noise standard deviation for one step.
fn noise_sd(p: &PhysicalParams, dt: f64) -> [f64; 3] {
    let s = |gm: f64, n: f64, gn: f64| ((gm * n + gn) * dt / 2.0).sqrt();
    [0.0, s(p.gamma_mx, p.n_th_x, p.gamma_nx), s(p.gamma_my, p.n_th_y, p.gamma_ny)]
}

struct Stepper {
    prop: Matrix6<f64>,
    scheme: Scheme,
    sd: [f64; 3],
    noiseless: bool,
    rng: ChaCha20Rng,
    state: Vector6<f64>,
    bound: f64,
}

impl Stepper {
    fn new(p: &PhysicalParams, cfg: &TrajectoryConfig) -> Result<Self> {
        p.validate()?;
        cfg.validate(p)?;
        let m = real_generator(p);
        let prop = match cfg.scheme {
            Scheme::ExponentialEuler => (m * cfg.dt).exp(),
            Scheme::EulerMaruyama => Matrix6::identity() + m * cfg.dt,
        };
        let sd = noise_sd(p, cfg.dt);
        let i = cfg.initial;
        let state = Vector6::new(i[0][0], i[0][1], i[1][0], i[1][1], i[2][0], i[2][1]);
        let rate = p.gamma_mx * p.n_th_x + p.gamma_nx + p.gamma_my * p.n_th_y + p.gamma_ny;
        let scale = rate / (2.0 * slowest_decay(p)?) + state.norm_squared() + 1.0;
        Ok(Self {
            prop,
            scheme: cfg.scheme,
            sd,
            noiseless: cfg.noiseless,
            rng: ChaCha20Rng::seed_from_u64(cfg.seed),
            state,
            bound: 1e6 * scale,
        })
    }

    fn step(&mut self, index: usize) -> Result<()> {
        let mut xi = Vector6::zeros();
        if !self.noiseless {
            for k in 1..3 {
                if self.sd[k] > 0.0 {
                    let (re, im): (f64, f64) =
                        (StandardNormal.sample(&mut self.rng), StandardNormal.sample(&mut self.rng));
                    xi[2 * k] = self.sd[k] * re;
                    xi[2 * k + 1] = self.sd[k] * im;
                }
            }
        }
        self.state = match self.scheme {
            Scheme::ExponentialEuler => self.prop * (self.state + xi),
            Scheme::EulerMaruyama => self.prop * self.state + xi,
        };
        let n2 = self.state.norm_squared();
        if !n2.is_finite() || n2 > self.bound {
            return Err(Error::Diverged { step: index });
        }
        Ok(())
    }

    fn amplitudes(&self) -> [Complex64; 3] {
        let s = &self.state;
        [Complex64::new(s[0], s[1]), Complex64::new(s[2], s[3]), Complex64::new(s[4], s[5])]
    }

    fn run(&mut self, cfg: &TrajectoryConfig, mut record: impl FnMut([Complex64; 3])) -> Result<()> {
        for i in 0..cfg.burn_in {
            self.step(i)?;
        }
        for i in 0..cfg.n_steps {
            self.step(cfg.burn_in + i)?;
            if (i + 1) % cfg.record_every == 0 {
                record(self.amplitudes());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Spacing of the recorded samples, s.
    pub dt: f64,
    pub a: Vec<Complex64>,
    pub b_x: Vec<Complex64>,
    pub b_y: Vec<Complex64>,
}

/// Integrates the classical stochastic equations; identical inputs give
/// bit-identical trajectories.
pub fn simulate_classical(p: &PhysicalParams, cfg: &TrajectoryConfig) -> Result<Trajectory> {
    let mut st = Stepper::new(p, cfg)?;
    let n = cfg.n_steps / cfg.record_every;
    let mut tr = Trajectory {
        dt: cfg.dt * cfg.record_every as f64,
        a: Vec::with_capacity(n),
        b_x: Vec::with_capacity(n),
        b_y: Vec::with_capacity(n),
    };
    st.run(cfg, |z| {
        tr.a.push(z[0]);
        tr.b_x.push(z[1]);
        tr.b_y.push(z[2]);
    })?;
    Ok(tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchOptions {
    pub segment_length: usize,
    pub window: Window,
    /// Fraction of each segment shared with the next, in `[0, 1)`.
    pub overlap: f64,
}

impl WelchOptions {
    pub fn new(segment_length: usize) -> Self {
        Self { segment_length, window: Window::Hann, overlap: 0.5 }
    }

    fn hop(&self) -> usize {
        ((self.segment_length as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.segment_length < 2 {
            return Err(Error::InvalidParameter { field: "segment_length", reason: "must be ≥ 2".into() });
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter { field: "overlap", reason: "must lie in [0, 1)".into() });
        }
        Ok(())
    }
}

/// Streaming averaged periodogram, `PSD(Ω) = |dt Σ w_n x_n e^{iΩt_n}|² / (dt Σ w_n²)`,
/// normalised so that `∫ PSD dΩ/2π` is the mean of `|x|²`.
struct Welch {
    opts: WelchOptions,
    dt: f64,
    window: Vec<f64>,
    norm: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
    acc: Vec<f64>,
    segments: usize,
}

impl Welch {
    fn new(opts: WelchOptions, dt: f64) -> Result<Self> {
        opts.validate()?;
        let n = opts.segment_length;
        let window: Vec<f64> = match opts.window {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n).map(|i| (PI * i as f64 / n as f64).sin().powi(2)).collect(),
        };
        let norm = window.iter().map(|w| w * w).sum::<f64>();
        // inverse transform gives the e^{+iΩt} kernel
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self {
            opts,
            dt,
            window,
            norm,
            fft,
            buffer: Vec::with_capacity(n),
            scratch: vec![Complex64::new(0.0, 0.0); n],
            acc: vec![0.0; n],
            segments: 0,
        })
    }

    fn push(&mut self, x: Complex64) {
        self.buffer.push(x);
        if self.buffer.len() == self.opts.segment_length {
            for (s, (b, w)) in self.scratch.iter_mut().zip(self.buffer.iter().zip(&self.window)) {
                *s = b * w;
            }
            self.fft.process(&mut self.scratch);
            for (a, s) in self.acc.iter_mut().zip(&self.scratch) {
                *a += s.norm_sqr();
            }
            self.segments += 1;
            self.buffer.drain(..self.opts.hop());
        }
    }

    fn finish(&self) -> Result<Spectrum> {
        if self.segments == 0 {
            return Err(Error::InsufficientData("series shorter than one segment".into()));
        }
        let n = self.opts.segment_length;
        let d_omega = TAU / (n as f64 * self.dt);
        let k0 = n / 2;
        let grid = FrequencyGrid::new(-(k0 as f64) * d_omega, (n - 1 - k0) as f64 * d_omega, n)?;
        let scale = self.dt / (self.norm * self.segments as f64);
        let values = (0..n).map(|i| self.acc[(i + n - k0) % n] * scale).collect();
        Spectrum::new(grid, SpectrumKind::Periodogram, values)
    }
}

/// Hann-windowed Welch estimate with 50 % overlap.
pub fn psd(series: &[Complex64], dt: f64, segment_length: usize) -> Result<Spectrum> {
    psd_with(series, dt, &WelchOptions::new(segment_length))
}

pub fn psd_with(series: &[Complex64], dt: f64, opts: &WelchOptions) -> Result<Spectrum> {
    if opts.segment_length > series.len() {
        return Err(Error::InsufficientData(format!(
            "segment of {} samples exceeds series of {}",
            opts.segment_length,
            series.len()
        )));
    }
    let mut w = Welch::new(*opts, dt)?;
    for &x in series {
        w.push(x);
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePsd {
    pub a: Spectrum,
    pub b_x: Spectrum,
    pub b_y: Spectrum,
    pub segments: usize,
}

/// Integrates and accumulates periodograms on the fly without storing the series.
pub fn simulate_psd(p: &PhysicalParams, cfg: &TrajectoryConfig, opts: &WelchOptions) -> Result<OraclePsd> {
    let dt = cfg.dt * cfg.record_every as f64;
    let mut w: Vec<Welch> = (0..3).map(|_| Welch::new(*opts, dt)).collect::<Result<_>>()?;
    let mut st = Stepper::new(p, cfg)?;
    st.run(cfg, |z| {
        for (acc, x) in w.iter_mut().zip(z) {
            acc.push(x);
        }
    })?;
    let segments = w[0].segments;
    let mut it = w.iter().map(|x| x.finish().map(|s| s.with_params(*p, None)));
    Ok(OraclePsd {
        a: it.next().expect("three")?,
        b_x: it.next().expect("three")?,
        b_y: it.next().expect("three")?,
        segments,
    })
}

/// Oracle spectrum set against the analytic classical-noise spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(lo, hi)` band in rad/s.
    pub band: (f64, f64),
    pub frequencies: Vec<f64>,
    pub simulated: Vec<f64>,
    pub analytic: Vec<f64>,
    /// `‖sim − analytic‖₂ / ‖analytic‖₂` over the band.
    pub rms_error: f64,
}

/// Default comparison band: all eigenfrequencies widened by ten of the
/// largest eigen half-widths, kept on the positive side.
pub fn default_band(p: &PhysicalParams) -> Result<(f64, f64)> {
    let sol = eigensolve(&build_drift_matrix(p))?;
    let w = sol.half_widths().into_iter().fold(0.0, f64::max);
    let f = sol.frequencies();
    let lo = f.iter().copied().fold(f64::INFINITY, f64::min) - 10.0 * w;
    let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 10.0 * w;
    Ok((lo.max(0.0), hi))
}

/// Compares a simulated mechanical PSD with the analytic `S_bb` of `mode`
/// under classical noise weights, on the PSD bins inside `band`.
pub fn compare_with_analytic(psd: &Spectrum, p: &PhysicalParams, mode: Mode, band: (f64, f64)) -> Result<Comparison> {
    let g = psd.grid;
    let (i0, i1) = (g.index_of(band.0.max(g.start())), g.index_of(band.1.min(g.stop())));
    if i1 <= i0 + 1 {
        return Err(Error::InsufficientData("comparison band holds fewer than three bins".into()));
    }
    let sub = FrequencyGrid::new(g.at(i0), g.at(i1), i1 - i0 + 1)?;
    let theta = if mode == Mode::X { 0.0 } else { std::f64::consts::FRAC_PI_2 };
    let analytic: Vec<f64> =
        spectrum_ij_weighted(p, theta, &sub, 4, 3, &NoiseWeights::classical(p))?.values.iter().map(|z| z.re).collect();
    let simulated = psd.values[i0..=i1].to_vec();
    let num: f64 = simulated.iter().zip(&analytic).map(|(s, a)| (s - a).powi(2)).sum();
    let den: f64 = analytic.iter().map(|a| a * a).sum();
    Ok(Comparison { band, frequencies: sub.to_vec(), simulated, analytic, rms_error: (num / den).sqrt() })
}
