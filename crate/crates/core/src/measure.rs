//! Time-averaged empirical measures along pullback trajectories, observable
//! functionals to integrate against them, and invariance residuals.
//!
//! The measure at time `t` with averaging window `W` places weight on the
//! endpoint states `U(t, s) rho(s)` for release times `s` on a stride grid
//! of `[t - W, t]`, with trapezoid weights so that integrating a functional
//! against the measure reproduces the trapezoid time average at the same
//! resolution (and the constant functional integrates to exactly one).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delay::{DelaySpec, ProcessState};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::params::PhysicalParams;
use crate::spectral::{Space, SpectralField};
use crate::stepper::{Scheme, Stepper};

/// Observable to integrate against an empirical measure.  All built-ins are
/// continuous on the energy phase space; `Saturated` post-composes with
/// `x -> x / (1 + x)` to give a bounded observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    One,
    HNormSq,
    VNormSq,
    Ev2NormSq,
    /// Squared modulus of one Fourier coefficient of one component.
    ModeEnergy { k: [i64; 3], comp: usize },
    Saturated { base: Box<Functional> },
}

impl Functional {
    pub fn eval(&self, state: &ProcessState) -> Result<f64> {
        Ok(match self {
            Functional::One => 1.0,
            Functional::HNormSq => state.u().norm_sq(Space::H),
            Functional::VNormSq => state.u().norm_sq(Space::V),
            Functional::Ev2NormSq => state.ev2_norm_sq(),
            Functional::ModeEnergy { k, comp } => state.u().coeff_at(*comp, k)?.norm_sqr(),
            Functional::Saturated { base } => {
                let x = base.eval(state)?;
                x / (1.0 + x)
            }
        })
    }

    /// Canonical name used by the command-line tools.
    pub fn id(&self) -> String {
        match self {
            Functional::One => "one".into(),
            Functional::HNormSq => "h2".into(),
            Functional::VNormSq => "v2".into(),
            Functional::Ev2NormSq => "ev2".into(),
            Functional::ModeEnergy { k, comp } => {
                format!("mode:{},{},{}:{}", k[0], k[1], k[2], comp)
            }
            Functional::Saturated { base } => format!("sat:{}", base.id()),
        }
    }

    /// Parses the canonical names: `one`, `h2`, `v2`, `ev2`,
    /// `mode:kx,ky[,kz]:comp`, and `sat:<inner>`.
    pub fn parse(s: &str) -> Result<Functional> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("sat:") {
            return Ok(Functional::Saturated { base: Box::new(Functional::parse(inner)?) });
        }
        match s {
            "one" => Ok(Functional::One),
            "h2" => Ok(Functional::HNormSq),
            "v2" => Ok(Functional::VNormSq),
            "ev2" => Ok(Functional::Ev2NormSq),
            _ => {
                let body = s
                    .strip_prefix("mode:")
                    .ok_or_else(|| Error::config(format!("unknown functional '{s}'")))?;
                let (ks, comp) = body
                    .rsplit_once(':')
                    .ok_or_else(|| Error::config(format!("functional '{s}' lacks a component")))?;
                let comp: usize = comp
                    .parse()
                    .map_err(|_| Error::config(format!("bad component in '{s}'")))?;
                let parts: Vec<&str> = ks.split(',').collect();
                if !(2..=3).contains(&parts.len()) {
                    return Err(Error::config(format!("functional '{s}' needs 2 or 3 wavenumbers")));
                }
                let mut k = [0i64; 3];
                for (i, p) in parts.iter().enumerate() {
                    k[i] = p
                        .parse()
                        .map_err(|_| Error::config(format!("bad wavenumber in '{s}'")))?;
                }
                Ok(Functional::ModeEnergy { k, comp })
            }
        }
    }
}

/// Averaging request for [`build_measure`].
#[derive(Debug, Clone, Copy)]
pub struct MeasureConfig {
    /// Averaging depth `W`: release times span `[t - W, t]`.
    pub window: f64,
    pub dt: f64,
    /// Release-grid spacing in steps.
    pub stride: usize,
    pub scheme: Scheme,
    pub include_convection: bool,
}

/// Weighted finite collection of process states at a common time.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    time: f64,
    samples: Vec<ProcessState>,
    /// Raw trapezoid weights on the release grid (not normalized).
    raw_weights: Vec<f64>,
    weight_total: f64,
}

impl EmpiricalMeasure {
    fn from_samples(time: f64, samples: Vec<ProcessState>) -> EmpiricalMeasure {
        let n = samples.len();
        let raw_weights: Vec<f64> = if n == 1 {
            vec![1.0]
        } else {
            (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 }).collect()
        };
        let weight_total = raw_weights.iter().sum();
        EmpiricalMeasure { time, samples, raw_weights, weight_total }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ProcessState] {
        &self.samples
    }

    /// Normalized weight of sample `i`; the weights sum to one.
    pub fn weight(&self, i: usize) -> f64 {
        self.raw_weights[i] / self.weight_total
    }

    /// `int phi d(measure)`.  The constant functional integrates to exactly
    /// `1.0` because numerator and denominator are the identical sum.
    pub fn integrate(&self, phi: &Functional) -> Result<f64> {
        let mut acc = 0.0;
        for (w, s) in self.raw_weights.iter().zip(&self.samples) {
            acc += w * phi.eval(s)?;
        }
        Ok(acc / self.weight_total)
    }

    /// Largest squared energy-space norm over the support.
    pub fn max_ev2_sq(&self) -> f64 {
        self.samples.iter().map(|s| s.ev2_norm_sq()).fold(0.0, f64::max)
    }
}

fn release_count(cfg: &MeasureConfig) -> Result<usize> {
    if cfg.stride == 0 {
        return Err(Error::config("measure stride must be at least one step"));
    }
    if cfg.window < 0.0 {
        return Err(Error::config("averaging window must be nonnegative"));
    }
    let spacing = cfg.stride as f64 * cfg.dt;
    let ratio = cfg.window / spacing;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * (1.0 + ratio) {
        return Err(Error::config(format!(
            "window {} is not a multiple of stride * dt = {spacing}",
            cfg.window
        )));
    }
    Ok(n as usize)
}

/// Builds the empirical measure at time `t` for the constant pullback datum
/// `rho(s) = (field, constant history)` released on the stride grid of
/// `[t - W, t]`.
///
/// Autonomous systems are evolved once along a single trajectory and
/// snapshotted (time-translated) at the release offsets; non-autonomous
/// systems evolve each release separately (in parallel).  Both paths produce
/// identical coefficients because a trajectory prefix matches a fresh run of
/// the same length bit for bit.
pub fn build_measure(
    params: &PhysicalParams,
    forcing: &Forcing,
    delay: &DelaySpec,
    field: &SpectralField,
    t: f64,
    cfg: &MeasureConfig,
) -> Result<EmpiricalMeasure> {
    build_measure_impl(params, forcing, delay, field, t, cfg, true)
}

fn build_measure_impl(
    params: &PhysicalParams,
    forcing: &Forcing,
    delay: &DelaySpec,
    field: &SpectralField,
    t: f64,
    cfg: &MeasureConfig,
    allow_single_pass: bool,
) -> Result<EmpiricalMeasure> {
    let n_outer = release_count(cfg)?;
    let autonomous = forcing.is_autonomous() && delay.is_autonomous();
    if n_outer == 0 {
        let stepper = Stepper::new(*params, forcing.clone(), delay.clone(), cfg.scheme)?;
        let state = stepper.initial_state(field.clone(), t, cfg.dt, |_| field.clone())?;
        return Ok(EmpiricalMeasure::from_samples(t, vec![state]));
    }
    let samples: Vec<ProcessState> = if autonomous && allow_single_pass {
        // One trajectory released at t - W; the snapshot after `e` steps is
        // the release at `s = t - e dt`, time-shifted to sit at `t`.
        let s0 = t - cfg.window;
        let mut stepper = Stepper::new(*params, forcing.clone(), delay.clone(), cfg.scheme)?
            .with_convection(cfg.include_convection);
        let mut state = stepper.initial_state(field.clone(), s0, cfg.dt, |_| field.clone())?;
        let mut snapshots = Vec::with_capacity(n_outer + 1);
        snapshots.push(state.shifted(cfg.window));
        for j in 1..=n_outer {
            for _ in 0..cfg.stride {
                stepper.step(&mut state)?;
            }
            snapshots.push(state.shifted(cfg.window - (j * cfg.stride) as f64 * cfg.dt));
        }
        // Snapshot j has elapsed time j*stride*dt, i.e. release time
        // t - j*stride*dt; order samples by release time (oldest first).
        snapshots.reverse();
        snapshots
    } else {
        let result: Result<Vec<ProcessState>> = (0..=n_outer)
            .into_par_iter()
            .map(|j| {
                let elapsed_steps = (n_outer - j) * cfg.stride;
                let s = t - elapsed_steps as f64 * cfg.dt;
                let mut stepper =
                    Stepper::new(*params, forcing.clone(), delay.clone(), cfg.scheme)?
                        .with_convection(cfg.include_convection);
                let mut state = stepper.initial_state(field.clone(), s, cfg.dt, |_| field.clone())?;
                stepper.evolve(&mut state, elapsed_steps)?;
                Ok(state)
            })
            .collect();
        result?
    };
    Ok(EmpiricalMeasure::from_samples(t, samples))
}

/// Trapezoid time average of `phi(U(t, s) rho(s))` over the release grid —
/// by construction identical to integrating `phi` against [`build_measure`].
pub fn time_average(
    params: &PhysicalParams,
    forcing: &Forcing,
    delay: &DelaySpec,
    field: &SpectralField,
    t: f64,
    cfg: &MeasureConfig,
    phi: &Functional,
) -> Result<f64> {
    build_measure(params, forcing, delay, field, t, cfg)?.integrate(phi)
}

/// Invariance defect of the measure family under the process: for each
/// functional, `|int phi d(mu_t) - int (phi o U(t, tau)) d(mu_tau)|`, where
/// both measures are built independently at the same averaging depth.
pub fn invariance_residual(
    params: &PhysicalParams,
    forcing: &Forcing,
    delay: &DelaySpec,
    field: &SpectralField,
    tau: f64,
    t: f64,
    cfg: &MeasureConfig,
    functionals: &[Functional],
) -> Result<Vec<f64>> {
    let ratio = (t - tau) / cfg.dt;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * (1.0 + ratio.abs()) {
        return Err(Error::config(format!(
            "evolution span {} must be a positive multiple of dt = {}",
            t - tau,
            cfg.dt
        )));
    }
    let steps = steps as usize;
    let mu_tau = build_measure(params, forcing, delay, field, tau, cfg)?;
    let mu_t = build_measure(params, forcing, delay, field, t, cfg)?;
    let pushed: Result<Vec<ProcessState>> = mu_tau
        .samples()
        .par_iter()
        .map(|sample| {
            let mut stepper = Stepper::new(*params, forcing.clone(), delay.clone(), cfg.scheme)?
                .with_convection(cfg.include_convection);
            let mut state = sample.clone();
            stepper.evolve(&mut state, steps)?;
            Ok(state)
        })
        .collect();
    let pushed = pushed?;
    let mut residuals = Vec::with_capacity(functionals.len());
    for phi in functionals {
        let direct = mu_t.integrate(phi)?;
        let mut acc = 0.0;
        for (w, s) in mu_tau.raw_weights.iter().zip(&pushed) {
            acc += w * phi.eval(s)?;
        }
        let pulled = acc / mu_tau.weight_total;
        residuals.push((direct - pulled).abs());
    }
    Ok(residuals)
}
