//! External body forces `f(t) = a(t) * profile` with closed-form
//! exponentially weighted integrals.
//!
//! The spatial profile is a fixed divergence-free field; the scalar
//! amplitude `a(t)` selects the time dependence.  Keeping the two separate
//! means every integral the certificates need — sliding windows
//! `e^(-sigma t) int_tau^t e^(sigma s) ||f||^2 ds`, their infinite-past
//! tails, and plain L^2 windows — reduces to a closed form in `a` times a
//! fixed squared norm of the profile, evaluated without quadrature error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, ModeSeed, Space, SpectralField};

/// Scalar time amplitude `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Amplitude {
    Zero,
    Constant { value: f64 },
    /// `a(t) = mean + amp * cos(omega * t)`.
    Periodic { mean: f64, amp: f64, omega: f64 },
    /// `a(t) = scale * exp(rate * t)`; `rate < 0` decays toward the future,
    /// `rate > 0` grows (tempered in the past), either way the pullback
    /// integrals below stay explicit.
    ExpRamp { scale: f64, rate: f64 },
}

impl Amplitude {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Amplitude::Zero => true,
            Amplitude::Constant { value } => value.is_finite(),
            Amplitude::Periodic { mean, amp, omega } => {
                mean.is_finite() && amp.is_finite() && omega.is_finite() && *omega != 0.0
            }
            Amplitude::ExpRamp { scale, rate } => scale.is_finite() && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("bad forcing amplitude {self:?}")))
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Amplitude::Zero => 0.0,
            Amplitude::Constant { value } => *value,
            Amplitude::Periodic { mean, amp, omega } => mean + amp * (omega * t).cos(),
            Amplitude::ExpRamp { scale, rate } => scale * (rate * t).exp(),
        }
    }

    /// True when `a` does not depend on `t`.
    pub fn is_autonomous(&self) -> bool {
        matches!(self, Amplitude::Zero | Amplitude::Constant { .. })
    }

    /// `e^(-sigma t) int_tau^t e^(sigma s) a(s)^2 ds`, exact.
    pub fn sq_sigma_window(&self, tau: f64, t: f64, sigma: f64) -> f64 {
        debug_assert!(sigma > 0.0 && t >= tau);
        match self {
            Amplitude::Zero => 0.0,
            Amplitude::Constant { value } => {
                value * value * (1.0 - (-sigma * (t - tau)).exp()) / sigma
            }
            Amplitude::Periodic { mean, amp, omega } => {
                // a^2 = (m^2 + a^2/2) + 2 m a cos(w s) + (a^2/2) cos(2 w s).
                let decay = (-sigma * (t - tau)).exp();
                let dc = (mean * mean + 0.5 * amp * amp) * (1.0 - decay) / sigma;
                dc + 2.0 * mean * amp * cos_sigma_window(tau, t, sigma, *omega)
                    + 0.5 * amp * amp * cos_sigma_window(tau, t, sigma, 2.0 * omega)
            }
            Amplitude::ExpRamp { scale, rate } => {
                let c2 = scale * scale;
                let p = sigma + 2.0 * rate;
                if p.abs() < 1e-14 {
                    c2 * (2.0 * rate * t).exp() * (t - tau)
                } else {
                    c2 * ((2.0 * rate * t).exp() - (-sigma * (t - tau) + 2.0 * rate * tau).exp())
                        / p
                }
            }
        }
    }

    /// `e^(-sigma t) int_{-inf}^t e^(sigma s) a(s)^2 ds`; errors when the
    /// past tail diverges.
    pub fn sq_sigma_tail(&self, t: f64, sigma: f64) -> Result<f64> {
        debug_assert!(sigma > 0.0);
        match self {
            Amplitude::Zero => Ok(0.0),
            Amplitude::Constant { value } => Ok(value * value / sigma),
            Amplitude::Periodic { mean, amp, omega } => {
                let dc = (mean * mean + 0.5 * amp * amp) / sigma;
                Ok(dc
                    + 2.0 * mean * amp * cos_sigma_tail(t, sigma, *omega)
                    + 0.5 * amp * amp * cos_sigma_tail(t, sigma, 2.0 * omega))
            }
            Amplitude::ExpRamp { scale, rate } => {
                let p = sigma + 2.0 * rate;
                if p <= 0.0 {
                    return Err(Error::infeasible(format!(
                        "forcing grows too fast into the past: sigma + 2 rate = {p} <= 0"
                    )));
                }
                Ok(scale * scale * (2.0 * rate * t).exp() / p)
            }
        }
    }

    /// `int_{t0}^{t1} a(s)^2 ds`, exact.
    pub fn sq_window(&self, t0: f64, t1: f64) -> f64 {
        debug_assert!(t1 >= t0);
        match self {
            Amplitude::Zero => 0.0,
            Amplitude::Constant { value } => value * value * (t1 - t0),
            Amplitude::Periodic { mean, amp, omega } => {
                let dc = (mean * mean + 0.5 * amp * amp) * (t1 - t0);
                let c1 = ((omega * t1).sin() - (omega * t0).sin()) / omega;
                let c2 = ((2.0 * omega * t1).sin() - (2.0 * omega * t0).sin()) / (2.0 * omega);
                dc + 2.0 * mean * amp * c1 + 0.5 * amp * amp * c2
            }
            Amplitude::ExpRamp { scale, rate } => {
                let c2 = scale * scale;
                if rate.abs() < 1e-14 {
                    c2 * (t1 - t0)
                } else {
                    c2 * ((2.0 * rate * t1).exp() - (2.0 * rate * t0).exp()) / (2.0 * rate)
                }
            }
        }
    }

    /// Upper bound for `sup |a|` over `[t0, t1]`.
    pub fn sup_abs(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Amplitude::Zero => 0.0,
            Amplitude::Constant { value } => value.abs(),
            Amplitude::Periodic { mean, amp, .. } => mean.abs() + amp.abs(),
            Amplitude::ExpRamp { scale, rate } => {
                scale.abs() * (rate * t0).exp().max((rate * t1).exp())
            }
        }
    }
}

/// `e^(-sigma t) int_tau^t e^(sigma s) cos(omega s) ds`.
fn cos_sigma_window(tau: f64, t: f64, sigma: f64, omega: f64) -> f64 {
    let d = sigma * sigma + omega * omega;
    let head = sigma * (omega * t).cos() + omega * (omega * t).sin();
    let tail = sigma * (omega * tau).cos() + omega * (omega * tau).sin();
    (head - (-sigma * (t - tau)).exp() * tail) / d
}

/// `e^(-sigma t) int_{-inf}^t e^(sigma s) cos(omega s) ds`.
fn cos_sigma_tail(t: f64, sigma: f64, omega: f64) -> f64 {
    (sigma * (omega * t).cos() + omega * (omega * t).sin()) / (sigma * sigma + omega * omega)
}

/// Body force `f(t) = a(t) * profile` with a divergence-free profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    profile: SpectralField,
    amplitude: Amplitude,
}

impl Forcing {
    /// Builds a force from a raw profile; the profile is Leray projected so
    /// the force is always divergence-free and mean-free.
    pub fn new(mut profile: SpectralField, amplitude: Amplitude) -> Result<Forcing> {
        amplitude.validate()?;
        profile.project_mut();
        profile.symmetrize_mut();
        Ok(Forcing { profile, amplitude })
    }

    pub fn zero(grid: Grid) -> Forcing {
        Forcing { profile: SpectralField::zeros(grid), amplitude: Amplitude::Zero }
    }

    pub fn from_modes(grid: Grid, seeds: &[ModeSeed], amplitude: Amplitude) -> Result<Forcing> {
        Forcing::new(SpectralField::from_modes(grid, seeds)?, amplitude)
    }

    pub fn grid(&self) -> Grid {
        self.profile.grid()
    }

    pub fn profile(&self) -> &SpectralField {
        &self.profile
    }

    pub fn amplitude(&self) -> Amplitude {
        self.amplitude
    }

    pub fn is_autonomous(&self) -> bool {
        self.amplitude.is_autonomous()
    }

    /// `f(t)` as a field.
    pub fn eval(&self, t: f64) -> SpectralField {
        self.profile.scaled(self.amplitude.eval(t))
    }

    /// `||f(t)||^2` in the given space.
    pub fn norm_sq_at(&self, space: Space, t: f64) -> f64 {
        let a = self.amplitude.eval(t);
        a * a * self.profile.norm_sq(space)
    }

    /// `e^(-sigma t) int_tau^t e^(sigma s) ||f(s)||^2 ds`, exact.
    pub fn sigma_window(&self, space: Space, tau: f64, t: f64, sigma: f64) -> f64 {
        self.profile.norm_sq(space) * self.amplitude.sq_sigma_window(tau, t, sigma)
    }

    /// Infinite-past tail `e^(-sigma t) int_{-inf}^t e^(sigma s) ||f(s)||^2 ds`.
    pub fn sigma_tail(&self, space: Space, t: f64, sigma: f64) -> Result<f64> {
        Ok(self.profile.norm_sq(space) * self.amplitude.sq_sigma_tail(t, sigma)?)
    }

    /// `int_{t0}^{t1} ||f(s)||^2 ds`, exact.
    pub fn l2_window(&self, space: Space, t0: f64, t1: f64) -> f64 {
        self.profile.norm_sq(space) * self.amplitude.sq_window(t0, t1)
    }

    /// Upper bound for `sup_{[t0,t1]} ||f||` in the given space.
    pub fn sup_norm(&self, space: Space, t0: f64, t1: f64) -> f64 {
        self.profile.norm(space) * self.amplitude.sup_abs(t0, t1)
    }

    /// Splits the force into a spectrally smooth part and a small remainder:
    /// returns `(f_smooth, cut)` where `f_smooth` keeps profile modes with
    /// `|k| <= cut` and the remainder obeys
    /// `sup_{[t0,t1]} ||f - f_smooth||_{V'} < xi`.  The cut radius is the
    /// smallest integer that achieves the bound.
    pub fn smooth_split(&self, xi: f64, t0: f64, t1: f64) -> Result<(Forcing, i64)> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::config(format!("smoothness budget must be positive, got {xi}")));
        }
        let sup_a = self.amplitude.sup_abs(t0, t1);
        let grid = self.grid();
        let kmax = grid.kmax();
        for cut in 0..=kmax {
            let smooth = self.truncated_profile(cut);
            let tail = (&self.profile - &smooth).norm(Space::VDual);
            if sup_a * tail < xi {
                return Ok((
                    Forcing { profile: smooth, amplitude: self.amplitude },
                    cut,
                ));
            }
        }
        // The full profile always leaves a zero tail, so this is unreachable
        // unless xi is subnormal relative to the force.
        Err(Error::infeasible(format!(
            "no spectral cut meets the smoothness budget {xi}"
        )))
    }

    /// Profile with modes `|k| > cut` removed.
    fn truncated_profile(&self, cut: i64) -> SpectralField {
        let grid = self.grid();
        let cut_sq = cut * cut;
        let mut out = self.profile.clone();
        let mc = grid.mode_count();
        for idx in 0..mc {
            if grid.ksq_int(idx) > cut_sq {
                for c in 0..grid.dim() {
                    out.coeffs_mut()[c * mc + idx] = num_complex::Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }
}
