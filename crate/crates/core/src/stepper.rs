//! Time integration of the regularized momentum equation
//! `d/dt (u + a^2 A u) + nu A u + B(u) = f(t) + g(t, u_t)`.
//!
//! Both schemes treat the viscous term implicitly and everything else
//! explicitly; because `A` is diagonal on Fourier modes the implicit solve
//! is a per-mode division and the homogeneous amplification factor is below
//! one for every mode and step size.
//!
//! * `Euler`: backward value for the viscous term, forward value for the
//!   explicit part; first order.
//! * `Cnab2`: trapezoid (Crank-Nicolson) viscous term with a two-step
//!   Adams-Bashforth extrapolation of the explicit part; second order, with
//!   a single Euler startup step when no previous explicit part exists.
//!
//! The stepper owns the multi-step phase (the previous explicit part), so
//! evolving in several legs with one stepper instance reproduces a single
//! longer run bit for bit; checkpoints persist the phase to keep restarts
//! exact as well.

use serde::{Deserialize, Serialize};

use crate::delay::{delay_g, DelaySpec, ProcessState};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::params::PhysicalParams;
use crate::spectral::{nonlinear_b, Space, SpectralField};

/// Coefficient magnitude beyond which a run is declared blown up.
pub const BLOWUP_LIMIT: f64 = 1e12;

/// Relative slack allowed when matching times to the step grid.
const TIME_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    Cnab2,
}

/// Per-step diagnostics returned by [`Stepper::step`].
#[derive(Debug, Clone, Copy)]
pub struct StepDiag {
    /// `||g(t, u_t)||_H^2` at the step start.
    pub g_h_sq: f64,
    /// `||(u_next - u) / dt||_V^2` over the step.
    pub deriv_v_sq: f64,
    /// Relative residual of the discrete energy identity for the step.
    pub energy_residual: f64,
}

/// One solution's scalar time series, recorded every step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub dt: f64,
    /// Sample times, `n + 1` entries including the initial one.
    pub times: Vec<f64>,
    /// `||grad u||^2` per sample.
    pub v_sq: Vec<f64>,
    /// `||u||_H^2` per sample.
    pub h_sq: Vec<f64>,
    /// `||A u||^2` per sample.
    pub da_sq: Vec<f64>,
    /// `||f||_{V'}^2` per sample.
    pub f_vdual_sq: Vec<f64>,
    /// `||g(t, u_t)||_H^2` per sample.
    pub g_h_sq: Vec<f64>,
    /// `||(u_next - u)/dt||_V^2` per step (`n` entries).
    pub deriv_v_sq: Vec<f64>,
    /// Worst relative residual of the discrete energy identity.
    pub energy_residual_max: f64,
}

impl RunRecord {
    pub(crate) fn with_capacity(dt: f64, steps: usize) -> RunRecord {
        RunRecord {
            dt,
            times: Vec::with_capacity(steps + 1),
            v_sq: Vec::with_capacity(steps + 1),
            h_sq: Vec::with_capacity(steps + 1),
            da_sq: Vec::with_capacity(steps + 1),
            f_vdual_sq: Vec::with_capacity(steps + 1),
            g_h_sq: Vec::with_capacity(steps + 1),
            deriv_v_sq: Vec::with_capacity(steps),
            energy_residual_max: 0.0,
        }
    }

    pub(crate) fn push_sample(&mut self, t: f64, u: &SpectralField, f_vdual_sq: f64) {
        self.times.push(t);
        self.v_sq.push(u.norm_sq(Space::V));
        self.h_sq.push(u.norm_sq(Space::H));
        self.da_sq.push(u.norm_sq(Space::DA));
        self.f_vdual_sq.push(f_vdual_sq);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("record is never empty")
    }

    /// Index of the sample at time `t` (snapped to the step grid).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0()) / self.dt;
        let i = x.round();
        if (x - i).abs() > TIME_SNAP * (1.0 + x.abs()) || i < 0.0 || i as usize >= self.len() {
            return Err(Error::insufficient(format!(
                "time {t} is not on the recorded grid [{}, {}] step {}",
                self.t0(),
                self.t_end(),
                self.dt
            )));
        }
        Ok(i as usize)
    }

    /// Trapezoid `int_{t_{i0}}^{t_{i1}} series ds`.
    pub fn trapz(&self, series: &[f64], i0: usize, i1: usize) -> f64 {
        assert!(i1 >= i0 && i1 < series.len());
        if i0 == i1 {
            return 0.0;
        }
        let mut acc = 0.5 * (series[i0] + series[i1]);
        for x in &series[i0 + 1..i1] {
            acc += x;
        }
        acc * self.dt
    }

    /// Trapezoid `e^(-sigma t_{i1}) int_{t_{i0}}^{t_{i1}} e^(sigma s) series ds`,
    /// evaluated with shifted exponents so deep windows stay finite.
    pub fn sigma_trapz(&self, series: &[f64], sigma: f64, i0: usize, i1: usize) -> f64 {
        assert!(i1 >= i0 && i1 < series.len());
        if i0 == i1 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in i0..=i1 {
            let w = if i == i0 || i == i1 { 0.5 } else { 1.0 };
            acc += w * (-sigma * (i1 - i) as f64 * self.dt).exp() * series[i];
        }
        acc * self.dt
    }

    /// Max of a series over the inclusive sample range.
    pub fn window_max(&self, series: &[f64], i0: usize, i1: usize) -> f64 {
        series[i0..=i1].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `int_{t_{i0}}^{t_{i1}} ||du/ds||_V^2 ds` from the per-step derivative
    /// series (the discrete derivative is constant on each step, so the
    /// rectangle sum is the exact integral of the interpolant).
    pub fn deriv_v_integral(&self, i0: usize, i1: usize) -> f64 {
        assert!(i1 >= i0 && i1 <= self.deriv_v_sq.len());
        self.deriv_v_sq[i0..i1].iter().sum::<f64>() * self.dt
    }
}

/// Difference diagnostics for two solutions of the same system advanced in
/// lockstep.
#[derive(Debug, Clone)]
pub struct PairRecord {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `||grad (u_a - u_b)||^2` per sample.
    pub diff_v_sq: Vec<f64>,
    /// `||u_a - u_b||_H^2` per sample.
    pub diff_h_sq: Vec<f64>,
    /// `||grad u_a||^2` per sample.
    pub a_v_sq: Vec<f64>,
    /// `||grad u_b||^2` per sample.
    pub b_v_sq: Vec<f64>,
}

impl PairRecord {
    fn push(&mut self, t: f64, a: &SpectralField, b: &SpectralField) {
        let d = a - b;
        self.times.push(t);
        self.diff_v_sq.push(d.norm_sq(Space::V));
        self.diff_h_sq.push(d.norm_sq(Space::H));
        self.a_v_sq.push(a.norm_sq(Space::V));
        self.b_v_sq.push(b.norm_sq(Space::V));
    }
}

/// IMEX integrator holding the physics, the forces, and the multi-step phase.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: PhysicalParams,
    forcing: Forcing,
    delay: DelaySpec,
    scheme: Scheme,
    include_convection: bool,
    /// Explicit part from the previous step (Adams-Bashforth memory).
    e_prev: Option<SpectralField>,
}

impl Stepper {
    pub fn new(
        params: PhysicalParams,
        forcing: Forcing,
        delay: DelaySpec,
        scheme: Scheme,
    ) -> Result<Stepper> {
        params.validate()?;
        delay.validate(params.h)?;
        Ok(Stepper { params, forcing, delay, scheme, include_convection: true, e_prev: None })
    }

    /// Disables the quadratic convection term; the system becomes linear,
    /// which the decomposition fixtures use to make superposition exact.
    pub fn with_convection(mut self, on: bool) -> Stepper {
        self.include_convection = on;
        self
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn delay(&self) -> &DelaySpec {
        &self.delay
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn convection_enabled(&self) -> bool {
        self.include_convection
    }

    /// Multi-step memory, for checkpointing.
    pub fn phase(&self) -> Option<&SpectralField> {
        self.e_prev.as_ref()
    }

    /// Restores multi-step memory from a checkpoint (or clears it).
    pub fn restore_phase(&mut self, e_prev: Option<SpectralField>) {
        self.e_prev = e_prev;
    }

    /// Builds the initial process state on the step grid: `dt` must divide
    /// the memory span `h` to machine precision.
    pub fn initial_state(
        &self,
        u0: SpectralField,
        tau: f64,
        dt: f64,
        phi: impl Fn(f64) -> SpectralField,
    ) -> Result<ProcessState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {dt}")));
        }
        if u0.grid() != self.forcing.grid() {
            return Err(Error::config("initial state grid does not match forcing grid"));
        }
        let ratio = self.params.h / dt;
        let slots = ratio.round();
        if (ratio - slots).abs() > TIME_SNAP * ratio || slots < 1.0 {
            return Err(Error::config(format!(
                "dt = {dt} does not divide the memory span h = {}",
                self.params.h
            )));
        }
        ProcessState::from_initial(u0, tau, dt, slots as usize + 1, phi)
    }

    /// Explicit part `E(t, u_t) = f(t) + g(t, u_t) [+ extra] - B(u)` and the
    /// squared H-norm of the delay term.
    fn explicit_part(
        &self,
        state: &ProcessState,
        extra: Option<&SpectralField>,
    ) -> Result<(SpectralField, f64)> {
        let t = state.t();
        let mut e = self.forcing.eval(t);
        let g = delay_g(&self.delay, state.history(), t)?;
        let g_h_sq = g.norm_sq(Space::H);
        e.add_scaled_mut(&g, 1.0);
        if let Some(x) = extra {
            e.add_scaled_mut(x, 1.0);
        }
        if self.include_convection {
            let b = nonlinear_b(state.u())?;
            e.add_scaled_mut(&b, -1.0);
        }
        Ok((e, g_h_sq))
    }

    /// Advances one step of size `state.dt()`.
    pub fn step(&mut self, state: &mut ProcessState) -> Result<StepDiag> {
        self.step_with_extra(state, None)
    }

    /// Advances one step with an additional explicit field (used by the
    /// decomposition runs to inject a delay term evaluated on a parent
    /// solution's history).
    pub fn step_with_extra(
        &mut self,
        state: &mut ProcessState,
        extra: Option<&SpectralField>,
    ) -> Result<StepDiag> {
        let dt = state.dt();
        let grid = state.grid();
        if (state.history().span() - self.params.h).abs() > TIME_SNAP * self.params.h {
            return Err(Error::config(format!(
                "state history spans {} but the system memory is h = {}",
                state.history().span(),
                self.params.h
            )));
        }
        let (e_now, g_h_sq) = self.explicit_part(state, extra)?;

        // Scheme selection: CNAB2 needs one Euler startup step.
        let use_cn = self.scheme == Scheme::Cnab2 && self.e_prev.is_some();
        let u = state.u();
        let mc = grid.mode_count();
        let mut next = SpectralField::zeros(grid);
        {
            let uc = u.coeffs();
            let ec = e_now.coeffs();
            let ep = self.e_prev.as_ref().map(|f| f.coeffs());
            let nc = next.coeffs_mut();
            for idx in 0..mc {
                let ksq = grid.kappa_sq(idx);
                let m = self.params.voigt_mass(ksq);
                let visc = self.params.nu * ksq;
                for c in 0..grid.dim() {
                    let j = c * mc + idx;
                    nc[j] = if use_cn {
                        let e_comb = 1.5 * ec[j] - 0.5 * ep.expect("checked use_cn")[j];
                        ((m - 0.5 * visc * dt) * uc[j] + dt * e_comb) / (m + 0.5 * visc * dt)
                    } else {
                        (m * uc[j] + dt * ec[j]) / (m + visc * dt)
                    };
                }
            }
        }

        if !next.is_finite() || next.max_abs() > BLOWUP_LIMIT {
            return Err(Error::BlowUp {
                time: state.t() + dt,
                detail: format!("coefficient magnitude exceeded {BLOWUP_LIMIT:e}"),
            });
        }

        let diag = self.step_diagnostics(state.u(), &next, &e_now, dt, use_cn).with_g(g_h_sq);

        if self.scheme == Scheme::Cnab2 {
            self.e_prev = Some(e_now);
        }
        state.history_mut().push(next);
        Ok(diag)
    }

    /// Residual of the discrete energy identity
    /// `d/dt (||u||_H^2 + a^2 ||u||_V^2)/2 + nu <u_visc, u_avg>_V = <E, u_avg>_H`
    /// where `u_visc` and `E` are the scheme's implicit argument and explicit
    /// combination.  The identity is algebraically exact per step, so the
    /// relative residual measures only round-off.
    fn step_diagnostics(
        &self,
        u: &SpectralField,
        next: &SpectralField,
        e_now: &SpectralField,
        dt: f64,
        use_cn: bool,
    ) -> StepDiag {
        let a2 = self.params.alpha * self.params.alpha;
        let mut u_avg = u.scaled(0.5);
        u_avg.add_scaled_mut(next, 0.5);

        let voigt_next = next.norm_sq(Space::H) + a2 * next.norm_sq(Space::V);
        let voigt_now = u.norm_sq(Space::H) + a2 * u.norm_sq(Space::V);
        let rate = (voigt_next - voigt_now) / (2.0 * dt);

        let (visc, pump) = if use_cn {
            let e_prev = self.e_prev.as_ref().expect("checked use_cn");
            let mut e_comb = e_now.scaled(1.5);
            e_comb.add_scaled_mut(e_prev, -0.5);
            (self.params.nu * u_avg.norm_sq(Space::V), e_comb.inner(Space::H, &u_avg))
        } else {
            (
                self.params.nu * next.inner(Space::V, &u_avg),
                e_now.inner(Space::H, &u_avg),
            )
        };
        let scale = rate.abs().max(visc.abs()).max(pump.abs()).max(1.0);
        let energy_residual = (rate + visc - pump).abs() / scale;

        let diff = next - u;
        StepDiag {
            g_h_sq: 0.0, // filled by the caller
            deriv_v_sq: diff.norm_sq(Space::V) / (dt * dt),
            energy_residual,
        }
    }

    /// Advances `steps` steps, recording scalar series along the way.
    pub fn evolve(&mut self, state: &mut ProcessState, steps: usize) -> Result<RunRecord> {
        let mut record = RunRecord::with_capacity(state.dt(), steps);
        record.push_sample(
            state.t(),
            state.u(),
            self.forcing.norm_sq_at(Space::VDual, state.t()),
        );
        for _ in 0..steps {
            let diag = self.step(state)?;
            record.g_h_sq.push(diag.g_h_sq);
            record.deriv_v_sq.push(diag.deriv_v_sq);
            record.energy_residual_max = record.energy_residual_max.max(diag.energy_residual);
            record.push_sample(
                state.t(),
                state.u(),
                self.forcing.norm_sq_at(Space::VDual, state.t()),
            );
        }
        // The delay term at the final time is not consumed by any step, so
        // close the series with one extra evaluation.
        let g_end = delay_g(&self.delay, state.history(), state.t())?;
        record.g_h_sq.push(g_end.norm_sq(Space::H));
        Ok(record)
    }

    /// Advances two solutions of the same system in lockstep, recording
    /// difference diagnostics.  Each solution keeps its own multi-step phase.
    pub fn evolve_pair(
        a: &mut Stepper,
        state_a: &mut ProcessState,
        b: &mut Stepper,
        state_b: &mut ProcessState,
        steps: usize,
    ) -> Result<PairRecord> {
        let mut record = PairRecord {
            dt: state_a.dt(),
            times: Vec::with_capacity(steps + 1),
            diff_v_sq: Vec::with_capacity(steps + 1),
            diff_h_sq: Vec::with_capacity(steps + 1),
            a_v_sq: Vec::with_capacity(steps + 1),
            b_v_sq: Vec::with_capacity(steps + 1),
        };
        record.push(state_a.t(), state_a.u(), state_b.u());
        for _ in 0..steps {
            a.step(state_a)?;
            b.step(state_b)?;
            record.push(state_a.t(), state_a.u(), state_b.u());
        }
        Ok(record)
    }
}

impl StepDiag {
    fn with_g(mut self, g_h_sq: f64) -> StepDiag {
        self.g_h_sq = g_h_sq;
        self
    }
}
