//! History segments, process states, delay operators, and the feasibility
//! window for the exponential-decay parameters.
//!
//! A trajectory's recent past is kept as uniformly spaced slots spanning
//! `[t - h, t]`; the newest slot *is* the current velocity, so the pair
//! `(u(t), u_t)` is one buffer.  Slot times are derived from an anchor time
//! plus an integer step index, never accumulated, which keeps composed
//! evolutions and checkpoint restarts bit-exact.
//!
//! The delay operator `g(t, u_t) = gain * <kind-specific average of G(u)>`
//! supports a discrete lag `h`, a time-varying lag `tau(t)`, and a
//! distributed kernel over `[-h, 0]`.  `G` is a pointwise velocity map with
//! `G(0) = 0` and a known Lipschitz constant, so `g(t, 0) = 0` and `g` is
//! globally Lipschitz in the history with constant `lipschitz_bound`.
//!
//! [`check_hypotheses`] validates a decay rate `sigma` and splitting weight
//! `beta` against the admissible intervals that make the energy-decay
//! machinery work, and derives the margin coefficients `eta1..eta6` the
//! certificates consume.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::spectral::{self, Grid, Space, SpectralField};

// ==================================================================
// History segments and process states
// ==================================================================

/// Uniformly spaced trajectory slots spanning the last `h` time units.
///
/// Slot `i` holds the velocity at `anchor + (newest_index - (len - 1 - i)) * dt`;
/// the newest slot (index `len - 1`) is the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    grid: Grid,
    dt: f64,
    anchor: f64,
    newest_index: i64,
    slots: VecDeque<SpectralField>,
}

impl HistorySegment {
    /// Builds a segment from a time-indexed field map; `slot_count` includes
    /// the newest slot, so the span is `(slot_count - 1) * dt`.
    pub fn from_fn(
        grid: Grid,
        dt: f64,
        slot_count: usize,
        anchor: f64,
        newest_index: i64,
        field_at: impl Fn(f64) -> SpectralField,
    ) -> Result<HistorySegment> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {dt}")));
        }
        if slot_count < 2 {
            return Err(Error::config("history needs at least 2 slots"));
        }
        let mut slots = VecDeque::with_capacity(slot_count);
        for i in 0..slot_count {
            let idx = newest_index - (slot_count - 1 - i) as i64;
            let t = anchor + idx as f64 * dt;
            let f = field_at(t);
            if f.grid() != grid {
                return Err(Error::config("history field grid mismatch"));
            }
            slots.push_back(f);
        }
        Ok(HistorySegment { grid, dt, anchor, newest_index, slots })
    }

    /// Builds a segment directly from stored slots (oldest first); used to
    /// reconstruct checkpointed states bit for bit.
    pub fn from_slots(
        grid: Grid,
        dt: f64,
        anchor: f64,
        newest_index: i64,
        slots: Vec<SpectralField>,
    ) -> Result<HistorySegment> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {dt}")));
        }
        if slots.len() < 2 {
            return Err(Error::config("history needs at least 2 slots"));
        }
        if slots.iter().any(|f| f.grid() != grid) {
            return Err(Error::config("history field grid mismatch"));
        }
        Ok(HistorySegment { grid, dt, anchor, newest_index, slots: slots.into() })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Covered span `h = (slot_count - 1) * dt`.
    pub fn span(&self) -> f64 {
        (self.slots.len() - 1) as f64 * self.dt
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn newest_index(&self) -> i64 {
        self.newest_index
    }

    pub fn newest_time(&self) -> f64 {
        self.anchor + self.newest_index as f64 * self.dt
    }

    /// Time-translated copy: identical slots observed `delta` later.  Only
    /// meaningful for autonomous systems, where trajectories are invariant
    /// under time translation.
    pub fn shifted(&self, delta: f64) -> HistorySegment {
        HistorySegment { anchor: self.anchor + delta, ..self.clone() }
    }

    pub fn slot_time(&self, i: usize) -> f64 {
        let idx = self.newest_index - (self.slots.len() - 1 - i) as i64;
        self.anchor + idx as f64 * self.dt
    }

    pub fn slot(&self, i: usize) -> &SpectralField {
        &self.slots[i]
    }

    pub fn newest(&self) -> &SpectralField {
        self.slots.back().expect("history is never empty")
    }

    pub fn oldest(&self) -> &SpectralField {
        self.slots.front().expect("history is never empty")
    }

    /// Advances the segment: drops the oldest slot, appends the new field.
    pub fn push(&mut self, field: SpectralField) {
        debug_assert_eq!(field.grid(), self.grid);
        self.slots.pop_front();
        self.slots.push_back(field);
        self.newest_index += 1;
    }

    /// Value at lag `theta in [-span, 0]`, linearly interpolated between
    /// slots; exact (no interpolation noise) within `1e-9 * dt` of a slot.
    pub fn eval(&self, theta: f64) -> Result<SpectralField> {
        let span = self.span();
        if !(-span - 1e-9 * self.dt..=1e-9 * self.dt).contains(&theta) {
            return Err(Error::config(format!(
                "history lag {theta} outside [-{span}, 0]"
            )));
        }
        let x = (theta + span) / self.dt;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            let i = (nearest as usize).min(self.slots.len() - 1);
            return Ok(self.slots[i].clone());
        }
        let i0 = (x.floor() as usize).min(self.slots.len() - 2);
        let w = x - i0 as f64;
        let mut out = self.slots[i0].scaled(1.0 - w);
        out.add_scaled_mut(&self.slots[i0 + 1], w);
        Ok(out)
    }

    /// Trapezoid quadrature of `weight(field)` over the span.
    pub fn integrate(&self, mut weight: impl FnMut(&SpectralField) -> f64) -> f64 {
        let n = self.slots.len();
        let mut acc = 0.0;
        for (i, s) in self.slots.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += w * weight(s);
        }
        acc * self.dt
    }
}

/// A point of the delay dynamical system: current velocity plus its history
/// segment, packaged so the newest slot and the velocity cannot disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessState {
    history: HistorySegment,
}

impl ProcessState {
    pub fn new(history: HistorySegment) -> ProcessState {
        ProcessState { history }
    }

    /// State at time `tau` with velocity `u0` and history `phi(t)` for
    /// `t in [tau - h, tau)`; the newest slot is `u0` itself.
    pub fn from_initial(
        u0: SpectralField,
        tau: f64,
        dt: f64,
        slot_count: usize,
        phi: impl Fn(f64) -> SpectralField,
    ) -> Result<ProcessState> {
        let grid = u0.grid();
        let history = HistorySegment::from_fn(grid, dt, slot_count, tau, 0, |t| {
            if t >= tau {
                u0.clone()
            } else {
                phi(t)
            }
        })?;
        Ok(ProcessState { history })
    }

    pub fn grid(&self) -> Grid {
        self.history.grid()
    }

    pub fn t(&self) -> f64 {
        self.history.newest_time()
    }

    pub fn dt(&self) -> f64 {
        self.history.dt()
    }

    pub fn u(&self) -> &SpectralField {
        self.history.newest()
    }

    pub fn history(&self) -> &HistorySegment {
        &self.history
    }

    pub fn history_mut(&mut self) -> &mut HistorySegment {
        &mut self.history
    }

    /// Time-translated copy; see [`HistorySegment::shifted`].
    pub fn shifted(&self, delta: f64) -> ProcessState {
        ProcessState { history: self.history.shifted(delta) }
    }

    /// Squared energy-space norm: `||grad u(t)||^2` plus the trapezoid
    /// integral of `||grad u||^2` over the history span.
    pub fn ev2_norm_sq(&self) -> f64 {
        self.u().norm_sq(Space::V) + self.history.integrate(|f| f.norm_sq(Space::V))
    }

    /// Squared regularity-space norm: same shape with `||A u||^2`.
    pub fn eda2_norm_sq(&self) -> f64 {
        self.u().norm_sq(Space::DA) + self.history.integrate(|f| f.norm_sq(Space::DA))
    }

    /// Squared energy-space distance between two states with aligned slots.
    pub fn ev2_distance_sq(&self, other: &ProcessState) -> Result<f64> {
        self.check_aligned(other)?;
        let n = self.history.slot_count();
        let mut hist = 0.0;
        for i in 0..n {
            let d = self.history.slot(i) - other.history.slot(i);
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            hist += w * d.norm_sq(Space::V);
        }
        let du = self.u() - other.u();
        Ok(du.norm_sq(Space::V) + hist * self.history.dt())
    }

    fn check_aligned(&self, other: &ProcessState) -> Result<()> {
        if self.grid() != other.grid() {
            return Err(Error::config("state grids differ"));
        }
        if self.history.slot_count() != other.history.slot_count()
            || (self.history.dt() - other.history.dt()).abs() > 1e-12 * self.history.dt()
        {
            return Err(Error::config("state history grids differ"));
        }
        if (self.t() - other.t()).abs() > 1e-9 * (1.0 + self.t().abs()) {
            return Err(Error::config(format!(
                "states are at different times: {} vs {}",
                self.t(),
                other.t()
            )));
        }
        Ok(())
    }
}

// ==================================================================
// Pointwise maps and delay operators
// ==================================================================

/// Pointwise velocity map `G` with `G(0) = 0` and known Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GMap {
    /// `G(v) = v`, Lipschitz 1.
    Identity,
    /// `G(v) = factor * v`, Lipschitz `|factor|`.
    Scale { factor: f64 },
    /// Componentwise `G(v) = s * tanh(v / s)`, Lipschitz 1; saturates at
    /// amplitude `s` and acts on collocation values.
    TanhSat { saturation: f64 },
}

impl GMap {
    pub fn lipschitz(&self) -> f64 {
        match self {
            GMap::Identity => 1.0,
            GMap::Scale { factor } => factor.abs(),
            GMap::TanhSat { .. } => 1.0,
        }
    }

    /// Applies the map; output is mean-free and conjugate symmetric but not
    /// yet Leray projected.
    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        match self {
            GMap::Identity => u.clone(),
            GMap::Scale { factor } => u.scaled(*factor),
            GMap::TanhSat { saturation } => {
                let s = *saturation;
                spectral::map_pointwise(u, |v| s * (v / s).tanh())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let GMap::TanhSat { saturation } = self {
            if !(saturation.is_finite() && *saturation > 0.0) {
                return Err(Error::config("tanh saturation must be positive"));
            }
        }
        Ok(())
    }
}

/// Time-varying lag `tau(t)` for the variable-delay kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauFn {
    Constant { value: f64 },
    /// `tau(t) = mean + amp * sin(omega * t)`.
    Sinusoidal { mean: f64, amp: f64, omega: f64 },
}

impl TauFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TauFn::Constant { value } => *value,
            TauFn::Sinusoidal { mean, amp, omega } => mean + amp * (omega * t).sin(),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            TauFn::Constant { value } => (*value, *value),
            TauFn::Sinusoidal { mean, amp, .. } => (mean - amp.abs(), mean + amp.abs()),
        }
    }
}

/// Delay evaluation kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayKind {
    /// `G(u(t - h))`.
    Discrete,
    /// `G(u(t - tau(t)))` with `tau(t) in [0, h]`.
    Variable { tau: TauFn },
    /// Trapezoid average `int_{-h}^0 kernel(theta) G(u(t + theta)) dtheta`
    /// with nonnegative kernel samples on the history slot grid.
    Distributed { kernel: Vec<f64> },
}

/// Full delay-term specification: `g(t, u_t) = gain * <kind average of G>`,
/// Leray projected onto the divergence-free subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySpec {
    pub kind: DelayKind,
    pub gain: f64,
    pub g: GMap,
}

impl Default for DelaySpec {
    fn default() -> DelaySpec {
        DelaySpec::none()
    }
}

impl DelaySpec {
    /// A zero delay term (gain 0); `g(t, u_t) = 0`.
    pub fn none() -> DelaySpec {
        DelaySpec { kind: DelayKind::Discrete, gain: 0.0, g: GMap::Identity }
    }

    pub fn validate(&self, h: f64) -> Result<()> {
        self.g.validate()?;
        if !self.gain.is_finite() {
            return Err(Error::config("delay gain must be finite"));
        }
        match &self.kind {
            DelayKind::Discrete => {}
            DelayKind::Variable { tau } => {
                let (lo, hi) = tau.range();
                if lo < 0.0 || hi > h + 1e-12 {
                    return Err(Error::config(format!(
                        "variable lag range [{lo}, {hi}] leaves [0, {h}]"
                    )));
                }
            }
            DelayKind::Distributed { kernel } => {
                if kernel.len() < 2 {
                    return Err(Error::config("distributed kernel needs >= 2 samples"));
                }
                if kernel.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                    return Err(Error::config("distributed kernel samples must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Kernel mass `int_{-h}^0 kernel` (trapezoid), 1 for the pointwise kinds.
    pub fn kernel_mass(&self, h: f64) -> f64 {
        match &self.kind {
            DelayKind::Distributed { kernel } => {
                let n = kernel.len();
                let dtheta = h / (n - 1) as f64;
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    acc += w * k;
                }
                acc * dtheta
            }
            _ => 1.0,
        }
    }

    /// Lipschitz constant of `u_t -> g(t, u_t)` from the sup of `||.||_H`
    /// over the segment: `|gain| * L_G` scaled by the kernel mass for the
    /// distributed kind.
    pub fn lipschitz_bound(&self, h: f64) -> f64 {
        self.gain.abs() * self.g.lipschitz() * self.kernel_mass(h)
    }

    /// Whether the delay operator has no explicit time dependence (the lag
    /// schedule is the only possible source).
    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            DelayKind::Variable { tau } => matches!(tau, TauFn::Constant { .. }),
            _ => true,
        }
    }
}

/// Evaluates the delay term `g(t, u_t)` on a history segment.  The result
/// is divergence-free, mean-free, and conjugate symmetric.
pub fn delay_g(spec: &DelaySpec, history: &HistorySegment, t: f64) -> Result<SpectralField> {
    let grid = history.grid();
    if spec.gain == 0.0 {
        return Ok(SpectralField::zeros(grid));
    }
    debug_assert!(
        (t - history.newest_time()).abs() < 1e-9 * (1.0 + t.abs()),
        "delay evaluated away from the segment head"
    );
    let mut out = match &spec.kind {
        DelayKind::Discrete => spec.g.apply(&history.eval(-history.span())?),
        DelayKind::Variable { tau } => {
            let lag = tau.eval(t);
            if !(0.0..=history.span() + 1e-9).contains(&lag) {
                return Err(Error::config(format!(
                    "variable lag {lag} at t = {t} leaves [0, {}]",
                    history.span()
                )));
            }
            spec.g.apply(&history.eval(-lag)?)
        }
        DelayKind::Distributed { kernel } => {
            if kernel.len() != history.slot_count() {
                return Err(Error::config(format!(
                    "distributed kernel has {} samples but history has {} slots",
                    kernel.len(),
                    history.slot_count()
                )));
            }
            let n = kernel.len();
            let dtheta = history.dt();
            let mut acc = SpectralField::zeros(grid);
            for (i, k) in kernel.iter().enumerate() {
                if *k == 0.0 {
                    continue;
                }
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                acc.add_scaled_mut(&spec.g.apply(history.slot(i)), w * k * dtheta);
            }
            acc
        }
    };
    out.scale_mut(spec.gain);
    out.project_mut();
    out.symmetrize_mut();
    Ok(out)
}

// ==================================================================
// Hypothesis window
// ==================================================================

/// Validated decay parameters with their admissible intervals and the
/// derived margin coefficients.
///
/// `eta1` is the energy-decay margin, `eta2` the contraction margin (equal
/// to `eta1` exactly when the delay is absent), `eta5`/`eta6` the margins of
/// the regularity estimates, reported with positivity flags because desk
/// parameter sets routinely leave them negative without invalidating the
/// energy-level machinery.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HypothesisWindow {
    pub sigma: f64,
    pub beta: f64,
    /// Integral-certificate delay constant `lipschitz_bound * sqrt(1/lambda1 + 1)`.
    pub c_g: f64,
    /// Raw history-to-H Lipschitz constant of `g`.
    pub l_g: f64,
    pub sigma_max: f64,
    pub beta_max: f64,
    /// Upper end of the admissible delay-constant interval at this `sigma`;
    /// infinite when the delay is absent (`c_g = 0`).
    pub cg_max: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta5: f64,
    pub eta6: f64,
    pub eta5_positive: bool,
    pub eta6_positive: bool,
    /// True when `c_g = 0`: the delay places no constraint on the window.
    pub delay_free: bool,
}

/// Checks `(sigma, beta)` against the admissible intervals for the given
/// physics and delay specification.  Violations are reported in a fixed
/// order: the delay constant first, then `sigma`, then `beta`, then the
/// margin positivity.
pub fn check_hypotheses(
    params: &PhysicalParams,
    spec: &DelaySpec,
    sigma: f64,
    beta: f64,
) -> Result<HypothesisWindow> {
    params.validate()?;
    spec.validate(params.h)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::config(format!("beta must be positive, got {beta}")));
    }

    let nu = params.nu;
    let a2 = params.alpha * params.alpha;
    let li = 1.0 / params.lambda1;
    let pp = li + 1.0;
    let c6 = params.constants.c6;
    let c6s = c6.sqrt();
    let c5 = params.constants.c5;

    let l_g = spec.lipschitz_bound(params.h);
    let c_g = l_g * pp.sqrt();
    let delay_free = c_g == 0.0;

    // Admissible delay constant at this sigma.
    let cg_max = (2.0 * nu - sigma * li - a2 * sigma) / (pp * c6s);
    if !delay_free && (cg_max <= 0.0 || c_g >= cg_max) {
        return Err(Error::infeasible(format!(
            "delay constant C_g = {c_g:.6} outside (0, {cg_max:.6}) at sigma = {sigma}"
        )));
    }

    // Admissible decay rate at this delay constant.
    let sigma_max = (2.0 * nu - 4.0 * c_g * c6s * pp) / (li + a2);
    if sigma_max <= 0.0 || sigma >= sigma_max {
        return Err(Error::infeasible(format!(
            "sigma = {sigma} outside (0, {sigma_max:.6}) at C_g = {c_g:.6}"
        )));
    }

    // Admissible splitting weight.
    let beta_max = (2.0 * nu - sigma * li - a2 * sigma) / pp - 4.0 * c_g * c6s;
    if beta_max <= 0.0 || beta >= beta_max {
        return Err(Error::infeasible(format!(
            "beta = {beta} outside (0, {beta_max:.6})"
        )));
    }

    let eta1 = (2.0 * nu - sigma * li - a2 * sigma - (beta + 4.0 * c_g * c6s) * pp) / a2;
    if eta1 <= 0.0 {
        return Err(Error::infeasible(format!("decay margin eta1 = {eta1:.6} <= 0")));
    }

    let bg = beta + 4.0 * c_g;
    let eta2 = (2.0 * nu - sigma * li - a2 * sigma - bg * pp - c_g * c_g * c6 * pp * pp / bg) / a2;
    if eta2 <= 0.0 {
        return Err(Error::infeasible(format!("contraction margin eta2 = {eta2:.6} <= 0")));
    }
    // With a delay present the contraction margin is strictly smaller;
    // without one the two coincide exactly.
    if eta2 > eta1 * (1.0 + 1e-12) {
        return Err(Error::infeasible(format!(
            "contraction margin eta2 = {eta2:.6} exceeds eta1 = {eta1:.6}"
        )));
    }

    let eta5 = (2.0 * nu - a2 * sigma - li * sigma - bg * pp - 3.0 * c5 / 8.0) / a2;
    let eta6 =
        (2.0 * nu - a2 * sigma - li * sigma - bg * pp - (3.0 * c5 + 2.0) / 8.0 - li / bg) / a2;

    Ok(HypothesisWindow {
        sigma,
        beta,
        c_g,
        l_g,
        sigma_max,
        beta_max,
        cg_max: if delay_free { f64::INFINITY } else { cg_max },
        eta1,
        eta2,
        eta5,
        eta6,
        eta5_positive: eta5 > 0.0,
        eta6_positive: eta6 > 0.0,
        delay_free,
    })
}

// ==================================================================
// Tests
// ==================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModeSeed;

    fn grid() -> Grid {
        Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap()
    }

    fn shear(a: f64) -> SpectralField {
        SpectralField::from_modes(
            grid(),
            &[ModeSeed { k: [0, 1, 0], comp: 0, re: a, im: 0.0 }],
        )
        .unwrap()
    }

    fn params() -> PhysicalParams {
        PhysicalParams::on_grid(1.0, 1.0, 0.25, grid()).unwrap()
    }

    fn linear_history(slope: f64) -> HistorySegment {
        // u(t) = (1 + slope * t) * shear over [-0.25, 0].
        HistorySegment::from_fn(grid(), 0.0625, 5, 0.0, 0, |t| shear(1.0 + slope * t)).unwrap()
    }

    #[test]
    fn eval_hits_slots_exactly_and_interpolates_between() {
        let hseg = linear_history(2.0);
        let at_zero = hseg.eval(0.0).unwrap();
        assert_eq!(at_zero, *hseg.newest());
        let at_end = hseg.eval(-0.25).unwrap();
        assert_eq!(at_end, *hseg.oldest());
        // Midway between slots: linear history means exact interpolation.
        let mid = hseg.eval(-0.09375).unwrap();
        let expect = shear(1.0 + 2.0 * -0.09375);
        assert!((&mid - &expect).norm(Space::H) < 1e-13);
    }

    #[test]
    fn push_advances_times_without_drift() {
        let mut hseg = linear_history(0.0);
        for _ in 0..1000 {
            hseg.push(shear(1.0));
        }
        let expect = 1000.0 * 0.0625;
        assert_eq!(hseg.newest_time(), expect);
        assert_eq!(hseg.slot_time(0), expect - 0.25);
    }

    #[test]
    fn ev2_norm_includes_head_and_history() {
        // Constant history: ||grad u||^2 = 2 a^2 on the kappa^2 = 1 mode pair,
        // integral adds h * same.
        let state = ProcessState::new(linear_history(0.0));
        let expect = 2.0 + 0.25 * 2.0;
        assert!((state.ev2_norm_sq() - expect).abs() < 1e-12);
    }

    #[test]
    fn delay_zero_history_gives_zero_for_every_kind() {
        let zero_hist =
            HistorySegment::from_fn(grid(), 0.0625, 5, 0.0, 0, |_| SpectralField::zeros(grid()))
                .unwrap();
        let kinds = [
            DelayKind::Discrete,
            DelayKind::Variable { tau: TauFn::Sinusoidal { mean: 0.125, amp: 0.1, omega: 3.0 } },
            DelayKind::Distributed { kernel: vec![1.0; 5] },
        ];
        for kind in kinds {
            for g in [GMap::Identity, GMap::Scale { factor: 2.0 }, GMap::TanhSat { saturation: 0.5 }] {
                let spec = DelaySpec { kind: kind.clone(), gain: 0.7, g };
                let out = delay_g(&spec, &zero_hist, 0.0).unwrap();
                assert!(out.norm(Space::H) < 1e-14);
            }
        }
    }

    #[test]
    fn discrete_delay_picks_the_oldest_slot() {
        let hseg = linear_history(4.0);
        let spec = DelaySpec { kind: DelayKind::Discrete, gain: 0.5, g: GMap::Identity };
        let out = delay_g(&spec, &hseg, 0.0).unwrap();
        let expect = shear(1.0 + 4.0 * -0.25).scaled(0.5);
        assert!((&out - &expect).norm(Space::H) < 1e-13);
    }

    #[test]
    fn distributed_point_mass_matches_discrete() {
        let hseg = linear_history(3.0);
        let dtheta = hseg.dt();
        // Kernel concentrated on the oldest slot with unit trapezoid mass.
        let mut kernel = vec![0.0; 5];
        kernel[0] = 2.0 / dtheta;
        let dist = DelaySpec {
            kind: DelayKind::Distributed { kernel },
            gain: 0.3,
            g: GMap::Identity,
        };
        let disc = DelaySpec { kind: DelayKind::Discrete, gain: 0.3, g: GMap::Identity };
        let a = delay_g(&dist, &hseg, 0.0).unwrap();
        let b = delay_g(&disc, &hseg, 0.0).unwrap();
        assert!((&a - &b).norm(Space::H) < 1e-13);
    }

    #[test]
    fn variable_delay_interpolates_the_lag() {
        let hseg = linear_history(2.0);
        let spec = DelaySpec {
            kind: DelayKind::Variable { tau: TauFn::Constant { value: 0.1 } },
            gain: 1.0,
            g: GMap::Identity,
        };
        let out = delay_g(&spec, &hseg, 0.0).unwrap();
        let expect = shear(1.0 + 2.0 * -0.1);
        assert!((&out - &expect).norm(Space::H) < 1e-12);
    }

    #[test]
    fn delay_output_is_divergence_free_even_for_saturating_maps() {
        let g = grid();
        let hseg = HistorySegment::from_fn(g, 0.0625, 5, 0.0, 0, |t| {
            SpectralField::random(g, (t.to_bits() >> 8) as u64, 2.0, 1.0)
        })
        .unwrap();
        let spec = DelaySpec {
            kind: DelayKind::Discrete,
            gain: 0.4,
            g: GMap::TanhSat { saturation: 0.3 },
        };
        let out = delay_g(&spec, &hseg, 0.0).unwrap();
        assert!(out.divergence_linf() < 1e-12);
        assert!(out.conjugate_defect() < 1e-13);
    }

    #[test]
    fn lipschitz_bound_matches_kind() {
        let h = 0.25;
        assert_eq!(DelaySpec::none().lipschitz_bound(h), 0.0);
        let disc = DelaySpec { kind: DelayKind::Discrete, gain: 0.1, g: GMap::Identity };
        assert!((disc.lipschitz_bound(h) - 0.1).abs() < 1e-15);
        let scaled = DelaySpec {
            kind: DelayKind::Discrete,
            gain: -0.1,
            g: GMap::Scale { factor: 3.0 },
        };
        assert!((scaled.lipschitz_bound(h) - 0.3).abs() < 1e-15);
        // Uniform kernel of height 2 has mass 2h = 0.5.
        let dist = DelaySpec {
            kind: DelayKind::Distributed { kernel: vec![2.0; 5] },
            gain: 1.0,
            g: GMap::Identity,
        };
        assert!((dist.lipschitz_bound(h) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn measured_lipschitz_ratio_stays_under_bound() {
        let g = grid();
        let specs = [
            DelaySpec { kind: DelayKind::Discrete, gain: 0.2, g: GMap::Identity },
            DelaySpec {
                kind: DelayKind::Variable { tau: TauFn::Constant { value: 0.125 } },
                gain: 0.2,
                g: GMap::Scale { factor: 1.5 },
            },
            DelaySpec {
                kind: DelayKind::Distributed { kernel: vec![1.0; 5] },
                gain: 0.2,
                g: GMap::Identity,
            },
        ];
        for spec in &specs {
            let bound = spec.lipschitz_bound(0.25);
            for seed in 0..10u64 {
                let ha = HistorySegment::from_fn(g, 0.0625, 5, 0.0, 0, |t| {
                    SpectralField::random(g, seed * 100 + (t * 64.0).abs() as u64, 1.0, 1.0)
                })
                .unwrap();
                let hb = HistorySegment::from_fn(g, 0.0625, 5, 0.0, 0, |t| {
                    SpectralField::random(g, seed * 100 + 7 + (t * 64.0).abs() as u64, 1.0, 1.0)
                })
                .unwrap();
                let ga = delay_g(spec, &ha, 0.0).unwrap();
                let gb = delay_g(spec, &hb, 0.0).unwrap();
                let num = (&ga - &gb).norm(Space::H);
                // sup over the segment of the V-norm difference.
                let mut sup_v = 0.0f64;
                for i in 0..5 {
                    sup_v = sup_v.max((ha.slot(i) - hb.slot(i)).norm(Space::V));
                }
                assert!(
                    num <= bound * sup_v * (1.0 + 1e-10),
                    "ratio {} exceeds bound {bound}",
                    num / sup_v
                );
            }
        }
    }

    #[test]
    fn window_matches_closed_forms_without_delay() {
        let p = params();
        let w = check_hypotheses(&p, &DelaySpec::none(), 0.5, 0.25).unwrap();
        // nu = alpha = lambda1 = 1, C_g = 0: sigma_max = 1, eta1 = 1/2.
        assert!((w.sigma_max - 1.0).abs() < 1e-12);
        assert!((w.eta1 - 0.5).abs() < 1e-12);
        assert!((w.eta2 - w.eta1).abs() < 1e-12);
        assert!(w.delay_free);
        assert!(w.cg_max.is_infinite());
    }

    #[test]
    fn window_rejects_out_of_range_parameters_in_order() {
        let p = params();
        // sigma too large.
        let err = check_hypotheses(&p, &DelaySpec::none(), 1.5, 0.25).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("sigma")));
        // beta too large at sigma = 0.5: beta_max = 0.5.
        let err = check_hypotheses(&p, &DelaySpec::none(), 0.5, 0.6).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("beta")));
        // Oversized delay gain violates the C_g interval before anything else.
        let strong = DelaySpec { kind: DelayKind::Discrete, gain: 2.0, g: GMap::Identity };
        let err = check_hypotheses(&p, &strong, 0.5, 0.25).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("C_g")));
    }

    #[test]
    fn window_shrinks_monotonically_with_delay_strength() {
        let p = params();
        let mut last_sigma_max = f64::INFINITY;
        let mut last_beta_max = f64::INFINITY;
        for gain in [0.0, 0.02, 0.05, 0.1] {
            let spec = DelaySpec { kind: DelayKind::Discrete, gain, g: GMap::Identity };
            let w = check_hypotheses(&p, &spec, 0.2, 0.05).unwrap();
            assert!(w.sigma_max <= last_sigma_max + 1e-15);
            assert!(w.beta_max <= last_beta_max + 1e-15);
            last_sigma_max = w.sigma_max;
            last_beta_max = w.beta_max;
        }
    }

    #[test]
    fn eta_margins_reported_with_positivity_flags() {
        let p = params();
        let w = check_hypotheses(&p, &DelaySpec::none(), 0.5, 0.25).unwrap();
        // c5 = 1: eta5 = 2 - 0.5 - 0.5 - 0.5 - 3/8 = 0.125 > 0.
        assert!((w.eta5 - 0.125).abs() < 1e-12);
        assert!(w.eta5_positive);
        // eta6 subtracts another 1/4 + 1/beta = 4.25: negative, flagged not fatal.
        assert!(w.eta6 < 0.0);
        assert!(!w.eta6_positive);
    }
}
