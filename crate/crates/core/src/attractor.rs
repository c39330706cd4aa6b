//! Pullback-attraction diagnostics: clouds of process states released at
//! receding initial times, Hausdorff semidistances in the energy phase
//! space, and the smooth/decaying two-component decomposition of a run.

use rayon::prelude::*;

use crate::delay::{delay_g, DelaySpec, HypothesisWindow, ProcessState};
use crate::error::{Error, Result};
use crate::estimates::{
    certify_rough_component, certify_smooth_component, BoundCertificate,
};
use crate::forcing::Forcing;
use crate::params::PhysicalParams;
use crate::spectral::{Space, SpectralField};
use crate::stepper::{RunRecord, Scheme, Stepper};

/// A finite set of process states observed at one common time.
#[derive(Debug, Clone)]
pub struct StateCloud {
    time: f64,
    members: Vec<ProcessState>,
}

impl StateCloud {
    pub fn new(members: Vec<ProcessState>) -> Result<StateCloud> {
        let first = members
            .first()
            .ok_or_else(|| Error::config("a state cloud needs at least one member"))?;
        let time = first.t();
        for m in &members {
            if (m.t() - time).abs() > 1e-9 * (1.0 + time.abs()) {
                return Err(Error::config("cloud members are observed at different times"));
            }
            if m.grid() != first.grid() {
                return Err(Error::config("cloud members live on different grids"));
            }
        }
        Ok(StateCloud { time, members })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[ProcessState] {
        &self.members
    }

    /// Largest energy-space norm (distance to the zero state when the zero
    /// history segment is the comparison point).
    pub fn max_norm(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.ev2_norm_sq().sqrt())
            .fold(0.0, f64::max)
    }
}

/// One-sided Hausdorff semidistance `max_{x in a} min_{y in b} dist(x, y)`
/// in the energy-space metric, evaluated exactly over both finite clouds.
pub fn semidistance(a: &StateCloud, b: &StateCloud) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in &a.members {
        let mut best = f64::INFINITY;
        for y in &b.members {
            best = best.min(x.ev2_distance_sq(y)?);
        }
        worst = worst.max(best);
    }
    Ok(worst.sqrt())
}

/// Pullback evolution request: the same initial family released at each of
/// several receding initial times, all observed at `t_star`.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub t_star: f64,
    /// Pullback depths `t_star - tau`, strictly increasing; each must be an
    /// integer multiple of `dt`.
    pub depths: Vec<f64>,
    pub dt: f64,
    pub scheme: Scheme,
}

/// Clouds produced by [`pullback_sweep`] with their semidistances to the
/// deepest cloud.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub depths: Vec<f64>,
    pub clouds: Vec<StateCloud>,
    /// `semidistance(cloud_n, cloud_deepest)` per depth (the last entry is 0).
    pub to_deepest: Vec<f64>,
}

/// Releases the family from each depth and evolves every member to `t_star`
/// (members run in parallel; results are ordered, so the outcome is
/// independent of the worker count).
pub fn pullback_sweep(
    params: &PhysicalParams,
    forcing: &Forcing,
    delay: &DelaySpec,
    seeds: &[SpectralField],
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::config("pullback sweep needs at least one initial field"));
    }
    for w in cfg.depths.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::config("pullback depths must be strictly increasing"));
        }
    }
    let mut clouds = Vec::with_capacity(cfg.depths.len());
    for &depth in &cfg.depths {
        let ratio = depth / cfg.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * (1.0 + ratio) || steps < 1.0 {
            return Err(Error::config(format!(
                "depth {depth} is not a positive multiple of dt = {}",
                cfg.dt
            )));
        }
        let steps = steps as usize;
        let tau = cfg.t_star - depth;
        let members: Result<Vec<ProcessState>> = seeds
            .par_iter()
            .map(|u0| {
                let mut stepper =
                    Stepper::new(*params, forcing.clone(), delay.clone(), cfg.scheme)?;
                let mut state =
                    stepper.initial_state(u0.clone(), tau, cfg.dt, |_| u0.clone())?;
                stepper.evolve(&mut state, steps)?;
                Ok(state)
            })
            .collect();
        clouds.push(StateCloud::new(members?)?);
    }
    let deepest = clouds.last().expect("at least one depth");
    let mut to_deepest = Vec::with_capacity(clouds.len());
    for cloud in &clouds {
        to_deepest.push(semidistance(cloud, deepest)?);
    }
    Ok(SweepResult { depths: cfg.depths.clone(), clouds, to_deepest })
}

/// Decomposition run request.
#[derive(Debug, Clone)]
pub struct SplitConfig {
    /// Dual-norm budget for the spectral remainder of the force.
    pub xi: f64,
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    /// Disabling convection makes the decomposition exactly additive
    /// (linear fixture); with convection on, the additivity gap is reported
    /// but no longer expected to vanish.
    pub include_convection: bool,
}

/// Result of a two-component decomposition run.
#[derive(Debug)]
pub struct SplitOutcome {
    /// Spectral cutoff radius used for the smooth part of the force.
    pub cut: i64,
    pub f_smooth: Forcing,
    pub f_rough: Forcing,
    pub parent: RunRecord,
    /// Component carrying the initial data and the remainder force.
    pub rough: RunRecord,
    /// Component carrying the smooth force and the delay term.
    pub smooth: RunRecord,
    /// `||v(t) + w(t) - u(t)||_V` per sample.
    pub additivity_gap_v: Vec<f64>,
    pub rough_cert: BoundCertificate,
    pub smooth_cert: BoundCertificate,
}

/// Runs the parent system and its two-component decomposition in lockstep:
/// the rough component `v` starts from the parent's initial field with zero
/// history and feels only the remainder force; the smooth component `w`
/// starts from zero with the parent's initial history and feels the smooth
/// force plus the delay term evaluated on the parent's own history.  When
/// convection is disabled the two components sum to the parent solution
/// exactly; the gap series records how far that additivity holds.
pub fn regularity_split(
    window: &HypothesisWindow,
    params: &PhysicalParams,
    forcing: &Forcing,
    delay: &DelaySpec,
    u0: SpectralField,
    phi: impl Fn(f64) -> SpectralField,
    tau: f64,
    cfg: &SplitConfig,
) -> Result<SplitOutcome> {
    let grid = forcing.grid();
    let t_end = tau + cfg.steps as f64 * cfg.dt;
    let (f_smooth, cut) = forcing.smooth_split(cfg.xi, tau, t_end)?;
    let rough_profile = forcing.profile() - f_smooth.profile();
    let f_rough = Forcing::new(rough_profile, forcing.amplitude().clone())?;

    let mut parent_stepper = Stepper::new(*params, forcing.clone(), delay.clone(), cfg.scheme)?
        .with_convection(cfg.include_convection);
    let mut rough_stepper = Stepper::new(*params, f_rough.clone(), DelaySpec::none(), cfg.scheme)?
        .with_convection(cfg.include_convection);
    let mut smooth_stepper =
        Stepper::new(*params, f_smooth.clone(), DelaySpec::none(), cfg.scheme)?
            .with_convection(cfg.include_convection);

    let initial_voigt_da_sq = u0.norm_sq(Space::V)
        + params.alpha * params.alpha * u0.norm_sq(Space::DA);

    let mut parent_state = parent_stepper.initial_state(u0.clone(), tau, cfg.dt, &phi)?;
    let mut rough_state = rough_stepper.initial_state(u0.clone(), tau, cfg.dt, |_| {
        SpectralField::zeros(grid)
    })?;
    let mut smooth_state =
        smooth_stepper.initial_state(SpectralField::zeros(grid), tau, cfg.dt, &phi)?;

    let mut parent_rec = RunRecord::with_capacity(cfg.dt, cfg.steps);
    let mut rough_rec = RunRecord::with_capacity(cfg.dt, cfg.steps);
    let mut smooth_rec = RunRecord::with_capacity(cfg.dt, cfg.steps);
    let mut gap = Vec::with_capacity(cfg.steps + 1);

    let push_all = |parent_rec: &mut RunRecord,
                    rough_rec: &mut RunRecord,
                    smooth_rec: &mut RunRecord,
                    gap: &mut Vec<f64>,
                    t: f64,
                    pu: &ProcessState,
                    vu: &ProcessState,
                    wu: &ProcessState| {
        parent_rec.push_sample(t, pu.u(), forcing.norm_sq_at(Space::VDual, t));
        rough_rec.push_sample(t, vu.u(), f_rough.norm_sq_at(Space::VDual, t));
        smooth_rec.push_sample(t, wu.u(), f_smooth.norm_sq_at(Space::VDual, t));
        let mut sum = vu.u().clone();
        sum.add_scaled_mut(wu.u(), 1.0);
        sum.add_scaled_mut(pu.u(), -1.0);
        gap.push(sum.norm_sq(Space::V).sqrt());
    };

    push_all(
        &mut parent_rec,
        &mut rough_rec,
        &mut smooth_rec,
        &mut gap,
        tau,
        &parent_state,
        &rough_state,
        &smooth_state,
    );
    for _ in 0..cfg.steps {
        let t = parent_state.t();
        let g_t = delay_g(delay, parent_state.history(), t)?;
        let g_norm = g_t.norm_sq(Space::H);

        let diag_u = parent_stepper.step(&mut parent_state)?;
        let diag_v = rough_stepper.step(&mut rough_state)?;
        let diag_w = smooth_stepper.step_with_extra(&mut smooth_state, Some(&g_t))?;

        parent_rec.g_h_sq.push(diag_u.g_h_sq);
        parent_rec.deriv_v_sq.push(diag_u.deriv_v_sq);
        parent_rec.energy_residual_max =
            parent_rec.energy_residual_max.max(diag_u.energy_residual);
        rough_rec.g_h_sq.push(diag_v.g_h_sq);
        rough_rec.deriv_v_sq.push(diag_v.deriv_v_sq);
        rough_rec.energy_residual_max =
            rough_rec.energy_residual_max.max(diag_v.energy_residual);
        // The smooth component's delay column records the injected parent
        // term, not its (empty) own delay operator.
        smooth_rec.g_h_sq.push(g_norm);
        smooth_rec.deriv_v_sq.push(diag_w.deriv_v_sq);

        let t_next = parent_state.t();
        push_all(
            &mut parent_rec,
            &mut rough_rec,
            &mut smooth_rec,
            &mut gap,
            t_next,
            &parent_state,
            &rough_state,
            &smooth_state,
        );
    }
    // Close the delay columns at the final time.
    let g_end = delay_g(delay, parent_state.history(), parent_state.t())?;
    parent_rec.g_h_sq.push(g_end.norm_sq(Space::H));
    rough_rec.g_h_sq.push(0.0);
    smooth_rec.g_h_sq.push(g_end.norm_sq(Space::H));

    let rough_cert =
        certify_rough_component(window, params, &f_rough, &rough_rec, initial_voigt_da_sq)?;
    let smooth_cert =
        certify_smooth_component(window, params, &f_smooth, &parent_rec, &smooth_rec)?;

    Ok(SplitOutcome {
        cut,
        f_smooth,
        f_rough,
        parent: parent_rec,
        rough: rough_rec,
        smooth: smooth_rec,
        additivity_gap_v: gap,
        rough_cert,
        smooth_cert,
    })
}
