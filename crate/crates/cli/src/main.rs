//! Command-line front end for the solver and its verification lab.
//!
//! Exit codes: 0 all checks pass, 1 a certificate failed, 2 configuration
//! error, 3 missing or corrupt artifact, 4 infeasible analysis parameters,
//! 5 numerical blow-up, 6 inconclusive (insufficient data or pullback
//! depth).  Worker count is taken from the `NSV_WORKERS` environment
//! variable only; all artifacts are written atomically and contain no
//! wall-clock data, so identical invocations produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use nsv_core::attractor::{pullback_sweep, regularity_split, SplitConfig, SweepConfig};
use nsv_core::config::{InitialKind, RunConfig};
use nsv_core::delay::{check_hypotheses, DelaySpec, HypothesisWindow, ProcessState};
use nsv_core::estimates::{
    certify_absorbing_r1, certify_contraction, certify_decay, certify_deriv_r2,
    certify_initial_lipschitz, certify_window_integral, r1_sq, AbsorbingSample,
    BoundCertificate, Verdict, ABSORB_DEPTH_FRAC, CERT_REL_TOL,
};
use nsv_core::forcing::Forcing;
use nsv_core::io;
use nsv_core::measure::{build_measure, invariance_residual, Functional, MeasureConfig};
use nsv_core::spectral::SpectralField;
use nsv_core::stepper::{RunRecord, Stepper};
use nsv_core::{Error, PhysicalParams, Result};

#[derive(Parser)]
#[command(
    name = "nsv",
    version,
    about = "Delayed Navier-Stokes-Voigt solver and verification lab",
    after_help = "Exit codes: 0 pass, 1 fail, 2 config error, 3 missing/corrupt artifact, \
                  4 infeasible parameters, 5 blow-up, 6 inconclusive.\n\
                  Set NSV_WORKERS to bound the worker-thread count."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the feasibility window for the configured decay parameters.
    Hypotheses {
        #[arg(long)]
        config: PathBuf,
        /// Write the full window report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured simulation and write a run bundle.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Bundle directory (created if absent).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate inequality certificates along a run.
    Certify {
        /// Configuration file (omit when --run provides a bundle).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Existing run bundle to certify; verified before use.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Certificate ids (comma separated); defaults to
        /// energy-decay,energy-window,absorb-r1,deriv-r2.
        #[arg(long, value_delimiter = ',')]
        certificates: Vec<String>,
        /// Write certificate JSON files into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pullback sweep over receding release times, with pair certificates
    /// and (optionally) the two-component regularity decomposition.
    Attractor {
        #[arg(long)]
        config: PathBuf,
        /// Pullback depths (comma separated), strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        depths: Vec<f64>,
        /// Family size released at every depth.
        #[arg(long, default_value_t = 4)]
        members: usize,
        /// Remainder-force budget; enables the decomposition run at the
        /// deepest depth.
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the time-averaged measure at an observation time.
    Measure {
        #[arg(long)]
        config: PathBuf,
        /// Averaging window (a multiple of stride * dt).
        #[arg(long)]
        window: f64,
        /// Release-grid spacing in steps.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Observation time; defaults to the configured release time.
        #[arg(long)]
        at: Option<f64>,
        /// Functional ids (space separated): one, h2, v2, ev2,
        /// mode:kx,ky[,kz]:comp, sat:<inner>.
        #[arg(long, num_args = 1..)]
        functionals: Vec<String>,
        /// Also compute invariance residuals over this evolution span.
        #[arg(long)]
        invariance_depth: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resume a checkpoint under its original configuration.
    Replay {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: usize,
        /// Write a bundle with the replayed series and final state.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_for_error(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) => 2,
        Error::MissingArtifact(_) | Error::CorruptArtifact { .. } => 3,
        Error::Infeasible(_) => 4,
        Error::BlowUp { .. } => 5,
        Error::InsufficientData(_) => 6,
    }
}

fn exit_for_verdicts<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> ExitCode {
    let mut worst = 0u8;
    for v in verdicts {
        let code = match v {
            Verdict::Pass => 0,
            Verdict::Inconclusive => 6,
            Verdict::Fail => 1,
        };
        // Fail dominates inconclusive dominates pass.
        worst = match (worst, code) {
            (1, _) | (_, 1) => 1,
            (6, _) | (_, 6) => 6,
            _ => 0,
        };
    }
    ExitCode::from(worst)
}

fn init_workers() -> std::result::Result<(), String> {
    match std::env::var("NSV_WORKERS") {
        Ok(v) => {
            let n: usize = v
                .parse()
                .map_err(|_| format!("NSV_WORKERS must be a positive integer, got '{v}'"))?;
            if n == 0 {
                return Err("NSV_WORKERS must be at least 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("cannot size the worker pool: {e}"))
        }
        Err(_) => Ok(()),
    }
}

fn main() -> ExitCode {
    if let Err(msg) = init_workers() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for_error(&e))
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Hypotheses { config, out } => cmd_hypotheses(&config, out.as_deref()),
        Cmd::Simulate { config, out } => cmd_simulate(&config, &out),
        Cmd::Certify { config, run, certificates, out } => {
            cmd_certify(config.as_deref(), run.as_deref(), &certificates, out.as_deref())
        }
        Cmd::Attractor { config, depths, members, xi, out } => {
            cmd_attractor(&config, &depths, members, xi, out.as_deref())
        }
        Cmd::Measure { config, window, stride, at, functionals, invariance_depth, out } => {
            cmd_measure(&config, window, stride, at, &functionals, invariance_depth, out.as_deref())
        }
        Cmd::Replay { checkpoint, config, steps, out } => {
            cmd_replay(&checkpoint, &config, steps, out.as_deref())
        }
    }
}

// ---------------------------------------------------------------------------
// Shared setup.

struct Setup {
    cfg: RunConfig,
    text: String,
    base: Option<PathBuf>,
    params: PhysicalParams,
    forcing: Forcing,
    delay: DelaySpec,
}

fn load_setup(path: &Path) -> Result<Setup> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config '{}': {e}", path.display())))?;
    let cfg = RunConfig::from_toml_str(&text)?;
    let params = cfg.params()?;
    let forcing = cfg.forcing()?;
    let delay = cfg.delay.clone();
    let base = path.parent().map(Path::to_path_buf);
    Ok(Setup { cfg, text, base, params, forcing, delay })
}

impl Setup {
    fn window(&self) -> Result<HypothesisWindow> {
        check_hypotheses(&self.params, &self.delay, self.cfg.analysis.sigma, self.cfg.analysis.beta)
    }

    fn initial_state(&self, stepper: &Stepper) -> Result<(ProcessState, f64)> {
        let u0 = self.cfg.initial_field(self.base.as_deref())?;
        let phi = self.cfg.history_field(&u0);
        let state = stepper.initial_state(
            u0,
            self.cfg.initial.tau,
            self.cfg.stepper.dt,
            |_| phi.clone(),
        )?;
        let ev2 = state.ev2_norm_sq();
        Ok((state, ev2))
    }

    fn stepper(&self) -> Result<Stepper> {
        Ok(Stepper::new(
            self.params,
            self.forcing.clone(),
            self.delay.clone(),
            self.cfg.stepper.scheme,
        )?
        .with_convection(self.cfg.stepper.convection))
    }

    fn run(&self) -> Result<(Stepper, ProcessState, RunRecord, f64)> {
        let mut stepper = self.stepper()?;
        let (mut state, initial_ev2) = self.initial_state(&stepper)?;
        let record = stepper.evolve(&mut state, self.cfg.stepper.steps)?;
        Ok((stepper, state, record, initial_ev2))
    }
}

fn print_certificate(cert: &BoundCertificate) {
    let verdict = match cert.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    };
    println!(
        "certificate {}: {} min_margin={:e} worst_time={:e} samples={}",
        cert.id,
        verdict,
        cert.min_margin,
        cert.worst_time,
        cert.times.len()
    );
}

fn write_certificates(
    out: Option<&Path>,
    kind: &str,
    certs: &[&BoundCertificate],
    extra: &[(&str, &dyn erased::SerializeRef)],
) -> Result<()> {
    let Some(dir) = out else { return Ok(()) };
    fs::create_dir_all(dir)?;
    let mut names: Vec<String> = Vec::new();
    for cert in certs {
        let name = format!("{}.json", cert.id);
        io::save_json(&dir.join(&name), cert)?;
        names.push(name);
    }
    for (name, value) in extra {
        let file = format!("{name}.json");
        value.save(&dir.join(&file))?;
        names.push(file);
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    io::write_manifest(dir, kind, &name_refs)?;
    Ok(())
}

/// Object-safe serialization shim so heterogeneous summaries can share one
/// bundle-writing path.
mod erased {
    use super::*;

    pub trait SerializeRef {
        fn save(&self, path: &Path) -> Result<()>;
    }

    impl<T: Serialize> SerializeRef for T {
        fn save(&self, path: &Path) -> Result<()> {
            io::save_json(path, self)
        }
    }
}

// ---------------------------------------------------------------------------
// Commands.

fn cmd_hypotheses(config: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let setup = load_setup(config)?;
    let w = setup.window()?;
    println!(
        "hypotheses: PASS sigma={:e} beta={:e} c_g={:e}",
        w.sigma, w.beta, w.c_g
    );
    println!(
        "admissible: sigma_max={:e} beta_max={:e} cg_max={:e}",
        w.sigma_max, w.beta_max, w.cg_max
    );
    println!(
        "margins: eta1={:e} eta2={:e} eta5={:e} ({}) eta6={:e} ({})",
        w.eta1,
        w.eta2,
        w.eta5,
        if w.eta5_positive { "positive" } else { "not positive" },
        w.eta6,
        if w.eta6_positive { "positive" } else { "not positive" },
    );
    if let Some(path) = out {
        io::save_json(path, &w)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RunSummary {
    t_start: f64,
    t_end: f64,
    steps: usize,
    dt: f64,
    final_v_sq: f64,
    final_ev2_sq: f64,
    energy_residual_max: f64,
}

fn write_run_bundle(
    dir: &Path,
    setup: &Setup,
    stepper: &Stepper,
    state: &ProcessState,
    record: &RunRecord,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    io::atomic_write(&dir.join("config.toml"), setup.text.as_bytes())?;
    io::write_run_csv(&dir.join("series.csv"), record)?;
    io::save_json(&dir.join("run.json"), record)?;
    io::save_field(&dir.join("final.field"), state.u(), state.t())?;
    io::save_checkpoint(
        &dir.join("final.ckpt"),
        state,
        setup.cfg.stepper.scheme,
        stepper.phase(),
        io::sha256_bytes(setup.text.as_bytes()),
    )?;
    let summary = RunSummary {
        t_start: record.t0(),
        t_end: record.t_end(),
        steps: record.len() - 1,
        dt: record.dt,
        final_v_sq: *record.v_sq.last().expect("nonempty record"),
        final_ev2_sq: state.ev2_norm_sq(),
        energy_residual_max: record.energy_residual_max,
    };
    io::save_json(&dir.join("summary.json"), &summary)?;
    io::write_manifest(
        dir,
        "run",
        &["config.toml", "series.csv", "run.json", "final.field", "final.ckpt", "summary.json"],
    )?;
    Ok(())
}

fn cmd_simulate(config: &Path, out: &Path) -> Result<ExitCode> {
    let setup = load_setup(config)?;
    let (stepper, state, record, _) = setup.run()?;
    write_run_bundle(out, &setup, &stepper, &state, &record)?;
    println!(
        "simulate: PASS t_end={:e} steps={} energy_residual_max={:e}",
        record.t_end(),
        record.len() - 1,
        record.energy_residual_max
    );
    Ok(ExitCode::SUCCESS)
}

const DEFAULT_CERTS: [&str; 4] = ["energy-decay", "energy-window", "absorb-r1", "deriv-r2"];

fn cmd_certify(
    config: Option<&Path>,
    run: Option<&Path>,
    requested: &[String],
    out: Option<&Path>,
) -> Result<ExitCode> {
    let (setup, record) = match (run, config) {
        (Some(dir), _) => {
            io::verify_bundle(dir)?;
            let setup = load_setup(&dir.join("config.toml"))?;
            let record: RunRecord = io::load_json(&dir.join("run.json"))?;
            (setup, record)
        }
        (None, Some(cfg_path)) => {
            let setup = load_setup(cfg_path)?;
            let (_, _, record, _) = setup.run()?;
            (setup, record)
        }
        (None, None) => {
            return Err(Error::config("certify needs --run or --config"));
        }
    };
    let window = setup.window()?;
    let stepper = setup.stepper()?;
    let (_, initial_ev2) = setup.initial_state(&stepper)?;

    let ids: Vec<&str> = if requested.is_empty() {
        DEFAULT_CERTS.to_vec()
    } else {
        requested.iter().map(String::as_str).collect()
    };
    let t_star = record.t_end();
    let mut certs: Vec<BoundCertificate> = Vec::new();
    for id in &ids {
        let cert = match *id {
            "energy-decay" => {
                certify_decay(&window, &setup.params, &setup.forcing, &record, initial_ev2)?
            }
            "energy-window" => certify_window_integral(
                &window,
                &setup.params,
                &setup.forcing,
                &record,
                initial_ev2,
            )?,
            "absorb-r1" => {
                let sample = AbsorbingSample::from_record(&record, initial_ev2, setup.params.h)?;
                certify_absorbing_r1(&window, &setup.params, &setup.forcing, t_star, &[sample])?
            }
            "deriv-r2" => {
                let sample = AbsorbingSample::from_record(&record, initial_ev2, setup.params.h)?;
                certify_deriv_r2(&window, &setup.params, &setup.forcing, t_star, &[sample])?
            }
            other => {
                return Err(Error::config(format!(
                    "unknown certificate '{other}'; known: {}",
                    DEFAULT_CERTS.join(", ")
                )));
            }
        };
        print_certificate(&cert);
        certs.push(cert);
    }
    let refs: Vec<&BoundCertificate> = certs.iter().collect();
    write_certificates(out, "certificates", &refs, &[])?;
    Ok(exit_for_verdicts(certs.iter().map(|c| &c.verdict)))
}

#[derive(Serialize)]
struct SweepSummary {
    t_star: f64,
    depths: Vec<f64>,
    semidistance_to_deepest: Vec<f64>,
    cloud_max_norm: Vec<f64>,
    members: usize,
}

#[derive(Serialize)]
struct SplitSummary {
    cut: i64,
    xi: f64,
    additivity_gap_max: f64,
    rough_margin: f64,
    smooth_margin: f64,
}

fn cmd_attractor(
    config: &Path,
    depths: &[f64],
    members: usize,
    xi: Option<f64>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    if members == 0 {
        return Err(Error::config("attractor needs at least one family member"));
    }
    let setup = load_setup(config)?;
    let window = setup.window()?;
    let grid = setup.forcing.grid();
    let seeds: Vec<SpectralField> = match &setup.cfg.initial.kind {
        InitialKind::Random { seed, amplitude, decay } => (0..members)
            .map(|i| SpectralField::random(grid, seed + i as u64, *amplitude, *decay))
            .collect(),
        _ if members == 1 => vec![setup.cfg.initial_field(setup.base.as_deref())?],
        _ => {
            return Err(Error::config(
                "a member family needs a random initial kind (or --members 1)",
            ));
        }
    };

    let t_star = setup.cfg.initial.tau;
    let sweep_cfg = SweepConfig {
        t_star,
        depths: depths.to_vec(),
        dt: setup.cfg.stepper.dt,
        scheme: setup.cfg.stepper.scheme,
    };
    let sweep = pullback_sweep(&setup.params, &setup.forcing, &setup.delay, &seeds, &sweep_cfg)?;
    for i in 0..sweep.depths.len() {
        println!(
            "depth {:e}: semidistance_to_deepest={:e} cloud_max_norm={:e}",
            sweep.depths[i],
            sweep.to_deepest[i],
            sweep.clouds[i].max_norm()
        );
    }
    let summary = SweepSummary {
        t_star,
        depths: sweep.depths.clone(),
        semidistance_to_deepest: sweep.to_deepest.clone(),
        cloud_max_norm: sweep.clouds.iter().map(|c| c.max_norm()).collect(),
        members,
    };

    let mut certs: Vec<BoundCertificate> = Vec::new();
    let deepest = *depths.last().expect("depths is non-empty");
    let steps = (deepest / setup.cfg.stepper.dt).round() as usize;
    if members >= 2 {
        // Pair certificates from the two first members released at the
        // deepest depth.
        let tau = t_star - deepest;
        let mut sa = setup.stepper()?;
        let mut sb = setup.stepper()?;
        let (ua, ub) = (seeds[0].clone(), seeds[1].clone());
        let mut state_a =
            sa.initial_state(ua.clone(), tau, setup.cfg.stepper.dt, |_| ua.clone())?;
        let mut state_b =
            sb.initial_state(ub.clone(), tau, setup.cfg.stepper.dt, |_| ub.clone())?;
        let initial_dist = state_a.ev2_distance_sq(&state_b)?;
        let pair = Stepper::evolve_pair(&mut sa, &mut state_a, &mut sb, &mut state_b, steps)?;
        let contraction = certify_contraction(&window, &setup.params, &pair, initial_dist)?;
        print_certificate(&contraction);
        certs.push(contraction);
        let lipschitz = certify_initial_lipschitz(&window, &setup.params, &pair)?;
        print_certificate(&lipschitz);
        certs.push(lipschitz);
    }

    let mut split_summary: Option<SplitSummary> = None;
    if let Some(xi) = xi {
        let split_cfg = SplitConfig {
            xi,
            dt: setup.cfg.stepper.dt,
            steps,
            scheme: setup.cfg.stepper.scheme,
            include_convection: setup.cfg.stepper.convection,
        };
        let seed0 = seeds[0].clone();
        let hist = setup.cfg.history_field(&seed0);
        let split = regularity_split(
            &window,
            &setup.params,
            &setup.forcing,
            &setup.delay,
            seed0,
            |_| hist.clone(),
            t_star - deepest,
            &split_cfg,
        )?;
        let gap_max = split.additivity_gap_v.iter().cloned().fold(0.0, f64::max);
        println!(
            "split: cut={} additivity_gap_max={:e} rough_margin={:e} smooth_margin={:e}",
            split.cut, gap_max, split.rough_cert.min_margin, split.smooth_cert.min_margin
        );
        print_certificate(&split.rough_cert);
        print_certificate(&split.smooth_cert);
        split_summary = Some(SplitSummary {
            cut: split.cut,
            xi,
            additivity_gap_max: gap_max,
            rough_margin: split.rough_cert.min_margin,
            smooth_margin: split.smooth_cert.min_margin,
        });
        certs.push(split.rough_cert);
        certs.push(split.smooth_cert);
    }

    let refs: Vec<&BoundCertificate> = certs.iter().collect();
    let mut extra: Vec<(&str, &dyn erased::SerializeRef)> = vec![("sweep", &summary)];
    if let Some(s) = &split_summary {
        extra.push(("split", s));
    }
    write_certificates(out, "attractor", &refs, &extra)?;
    Ok(exit_for_verdicts(certs.iter().map(|c| &c.verdict)))
}

#[derive(Serialize)]
struct MeasureSummary {
    time: f64,
    window: f64,
    stride: usize,
    samples: usize,
    deep_samples: usize,
    integrals: Vec<(String, f64)>,
    max_ev2_sq: f64,
    support_radius_sq: Option<f64>,
    support: Option<Verdict>,
    invariance: Vec<(String, f64)>,
}

fn cmd_measure(
    config: &Path,
    window: f64,
    stride: usize,
    at: Option<f64>,
    functionals: &[String],
    invariance_depth: Option<f64>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let setup = load_setup(config)?;
    let t = at.unwrap_or(setup.cfg.initial.tau);
    let phis: Vec<Functional> = if functionals.is_empty() {
        vec![Functional::One, Functional::HNormSq, Functional::VNormSq, Functional::Ev2NormSq]
    } else {
        functionals.iter().map(|s| Functional::parse(s)).collect::<Result<_>>()?
    };
    let mcfg = MeasureConfig {
        window,
        dt: setup.cfg.stepper.dt,
        stride,
        scheme: setup.cfg.stepper.scheme,
        include_convection: setup.cfg.stepper.convection,
    };
    let datum = setup.cfg.initial_field(setup.base.as_deref())?;
    let mu = build_measure(&setup.params, &setup.forcing, &setup.delay, &datum, t, &mcfg)?;
    let mut integrals = Vec::with_capacity(phis.len());
    for phi in &phis {
        let value = mu.integrate(phi)?;
        println!("functional {}: integral={:e}", phi.id(), value);
        integrals.push((phi.id(), value));
    }

    // Support check against the certified absorbing radius, when the
    // feasibility window admits one.  Only samples whose pullback depth has
    // shrunk the release transient below the gate fraction of the radius are
    // required to sit inside the ball; shallow samples are reported but not
    // judged, and a measure with no deep samples is inconclusive.
    let mut support_radius_sq = None;
    let mut support = None;
    let mut deep_samples = 0usize;
    match setup.window() {
        Ok(w) => {
            let radius_sq = r1_sq(&w, &setup.params, &setup.forcing, t)?;
            let n = mu.len();
            let datum_ev2 = mu
                .samples()
                .last()
                .expect("measure has at least the depth-zero sample")
                .ev2_norm_sq();
            let mut max_deep = 0.0f64;
            for (i, s) in mu.samples().iter().enumerate() {
                let depth = ((n - 1 - i) * stride) as f64 * setup.cfg.stepper.dt;
                if (-w.sigma * depth).exp() * datum_ev2 < ABSORB_DEPTH_FRAC * radius_sq {
                    deep_samples += 1;
                    max_deep = max_deep.max(s.ev2_norm_sq());
                }
            }
            let verdict = if deep_samples == 0 {
                Verdict::Inconclusive
            } else if max_deep <= radius_sq * (1.0 + CERT_REL_TOL) {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            println!(
                "support: {} deep={}/{} max_deep_ev2_sq={:e} radius_sq={:e}",
                match verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => "FAIL",
                    Verdict::Inconclusive => "INCONCLUSIVE (no sample is past the depth gate)",
                },
                deep_samples,
                n,
                max_deep,
                radius_sq
            );
            support_radius_sq = Some(radius_sq);
            support = Some(verdict);
        }
        Err(Error::Infeasible(msg)) => {
            println!("support: SKIPPED (window infeasible: {msg})");
        }
        Err(e) => return Err(e),
    }

    let mut invariance = Vec::new();
    if let Some(depth) = invariance_depth {
        let residuals = invariance_residual(
            &setup.params,
            &setup.forcing,
            &setup.delay,
            &datum,
            t - depth,
            t,
            &mcfg,
            &phis,
        )?;
        for (phi, r) in phis.iter().zip(&residuals) {
            println!("invariance {}: residual={:e}", phi.id(), r);
            invariance.push((phi.id(), *r));
        }
    }

    let summary = MeasureSummary {
        time: t,
        window,
        stride,
        samples: mu.len(),
        deep_samples,
        integrals,
        max_ev2_sq: mu.max_ev2_sq(),
        support_radius_sq,
        support,
        invariance,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        io::save_json(&dir.join("measure.json"), &summary)?;
        io::write_manifest(dir, "measure", &["measure.json"])?;
    }
    Ok(match summary.support {
        Some(Verdict::Fail) => ExitCode::from(1),
        Some(Verdict::Inconclusive) => ExitCode::from(6),
        _ => ExitCode::SUCCESS,
    })
}

fn cmd_replay(
    checkpoint: &Path,
    config: &Path,
    steps: usize,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let ck = io::load_checkpoint(checkpoint)?;
    let setup = load_setup(config)?;
    if io::sha256_bytes(setup.text.as_bytes()) != ck.config_sha256 {
        return Err(Error::config(
            "checkpoint was produced under a different configuration (digest mismatch)",
        ));
    }
    if ck.scheme != setup.cfg.stepper.scheme {
        return Err(Error::config("checkpoint scheme differs from the configured scheme"));
    }
    let mut stepper = setup.stepper()?;
    stepper.restore_phase(ck.phase.clone());
    let mut state = ck.state;
    let record = stepper.evolve(&mut state, steps)?;
    println!(
        "replay: PASS t_end={:e} steps={} energy_residual_max={:e}",
        record.t_end(),
        steps,
        record.energy_residual_max
    );
    if let Some(dir) = out {
        write_run_bundle(dir, &setup, &stepper, &state, &record)?;
    }
    Ok(ExitCode::SUCCESS)
}
