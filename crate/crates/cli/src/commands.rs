use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use ratchet::engine::{final_positions, run_replica, Recorder};
use ratchet::experiment::{self as exp, Outcome};
use ratchet::io::{self, BoundCountLog};
use ratchet::jumpchain::CouplingParams;
use ratchet::renewal::stats::mean_se;
use ratchet::special::speed as analytic_speed;
use ratchet::{validate, EngineKind, Error, RatchetParams, VariantSpec};

use crate::config::{Resolver, VariantChoice};

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing parameters; exit code 2.
    Config(String),
    /// Anything else that stops a run; exit code 1.
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type Run = Result<Outcome, CliError>;

/// Recorded paths are thinned to at most this many grid samples.
const MAX_TRAJECTORY_SAMPLES: usize = 100_000;

fn params(r: &mut Resolver, gamma: f64, t_max: f64, replicas: usize) -> Result<RatchetParams<f64>, CliError> {
    let p = RatchetParams::new(gamma, r.t_max(t_max), r.dt(1e-3))
        .with_replicas(r.replicas(replicas))
        .with_seed(r.seed(42))
        .with_engine(r.engine(EngineKind::Thinning));
    validate(&p).into_result()?;
    Ok(p)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Replica 0 of `p` as `trajectory.csv` and `jumps.csv`, plus
/// `diagnostics.csv` for the dissociation variant.
fn write_replica_zero(p: &RatchetParams<f64>, dir: &Path) -> Result<(), CliError> {
    let stride = p.steps().div_ceil(MAX_TRAJECTORY_SAMPLES).max(1);
    let p = p.clone().with_stride(stride);
    let mut obs = (Recorder::new(&p), BoundCountLog::default());
    run_replica(&p, 0, 1, &mut obs)?;
    let (rec, log) = obs;
    let traj = rec.finish();
    io::write_trajectory(&traj, create(dir, "trajectory.csv")?)?;
    io::write_jumps(&traj.jumps, create(dir, "jumps.csv")?)?;
    if !log.rows.is_empty() {
        io::write_diagnostics(&log.rows, create(dir, "diagnostics.csv")?)?;
    }
    Ok(())
}

fn rel_dev(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Path ensemble, renewal estimator and exact jump chain against `C_γ`.
pub fn speed(r: &mut Resolver, out: Option<&Path>) -> Run {
    let gamma = r.gamma_required().map_err(CliError::Config)?;
    let p = params(r, gamma, 1000.0, 200)?;
    let steps = r.chain_steps(100_000);
    let c = analytic_speed(gamma)?;
    // The last grid time; the tracker observes X there.
    let t_obs = p.steps() as f64 * p.dt;
    let ens = exp::run_base_ensemble(&p, t_obs, &[])?;
    let mut o = exp::lln(&ens)?;

    let ren = exp::renewal(&ens)?;
    for key in ["speed_renewal", "sigma_renewal", "cycles"] {
        if let Some(m) = ren.metrics.get(key) {
            o.metrics.insert(key.into(), *m);
        }
    }
    if let Some(t) = ren.tests.get("speed_renewal_within_2pct") {
        o.tests.insert("speed_renewal_within_2pct".into(), *t);
    }

    // The chain lives in γ = 1/2 units; speeds scale by (2γ)^{1/3}.
    let (ch, recs) = exp::chain(steps, 0.0, p.seed)?;
    let scale = (2.0 * gamma).cbrt();
    let m = ch.metrics["speed_chain"];
    let v = m.value * scale;
    o.metric("speed_chain", v, m.stderr.unwrap_or(f64::NAN) * scale);
    o.check("speed_chain_within_2pct", rel_dev(v, c), rel_dev(v, c) <= 0.02);

    if let Some(dir) = out {
        io::write_cycles(&ens.cycles, create(dir, "cycles.csv")?)?;
        io::write_chain(&recs, create(dir, "chain.csv")?)?;
        write_replica_zero(&p, dir)?;
    }
    Ok(o)
}

/// Stationary draws and engine-harvested gaps against `3·Ai`.
pub fn invariant(r: &mut Resolver, out: Option<&Path>) -> Run {
    let samples = r.samples(100_000);
    let gamma = r.gamma(1.0);
    let p = params(r, gamma, 1000.0, 200)?;
    let mut o = exp::invariant_sampler(samples, p.seed)?;
    let t_obs = p.steps() as f64 * p.dt;
    let ens = exp::run_base_ensemble(&p, t_obs, &[])?;
    o.merge(exp::harvest_invariance(&ens, 1)?);
    if let Some(dir) = out {
        io::write_chain(&ens.harvest, create(dir, "chain.csv")?)?;
    }
    Ok(o)
}

pub fn clt(r: &mut Resolver, _out: Option<&Path>) -> Run {
    let gamma = r.gamma(1.0);
    let gammas = r.gammas(&[0.5, 1.0, 4.0]);
    let t = r.t_max(500.0);
    let dt = r.dt(1e-3);
    let n = r.replicas(2000);
    let seed = r.seed(42);
    let engine = r.engine(EngineKind::Thinning);
    Ok(exp::clt(&gammas, gamma, t, dt, n, seed, engine)?)
}

pub fn scaling(r: &mut Resolver, _out: Option<&Path>) -> Run {
    let gamma = r.gamma(4.0);
    let t = r.t(50.0);
    let dt = r.dt(1e-3);
    let n = r.replicas(5000);
    let seed = r.seed(42);
    let engine = r.engine(EngineKind::Thinning);
    Ok(exp::scaling(gamma, t, dt, n, seed, engine)?)
}

pub fn variant(r: &mut Resolver, out: Option<&Path>) -> Run {
    let kind = r
        .cfg
        .kind
        .ok_or_else(|| CliError::Config("missing required parameter `kind` (use --kind)".into()))?;
    match kind {
        VariantChoice::Delta => delta(r, out),
        VariantChoice::Dissociation => dissociation(r, out),
        VariantChoice::Drift => drift(r, out),
    }
}

fn delta(r: &mut Resolver, out: Option<&Path>) -> Run {
    let gamma = r.gamma(2.0);
    let p = params(r, gamma, 1000.0, 200)?;
    let samples = r.samples(10_000);
    let mut o = exp::delta_speed(gamma, p.t_max, p.dt, p.replicas, p.seed)?;
    o.merge(exp::delta_jumps(gamma, samples, p.dt, p.seed.wrapping_add(1))?);
    if let Some(dir) = out {
        let p = p.with_variant(VariantSpec::binding(ratchet::BindingMeasure::DeltaAtPore { mass: 1.0 }));
        write_replica_zero(&p, dir)?;
    }
    Ok(o)
}

/// Rate zero reproduces the base ratchet; the configured rate (default
/// `0.01·γ^{2/3}`, slow enough to leave the speed within 5%) is run too.
fn dissociation(r: &mut Resolver, out: Option<&Path>) -> Run {
    let gamma = r.gamma(1.0);
    let explicit = r.cfg.dissociation_rate.is_some() || r.cfg.window.is_some();
    let p = params(r, gamma, 100.0, 2000)?;
    let rate = r.dissociation_rate(0.01 * gamma.powf(2.0 / 3.0));
    let window = r.window(crate::config::WindowChoice::Full);
    let mut o = exp::dissociation_equivalence(gamma, p.t_max, p.dt, p.replicas, p.seed)?;
    let vp = p
        .clone()
        .with_seed(p.seed.wrapping_add(2))
        .with_variant(VariantSpec::dissociation(rate, window.into()));
    if explicit {
        let v: Vec<f64> = final_positions(&vp, 1)?.into_iter().map(|x| x / p.t_max).collect();
        let (m, se) = mean_se(&v);
        o.analytic("speed_analytic_base", analytic_speed(gamma)?);
        o.metric("dissociation_speed", m, se);
    } else {
        o.merge(exp::dissociation_regime(gamma, p.t_max, p.dt, p.replicas, vp.seed)?);
    }
    if let Some(dir) = out {
        write_replica_zero(&vp, dir)?;
    }
    Ok(o)
}

/// Drifted ratchet: no closed form, the speed is reported next to `C_γ`.
fn drift(r: &mut Resolver, out: Option<&Path>) -> Run {
    let gamma = r.gamma(1.0);
    let mu = r.drift(0.0);
    let p = params(r, gamma, 1000.0, 200)?.with_variant(VariantSpec::drift(mu));
    validate(&p).into_result()?;
    let v: Vec<f64> = final_positions(&p, 1)?.into_iter().map(|x| x / p.t_max).collect();
    let (m, se) = mean_se(&v);
    let mut o = Outcome::default();
    o.analytic("speed_analytic_base", analytic_speed(gamma)?);
    o.metric("drift_speed", m, se);
    if let Some(dir) = out {
        write_replica_zero(&p, dir)?;
    }
    Ok(o)
}

pub fn coupling(r: &mut Resolver, _out: Option<&Path>) -> Run {
    let p = CouplingParams {
        gamma: r.gamma(0.5),
        x: r.x(0.0),
        s1: r.s1(0.0),
        s2: r.s2(1.0),
        t_max: r.t_max(1e4),
        dt: r.dt(1e-3),
    };
    let n = r.replicas(1000);
    let seed = r.seed(42);
    Ok(exp::coupling(&p, n, seed)?)
}

pub fn chain(r: &mut Resolver, out: Option<&Path>) -> Run {
    let steps = r.steps(1_000_000);
    let y0 = r.y0(0.0);
    let seed = r.seed(42);
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(CliError::Config(format!("y0 must be a finite non-negative gap, got {y0}")));
    }
    let (o, recs) = exp::chain(steps, y0, seed)?;
    if let Some(dir) = out {
        io::write_chain(&recs, create(dir, "chain.csv")?)?;
    }
    Ok(o)
}

pub fn selftest(r: &mut Resolver, _out: Option<&Path>) -> Run {
    r.seed(0);
    Ok(exp::identities())
}
