//! Subcommand implementations behind the `ksobs` binary.
//!
//! Every command reads a [`RunConfig`], writes CSV files into the output
//! directory together with an echo of the configuration, and prints a short
//! summary on stdout.

use crate::certificate::{fitted_decay_rate, ios_certificate, verify_bounds, IOSCertificate};
use crate::config::{fmt_grid, GainSpec, GridSpec, RunConfig};
use crate::design::{build_design, closed_loop_eigenvalues, DesignResult, ASSUMPTION_B_TOL};
use crate::envelope::{decay_envelope, DecayEnvelope};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fd::{convergence_study, fd_vs_spectral, observed_orders, OracleReport, OracleSpec};
use crate::masp::{masp_closed_form, masp_curve, optimize_r};
use crate::output::{fmt_f64, CsvWriter};
use crate::simulator::{self, seeded_rng, NoiseModel, PlantConfig, RunSpec, SamplingSchedule, STREAM_INITIAL};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const CONFIG_ECHO: &str = "config.cfg";
const ORACLE_CHECKPOINTS: usize = 10;
const CONVERGENCE_LEVELS: usize = 3;

/// Settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub exec: Exec,
}

impl Context {
    pub fn new(config: RunConfig, out: PathBuf, exec: Exec) -> Result<Self> {
        std::fs::create_dir_all(&out)?;
        Ok(Self { config, out, exec })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn echo(&self) -> Result<()> {
        std::fs::write(self.out.join(CONFIG_ECHO), self.config.echo())?;
        Ok(())
    }
}

fn finish<W: Write>(w: W) -> Result<()> {
    let mut w = w;
    w.flush()?;
    Ok(())
}

/// Design with the observer gain resolved, failing on Assumption B.
pub fn resolve_design(cfg: &RunConfig) -> Result<DesignResult> {
    let p = &cfg.problem;
    let design = build_design(p.q, p.order, &p.kernel)?;
    let report = design.check_assumption_b(ASSUMPTION_B_TOL);
    if !report.passed {
        return Err(Error::AssumptionB(report.failures.join("; ")));
    }
    attach_gain(design, &cfg.gain)
}

fn attach_gain(design: DesignResult, gain: &GainSpec) -> Result<DesignResult> {
    let l = match gain {
        GainSpec::Explicit(l) => l.clone(),
        GainSpec::Poles(p) => design.place_gain(p)?,
    };
    design.with_gain(l)
}

pub fn resolve_envelope(cfg: &RunConfig, design: &DesignResult) -> Result<DecayEnvelope> {
    decay_envelope(&design.closed_loop()?, cfg.envelope)
}

/// Writes `design.csv` and `design.kv`.
pub fn cmd_design(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let p = &cfg.problem;
    let base = build_design(p.q, p.order, &p.kernel)?;
    let verdict = base.check_assumption_b(ASSUMPTION_B_TOL);
    let design = if verdict.passed { Some(attach_gain(base.clone(), &cfg.gain)?) } else { None };

    let mut csv = CsvWriter::new(ctx.create("design.csv")?, &["quantity", "index", "value", "imag"])?;
    for (i, mu) in base.mu.iter().enumerate() {
        scalar(&mut csv, "mu", i, *mu, 0.0)?;
    }
    for (i, c) in base.c.iter().enumerate() {
        scalar(&mut csv, "c", i, *c, 0.0)?;
    }
    scalar(&mut csv, "observability_determinant", 0, base.observability_determinant(), 0.0)?;
    scalar(&mut csv, "assumption_b", 0, f64::from(u8::from(verdict.passed)), 0.0)?;
    if let Some(d) = &design {
        for (i, l) in d.gain()?.iter().enumerate() {
            scalar(&mut csv, "L", i, *l, 0.0)?;
        }
        for (i, (re, im)) in closed_loop_eigenvalues(d)?.into_iter().enumerate() {
            scalar(&mut csv, "closed_loop_eigenvalue", i, re, im)?;
        }
        scalar(&mut csv, "monotonicity_shift", 0, d.monotonicity_shift(cfg.certification.r)?, 0.0)?;
    }
    finish(csv.into_inner())?;
    ctx.echo()?;

    println!("N = {}, q = {}", base.order, fmt_f64(base.q));
    for (i, c) in base.c.iter().enumerate() {
        println!("c_{i} = {}", fmt_f64(*c));
    }
    println!("observability determinant = {}", fmt_f64(base.observability_determinant()));
    match design {
        Some(d) => {
            std::fs::write(ctx.out.join("design.kv"), d.to_kv())?;
            let eig: Vec<String> = closed_loop_eigenvalues(&d)?
                .iter()
                .map(|(re, im)| if *im == 0.0 { fmt_f64(*re) } else { format!("{}{:+}i", fmt_f64(*re), im) })
                .collect();
            println!("closed-loop eigenvalues = {}", eig.join(", "));
            println!("assumption B: pass");
            Ok(())
        }
        None => {
            let clauses = verdict.failures.join("; ");
            println!("assumption B: FAIL ({clauses})");
            Err(Error::AssumptionB(clauses))
        }
    }
}

fn scalar<W: Write>(csv: &mut CsvWriter<W>, name: &str, i: usize, v: f64, im: f64) -> std::io::Result<()> {
    csv.row(&[name.to_string(), i.to_string(), fmt_f64(v), fmt_f64(im)])
}

/// Outcome of [`cmd_masp`]; `None` when `T_max` is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaspOptimum {
    pub r: f64,
    pub t_max: f64,
}

/// Writes `masp_curve.csv` over `grid` (or the configured grid) and locates the optimum.
pub fn cmd_masp(ctx: &Context, grid: Option<GridSpec>) -> Result<Option<MaspOptimum>> {
    let cfg = &ctx.config;
    let design = resolve_design(cfg)?;
    let grid = grid.unwrap_or(cfg.certification.r_grid);
    let points = grid.points();
    // Z = 0 makes every period admissible whatever the envelope; A_N + L C_N need not be Hurwitz then.
    let unbounded = design.gain_norm()? == 0.0 || design.c_norm() == 0.0;
    let env = if unbounded { None } else { Some(resolve_envelope(cfg, &design)?) };
    let curve = match &env {
        Some(env) => masp_curve(&design, env, &points, ctx.exec)?,
        None => points.iter().map(|&r| (r, f64::INFINITY)).collect(),
    };

    let mut csv = CsvWriter::new(ctx.create("masp_curve.csv")?, &["r", "t_max"])?;
    for (r, t) in &curve {
        csv.numbers(&[*r, *t])?;
    }
    finish(csv.into_inner())?;
    ctx.echo()?;

    let env = match env {
        Some(env) if curve.iter().any(|(_, t)| t.is_finite()) => env,
        _ => {
            println!("T_max infinite (zero gain or zero output kernel)");
            return Ok(None);
        }
    };
    let best = if points.len() == 1 {
        MaspOptimum { r: curve[0].0, t_max: curve[0].1 }
    } else {
        let opt = optimize_r(&design, &env, (grid.lo, *points.last().unwrap_or(&grid.hi)))?;
        if opt.at_edge {
            println!("optimum on the boundary of {}", fmt_grid(&grid));
        }
        MaspOptimum { r: opt.r, t_max: opt.t_max }
    };
    println!("r_star = {}", fmt_f64(best.r));
    println!("T_max_star = {}", fmt_f64(best.t_max));
    Ok(Some(best))
}

fn certification_period(cfg: &RunConfig) -> Result<f64> {
    cfg.certification.period.ok_or_else(|| Error::Config("certification.T is required".into()))
}

/// Writes `certificate.csv` for the configured `r` and `T`.
pub fn cmd_certify(ctx: &Context) -> Result<IOSCertificate> {
    let cfg = &ctx.config;
    let design = resolve_design(cfg)?;
    let env = resolve_envelope(cfg, &design)?;
    let t = certification_period(cfg)?;
    let r = cfg.certification.r;
    let masp = masp_closed_form(&design, &env, r)?;
    let cert = ios_certificate(&design, &env, r, t, cfg.certification.margin)?;

    let mut csv = CsvWriter::new(ctx.create("certificate.csv")?, &["quantity", "value"])?;
    let rows = [
        ("T", cert.period),
        ("r", cert.r),
        ("T_max", masp.t_max),
        ("R", env.r),
        ("omega", env.omega),
        ("sigma", cert.sigma),
        ("K", cert.k),
        ("gamma", cert.gamma),
        ("M", cert.m),
        ("loop_gain", cert.loop_gain),
    ];
    for (name, v) in rows {
        csv.row(&[name.to_string(), fmt_f64(v)])?;
        println!("{name} = {}", fmt_f64(v));
    }
    finish(csv.into_inner())?;
    ctx.echo()?;
    Ok(cert)
}

/// Per-run line of `verdict.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub run: usize,
    pub seed: u64,
    pub samples: usize,
    pub violations: Option<usize>,
    pub min_slack: f64,
    pub max_slack: f64,
    pub fitted_decay_rate: f64,
    pub sigma: f64,
    pub first_violation: f64,
}

pub const VERDICT_HEADER: [&str; 9] = [
    "run",
    "seed",
    "samples",
    "violations",
    "min_slack",
    "max_slack",
    "fitted_decay_rate",
    "certificate_sigma",
    "first_violation",
];

fn trace_name(run: usize, runs: usize) -> String {
    if runs == 1 {
        "trace.csv".to_string()
    } else {
        format!("trace_{run:04}.csv")
    }
}

/// Runs the configured batch and writes traces and `verdict.csv`.
///
/// Run `k` uses seed `seed + k`; runs execute in parallel and write disjoint files.
pub fn cmd_simulate(ctx: &Context) -> Result<Vec<Verdict>> {
    let cfg = &ctx.config;
    let sim = &cfg.simulation;
    let design = resolve_design(cfg)?;
    let seed = cfg.seed()?;
    let r = cfg.certification.r;

    let cert = if sim.verify {
        let env = resolve_envelope(cfg, &design)?;
        let t = match cfg.certification.period {
            Some(t) => t,
            None => SamplingSchedule::from_spec(&sim.schedule, Some(seed))?.max_gap(sim.horizon)?,
        };
        Some(ios_certificate(&design, &env, r, t, cfg.certification.margin)?)
    } else {
        None
    };

    let one = |k: usize| -> Result<Verdict> {
        let run_seed = seed.wrapping_add(k as u64);
        let mut rng = seeded_rng(run_seed, STREAM_INITIAL);
        let plant_ic = sim.plant_ic.to_modal(sim.modes, &mut rng)?;
        let observer_ic = sim.observer_ic.to_modal(sim.modes, &mut rng)?;
        let plant = PlantConfig::new(
            cfg.problem.q,
            sim.modes,
            &cfg.problem.kernel,
            plant_ic,
            observer_ic,
            &cfg.problem.forcing,
        )?;
        let schedule = SamplingSchedule::from_spec(&sim.schedule, Some(run_seed))?;
        if let Some(c) = &cert {
            let gap = schedule.max_gap(sim.horizon)?;
            if gap > c.period * (1.0 + 1e-12) {
                return Err(Error::Schedule(format!("sampling gap {gap} exceeds the certified period {}", c.period)));
            }
        }
        let spec = RunSpec {
            r,
            schedule,
            noise: NoiseModel::from_spec(&sim.noise, Some(run_seed))?,
            horizon: sim.horizon,
            record_dt: sim.record_dt,
            record_modes: false,
        };
        let trace = if sim.fast_path {
            simulator::run_fast_path(&plant, &design, &spec)?
        } else {
            simulator::run(&plant, &design, &spec)?
        };
        let e0 = plant.initial_error().spatial_norms();
        let report = cert.as_ref().map(|c| verify_bounds(&trace, c, &e0));
        let out = BufWriter::new(File::create(ctx.out.join(trace_name(k, sim.runs)))?);
        finish(trace.write_csv(out, report.as_ref().map(|r| r.bounds.as_slice()))?)?;
        Ok(Verdict {
            run: k,
            seed: run_seed,
            samples: trace.sample_times.len(),
            violations: report.as_ref().map(|r| r.violations),
            min_slack: report.as_ref().map_or(f64::NAN, |r| r.min_slack),
            max_slack: report.as_ref().map_or(f64::NAN, |r| r.max_slack),
            fitted_decay_rate: fitted_decay_rate(&trace).unwrap_or(f64::NAN),
            sigma: cert.map_or(f64::NAN, |c| c.sigma),
            first_violation: report.and_then(|r| r.first_violation).unwrap_or(f64::NAN),
        })
    };
    let verdicts: Vec<Verdict> = ctx.exec.map_range(sim.runs, one).into_iter().collect::<Result<_>>()?;

    let mut csv = CsvWriter::new(ctx.create("verdict.csv")?, &VERDICT_HEADER)?;
    for v in &verdicts {
        csv.row(&[
            v.run.to_string(),
            v.seed.to_string(),
            v.samples.to_string(),
            v.violations.map_or("nan".to_string(), |n| n.to_string()),
            fmt_f64(v.min_slack),
            fmt_f64(v.max_slack),
            fmt_f64(v.fitted_decay_rate),
            fmt_f64(v.sigma),
            fmt_f64(v.first_violation),
        ])?;
    }
    finish(csv.into_inner())?;
    ctx.echo()?;

    let total: usize = verdicts.iter().filter_map(|v| v.violations).sum();
    println!("runs = {}", verdicts.len());
    if let Some(c) = &cert {
        println!(
            "certificate: T = {}, sigma = {}, gamma = {}, M = {}",
            fmt_f64(c.period),
            fmt_f64(c.sigma),
            fmt_f64(c.gamma),
            fmt_f64(c.m)
        );
        println!("violations = {total}");
    }
    for v in &verdicts {
        println!("run {} fitted decay rate = {}", v.run, fmt_f64(v.fitted_decay_rate));
    }
    if total > 0 {
        let first = verdicts.iter().map(|v| v.first_violation).filter(|t| t.is_finite()).fold(f64::INFINITY, f64::min);
        return Err(Error::Verification { violations: total, first });
    }
    Ok(verdicts)
}

pub const ORACLE_HEADER: [&str; 6] = ["n_points", "h", "dt", "steps", "discrepancy", "observed_order"];

pub fn oracle_spec(cfg: &RunConfig) -> OracleSpec {
    let o = &cfg.oracle;
    OracleSpec {
        profile: o.profile.clone(),
        q: o.q,
        horizon: o.horizon,
        n_points: o.grid,
        dt: o.dt,
        modes: o.modes,
        checkpoints: ORACLE_CHECKPOINTS,
    }
}

/// Writes `oracle.csv`: one row, or one row per level of the convergence study.
pub fn cmd_oracle(ctx: &Context) -> Result<Vec<OracleReport>> {
    let cfg = &ctx.config;
    let spec = oracle_spec(cfg);
    let reports = if cfg.oracle.convergence {
        convergence_study(&spec, CONVERGENCE_LEVELS, ctx.exec)?
    } else {
        vec![fd_vs_spectral(&spec)?]
    };
    let orders = observed_orders(&reports);

    let mut csv = CsvWriter::new(ctx.create("oracle.csv")?, &ORACLE_HEADER)?;
    for (i, rep) in reports.iter().enumerate() {
        let order = if i == 0 { f64::NAN } else { orders[i - 1] };
        csv.row(&[
            rep.n_points.to_string(),
            fmt_f64(rep.h),
            fmt_f64(spec.dt),
            rep.steps.to_string(),
            fmt_f64(rep.discrepancy),
            fmt_f64(order),
        ])?;
        println!("grid {}: discrepancy = {}", rep.n_points, fmt_f64(rep.discrepancy));
    }
    for w in reports.windows(2) {
        println!("ratio {} -> {}: {:.4}", w[0].n_points, w[1].n_points, w[0].discrepancy / w[1].discrepancy);
    }
    finish(csv.into_inner())?;
    ctx.echo()?;
    Ok(reports)
}

/// Output directory precedence: command line, environment, config, `out`.
pub fn output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}
