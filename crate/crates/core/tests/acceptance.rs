//! Acceptance criteria 1-11, one PASS/FAIL line each.

use ksobs::certificate::{ios_certificate, verify_bounds, STRICT_MARGIN};
use ksobs::config::EnvelopeStrategy;
use ksobs::design::{build_design, DesignResult};
use ksobs::envelope::{decay_envelope, DecayEnvelope};
use ksobs::exec::Exec;
use ksobs::fd::{convergence_study, OracleSpec};
use ksobs::linalg::{expm, log_space};
use ksobs::masp::{masp_by_bisection, masp_closed_form, masp_curve, optimize_r};
use ksobs::profile::{Forcing, Profile, TimeProfile};
use ksobs::simulator::{self, seeded_rng, NoiseModel, PlantConfig, RunSpec, SamplingSchedule};
use ksobs::spectral::ModalVector;
use nalgebra::DMatrix;
use rand::RngExt;
use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn q1() -> f64 {
    PI * PI + 1.0 / (PI * PI)
}

fn reference_r() -> f64 {
    (25.0 + 128.0 / PI.powi(4) + 9.0 * PI.powi(4) / 8.0).sqrt()
}

fn single_mode() -> (DesignResult, DecayEnvelope) {
    let d = build_design(q1(), 1, &Profile::Linear).unwrap().with_gain(vec![4.0, 3.0 * PI * PI / SQRT_2]).unwrap();
    (d, DecayEnvelope { r: reference_r(), omega: 1.0 })
}

fn kernel_coefficients() -> Outcome {
    let d = build_design(q1(), 1, &Profile::Linear).map_err(|e| e.to_string())?;
    let c1 = -2.0 * SQRT_2 / (PI * PI);
    let err = (d.c[0] - 0.5).abs().max((d.c[1] - c1).abs());
    check(err <= 1e-10, format!("c0 = {:.12}, c1 = {:.12}, max error {err:.2e}", d.c[0], d.c[1]))
}

fn exponential_closed_form() -> Outcome {
    let (d, _) = single_mode();
    let a = d.closed_loop().map_err(|e| e.to_string())?;
    let k = 8.0 * SQRT_2 / (PI * PI);
    let m = 3.0 * PI * PI / (2.0 * SQRT_2);
    let mut worst: f64 = 0.0;
    for t in [0.1f64, 0.5, 1.0, 3.0] {
        let e = (-t).exp();
        let exact = DMatrix::from_row_slice(2, 2, &[4.0 - 3.0 * e, k * (e - 1.0), m * (1.0 - e), 4.0 * e - 3.0]) * e;
        let numeric = expm(&a, t).map_err(|e| e.to_string())?;
        worst = worst.max((numeric - exact).amax());
    }
    check(worst <= 1e-9, format!("max entrywise error {worst:.2e}"))
}

fn envelope_validation() -> Outcome {
    let (d, env) = single_mode();
    let a = d.closed_loop().map_err(|e| e.to_string())?;
    let times = log_space(1e-4, 50.0, 200);
    let gap = env.check(&a, &times).map_err(|e| e.to_string())?;
    let accepted = decay_envelope(&a, EnvelopeStrategy::User { r: env.r, omega: env.omega }).is_ok();
    check(accepted, format!("R = {:.6}, worst gap {:.2e} at t = {:.3}", env.r, gap.worst_gap, gap.worst_t))
}

fn masp_reproduction() -> Outcome {
    let (d, env) = single_mode();
    let grid: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 * 0.005).collect();
    let curve = masp_curve(&d, &env, &grid, Exec::Parallel).map_err(|e| e.to_string())?;
    let (r_best, t_best) = curve.iter().copied().fold((f64::NAN, 0.0), |a, p| if p.1 > a.1 { p } else { a });
    let opt = optimize_r(&d, &env, (-1.0, 1.0)).map_err(|e| e.to_string())?;
    let ok =
        (-0.25..=-0.15).contains(&r_best) && (0.0155..=0.0166).contains(&t_best) && (opt.t_max - 0.01606).abs() <= 5e-4;
    check(
        ok,
        format!("grid max T = {t_best:.6} at r = {r_best:.3}; refined T* = {:.6} at r* = {:.4}", opt.t_max, opt.r),
    )
}

fn closed_form_vs_bisection() -> Outcome {
    let mut rng = seeded_rng(20_240_601, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let order = rng.random_range(1..=3usize);
        let q = rng.random_range(0.0..(order as f64 + 1.0).powi(2) * PI * PI * 0.95);
        let coeffs: Vec<f64> = (0..=order).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gain: Vec<f64> = (0..=order).map(|_| rng.random_range(-20.0..20.0)).collect();
        let d = build_design(q, order, &Profile::Coefficients(coeffs))
            .and_then(|d| d.with_gain(gain))
            .map_err(|e| e.to_string())?;
        let env = DecayEnvelope { r: rng.random_range(1.0..20.0), omega: rng.random_range(0.1..5.0) };
        let r = rng.random_range(-3.0..3.0);
        let closed = masp_closed_form(&d, &env, r).map_err(|e| e.to_string())?.t_max;
        let bisect = masp_by_bisection(&d, &env, r).map_err(|e| e.to_string())?;
        worst = worst.max((closed - bisect).abs() / closed);
    }
    check(worst <= 1e-8, format!("50 designs, max relative difference {worst:.2e}"))
}

fn bound_satisfaction() -> Outcome {
    let (d, env) = single_mode();
    let t = 0.01;
    let cert = ios_certificate(&d, &env, -0.2, t, STRICT_MARGIN).map_err(|e| e.to_string())?;
    let modes = 64;
    let results: Vec<Result<(usize, f64), String>> = Exec::Parallel.map_range(20, |k| {
        let seed = 1000 + k as u64;
        let initial = Profile::Random { order: 10, scale: 2.0 }
            .to_modal(modes, &mut seeded_rng(seed, simulator::STREAM_INITIAL))
            .map_err(|e| e.to_string())?;
        let plant = PlantConfig::new(q1(), modes, &Profile::Linear, initial, ModalVector::zeros(modes), &Forcing::Zero)
            .map_err(|e| e.to_string())?;
        let spec = RunSpec {
            r: -0.2,
            schedule: SamplingSchedule::Jittered { period: t, seed },
            noise: NoiseModel::None,
            horizon: 5.0,
            record_dt: 0.01,
            record_modes: false,
        };
        if spec.schedule.max_gap(5.0).map_err(|e| e.to_string())? > t {
            return Err("jittered gap exceeds T".into());
        }
        let trace = simulator::run(&plant, &d, &spec).map_err(|e| e.to_string())?;
        let report = verify_bounds(&trace, &cert, &plant.initial_error().spatial_norms());
        Ok((report.violations, report.min_slack))
    });
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for r in results {
        let (v, s) = r?;
        violations += v;
        min_slack = min_slack.min(s);
    }
    check(violations == 0, format!("20 schedules, {violations} violations, min slack {min_slack:.3e}"))
}

fn noise_sup(d: &DesignResult, amplitude: f64) -> Result<f64, String> {
    let modes = 32;
    let plant_ic =
        Profile::Gaussian { center: 0.4, width: 0.15, amplitude: 1.0 }.modal(modes).map_err(|e| e.to_string())?;
    let plant = PlantConfig::new(q1(), modes, &Profile::Linear, plant_ic.clone(), plant_ic, &Forcing::Zero)
        .map_err(|e| e.to_string())?;
    let spec = RunSpec {
        r: -0.2,
        schedule: SamplingSchedule::Uniform { period: 0.01 },
        noise: NoiseModel::Sinusoid { amplitude, frequency: 3.0, phase: 0.4 },
        horizon: 5.0,
        record_dt: 0.005,
        record_modes: false,
    };
    Ok(simulator::run(&plant, d, &spec).map_err(|e| e.to_string())?.sup_error_after(1.0))
}

fn ios_property() -> Outcome {
    let (d, env) = single_mode();
    let cert = ios_certificate(&d, &env, -0.2, 0.01, STRICT_MARGIN).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for b in [0.01, 0.1] {
        let sup = noise_sup(&d, b)?;
        let doubled = noise_sup(&d, 2.0 * b)?;
        let ratio = doubled / sup;
        ok &= sup <= cert.gamma * b && ratio <= 2.0 * 1.05;
        parts.push(format!("b = {b}: sup {sup:.4e} (gamma b = {:.2e}), doubling ratio {ratio:.6}", cert.gamma * b));
    }
    check(ok, parts.join("; "))
}

fn tail_exactness() -> Outcome {
    let (d, _) = single_mode();
    let modes = 16;
    let tail = d.order + 1;
    let amplitude = 0.7;
    let mut observer_ic = ModalVector::zeros(modes);
    observer_ic.coeffs[tail] = amplitude;
    let plant = PlantConfig::new(q1(), modes, &Profile::Linear, ModalVector::zeros(modes), observer_ic, &Forcing::Zero)
        .map_err(|e| e.to_string())?;
    let spec = RunSpec {
        r: -0.2,
        schedule: SamplingSchedule::Uniform { period: 0.002 },
        noise: NoiseModel::None,
        horizon: 0.01,
        record_dt: 0.0005,
        record_modes: true,
    };
    let trace = simulator::run(&plant, &d, &spec).map_err(|e| e.to_string())?;
    let mu = d.mu_tail();
    let mut worst: f64 = 0.0;
    for rec in &trace.records {
        let e = ModalVector::new(rec.error_modes.clone().ok_or("modes not recorded")?);
        let expected = amplitude * (mu * rec.t).exp();
        worst = worst.max((e.tail_norms(d.order).l2 - expected).abs() / expected);
    }
    check(worst <= 1e-10, format!("mu_(N+1) = {mu:.6}, max relative deviation {worst:.2e}"))
}

fn oracle_equivalence() -> Outcome {
    let spec = OracleSpec {
        profile: Profile::Cosine(2.0),
        q: q1(),
        horizon: 0.01,
        n_points: 201,
        dt: 1e-6,
        modes: 64,
        checkpoints: 10,
    };
    let reports = convergence_study(&spec, 2, Exec::Parallel).map_err(|e| e.to_string())?;
    let (coarse, fine) = (reports[0].discrepancy, reports[1].discrepancy);
    let ratio = coarse / fine;
    check(
        coarse <= 1e-3 && ratio >= 3.2,
        format!(
            "grid 201 discrepancy {coarse:.4e} (limit 1e-3: {}), grid 401 {fine:.4e}, ratio {ratio:.3} (limit 3.2: {})",
            if coarse <= 1e-3 { "met" } else { "NOT met" },
            if ratio >= 3.2 { "met" } else { "NOT met" }
        ),
    )
}

fn fast_path_equivalence() -> Outcome {
    let (d, _) = single_mode();
    let modes = 48;
    let plant_ic = Profile::Random { order: 12, scale: 1.0 }
        .to_modal(modes, &mut seeded_rng(5, simulator::STREAM_INITIAL))
        .map_err(|e| e.to_string())?;
    let observer_ic = ModalVector::new(vec![0.3, -0.2]).resized(modes);
    let forcing = Forcing::Separable {
        space: Profile::Coefficients(vec![0.5, 1.0]),
        time: TimeProfile::Sinusoid { amplitude: 2.0, frequency: 4.0, phase: 0.1 },
    };
    let plant =
        PlantConfig::new(q1(), modes, &Profile::Linear, plant_ic, observer_ic, &forcing).map_err(|e| e.to_string())?;
    let spec = RunSpec {
        r: -0.2,
        schedule: SamplingSchedule::Jittered { period: 0.01, seed: 5 },
        noise: NoiseModel::Sinusoid { amplitude: 0.05, frequency: 7.0, phase: 0.0 },
        horizon: 3.0,
        record_dt: 0.01,
        record_modes: false,
    };
    let full = simulator::run(&plant, &d, &spec).map_err(|e| e.to_string())?;
    let fast = simulator::run_fast_path(&plant, &d, &spec).map_err(|e| e.to_string())?;
    let worst =
        full.records.iter().zip(&fast.records).map(|(a, b)| (a.error.l2 - b.error.l2).abs()).fold(0.0, f64::max);
    check(
        full.records.len() == fast.records.len() && worst <= 1e-10,
        format!("{} records, max |delta ||e||| = {worst:.2e}", full.records.len()),
    )
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli_outputs(args: &[&str], dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ksobs"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .current_dir(workspace_root())
        .env_remove("KSOBS_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.map_err(|e| e.to_string())?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(|e| e.to_string())?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["simulate", "--config", "configs/single_mode_batch.cfg", "--seed", "99"],
        &["simulate", "--config", "configs/single_mode.cfg", "--jobs", "1"],
        &["masp", "--config", "configs/single_mode.cfg"],
        &["design", "--config", "configs/single_mode.cfg"],
    ];
    let mut compared = 0;
    for args in runs {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        let first = cli_outputs(args, a.path())?;
        let second = cli_outputs(args, b.path())?;
        if first != second {
            return Err(format!("outputs of {args:?} differ"));
        }
        compared += first.iter().filter(|(name, _)| name.ends_with(".csv")).count();
    }
    check(compared > 0, format!("{compared} CSV files byte-identical across repeated runs"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("kernel coefficients", kernel_coefficients),
        ("matrix exponential closed form", exponential_closed_form),
        ("envelope validation", envelope_validation),
        ("MASP curve and optimum", masp_reproduction),
        ("closed form vs bisection", closed_form_vs_bisection),
        ("error bounds on jittered schedules", bound_satisfaction),
        ("IOS noise gain and linearity", ios_property),
        ("tail-mode exactness", tail_exactness),
        ("finite-difference oracle", oracle_equivalence),
        ("reduced observer equivalence", fast_path_equivalence),
        ("CLI determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
