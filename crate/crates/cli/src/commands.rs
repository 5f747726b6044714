use std::path::{Path, PathBuf};

use kink_core::cone::{compute_constants, compute_constants_with, preservation_trials, ConstantsLedger};
use kink_core::grid::{make_grid, GridSpec, Profile};
use kink_core::kernels::KernelFamily;
use kink_core::operators::{cross_validate, smooth_profile_suite, Method, OperatorConfig, DEFAULT_KERNEL_WINDOW};
use kink_core::qscan::{scan as run_scan, ScanConfig};
use kink_core::solver::{solve as run_solve, InitKind, SolveConfig};
use kink_core::KinkError;
use rand::SeedableRng;
use serde_json::json;

use crate::manifest::{sibling, Recorder};
use crate::{
    ConstantsArgs, Failure, FormatArg, GridArgs, KernelArgs, MethodArg, ScanArgs, SolveArgs, VerifyArgs, EXIT_INVARIANT,
    EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE,
};

/// Operator-oracle and cross-check threshold used by `verify`.
const VERIFY_TOL: f64 = 1e-8;
const VERIFY_RANDOM_PROFILES: usize = 4;

type Outcome = Result<u8, Failure>;

fn grid_of(a: &GridArgs) -> Result<GridSpec<f64>, Failure> {
    Ok(make_grid(a.half_width, a.h)?)
}

fn operator_of(m: MethodArg) -> OperatorConfig<f64> {
    match m {
        MethodArg::Quadrature => OperatorConfig::quadrature(),
        MethodArg::Spectral => OperatorConfig::spectral(),
    }
}

fn emit(rec: &mut Recorder, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => rec.write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_profile(path: &Path) -> Result<Profile<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure { code: EXIT_USAGE, message: format!("{}: {e}", path.display()) })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(if is_json { Profile::from_json(&text)? } else { Profile::from_csv(&text, 1.0, -1.0)? })
}

fn parse_init(spec: &str) -> Result<InitKind<f64>, Failure> {
    match spec {
        "erf" => Ok(InitKind::Erf),
        "psi" => Ok(InitKind::PsiScaled),
        "sign" => Ok(InitKind::Sign),
        other => match other.strip_prefix("file:") {
            Some(path) => Ok(InitKind::FromProfile(read_profile(Path::new(path))?)),
            None => Err(Failure {
                code: EXIT_USAGE,
                message: format!("unknown --init `{other}` (expected erf, psi, sign or file:PATH)"),
            }),
        },
    }
}

pub fn solve(a: SolveArgs) -> Outcome {
    let grid = grid_of(&a.grid)?;
    let op = operator_of(a.method);
    let mut cfg = SolveConfig::new(a.q);
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.damping = a.omega;
    cfg.cusp_correction = !a.no_cusp_correction;
    cfg.init = parse_init(&a.init)?;
    cfg.validate()?;
    let mut rec = Recorder::start(
        "solve",
        json!({
            "q": a.q, "L": a.grid.half_width, "h": a.grid.h, "tol": a.tol, "max_iter": a.max_iter,
            "omega": a.omega, "init": a.init, "method": Method::from(a.method), "format": format!("{:?}", a.format).to_lowercase(),
            "cusp_correction": cfg.cusp_correction, "kernel_window": DEFAULT_KERNEL_WINDOW,
        }),
    );
    let ledger = compute_constants(&grid, &op)?;
    let report = run_solve(&cfg, &grid, &ledger, &op)?;
    let body = match a.format {
        FormatArg::Csv => report.solution().to_csv(),
        FormatArg::Json => report.solution().to_json() + "\n",
    };
    emit(&mut rec, a.out.as_deref(), &body)?;
    let report_json = report.to_json(false) + "\n";
    match a.out.as_deref() {
        Some(p) => rec.write(&sibling(p, "report.json"), &report_json)?,
        None => eprint!("{report_json}"),
    }
    eprintln!(
        "q = {}: converged = {}, iterations = {}, residual = {:.3e}, phi(L) = {:.12}, kink = {}",
        a.q, report.converged, report.iterations, report.final_residual, report.amplitude, report.is_kink
    );
    let code = if report.is_kink { EXIT_OK } else { EXIT_NOT_CONVERGED };
    rec.finish(a.out.as_deref(), code)?;
    Ok(code)
}

pub fn constants(a: ConstantsArgs) -> Outcome {
    let grid = grid_of(&a.grid)?;
    let op = OperatorConfig::quadrature();
    let mut rec = Recorder::start("constants", json!({ "q_max": a.q_max, "L": a.grid.half_width, "h": a.grid.h }));
    match compute_constants_with(&grid, &op, a.q_max) {
        Ok(ledger) => {
            emit(&mut rec, a.out.as_deref(), &(ledger.to_json() + "\n"))?;
            rec.finish(a.out.as_deref(), EXIT_OK)?;
            Ok(EXIT_OK)
        }
        Err(KinkError::LedgerInvariant(msg)) => {
            eprintln!("ledger invariant violated: {msg}");
            rec.finish(a.out.as_deref(), EXIT_INVARIANT)?;
            Ok(EXIT_INVARIANT)
        }
        Err(e) => Err(e.into()),
    }
}

/// `0.1`, `q0`, or `q0/4`.
fn resolve_q(spec: &str, ledger: &ConstantsLedger<f64>) -> Result<f64, Failure> {
    let bad = || Failure { code: EXIT_USAGE, message: format!("cannot read --q `{spec}`") };
    let spec = spec.trim();
    if spec == "q0" {
        return Ok(ledger.q0);
    }
    if let Some(div) = spec.strip_prefix("q0/") {
        let n: f64 = div.trim().parse().map_err(|_| bad())?;
        if !(n > 0.0) {
            return Err(bad());
        }
        return Ok(ledger.q0 / n);
    }
    spec.parse().map_err(|_| bad())
}

struct Row {
    check: String,
    measured: f64,
    threshold: String,
    pass: bool,
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let grid = grid_of(&a.grid)?;
    let op = OperatorConfig::quadrature();
    let ledger = compute_constants(&grid, &op)?;
    let q = resolve_q(&a.q, &ledger)?;
    let mut rec = Recorder::start(
        "verify",
        json!({ "q_spec": a.q, "q": q, "seed": a.seed, "trials": a.trials, "L": a.grid.half_width, "h": a.grid.h }),
    );
    let family = KernelFamily::new(q)?;
    let mut rows = vec![Row {
        check: "T0 psi analytic oracle".into(),
        measured: ledger.t0_psi_oracle_error,
        threshold: format!("<= {VERIFY_TOL:e}"),
        pass: ledger.t0_psi_oracle_error <= VERIFY_TOL,
    }];

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let suite = smooth_profile_suite(&grid, VERIFY_RANDOM_PROFILES, &mut rng)?;
    let worst = cross_validate(&suite, &family, DEFAULT_KERNEL_WINDOW)?
        .into_iter()
        .map(|(_, d)| d)
        .fold(0.0, f64::max);
    rows.push(Row {
        check: "quadrature vs spectral".into(),
        measured: worst,
        threshold: format!("<= {VERIFY_TOL:e}"),
        pass: worst <= VERIFY_TOL,
    });

    let summary = preservation_trials(&grid, &ledger, &op, q, a.seed, a.trials)?;
    rows.push(Row {
        check: format!("cone preservation ({}/{})", summary.members, summary.trials),
        measured: summary.members as f64,
        threshold: format!("== {}", summary.trials),
        pass: summary.all_members(),
    });

    println!("{:<32} {:>14}  {:<14} result", "check", "measured", "threshold");
    for r in &rows {
        println!(
            "{:<32} {:>14.6e}  {:<14} {}",
            r.check,
            r.measured,
            r.threshold,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let all = rows.iter().all(|r| r.pass);
    let code = if all { EXIT_OK } else { EXIT_INVARIANT };
    if let Some(p) = a.out.as_deref() {
        let doc = json!({
            "q": q,
            "checks": rows.iter().map(|r| json!({"check": r.check, "measured": r.measured, "threshold": r.threshold, "pass": r.pass})).collect::<Vec<_>>(),
            "preservation": summary,
            "pass": all,
        });
        rec.write(p, &(serde_json::to_string_pretty(&doc).expect("serialises") + "\n"))?;
    }
    rec.finish(a.out.as_deref(), code)?;
    Ok(code)
}

pub fn scan(a: ScanArgs) -> Outcome {
    let grid = grid_of(&a.grid)?;
    let op = OperatorConfig::quadrature();
    let mut per_solve = SolveConfig::new(a.q_min);
    per_solve.max_iter = a.max_iter;
    let cfg = ScanConfig {
        q_min: a.q_min,
        q_max: a.q_max,
        coarse_steps: a.steps,
        bisect_tol: a.bisect_tol,
        cold_check: a.cold_check,
        per_solve,
    };
    cfg.validate()?;
    let mut rec = Recorder::start(
        "scan",
        json!({
            "q_min": a.q_min, "q_max": a.q_max, "steps": a.steps, "bisect_tol": a.bisect_tol,
            "cold_check": a.cold_check, "max_iter": a.max_iter, "L": a.grid.half_width, "h": a.grid.h,
        }),
    );
    let ledger = compute_constants(&grid, &op)?;
    let report = run_scan(&cfg, &grid, &ledger, &op)?;
    match a.out.as_deref() {
        Some(p) => {
            let (json_path, csv_path): (PathBuf, PathBuf) = (p.to_path_buf(), p.with_extension("csv"));
            let csv_path = if csv_path == json_path { sibling(p, "csv") } else { csv_path };
            rec.write(&json_path, &(report.to_json() + "\n"))?;
            rec.write(&csv_path, &report.to_csv())?;
        }
        None => println!("{}", report.to_json()),
    }
    match report.q_star_bracket {
        Some((lo, hi)) => eprintln!("q* in [{lo:.8}, {hi:.8}] (width {:.2e}), q0 = {:.8}", hi - lo, ledger.q0),
        None => eprintln!("no kink / no-kink change in [{}, {}]", a.q_min, a.q_max),
    }
    let mut code = EXIT_OK;
    if !report.warm_cold_agree() {
        eprintln!("WARNING: warm and cold classifications differ at q = {:?}", report.cold_disagreements);
        code = EXIT_INVARIANT;
    }
    if report.bracket_above_q0 == Some(false) {
        eprintln!("WARNING: lower end of the bracket lies below q0 = {}", ledger.q0);
        code = EXIT_INVARIANT;
    }
    rec.finish(a.out.as_deref(), code)?;
    Ok(code)
}

pub fn kernel(a: KernelArgs) -> Outcome {
    let family = KernelFamily::new(a.q)?;
    let mut rec = Recorder::start("kernel", json!({ "q": a.q, "x": a.x }));
    let doc = json!({
        "q": a.q,
        "sign_change": family.sign_change(),
        "derivative_sign_change": family.derivative_sign_change(),
        "abs_mass": family.abs_mass()?,
        "abs_derivative_mass": family.abs_derivative_mass()?,
        "fourier_symbol_at_zero": family.fourier_symbol(0.0),
        "points": a.x.iter().map(|&x| json!({
            "x": x,
            "k": family.eval(x),
            "dk": family.derivative(x),
            "symbol": family.fourier_symbol(x),
        })).collect::<Vec<_>>(),
    });
    emit(&mut rec, a.out.as_deref(), &(serde_json::to_string_pretty(&doc).expect("serialises") + "\n"))?;
    rec.finish(a.out.as_deref(), EXIT_OK)?;
    Ok(EXIT_OK)
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Quadrature => Method::Quadrature,
            MethodArg::Spectral => Method::Spectral,
        }
    }
}
