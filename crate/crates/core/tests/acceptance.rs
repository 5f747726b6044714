//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]`
//! line with the measured quantities before asserting.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use kink_core::cone::{compute_constants, preservation_trials, ConstantsLedger};
use kink_core::grid::{make_grid, sample, GridSpec};
use kink_core::kernels::{eval_k1, KernelFamily};
use kink_core::numerics::integrate;
use kink_core::operators::{
    apply_t0, cross_validate, psi, smooth_profile_suite, t0_psi_analytic, t0_psi_analytic_derivative,
    OperatorConfig,
};
use kink_core::qscan::{scan, ScanConfig};
use kink_core::solver::{decay_diagnostic, refinement_change, solve, SolveConfig, SolveReport};
use rand::SeedableRng;

/// `1/√(5π)` to 30 digits.
const T0_PSI_SLOPE: f64 = 0.252_313_252_202_016_004_824_714_952;

/// Iterations to reach 1e-12 from the erf guess, recorded on the default
/// grid; allowed to drift by `ITERATION_SLACK` across platforms.
const ITERATIONS_Q0: usize = 22;
const ITERATIONS_HALF_Q0: usize = 22;
const ITERATION_SLACK: usize = 2;

/// Recorded end of the kink branch on the default grid and scan.
const Q_STAR_BRACKET: (f64, f64) = (2.346_862_792_968_75, 2.346_923_828_125);

fn grid() -> GridSpec<f64> {
    make_grid(20.0, 0.05).unwrap()
}

fn op() -> OperatorConfig<f64> {
    OperatorConfig::quadrature()
}

fn ledger() -> &'static ConstantsLedger<f64> {
    static L: OnceLock<ConstantsLedger<f64>> = OnceLock::new();
    L.get_or_init(|| compute_constants(&grid(), &op()).expect("ledger"))
}

fn solution_q0() -> &'static SolveReport<f64> {
    static R: OnceLock<SolveReport<f64>> = OnceLock::new();
    R.get_or_init(|| solve(&SolveConfig::new(0.0), &grid(), ledger(), &op()).expect("solve"))
}

fn report(name: &str, pass: bool, elapsed: Duration, details: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {name} ({:.2} s): {details}", elapsed.as_secs_f64());
}

#[test]
fn analytic_oracle() {
    let start = Instant::now();
    let g = grid();
    let p = sample(psi, &g, 0.5, -0.5).unwrap();
    let t0 = apply_t0(&p, &op());
    let sup_err = (0..g.n_points())
        .map(|j| (t0.values()[j] - t0_psi_analytic(g.x(j))).abs())
        .fold(0.0, f64::max);
    let slope_err = (t0_psi_analytic_derivative(0.0) - T0_PSI_SLOPE).abs();
    // Richardson-extrapolated central difference as an independent check
    let cd = |h: f64| (t0_psi_analytic(h) - t0_psi_analytic(-h)) / (2.0 * h);
    let fd = (4.0 * cd(5e-3) - cd(1e-2)) / 3.0;
    let fd_err = (fd - T0_PSI_SLOPE).abs();
    let elapsed = start.elapsed();
    let pass = sup_err <= 1e-8 && slope_err <= 1e-12 && fd_err <= 1e-9 && elapsed < Duration::from_secs(1);
    report(
        "analytic oracle",
        pass,
        elapsed,
        format!("sup|T0 psi - erf(x/sqrt5)/2| = {sup_err:.3e} (<= 1e-8), slope error {slope_err:.3e} (<= 1e-12), finite-difference slope error {fd_err:.3e}"),
    );
    assert!(pass);
}

#[test]
fn kernel_mass() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for q in [0.0, 0.25, 0.5, 1.0] {
        let f = KernelFamily::new(q).unwrap();
        let m: f64 = integrate(|u| f.eval(u), -40.0, 40.0, 1e-13, 1000).unwrap().value;
        worst = worst.max((m - 1.0).abs());
        assert_eq!(f.fourier_symbol(0.0), 1.0);
    }
    let k1 = integrate(eval_k1::<f64>, -40.0, 40.0, 1e-13, 1000).unwrap().value.abs();
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && k1 <= 1e-10 && elapsed < Duration::from_secs(1);
    report(
        "kernel mass",
        pass,
        elapsed,
        format!("max |int K_q - 1| = {worst:.3e}, |int K1| = {k1:.3e} (<= 1e-10), symbol(0) = 1 exactly"),
    );
    assert!(pass);
}

#[test]
fn constants_ledger() {
    let start = Instant::now();
    let l = compute_constants(&grid(), &op()).expect("ledger invariants");
    let elapsed = start.elapsed();
    let closing = l.c3.cbrt() * l.ell * l.c2.cbrt() >= l.c2;
    let cap = l.c2 * 0.5 < 1.0;
    let deformation = l.c4 * l.q0 * l.q0 < l.c3 * l.c2;
    let c5 = l.c5.iter().all(|e| e.c5 > 0.0 && e.c5 < 1.0);
    let definitional = l.c0 == l.b.sqrt() && l.c1 == l.c_hat * (l.c0 * l.e).cbrt();
    let pass = closing && cap && deformation && c5 && definitional && l.q0 > 0.0 && elapsed < Duration::from_secs(10);
    report(
        "constants ledger",
        pass,
        elapsed,
        format!(
            "b = {:.12}, e = {:.12}, c_hat = {:.12}, c3 = {:.12}, c4 = {:.12}, c2 = {:.12}, q0 = {:.12}; c4 q0^2 = {:.6e} < c3 c2 = {:.6e}; c5 in ({:.4}, {:.4})",
            l.b,
            l.e,
            l.c_hat,
            l.c3,
            l.c4,
            l.c2,
            l.q0,
            l.c4 * l.q0 * l.q0,
            l.c3 * l.c2,
            l.c5.last().unwrap().c5,
            l.c5[0].c5
        ),
    );
    assert!(pass);
}

#[test]
fn cone_preservation() {
    let start = Instant::now();
    let l = ledger();
    let mut members = 0;
    let mut trials = 0;
    let mut holder: f64 = 0.0;
    let mut gap = f64::INFINITY;
    for q in [0.0, l.q0 / 2.0, l.q0] {
        let s = preservation_trials(&grid(), l, &op(), q, 42, 100).unwrap();
        members += s.members;
        trials += s.trials;
        holder = holder.max(s.max_holder_ratio);
        gap = gap.min(s.min_psi_gap);
    }
    let elapsed = start.elapsed();
    let pass = members == 300 && trials == 300 && elapsed < Duration::from_secs(60);
    report(
        "cone preservation",
        pass,
        elapsed,
        format!("{members}/{trials} images in the cone; worst Hölder ratio {holder:.4}, min gap above c2 psi {gap:.4e}"),
    );
    assert!(pass);
}

#[test]
fn existence_of_kinks() {
    let l = ledger();
    let mut all = true;
    for (q, expected) in [(0.0, ITERATIONS_Q0), (l.q0 / 2.0, ITERATIONS_HALF_Q0)] {
        let start = Instant::now();
        let r = solve(&SolveConfig::new(q), &grid(), l, &op()).unwrap();
        let elapsed = start.elapsed();
        let s = r.solution();
        let odd = s.antisymmetry_defect();
        let end = (s.right_end() - 1.0).abs();
        let pass = r.converged
            && r.final_residual <= 1e-12
            && odd <= 1e-13
            && end <= 1e-6
            && r.cubed_residual <= 1e-10
            && r.iterations.abs_diff(expected) <= ITERATION_SLACK
            && elapsed < Duration::from_secs(30);
        report(
            &format!("kink at q = {q:.6}"),
            pass,
            elapsed,
            format!(
                "converged in {} iterations (recorded {expected}), residual {:.3e} (<= 1e-12), oddness {odd:.1e} (<= 1e-13), |phi(L) - 1| = {end:.3e} (<= 1e-6), sup|T_q phi - phi^3| = {:.3e} (<= 1e-10), in cone: {}",
                r.iterations, r.final_residual, r.cubed_residual, r.cone_member_final
            ),
        );
        all &= pass;
    }
    assert!(all);
}

#[test]
fn boundary_decay() {
    let sol = solution_q0();
    let start = Instant::now();
    let l = ledger();
    let d = decay_diagnostic(sol.solution(), &KernelFamily::new(0.0).unwrap(), l, 2.0, 2.0).unwrap();
    let elapsed = start.elapsed();
    let d1 = 0.5 * l.c2 * psi(2.0);
    let bound = l.c5_at(d1).expect("D1 is tabulated").sqrt() + 0.1;
    let pass = !d.degenerate && d.ratio < 1.0 && d.ratio <= bound && elapsed < Duration::from_secs(5);
    report(
        "boundary decay",
        pass,
        elapsed,
        format!("geometric ratio {:.4} over {} cutoffs (< 1 and <= sqrt(c5(D1)) + 0.1 = {bound:.4}, D1 = {d1:.4})", d.ratio, d.deltas.len()),
    );
    assert!(pass);
}

#[test]
fn discretisation_consistency() {
    let start = Instant::now();
    let g = grid();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let suite = smooth_profile_suite(&g, 8, &mut rng).unwrap();
    let mut cross: f64 = 0.0;
    for q in [0.0, 0.25, 0.5, 1.0] {
        let f = KernelFamily::new(q).unwrap();
        for (_, d) in cross_validate(&suite, &f, 12.0).unwrap() {
            cross = cross.max(d);
        }
    }
    let coarse = solution_q0();
    let fine = solve(&SolveConfig::new(0.0), &g.refined().unwrap(), ledger(), &op()).unwrap();
    let change = refinement_change(coarse.solution(), fine.solution()).unwrap();
    let elapsed = start.elapsed();
    let pass = cross <= 1e-8 && fine.converged && change <= 1e-6 && elapsed < Duration::from_secs(60);
    report(
        "discretisation consistency",
        pass,
        elapsed,
        format!("quadrature vs spectral {cross:.3e} over {} profiles x 4 q (<= 1e-8); h -> h/2 changes the q = 0 kink by {change:.3e} (<= 1e-6)", suite.len()),
    );
    assert!(pass);
}

#[test]
fn critical_q_scan() {
    let start = Instant::now();
    let l = ledger();
    let cfg = ScanConfig::default();
    let r = scan(&cfg, &grid(), l, &op()).unwrap();
    let elapsed = start.elapsed();
    let (lo, hi) = r.q_star_bracket.expect("a kink / no-kink change in [0, 3]");
    let recorded = (lo - Q_STAR_BRACKET.0).abs() <= 2.0 * cfg.bisect_tol && (hi - Q_STAR_BRACKET.1).abs() <= 2.0 * cfg.bisect_tol;
    let q0_range_kinks = r.samples.iter().filter(|s| s.q <= l.q0).all(|s| s.is_kink);
    let pass = hi - lo <= 1e-4
        && lo >= l.q0
        && r.warm_cold_agree()
        && r.cold_samples.len() == r.samples.len()
        && q0_range_kinks
        && recorded
        && elapsed < Duration::from_secs(600);
    report(
        "critical q scan",
        pass,
        elapsed,
        format!(
            "q* in [{lo:.10}, {hi:.10}] width {:.2e} (<= 1e-4), recorded [{:.10}, {:.10}]; q*_low >= q0 = {:.6}: {}; warm/cold agree on {} coarse samples: {}",
            hi - lo,
            Q_STAR_BRACKET.0,
            Q_STAR_BRACKET.1,
            l.q0,
            lo >= l.q0,
            r.samples.len(),
            r.warm_cold_agree()
        ),
    );
    assert!(pass);
}
