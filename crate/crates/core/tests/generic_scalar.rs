//! The numerical core instantiated at `f32`, checked against `f64`.

use kink_core::cone::{check_cone, compute_constants};
use kink_core::grid::make_grid;
use kink_core::operators::OperatorConfig;
use kink_core::solver::{solve, SolveConfig};
use kink_core::{GridSpec32, GridSpec64, Profile32};

fn grids() -> (GridSpec32, GridSpec64) {
    (make_grid(12.0_f32, 0.1).unwrap(), make_grid(12.0_f64, 0.1).unwrap())
}

#[test]
fn f32_kink_tracks_f64() {
    let (g32, g64) = grids();
    let l32 = compute_constants(&g32, &OperatorConfig::quadrature()).unwrap();
    let l64 = compute_constants(&g64, &OperatorConfig::quadrature()).unwrap();
    assert!((l32.q0 as f64 - l64.q0).abs() < 1e-5);

    let mut cfg32 = SolveConfig::new(0.1_f32);
    cfg32.tol = 1e-5;
    let r32 = solve(&cfg32, &g32, &l32, &OperatorConfig::quadrature()).unwrap();
    assert!(r32.converged && r32.is_kink);

    let r64 = solve(&SolveConfig::new(0.1), &g64, &l64, &OperatorConfig::quadrature()).unwrap();
    let worst = r32
        .solution()
        .values()
        .iter()
        .zip(r64.solution().values())
        .map(|(&a, &b)| (a as f64 - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "f32 vs f64: {worst:e}");
}

#[test]
fn f32_spectral_path_and_cone() {
    let (g32, _) = grids();
    let l32 = compute_constants(&g32, &OperatorConfig::spectral()).unwrap();
    let erf: Profile32 = kink_core::grid::sample(|x: f32| libm::erff(x), &g32, 1.0, -1.0).unwrap();
    assert!(check_cone(&erf, &l32).is_member());
    let mut cfg = SolveConfig::new(0.0_f32);
    cfg.tol = 1e-5;
    let r = solve(&cfg, &g32, &l32, &OperatorConfig::spectral()).unwrap();
    assert!(r.converged && r.solution().is_odd(0.0));
}
