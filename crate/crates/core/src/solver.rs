//! Damped Picard iteration `Φ ← project_odd((1−ω)Φ + ω·P_qΦ)` for kink
//! solutions of `Φ³ = T_qΦ`, with per-run diagnostics.

use serde::{Deserialize, Serialize};

use crate::cone::{check_cone, ConeReport, ConstantsLedger};
use crate::error::{KinkError, Result};
use crate::grid::{sample, GridSpec, Profile, ProfileRecord};
use crate::kernels::KernelFamily;
use crate::operators::{apply_tq_cusp, estimate_cusp_amplitude, OperatorConfig};
use crate::scalar::{cast, from_usize, signed_cube_root, Real};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Damping used once the residual has grown for [`OSCILLATION_WINDOW`]
/// consecutive steps.
pub const FALLBACK_DAMPING: f64 = 0.5;
pub const OSCILLATION_WINDOW: usize = 5;

/// A converged run is a kink when `Φ > KINK_THRESHOLD` on the whole outer
/// half `x ≥ KINK_WINDOW·L`. Checking only `Φ(L)` lets periodic pattern
/// states through whenever their oscillation happens to be high at `x = L`.
pub const KINK_THRESHOLD: f64 = 0.5;
pub const KINK_WINDOW: f64 = 0.5;

/// Half-width of the linear ramp in the sign guess. The Hölder bound needs
/// at least `4/C¹³ ≈ 1.0`; staying above `C²Ψ` near the origin needs at
/// most `√π/C² ≈ 1.87`.
pub const SIGN_RAMP_HALF_WIDTH: f64 = 1.25;

pub const DECAY_L0: f64 = 2.0;
pub const DECAY_STEP: f64 = 2.0;

/// `δ(l)` values at or below this are treated as rounding noise.
pub const DECAY_NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind<T> {
    Erf,
    /// `2Ψ`, identical to `erf`.
    PsiScaled,
    Sign,
    FromProfile(Profile<T>),
}

impl<T> InitKind<T> {
    pub fn label(&self) -> &'static str {
        match self {
            InitKind::Erf => "erf",
            InitKind::PsiScaled => "psi",
            InitKind::Sign => "sign",
            InitKind::FromProfile(_) => "file",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig<T> {
    pub q: T,
    /// Mixing weight `ω ∈ (0, 1]`.
    pub damping: T,
    pub tol: T,
    pub max_iter: usize,
    pub init: InitKind<T>,
    pub enforce_odd: bool,
    /// Add the `|x|^{1/3}` cusp term to the trapezoid sums.
    pub cusp_correction: bool,
    /// Run `check_cone` on every iterate.
    pub check_cone_each_iter: bool,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(q: T) -> Self {
        Self {
            q,
            damping: T::one(),
            tol: cast(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
            init: InitKind::Erf,
            enforce_odd: true,
            cusp_correction: true,
            check_cone_each_iter: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= T::zero()) || !self.q.is_finite() {
            return Err(KinkError::InvalidParameter(format!("q must be non-negative, got {}", self.q)));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(KinkError::InvalidParameter(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > T::zero()) {
            return Err(KinkError::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(KinkError::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct InitialGuess<T> {
    pub profile: Profile<T>,
    pub cone: ConeReport<T>,
}

pub fn initial_guess<T: Real>(
    kind: &InitKind<T>,
    grid: &GridSpec<T>,
    ledger: &ConstantsLedger<T>,
) -> Result<InitialGuess<T>> {
    let one = T::one();
    let profile = match kind {
        InitKind::Erf | InitKind::PsiScaled => sample(|x: T| x.erf(), grid, one, -one)?,
        InitKind::Sign => {
            let w: T = cast(SIGN_RAMP_HALF_WIDTH);
            sample(|x: T| (x / w).max(-one).min(one), grid, one, -one)?
        }
        InitKind::FromProfile(p) => {
            if p.grid() != grid {
                return Err(KinkError::GridMismatch);
            }
            p.clone()
        }
    };
    let cone = check_cone(&profile, ledger);
    Ok(InitialGuess { profile, cone })
}

/// One Picard evaluation: `P_qΦ` and the cusp amplitude it used.
fn picard_map<T: Real>(
    p: &Profile<T>,
    family: &KernelFamily<T>,
    cfg_op: &OperatorConfig<T>,
    cusp_correction: bool,
) -> (Profile<T>, T) {
    let amplitude = if cusp_correction { estimate_cusp_amplitude(p) } else { T::zero() };
    let image = apply_tq_cusp(p, family, cfg_op, amplitude).map(signed_cube_root).expect("finite");
    (image, amplitude)
}

fn mix<T: Real>(p: &Profile<T>, image: &Profile<T>, damping: T, enforce_odd: bool) -> Result<Profile<T>> {
    let mixed = if damping == T::one() { image.clone() } else { p.combine(T::one() - damping, image, damping)? };
    if enforce_odd {
        mixed.project_odd()
    } else {
        Ok(mixed)
    }
}

pub fn iterate_once<T: Real>(
    p: &Profile<T>,
    cfg: &SolveConfig<T>,
    family: &KernelFamily<T>,
    cfg_op: &OperatorConfig<T>,
) -> Result<Profile<T>> {
    let (image, _) = picard_map(p, family, cfg_op, cfg.cusp_correction);
    mix(p, &image, cfg.damping, cfg.enforce_odd)
}

/// `sup |T_qΦ − Φ³|` with the same discrete operator the solver uses.
pub fn cubed_residual<T: Real>(
    p: &Profile<T>,
    family: &KernelFamily<T>,
    cfg_op: &OperatorConfig<T>,
    cusp_correction: bool,
) -> T {
    let amplitude = if cusp_correction { estimate_cusp_amplitude(p) } else { T::zero() };
    let t = apply_tq_cusp(p, family, cfg_op, amplitude);
    t.values().iter().zip(p.values()).map(|(&a, &v)| (a - v * v * v).abs()).fold(T::zero(), T::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostic<T> {
    pub l0: T,
    pub step: T,
    /// `(l, δ(l))` with `δ(l) = sup_{x > l} |1 − Φ(x)|`, down to the noise floor.
    pub deltas: Vec<(T, T)>,
    /// Least-squares geometric ratio of successive `δ`.
    pub ratio: T,
    /// `δ(l₀) = 0`.
    pub degenerate: bool,
    /// Fewer than two cutoffs stayed above the noise floor; `ratio` is then
    /// the floor over `δ(l₀)`, an upper estimate.
    pub hit_noise_floor: bool,
    /// `½C²Ψ(l₀)`.
    pub d1: T,
    /// `√C⁵(D₁)` from the ledger table, when `D₁` is tabulated.
    pub sqrt_c5: Option<T>,
    /// `∫|K_q|`.
    pub abs_mass: T,
}

pub fn decay_diagnostic<T: Real>(
    p: &Profile<T>,
    family: &KernelFamily<T>,
    ledger: &ConstantsLedger<T>,
    l0: T,
    step: T,
) -> Result<DecayDiagnostic<T>> {
    let grid = p.grid();
    if !(l0 > T::zero() && l0 < grid.half_width() / cast(4.0)) {
        return Err(KinkError::InvalidParameter(format!("l0 must lie in (0, L/4), got {l0}")));
    }
    if !(step > T::zero()) {
        return Err(KinkError::InvalidParameter(format!("decay step must be positive, got {step}")));
    }
    let delta = |l: T| {
        (0..grid.n_points())
            .filter(|&j| grid.x(j) > l)
            .map(|j| (T::one() - p.values()[j]).abs())
            .fold((T::one() - p.tail_right()).abs(), T::max)
    };
    let floor: T = cast(DECAY_NOISE_FLOOR);
    let d1 = ledger.c2 * crate::operators::psi(l0) * cast(0.5);
    let sqrt_c5 = ledger.c5_at(d1).map(|c| c.sqrt());
    let abs_mass = family.abs_mass()?;
    let first = delta(l0);
    let mut deltas = vec![(l0, first)];
    if first == T::zero() {
        return Ok(DecayDiagnostic {
            l0,
            step,
            deltas,
            ratio: T::zero(),
            degenerate: true,
            hit_noise_floor: false,
            d1,
            sqrt_c5,
            abs_mass,
        });
    }
    let mut k = 1usize;
    loop {
        let l = l0 + from_usize::<T>(k) * step;
        if l >= grid.half_width() {
            break;
        }
        let d = delta(l);
        if d <= floor {
            break;
        }
        deltas.push((l, d));
        k += 1;
    }
    let (ratio, hit_noise_floor) = if deltas.len() < 2 {
        ((floor / first).min(T::one()), true)
    } else {
        // slope of log δ against the cutoff index
        let m = from_usize::<T>(deltas.len());
        let ks: Vec<T> = (0..deltas.len()).map(from_usize).collect();
        let ys: Vec<T> = deltas.iter().map(|(_, d)| d.ln()).collect();
        let kbar = ks.iter().copied().sum::<T>() / m;
        let ybar = ys.iter().copied().sum::<T>() / m;
        let num: T = ks.iter().zip(&ys).map(|(&k, &y)| (k - kbar) * (y - ybar)).sum();
        let den: T = ks.iter().map(|&k| (k - kbar) * (k - kbar)).sum();
        ((num / den).exp(), false)
    };
    Ok(DecayDiagnostic { l0, step, deltas, ratio, degenerate: false, hit_noise_floor, d1, sqrt_c5, abs_mass })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub q: T,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: T,
    pub residual_trace: Vec<T>,
    pub initial_cone_member: bool,
    pub cone_member_final: bool,
    pub cone_final: ConeReport<T>,
    /// Iterations whose iterate failed `check_cone`, when checked.
    pub cone_violations: Vec<usize>,
    pub decay_estimate: T,
    pub decay_degenerate: bool,
    /// Cusp amplitude `a` in `Φ ≈ a·sign(x)|x|^{1/3}` near the origin.
    pub cusp_amplitude: T,
    /// `Φ(L)`.
    pub amplitude: T,
    /// `max(|Φ(L) − 1|, |Φ(−L) + 1|)`, reported, not enforced.
    pub boundary_defect: T,
    /// `min Φ` over `x ≥ L/2`, tail included.
    pub tail_min: T,
    /// Converged with `tail_min > 0.5`.
    pub is_kink: bool,
    pub damping_final: T,
    /// Iteration at which the fallback damping took over.
    pub damping_switched_at: Option<usize>,
    /// Final `sup |T_qΦ − Φ³|`.
    pub cubed_residual: T,
    #[serde(skip)]
    pub solution: Option<Profile<T>>,
}

impl<T: Real + Serialize> SolveReport<T> {
    pub fn solution(&self) -> &Profile<T> {
        self.solution.as_ref().expect("solve always stores its solution")
    }

    /// JSON report; the profile is inlined when `inline_profile` is set.
    pub fn to_json(&self, inline_profile: bool) -> String {
        let mut value = serde_json::to_value(self).expect("report serialises");
        if inline_profile {
            let rec: ProfileRecord = self.solution().to_json_record();
            value["solution"] = serde_json::to_value(rec).expect("profile serialises");
        }
        serde_json::to_string_pretty(&value).expect("report serialises")
    }
}

pub fn solve<T: Real>(
    cfg: &SolveConfig<T>,
    grid: &GridSpec<T>,
    ledger: &ConstantsLedger<T>,
    cfg_op: &OperatorConfig<T>,
) -> Result<SolveReport<T>> {
    cfg.validate()?;
    let family = KernelFamily::new(cfg.q)?;
    let guess = initial_guess(&cfg.init, grid, ledger)?;
    let mut p = if cfg.enforce_odd { guess.profile.project_odd()? } else { guess.profile };
    let mut damping = cfg.damping;
    let mut damping_switched_at = None;
    let mut trace = Vec::new();
    let mut cone_violations = Vec::new();
    let mut rising = 0usize;
    let mut converged = false;
    let mut cusp_amplitude = T::zero();

    while trace.len() < cfg.max_iter {
        if cfg.check_cone_each_iter && !check_cone(&p, ledger).is_member() {
            cone_violations.push(trace.len());
        }
        let (image, amp) = picard_map(&p, &family, cfg_op, cfg.cusp_correction);
        cusp_amplitude = amp;
        let residual = image.sup_distance(&p)?;
        trace.push(residual);
        if !residual.is_finite() {
            break;
        }
        if residual <= cfg.tol {
            converged = true;
            break;
        }
        let n = trace.len();
        rising = if n >= 2 && trace[n - 1] > trace[n - 2] { rising + 1 } else { 0 };
        if rising >= OSCILLATION_WINDOW && damping_switched_at.is_none() && damping > cast(FALLBACK_DAMPING) {
            damping = cast(FALLBACK_DAMPING);
            damping_switched_at = Some(n);
            rising = 0;
        }
        p = mix(&p, &image, damping, cfg.enforce_odd)?;
    }

    let final_residual = *trace.last().expect("at least one iteration");
    let cone_final = check_cone(&p, ledger);
    let amplitude = p.right_end();
    let left_end = p.values()[0];
    let boundary_defect = (amplitude - T::one()).abs().max((left_end + T::one()).abs());
    let tail_min = outer_min(&p);
    let is_kink = converged && tail_min > cast(KINK_THRESHOLD);
    let (decay_estimate, decay_degenerate) = if is_kink {
        let d = decay_diagnostic(&p, &family, ledger, cast(DECAY_L0), cast(DECAY_STEP))?;
        (d.ratio, d.degenerate)
    } else {
        (T::nan(), false)
    };
    let cubed = cubed_residual(&p, &family, cfg_op, cfg.cusp_correction);
    Ok(SolveReport {
        q: cfg.q,
        converged,
        iterations: trace.len(),
        final_residual,
        residual_trace: trace,
        initial_cone_member: guess.cone.is_member(),
        cone_member_final: cone_final.is_member(),
        cone_final,
        cone_violations,
        decay_estimate,
        decay_degenerate,
        cusp_amplitude,
        amplitude,
        boundary_defect,
        tail_min,
        is_kink,
        damping_final: damping,
        damping_switched_at,
        cubed_residual: cubed,
        solution: Some(p),
    })
}

/// `min Φ` over the outer window `x ≥ KINK_WINDOW·L`, tail included.
pub fn outer_min<T: Real>(p: &Profile<T>) -> T {
    let grid = p.grid();
    let start = grid.half_width() * cast(KINK_WINDOW);
    (0..grid.n_points())
        .filter(|&j| grid.x(j) >= start)
        .map(|j| p.values()[j])
        .fold(p.tail_right(), T::min)
}

/// Sup-norm change of the solution between `h` and `h/2`, compared on the
/// coarse nodes.
pub fn refinement_change<T: Real>(coarse: &Profile<T>, fine: &Profile<T>) -> Result<T> {
    coarse.sup_distance(&fine.coarsen()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::compute_constants;
    use crate::grid::make_grid;
    use std::sync::OnceLock;

    fn grid() -> GridSpec<f64> {
        make_grid(20.0, 0.05).unwrap()
    }

    fn ledger() -> &'static ConstantsLedger<f64> {
        static L: OnceLock<ConstantsLedger<f64>> = OnceLock::new();
        L.get_or_init(|| compute_constants(&grid(), &OperatorConfig::quadrature()).unwrap())
    }

    fn q0_solution() -> &'static SolveReport<f64> {
        static R: OnceLock<SolveReport<f64>> = OnceLock::new();
        R.get_or_init(|| solve(&SolveConfig::new(0.0), &grid(), ledger(), &OperatorConfig::quadrature()).unwrap())
    }

    #[test]
    fn config_validation() {
        let mut c = SolveConfig::new(0.0);
        c.damping = 0.0;
        assert!(c.validate().is_err());
        c.damping = 1.0;
        c.tol = 0.0;
        assert!(c.validate().is_err());
        assert!(SolveConfig::new(-1.0).validate().is_err());
        assert!(SolveConfig::new(0.3).validate().is_ok());
    }

    #[test]
    fn initial_guesses_are_members() {
        let g = grid();
        for kind in [InitKind::Erf, InitKind::PsiScaled, InitKind::Sign] {
            let guess = initial_guess(&kind, &g, ledger()).unwrap();
            assert!(guess.cone.is_member(), "{}: {:?}", kind.label(), guess.cone);
            assert!(guess.profile.is_odd(0.0));
        }
        let erf = initial_guess(&InitKind::Erf, &g, ledger()).unwrap().profile;
        let psi = initial_guess(&InitKind::PsiScaled, &g, ledger()).unwrap().profile;
        assert_eq!(erf, psi);
        let other = Profile::constant(make_grid(10.0, 0.05).unwrap(), 0.0);
        assert!(matches!(
            initial_guess(&InitKind::FromProfile(other), &g, ledger()),
            Err(KinkError::GridMismatch)
        ));
    }

    #[test]
    fn q_zero_solution() {
        let r = q0_solution();
        assert!(r.converged);
        assert!(r.final_residual <= 1e-12);
        assert_eq!(r.residual_trace.len(), r.iterations);
        let s = r.solution();
        assert!(s.is_odd(1e-13));
        assert!((s.right_end() - 1.0).abs() <= 1e-6);
        assert!(s.values().windows(2).all(|w| w[1] >= w[0]), "monotone on the grid");
        assert!(r.is_kink && r.cone_member_final);
        assert!(r.cubed_residual <= 1e-10);
        assert!(r.decay_estimate < 1.0);
        let tail = &r.residual_trace[r.iterations - 10..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0] * 1.1));
    }

    #[test]
    fn restart_from_solution_is_immediate() {
        let mut cfg = SolveConfig::new(0.0);
        cfg.init = InitKind::FromProfile(q0_solution().solution().clone());
        let r = solve(&cfg, &grid(), ledger(), &OperatorConfig::quadrature()).unwrap();
        assert!(r.converged && r.iterations <= 2);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let s = q0_solution().solution();
        let cfg = SolveConfig::new(0.0);
        let next = iterate_once(s, &cfg, &KernelFamily::new(0.0).unwrap(), &OperatorConfig::quadrature()).unwrap();
        assert!(next.sup_distance(s).unwrap() <= 1e-12);
    }

    #[test]
    fn one_step_reduces_residual() {
        let g = grid();
        let fam = KernelFamily::new(0.0).unwrap();
        let cfg = SolveConfig::new(0.0);
        let op = OperatorConfig::quadrature();
        let p0 = initial_guess(&InitKind::Erf, &g, ledger()).unwrap().profile;
        let p1 = iterate_once(&p0, &cfg, &fam, &op).unwrap();
        let p2 = iterate_once(&p1, &cfg, &fam, &op).unwrap();
        let r0 = p1.sup_distance(&p0).unwrap();
        let r1 = p2.sup_distance(&p1).unwrap();
        assert!(r1 < r0, "{r1} !< {r0}");
    }

    #[test]
    fn odd_projection_removes_even_drift() {
        let g = grid();
        let fam = KernelFamily::new(0.0).unwrap();
        let cfg = SolveConfig::new(0.0);
        let p = sample(|x: f64| Real::erf(x) + 0.1, &g, 1.0, -1.0).unwrap();
        let next = iterate_once(&p, &cfg, &fam, &OperatorConfig::quadrature()).unwrap();
        assert!(next.is_odd(0.0));
    }

    #[test]
    fn decay_diagnostic_cases() {
        let g = grid();
        let fam = KernelFamily::new(0.0).unwrap();
        let step = sample(|x: f64| (x / 0.5).max(-1.0).min(1.0), &g, 1.0, -1.0).unwrap();
        let d = decay_diagnostic(&step, &fam, ledger(), 2.0, 2.0).unwrap();
        assert!(d.degenerate && d.ratio == 0.0);
        let d = decay_diagnostic(q0_solution().solution(), &fam, ledger(), 2.0, 2.0).unwrap();
        assert!(!d.degenerate && d.ratio < 1.0);
        assert!(d.ratio <= d.sqrt_c5.unwrap() + 0.1);
        let slow = sample(|x: f64| x.signum() * (1.0 - (-0.5 * x.abs()).exp()), &g, 1.0, -1.0).unwrap();
        let d = decay_diagnostic(&slow, &fam, ledger(), 2.0, 2.0).unwrap();
        assert!((d.ratio - (-1.0f64).exp()).abs() < 1e-9, "{}", d.ratio);
        assert!(decay_diagnostic(&slow, &fam, ledger(), 6.0, 2.0).is_err());
    }

    #[test]
    fn pattern_states_are_not_kinks() {
        let g = grid();
        let kink = q0_solution().solution();
        assert!(outer_min(kink) > 0.99);
        let pattern = sample(|x: f64| Real::erf(x) + 1.7 * (2.0 * x).sin() * x.abs().min(1.0), &g, 1.0, -1.0).unwrap();
        assert!(pattern.right_end() > 0.5);
        assert!(outer_min(&pattern) < 0.0);
    }

    #[test]
    fn report_json() {
        let r = q0_solution();
        let v: serde_json::Value = serde_json::from_str(&r.to_json(true)).unwrap();
        assert_eq!(v["iterations"].as_u64().unwrap() as usize, r.iterations);
        assert_eq!(v["solution"]["values"].as_array().unwrap().len(), 801);
        let v: serde_json::Value = serde_json::from_str(&r.to_json(false)).unwrap();
        assert!(v.get("solution").is_none());
    }
}
