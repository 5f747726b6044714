//! Constants of the existence argument and membership tests for the cone
//! `K₁` of odd, bounded, Hölder-1/3 profiles lying above `C²Ψ` on `x > 0`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KinkError, Result};
use crate::grid::{GridSpec, Profile};
use crate::kernels::{k1_abs_derivative_mass, k1_abs_mass, kernel_norms, KernelFamily};
use crate::numerics::golden_max;
use crate::operators::{apply_pq, apply_t0, psi, t0_psi_analytic, OperatorConfig};
use crate::scalar::{cast, from_usize, signed_cube_root, to_f64, Real};

/// Number of `q` samples used for the kernel-norm suprema.
pub const NORM_SAMPLES: usize = 101;

/// Relative margin that turns the non-strict optimum for `C⁴` strict.
const C4_MARGIN: f64 = 1e-9;

/// `C²` is pulled this far inside the closing inequality to survive rounding.
const C2_MARGIN: f64 = 1e-12;

/// Gap kept below the cap `C²·sup|Ψ| < 1`.
const C2_CAP_GAP: f64 = 1e-6;

pub const Q0_SAFETY: f64 = 0.99;

/// Tolerance for the pointwise membership conditions.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Tolerance on the node-wise antisymmetry defect.
pub const ODD_TOL: f64 = 1e-13;

/// Half-width (in `x`) of the band of node pairs checked exhaustively.
pub const HOLDER_NEAR_RANGE: f64 = 2.0;

pub const HOLDER_FAR_PAIRS: usize = 10_000;

const HOLDER_SEED: u64 = 0x4b31_c0de;

/// `D` values of the `C⁵` table: 0.05, 0.10, …, 0.95.
pub fn c5_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// `sup_{x ≥ D} |x^{1/3} − 1| / |x − 1|`, attained at `x = D`.
pub fn c5_exact<T: Real>(d: T) -> T {
    let r = d.cbrt();
    T::one() / (T::one() + r + r * r)
}

/// Derivative of the cube root at `D`, an upper bound for `C⁵(D)` that
/// exceeds 1 for `D < 3^{-3/2}`.
pub fn c5_derivative_bound<T: Real>(d: T) -> T {
    d.powf(cast(-2.0 / 3.0)) / cast(3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C5Entry<T> {
    pub d: T,
    pub c5: T,
    pub derivative_bound: T,
    /// Largest secant ratio seen by dense sampling on `x ≥ D`.
    pub sampled_max: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger<T> {
    /// Upper end of the `q` range the kernel norms were maximised over.
    pub q_max: T,
    /// `sup_q ∫|K_q|`.
    pub b: T,
    pub b_argmax: T,
    pub c0: T,
    /// `sup_q ∫|K_q'|`.
    pub e: T,
    pub e_argmax: T,
    /// Hölder constant of the cube root.
    pub c_hat: T,
    /// Ratio `b/a` at which `c_hat` is attained.
    pub c_hat_argmax: T,
    pub c1: T,
    /// Half the infimum over `x > 0` of `T⁰Ψ/Ψ`.
    pub c3: T,
    /// Where the infimum sits; `0` stands for the `x → 0⁺` limit.
    pub c3_argmin: T,
    /// Whether `T⁰Ψ/Ψ` increases over the positive grid nodes.
    pub c3_ratio_monotone: bool,
    pub a1: T,
    pub b1: T,
    pub a2: T,
    pub b2: T,
    pub c4: T,
    pub ell: T,
    /// Smallest `Ψ^{1/3}/Ψ` over the positive grid nodes.
    pub ell_grid_min: T,
    /// Also the constant `A` of the `C⁴q₀² < C³A` condition.
    pub c2: T,
    pub q0: T,
    pub c5: Vec<C5Entry<T>>,
    /// `sup |apply_t0(Ψ) − T⁰Ψ|` over the grid for the supplied operator.
    pub t0_psi_oracle_error: T,
}

impl<T: Real> ConstantsLedger<T> {
    /// Tabulated `C⁵` for the largest table entry `D ≤ d` (conservative,
    /// since `C⁵` decreases in `D`).
    pub fn c5_at(&self, d: T) -> Option<T> {
        self.c5.iter().rev().find(|e| e.d <= d).map(|e| e.c5)
    }

    /// Every invariant the existence argument relies on.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(KinkError::LedgerInvariant(msg));
        let eps = T::floor_tol(1e-14);
        if (self.c0 - self.b.sqrt()).abs() > eps {
            return fail(format!("c0 = {} differs from sqrt(b) = {}", self.c0, self.b.sqrt()));
        }
        let c1 = self.c_hat * (self.c0 * self.e).cbrt();
        if (self.c1 - c1).abs() > eps {
            return fail(format!("c1 = {} differs from c_hat*(c0*e)^(1/3) = {c1}", self.c1));
        }
        if !(self.c3.cbrt() * self.ell * self.c2.cbrt() >= self.c2) {
            return fail(format!("c3^(1/3)*ell*c2^(1/3) < c2 (c3 = {}, ell = {}, c2 = {})", self.c3, self.ell, self.c2));
        }
        if !(self.c2 * cast(0.5) < T::one()) {
            return fail(format!("c2*sup|psi| = {} is not below 1", self.c2 * cast(0.5)));
        }
        if !(self.q0 > T::zero()) {
            return fail(format!("q0 = {} is not positive", self.q0));
        }
        if !(self.c4 * self.q0 * self.q0 < self.c3 * self.c2) {
            return fail(format!(
                "c4*q0^2 = {} is not below c3*c2 = {}",
                self.c4 * self.q0 * self.q0,
                self.c3 * self.c2
            ));
        }
        if self.q0 > self.q_max {
            return fail(format!("q0 = {} exceeds the q range {} of the kernel norms", self.q0, self.q_max));
        }
        if !(self.c4 * self.a1 > self.a2 && self.c4 * self.b1 > self.b2) {
            return fail("c4 does not dominate both T1 bounds".into());
        }
        for entry in &self.c5 {
            if !(entry.c5 > T::zero() && entry.c5 < T::one()) {
                return fail(format!("c5({}) = {} outside (0, 1)", entry.d, entry.c5));
            }
            if entry.sampled_max > entry.c5 + T::floor_tol(1e-9) {
                return fail(format!("c5({}) = {} below sampled ratio {}", entry.d, entry.c5, entry.sampled_max));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("ledger serialises")
    }
}

/// `|a^{1/3} − b^{1/3}| / |a − b|^{1/3}` at `a = 1`, `b = t`.
fn cube_root_holder_ratio<T: Real>(t: T) -> T {
    if t == T::one() {
        return T::zero();
    }
    (T::one() - signed_cube_root(t)).abs() / (T::one() - t).abs().cbrt()
}

/// Largest secant slope of the cube root through `(1, 1)` over `x ≥ d`,
/// sampled densely on a geometric mesh up to `x = 10⁶`.
fn c5_sampled<T: Real>(d: T) -> T {
    let n = 200_000usize;
    let span = (cast::<T>(1e6) / d).ln();
    (0..=n)
        .map(|i| d * (span * from_usize::<T>(i) / from_usize::<T>(n)).exp())
        .filter(|x| (*x - T::one()).abs() > cast(1e-6))
        .map(|x| (x.cbrt() - T::one()).abs() / (x - T::one()).abs())
        .fold(T::zero(), T::max)
}

/// Compute the ledger with kernel norms maximised over `q ∈ [0, 1]`.
pub fn compute_constants<T: Real>(grid: &GridSpec<T>, cfg: &OperatorConfig<T>) -> Result<ConstantsLedger<T>> {
    compute_constants_with(grid, cfg, T::one())
}

pub fn compute_constants_with<T: Real>(
    grid: &GridSpec<T>,
    cfg: &OperatorConfig<T>,
    q_max: T,
) -> Result<ConstantsLedger<T>> {
    if !(q_max > T::zero()) || !q_max.is_finite() {
        return Err(KinkError::InvalidParameter(format!("q_max must be positive, got {q_max}")));
    }
    let norms = kernel_norms(q_max, NORM_SAMPLES)?;
    let (b, e) = (norms.b_sup, norms.e_sup);
    let c0 = b.sqrt();

    let (c_hat_argmax, c_hat) = golden_max(cube_root_holder_ratio, -T::one(), T::one(), T::floor_tol(1e-12));
    let c1 = c_hat * (c0 * e).cbrt();

    let positive: Vec<T> = (grid.center() + 1..grid.n_points()).map(|j| grid.x(j)).collect();
    let ratios: Vec<T> = positive.iter().map(|&x| t0_psi_analytic(x) / psi(x)).collect();
    let limit_at_zero = T::one() / cast::<T>(5.0).sqrt();
    let c3_ratio_monotone = ratios.windows(2).all(|w| w[1] >= w[0]);
    let (c3_argmin, inf_ratio) = positive
        .iter()
        .zip(&ratios)
        .fold((T::zero(), limit_at_zero), |best, (&x, &r)| if r < best.1 { (x, r) } else { best });
    let c3 = inf_ratio * cast(0.5);

    let half = cast::<T>(0.5);
    let a1 = (-T::one()).exp() / T::PI().sqrt();
    let b1 = T::one().erf() * half;
    let a2 = c0 * k1_abs_derivative_mass::<T>()?;
    let b2 = c0 * k1_abs_mass::<T>()?;
    let c4 = (a2 / a1).max(b2 / b1) * (T::one() + T::floor_tol(C4_MARGIN));

    let ell = cast::<T>(2.0).powf(cast(2.0 / 3.0));
    let ell_grid_min = positive.iter().map(|&x| psi(x).cbrt() / psi(x)).fold(T::infinity(), T::min);
    if ell_grid_min < ell - T::floor_tol(1e-12) {
        return Err(KinkError::LedgerInvariant(format!(
            "psi^(1/3)/psi dips to {ell_grid_min} below ell = {ell}"
        )));
    }
    let c2 = (c3 * ell.powi(3)).sqrt().min(cast::<T>(2.0) - cast(C2_CAP_GAP)) * (T::one() - T::floor_tol(C2_MARGIN));
    let q0 = (c3 * c2 / c4).sqrt() * cast(Q0_SAFETY);

    let c5 = c5_grid()
        .into_par_iter()
        .map(|d| {
            let d: T = cast(d);
            C5Entry { d, c5: c5_exact(d), derivative_bound: c5_derivative_bound(d), sampled_max: c5_sampled(d) }
        })
        .collect();

    let psi_profile = crate::grid::sample(psi, grid, half, -half)?;
    let t0 = apply_t0(&psi_profile, cfg);
    let t0_psi_oracle_error = (0..grid.n_points())
        .map(|j| (t0.values()[j] - t0_psi_analytic(grid.x(j))).abs())
        .fold(T::zero(), T::max);

    let ledger = ConstantsLedger {
        q_max,
        b,
        b_argmax: norms.b_argmax,
        c0,
        e,
        e_argmax: norms.e_argmax,
        c_hat,
        c_hat_argmax,
        c1,
        c3,
        c3_argmin,
        c3_ratio_monotone,
        a1,
        b1,
        a2,
        b2,
        c4,
        ell,
        ell_grid_min,
        c2,
        q0,
        c5,
        t0_psi_oracle_error,
    };
    ledger.check_invariants()?;
    Ok(ledger)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport<T> {
    pub is_bounded: bool,
    pub sup: T,
    pub is_holder: bool,
    /// Largest `|Φ(x') − Φ(x'')| / (C¹|x' − x''|^{1/3})` over checked pairs.
    pub worst_holder_ratio: T,
    pub is_odd: bool,
    pub antisymmetry_defect: T,
    pub is_above_psi: bool,
    /// `min_{x>0} Φ(x) − C²Ψ(x)`.
    pub min_psi_gap: T,
}

impl<T> ConeReport<T> {
    pub fn is_member(&self) -> bool {
        self.is_bounded && self.is_holder && self.is_odd && self.is_above_psi
    }
}

/// Largest `|Φ_i − Φ_j| / |x_i − x_j|^{1/3}` over all node pairs within
/// [`HOLDER_NEAR_RANGE`] and a fixed-seed sample of distant pairs.
pub fn holder_sup<T: Real>(p: &Profile<T>) -> T {
    let grid = p.grid();
    let h = grid.spacing();
    let n = grid.n_points();
    let v = p.values();
    let reach = (cast::<T>(HOLDER_NEAR_RANGE) / h + cast(1e-9)).floor().to_usize().expect("finite").min(n - 1);
    let denom: Vec<T> = (0..=reach).map(|d| (from_usize::<T>(d) * h).cbrt()).collect();
    let near = (0..n)
        .into_par_iter()
        .map(|i| {
            (1..=reach.min(n - 1 - i))
                .map(|d| (v[i + d] - v[i]).abs() / denom[d])
                .fold(T::zero(), T::max)
        })
        .reduce(T::zero, T::max);
    if n <= reach + 1 {
        return near;
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(HOLDER_SEED);
    let far = (0..HOLDER_FAR_PAIRS)
        .map(|_| {
            let i = rng.gen_range(0..n - reach - 1);
            let j = rng.gen_range(i + reach + 1..n);
            (v[j] - v[i]).abs() / (from_usize::<T>(j - i) * h).cbrt()
        })
        .fold(T::zero(), T::max);
    near.max(far)
}

pub fn check_cone<T: Real>(p: &Profile<T>, ledger: &ConstantsLedger<T>) -> ConeReport<T> {
    let tol = T::floor_tol(MEMBERSHIP_TOL);
    let grid = p.grid();
    let sup = p.sup_norm().max(p.tail_right().abs()).max(p.tail_left().abs());
    let worst_holder_ratio = holder_sup(p) / ledger.c1;
    let antisymmetry_defect = p.antisymmetry_defect().max((p.tail_right() + p.tail_left()).abs());
    let min_psi_gap = (grid.center() + 1..grid.n_points())
        .map(|j| p.values()[j] - ledger.c2 * psi(grid.x(j)))
        .fold(p.tail_right() - ledger.c2 * cast(0.5), T::min);
    ConeReport {
        is_bounded: sup <= ledger.c0 + tol,
        sup,
        is_holder: worst_holder_ratio <= T::one() + tol,
        worst_holder_ratio,
        is_odd: antisymmetry_defect <= T::floor_tol(ODD_TOL),
        antisymmetry_defect,
        is_above_psi: min_psi_gap >= -tol,
        min_psi_gap,
    }
}

/// Cone membership of `P_qΦ` for a member `Φ` and `q ≤ q₀`.
pub fn check_preservation<T: Real>(
    p: &Profile<T>,
    family: &KernelFamily<T>,
    ledger: &ConstantsLedger<T>,
    cfg: &OperatorConfig<T>,
) -> Result<ConeReport<T>> {
    if family.q() > ledger.q0 {
        return Err(KinkError::Precondition(format!("q = {} exceeds q0 = {}", family.q(), ledger.q0)));
    }
    let before = check_cone(p, ledger);
    if !before.is_member() {
        return Err(KinkError::Precondition(format!("input is not a cone member: {before:?}")));
    }
    Ok(check_cone(&apply_pq(p, family, cfg), ledger))
}

/// A random odd cone member: `erf(x/w)` plus a few localised oscillations,
/// clipped into `[C²Ψ, C⁰]` on `x > 0`. The perturbation is halved until
/// the Hölder condition holds.
pub fn random_cone_member<T: Real, R: Rng + ?Sized>(
    grid: &GridSpec<T>,
    ledger: &ConstantsLedger<T>,
    rng: &mut R,
) -> Result<Profile<T>> {
    let width: f64 = rng.gen_range(0.8..2.5);
    let bumps: Vec<[f64; 4]> = (0..rng.gen_range(1..=4))
        .map(|_| {
            [rng.gen_range(-0.15..0.15), rng.gen_range(0.0..6.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..2.0)]
        })
        .collect();
    let n = grid.n_points();
    let c = grid.center();
    let mut scale = 1.0;
    for _ in 0..40 {
        let mut values = vec![T::zero(); n];
        for j in c + 1..n {
            let x = to_f64(grid.x(j));
            let pert: f64 = bumps
                .iter()
                .map(|[amp, centre, freq, w]| amp * (freq * (x - centre)).sin() * (-((x - centre) / w).powi(2)).exp())
                .sum();
            let raw: T = cast(libm::erf(x / width) + scale * pert);
            let v = raw.max(ledger.c2 * psi(grid.x(j))).min(ledger.c0);
            values[j] = v;
            values[grid.mirror(j)] = -v;
        }
        let p = Profile::new(*grid, values, T::one(), -T::one())?;
        if check_cone(&p, ledger).is_member() {
            return Ok(p);
        }
        scale *= 0.5;
    }
    Err(KinkError::Precondition("could not construct a cone member".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreservationSummary<T> {
    pub q: T,
    pub trials: usize,
    pub members: usize,
    /// Extremes over all images `P_qΦ`.
    pub max_sup: T,
    pub max_holder_ratio: T,
    pub min_psi_gap: T,
    pub max_antisymmetry_defect: T,
}

impl<T> PreservationSummary<T> {
    pub fn all_members(&self) -> bool {
        self.members == self.trials
    }
}

/// Cone preservation on `trials` random members drawn from a ChaCha8
/// stream seeded with `seed`.
pub fn preservation_trials<T: Real>(
    grid: &GridSpec<T>,
    ledger: &ConstantsLedger<T>,
    cfg: &OperatorConfig<T>,
    q: T,
    seed: u64,
    trials: usize,
) -> Result<PreservationSummary<T>> {
    let family = KernelFamily::new(q)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let members: Vec<Profile<T>> =
        (0..trials).map(|_| random_cone_member(grid, ledger, &mut rng)).collect::<Result<_>>()?;
    let reports: Vec<ConeReport<T>> = members
        .par_iter()
        .map(|p| check_preservation(p, &family, ledger, cfg))
        .collect::<Result<_>>()?;
    Ok(PreservationSummary {
        q,
        trials,
        members: reports.iter().filter(|r| r.is_member()).count(),
        max_sup: reports.iter().map(|r| r.sup).fold(T::zero(), T::max),
        max_holder_ratio: reports.iter().map(|r| r.worst_holder_ratio).fold(T::zero(), T::max),
        min_psi_gap: reports.iter().map(|r| r.min_psi_gap).fold(T::infinity(), T::min),
        max_antisymmetry_defect: reports.iter().map(|r| r.antisymmetry_defect).fold(T::zero(), T::max),
    })
}
