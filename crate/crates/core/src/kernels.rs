//! Convolution kernels of the cubic integral equation.
//!
//! `K⁰(u) = e^{-u²/4} / (2√π)` is the unit-mass heat kernel of `e^{∂²}`,
//! `K¹(u) = (1/2 − u²/4)·K⁰(u) = −(K⁰)''(u)` carries the `−q²∂²` part, and
//! `K_q = K⁰ + q²K¹`. In frequency space `K_q` is the multiplier
//! `(1 + q²k²)·e^{-k²}`.
//!
//! Closed forms used throughout:
//! * `∫_s^∞ K⁰ = erfc(s/2)/2`
//! * `∫_s^∞ K¹ = (K⁰)'(s) = −(s/2)·K⁰(s)`
//! * `K_q < 0` exactly for `|u| > √(4/q² + 2)`
//! * `K_q' = −(u/2)·K⁰(u)·(1 + q²(3/2 − u²/4))`, vanishing at `0` and `±√(4/q² + 6)`

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KinkError, Result};
use crate::numerics::{golden_max, integrate_pieces};
use crate::scalar::{cast, from_usize, Real};

/// Half-width of the integration window for kernel norms; `K⁰(12) < 1e-16`.
pub const KERNEL_WINDOW: f64 = 12.0;

/// Absolute tolerance for kernel-norm quadrature.
pub const NORM_TOL: f64 = 1e-12;

#[inline]
fn inv_two_sqrt_pi<T: Real>() -> T {
    T::FRAC_2_SQRT_PI() * cast(0.25)
}

/// `K⁰(u) = e^{-u²/4} / (2√π)`.
#[inline]
pub fn eval_k0<T: Real>(u: T) -> T {
    inv_two_sqrt_pi::<T>() * (-u * u * cast(0.25)).exp()
}

/// `K¹(u) = (1/2 − u²/4)·K⁰(u)`.
#[inline]
pub fn eval_k1<T: Real>(u: T) -> T {
    (cast::<T>(0.5) - u * u * cast(0.25)) * eval_k0(u)
}

/// `(K⁰)'(u) = −(u/2)·K⁰(u)`.
#[inline]
pub fn eval_k0_derivative<T: Real>(u: T) -> T {
    -u * cast(0.5) * eval_k0(u)
}

/// `(K¹)'(u) = −(u/2)·(3/2 − u²/4)·K⁰(u)`.
#[inline]
pub fn eval_k1_derivative<T: Real>(u: T) -> T {
    -u * cast(0.5) * (cast::<T>(1.5) - u * u * cast(0.25)) * eval_k0(u)
}

/// The one-parameter kernel family `K_q = K⁰ + q²K¹`, `q ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily<T> {
    q: T,
}

impl<T: Real> KernelFamily<T> {
    pub fn new(q: T) -> Result<Self> {
        if !(q >= T::zero()) || !q.is_finite() {
            return Err(KinkError::InvalidParameter(format!("q must be finite and >= 0, got {q}")));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn q(&self) -> T {
        self.q
    }

    #[inline]
    fn q2(&self) -> T {
        self.q * self.q
    }

    /// `K_q(u)`.
    #[inline]
    pub fn eval(&self, u: T) -> T {
        let u2 = u * u;
        eval_k0(u) * (T::one() + self.q2() * (cast::<T>(0.5) - u2 * cast(0.25)))
    }

    /// `K_q'(u)`, differentiated analytically.
    #[inline]
    pub fn derivative(&self, u: T) -> T {
        let u2 = u * u;
        -u * cast(0.5) * eval_k0(u) * (T::one() + self.q2() * (cast::<T>(1.5) - u2 * cast(0.25)))
    }

    /// Multiplier of `T_q` in frequency space: `(1 + q²k²)·e^{-k²}`.
    #[inline]
    pub fn fourier_symbol(&self, k: T) -> T {
        let k2 = k * k;
        (T::one() + self.q2() * k2) * (-k2).exp()
    }

    /// Positive point beyond which `K_q` is negative, `√(4/q² + 2)`.
    pub fn sign_change(&self) -> Option<T> {
        (self.q > T::zero()).then(|| (cast::<T>(4.0) / self.q2() + cast(2.0)).sqrt())
    }

    /// Positive critical point of `K_q` (its minimum), `√(4/q² + 6)`.
    pub fn derivative_sign_change(&self) -> Option<T> {
        (self.q > T::zero()).then(|| (cast::<T>(4.0) / self.q2() + cast(6.0)).sqrt())
    }

    /// Signed right tail `∫_s^∞ K_q(u) du` for any real `s`.
    pub fn signed_tail(&self, s: T) -> T {
        (s * cast(0.5)).erfc() * cast(0.5) - self.q2() * s * cast(0.5) * eval_k0(s)
    }

    fn abs_tail_nonneg(&self, t: T) -> T {
        match self.sign_change() {
            None => self.signed_tail(t),
            Some(root) if t >= root => -self.signed_tail(t),
            Some(root) => self.signed_tail(t) - cast::<T>(2.0) * self.signed_tail(root),
        }
    }

    /// Closed-form tail masses of `|K_q|`: `(∫_{-∞}^{-t}|K_q|, ∫_t^∞|K_q|)`.
    ///
    /// Both components agree because `K_q` is even. For `t ≥ 0` the right
    /// tail is `F(t) − 2F(u₀)` below the sign change `u₀` and `−F(t)` above
    /// it, where `F` is [`signed_tail`](Self::signed_tail); for `t < 0` the
    /// complement of the mirrored tail is used.
    pub fn tail_mass(&self, t: T) -> (T, T) {
        let r = if t >= T::zero() {
            self.abs_tail_nonneg(t)
        } else {
            cast::<T>(2.0) * self.abs_tail_nonneg(T::zero()) - self.abs_tail_nonneg(-t)
        };
        (r, r)
    }

    /// Total variation of `K_q` on `[s, ∞)`, `s ≥ 0`, i.e. `∫_s^∞ |K_q'|`.
    pub fn derivative_tail_variation(&self, s: T) -> T {
        match self.derivative_sign_change() {
            None => self.eval(s),
            Some(r) if s >= r => -self.eval(s),
            Some(r) => self.eval(s) - cast::<T>(2.0) * self.eval(r),
        }
    }

    /// `∫|K_q|` by quadrature on the window, split at the sign change, plus
    /// the closed-form tail beyond the window.
    pub fn abs_mass(&self) -> Result<T> {
        let w = cast::<T>(KERNEL_WINDOW);
        let breaks = window_breaks(self.sign_change(), w);
        let core = integrate_pieces(|u| self.eval(u).abs(), &breaks, T::floor_tol(NORM_TOL) * cast(0.5))?;
        Ok(cast::<T>(2.0) * (core + self.tail_mass(w).1))
    }

    /// `∫|K_q'|` by quadrature, split at the critical point.
    pub fn abs_derivative_mass(&self) -> Result<T> {
        let w = cast::<T>(KERNEL_WINDOW);
        let breaks = window_breaks(self.derivative_sign_change(), w);
        let core =
            integrate_pieces(|u| self.derivative(u).abs(), &breaks, T::floor_tol(NORM_TOL) * cast(0.5))?;
        Ok(cast::<T>(2.0) * (core + self.derivative_tail_variation(w)))
    }
}

fn window_breaks<T: Real>(root: Option<T>, w: T) -> Vec<T> {
    match root {
        Some(r) if r < w => vec![T::zero(), r, w],
        _ => vec![T::zero(), w],
    }
}

/// `∫|K¹|` by quadrature split at `√2`.
pub fn k1_abs_mass<T: Real>() -> Result<T> {
    let w = cast::<T>(KERNEL_WINDOW);
    let breaks = [T::zero(), cast::<T>(2.0).sqrt(), w];
    let core = integrate_pieces(|u| eval_k1::<T>(u).abs(), &breaks, T::floor_tol(NORM_TOL) * cast(0.5))?;
    // beyond the window K¹ < 0 and ∫_w^∞ K¹ = (K⁰)'(w)
    Ok(cast::<T>(2.0) * (core - eval_k0_derivative(w)))
}

/// `∫|(K¹)'|` by quadrature split at `√6`.
pub fn k1_abs_derivative_mass<T: Real>() -> Result<T> {
    let w = cast::<T>(KERNEL_WINDOW);
    let breaks = [T::zero(), cast::<T>(6.0).sqrt(), w];
    let core = integrate_pieces(
        |u| eval_k1_derivative::<T>(u).abs(),
        &breaks,
        T::floor_tol(NORM_TOL) * cast(0.5),
    )?;
    // K¹ increases monotonically to 0 beyond √6
    Ok(cast::<T>(2.0) * (core - eval_k1(w)))
}

/// One q-sample of the kernel norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample<T> {
    pub q: T,
    /// `∫|K_q|`
    pub a_q: T,
    /// `∫|K_q'|`
    pub e_q: T,
}

/// `∫|K_q|` and `∫|K_q'|` over a q-range together with their suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelNorms<T> {
    pub samples: Vec<NormSample<T>>,
    pub b_sup: T,
    pub b_argmax: T,
    pub e_sup: T,
    pub e_argmax: T,
}

/// Samples `∫|K_q|` and `∫|K_q'|` on a uniform grid of `n_samples` values of
/// `q ∈ [0, q_max]` and refines each supremum by golden-section search
/// around the best grid sample.
pub fn kernel_norms<T: Real>(q_max: T, n_samples: usize) -> Result<KernelNorms<T>> {
    if !(q_max > T::zero()) || !q_max.is_finite() {
        return Err(KinkError::InvalidParameter(format!("q range maximum must be > 0, got {q_max}")));
    }
    if n_samples < 2 {
        return Err(KinkError::InvalidParameter("kernel_norms needs at least 2 samples".into()));
    }
    let step = q_max / from_usize(n_samples - 1);
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let q = if i + 1 == n_samples { q_max } else { step * from_usize(i) };
            let fam = KernelFamily { q };
            Ok(NormSample { q, a_q: fam.abs_mass()?, e_q: fam.abs_derivative_mass()? })
        })
        .collect::<Result<Vec<_>>>()?;

    let (b_argmax, b_sup) =
        refine_sup(&samples, |s| s.a_q, q_max, step, |f: &KernelFamily<T>| f.abs_mass())?;
    let (e_argmax, e_sup) =
        refine_sup(&samples, |s| s.e_q, q_max, step, |f: &KernelFamily<T>| f.abs_derivative_mass())?;
    Ok(KernelNorms { samples, b_sup, b_argmax, e_sup, e_argmax })
}

fn refine_sup<T: Real>(
    samples: &[NormSample<T>],
    pick: impl Fn(&NormSample<T>) -> T,
    q_max: T,
    step: T,
    norm: impl Fn(&KernelFamily<T>) -> Result<T>,
) -> Result<(T, T)> {
    let best = samples
        .iter()
        .copied()
        .max_by(|a, b| pick(a).partial_cmp(&pick(b)).expect("finite norm"))
        .expect("at least two samples");
    let lo = (best.q - step).max(T::zero());
    let hi = (best.q + step).min(q_max);
    let (q_star, _) = golden_max(
        |q| norm(&KernelFamily { q }).unwrap_or(T::neg_infinity()),
        lo,
        hi,
        T::floor_tol(1e-10),
    );
    let refined = norm(&KernelFamily { q: q_star })?;
    Ok(if refined > pick(&best) { (q_star, refined) } else { (best.q, pick(&best)) })
}
