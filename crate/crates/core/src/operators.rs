//! The convolution operators `T⁰`, `T¹`, `T_q = T⁰ + q²T¹` and the
//! nonlinear map `P_q Φ = (T_q Φ)^{1/3}` acting on profiles.
//!
//! Two independent discretisations are provided:
//!
//! * **Quadrature.** Trapezoid sum over the lattice `y = x_j ± d·h`,
//!   `|d·h| ≤ window`. Lattice points past `±L` carry the profile's tail
//!   values, and kernel mass beyond the window is added in closed form from
//!   the cumulative kernel integrals. Taps are accumulated in symmetric
//!   pairs, so odd inputs give exactly odd outputs.
//! * **Spectral.** The profile minus the reference `a + b·erf(x/2)` (same
//!   limits at ±∞) decays, so it is transformed with an FFT and multiplied
//!   by `(1 + q²k²)e^{-k²}`. The reference is mapped in closed form:
//!   `T⁰ erf(x/2) = erf(x/√8)` and `T¹ f = −(T⁰ f)''`.
//!
//! Fixed points of `P_q` behave like `|x|^{1/3}` at the origin, which limits
//! the plain trapezoid sum to `O(h^{7/3})`. [`cusp_correction`] removes the
//! leading term of that error (generalised Euler–Maclaurin expansion) given
//! the cusp amplitude `a` in `Φ(x) ≈ a·sign(x)|x|^{1/3}`.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{KinkError, Result};
use crate::grid::{GridSpec, Profile};
use crate::kernels::{eval_k0_derivative, eval_k1, KernelFamily};
use crate::scalar::{cast, from_usize, signed_cube_root, Real};

/// `ζ(−4/3)`
pub const ZETA_MINUS_FOUR_THIRDS: f64 = -0.040_061_329_956_264_229_755;

/// Smallest admissible quadrature window: kernel mass beyond it is
/// `erfc(window/2) < 1e-14`.
pub const MIN_KERNEL_WINDOW: f64 = 11.0;

pub const DEFAULT_KERNEL_WINDOW: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Quadrature,
    Spectral,
}

impl std::str::FromStr for Method {
    type Err = KinkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(Self::Quadrature),
            "spectral" => Ok(Self::Spectral),
            other => Err(KinkError::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig<T> {
    pub method: Method,
    kernel_window: T,
}

impl<T: Real> OperatorConfig<T> {
    pub fn new(method: Method, kernel_window: T) -> Result<Self> {
        if !(kernel_window >= cast(MIN_KERNEL_WINDOW)) || !kernel_window.is_finite() {
            return Err(KinkError::InvalidParameter(format!(
                "kernel window must be >= {MIN_KERNEL_WINDOW}, got {kernel_window}"
            )));
        }
        Ok(Self { method, kernel_window })
    }

    pub fn quadrature() -> Self {
        Self { method: Method::Quadrature, kernel_window: cast(DEFAULT_KERNEL_WINDOW) }
    }

    pub fn spectral() -> Self {
        Self { method: Method::Spectral, kernel_window: cast(DEFAULT_KERNEL_WINDOW) }
    }

    pub fn kernel_window(&self) -> T {
        self.kernel_window
    }
}

impl<T: Real> Default for OperatorConfig<T> {
    fn default() -> Self {
        Self::quadrature()
    }
}

/// `Ψ(x) = (1/√π)∫₀ˣ e^{-y²} dy = erf(x)/2`.
#[inline]
pub fn psi<T: Real>(x: T) -> T {
    x.erf() * cast(0.5)
}

/// `(T⁰Ψ)(x) = (1/√(5π))∫₀ˣ e^{-y²/5} dy = erf(x/√5)/2`.
#[inline]
pub fn t0_psi_analytic<T: Real>(x: T) -> T {
    (x / cast::<T>(5.0).sqrt()).erf() * cast(0.5)
}

/// `(T⁰Ψ)'(x) = e^{-x²/5}/√(5π)`.
#[inline]
pub fn t0_psi_analytic_derivative<T: Real>(x: T) -> T {
    (-x * x / cast(5.0)).exp() / (cast::<T>(5.0) * T::PI()).sqrt()
}

/// Which linear operator to apply.
#[derive(Debug, Clone, Copy)]
enum Linear<T> {
    /// `T⁰ + q²T¹`; `q = 0` is `T⁰`.
    Tq(KernelFamily<T>),
    T1,
}

impl<T: Real> Linear<T> {
    #[inline]
    fn kernel(&self, u: T) -> T {
        match self {
            Linear::Tq(f) => f.eval(u),
            Linear::T1 => eval_k1(u),
        }
    }

    /// Signed mass `∫_s^∞ K`.
    #[inline]
    fn tail(&self, s: T) -> T {
        match self {
            Linear::Tq(f) => f.signed_tail(s),
            Linear::T1 => eval_k0_derivative(s),
        }
    }

    #[inline]
    fn symbol(&self, k: T) -> T {
        match self {
            Linear::Tq(f) => f.fourier_symbol(k),
            Linear::T1 => k * k * (-k * k).exp(),
        }
    }

    /// Image of `a + b·erf(x/2)`.
    fn reference_image(&self, a: T, b: T, x: T) -> T {
        let t1 = b * x * (-x * x / cast(8.0)).exp() / (cast::<T>(4.0) * (T::TAU()).sqrt());
        match self {
            Linear::Tq(f) => {
                a + b * (x / cast::<T>(8.0).sqrt()).erf() + f.q() * f.q() * t1
            }
            Linear::T1 => t1,
        }
    }

    /// Constants `c` map to `c·∫K`.
    fn map_tail(&self, c: T) -> T {
        match self {
            Linear::Tq(_) => c,
            Linear::T1 => T::zero(),
        }
    }
}

fn apply_linear<T: Real>(p: &Profile<T>, op: Linear<T>, cfg: &OperatorConfig<T>) -> Profile<T> {
    let values = match cfg.method {
        Method::Quadrature => quadrature_convolve(p, op, cfg.kernel_window),
        Method::Spectral => spectral_convolve(p, op),
    };
    Profile::new(*p.grid(), values, op.map_tail(p.tail_right()), op.map_tail(p.tail_left()))
        .expect("linear image of a finite profile is finite")
}

fn quadrature_convolve<T: Real>(p: &Profile<T>, op: Linear<T>, window: T) -> Vec<T> {
    let grid = p.grid();
    let h = grid.spacing();
    let half_width = grid.half_width();
    let reach = (window / h + cast(1e-9)).floor().to_usize().expect("finite window");
    let taps: Vec<T> = (0..=reach).map(|d| h * op.kernel(from_usize::<T>(d) * h)).collect();
    let cut = (from_usize::<T>(reach) + cast(0.5)) * h;
    let half_h = h * cast(0.5);
    let (tr, tl) = (p.tail_right(), p.tail_left());
    let n = grid.n_points();
    let padded: Vec<T> = std::iter::repeat(tl)
        .take(reach)
        .chain(p.values().iter().copied())
        .chain(std::iter::repeat(tr).take(reach))
        .collect();

    (0..n)
        .into_par_iter()
        .map(|j| {
            let c = j + reach;
            let mut acc = taps[0] * padded[c];
            for (d, &w) in taps.iter().enumerate().skip(1) {
                acc += w * (padded[c - d] + padded[c + d]);
            }
            let x = grid.x(j);
            let right = tr * op.tail(cut.max(half_width - x + half_h));
            let left = tl * op.tail(cut.max(half_width + x + half_h));
            acc + (right + left)
        })
        .collect()
}

fn spectral_convolve<T: Real>(p: &Profile<T>, op: Linear<T>) -> Vec<T> {
    let grid = *p.grid();
    let n = grid.n_points();
    let half = cast::<T>(0.5);
    let odd_tail = (p.tail_right() - p.tail_left()) * half;
    let even_tail = (p.tail_right() + p.tail_left()) * half;
    let vals = p.values();
    let odd: Vec<T> = (0..n).map(|j| (vals[j] - vals[grid.mirror(j)]) * half).collect();
    let even: Vec<T> = (0..n).map(|j| (vals[j] + vals[grid.mirror(j)]) * half).collect();

    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let length = from_usize::<T>(n) * grid.spacing();
    let symbols: Vec<T> = (0..n)
        .map(|m| {
            let wrapped = if m <= n / 2 { from_usize::<T>(m) } else { -from_usize::<T>(n - m) };
            op.symbol(T::TAU() * wrapped / length)
        })
        .collect();

    let run = |part: &[T], a: T, b: T| -> Vec<T> {
        if a == T::zero() && b == T::zero() && part.iter().all(|v| *v == T::zero()) {
            return vec![T::zero(); n];
        }
        let mut buf: Vec<Complex<T>> = (0..n)
            .map(|j| {
                let x = grid.x(j);
                Complex::new(part[j] - (a + b * (x * half).erf()), T::zero())
            })
            .collect();
        fwd.process(&mut buf);
        for (c, s) in buf.iter_mut().zip(&symbols) {
            *c = *c * *s;
        }
        inv.process(&mut buf);
        let scale = T::one() / from_usize::<T>(n);
        (0..n).map(|j| buf[j].re * scale + op.reference_image(a, b, grid.x(j))).collect()
    };

    // Reflection symmetry is imposed on each parity so that odd inputs give
    // exactly odd outputs, as on the quadrature path.
    let odd_img = run(&odd, T::zero(), odd_tail);
    let even_img = run(&even, even_tail, T::zero());
    (0..n)
        .map(|j| {
            let k = grid.mirror(j);
            (odd_img[j] - odd_img[k]) * half + (even_img[j] + even_img[k]) * half
        })
        .collect()
}

pub fn apply_t0<T: Real>(p: &Profile<T>, cfg: &OperatorConfig<T>) -> Profile<T> {
    apply_linear(p, Linear::Tq(KernelFamily::new(T::zero()).expect("q = 0")), cfg)
}

/// `T¹Φ`. Since `∫K¹ = 0`, the output tends to 0 at both ends.
pub fn apply_t1<T: Real>(p: &Profile<T>, cfg: &OperatorConfig<T>) -> Profile<T> {
    apply_linear(p, Linear::T1, cfg)
}

pub fn apply_tq<T: Real>(p: &Profile<T>, family: &KernelFamily<T>, cfg: &OperatorConfig<T>) -> Profile<T> {
    apply_linear(p, Linear::Tq(*family), cfg)
}

/// Leading trapezoid-error correction for a profile with cusp
/// `a·sign(x)|x|^{1/3}` at the origin: `2ζ(−4/3)·h^{7/3}·a·K_q'(x_j)`.
pub fn cusp_correction<T: Real>(grid: &GridSpec<T>, family: &KernelFamily<T>, amplitude: T) -> Vec<T> {
    let h = grid.spacing();
    let scale = cast::<T>(2.0 * ZETA_MINUS_FOUR_THIRDS) * h.powf(cast(7.0 / 3.0)) * amplitude;
    (0..grid.n_points()).map(|j| scale * family.derivative(grid.x(j))).collect()
}

/// `T_qΦ` with the cusp correction for amplitude `cusp` added.
pub fn apply_tq_cusp<T: Real>(
    p: &Profile<T>,
    family: &KernelFamily<T>,
    cfg: &OperatorConfig<T>,
    cusp: T,
) -> Profile<T> {
    let base = apply_tq(p, family, cfg);
    if cusp == T::zero() {
        return base;
    }
    let corr = cusp_correction(p.grid(), family, cusp);
    let values = base.values().iter().zip(&corr).map(|(&v, &c)| v + c).collect();
    Profile::new(*p.grid(), values, base.tail_right(), base.tail_left()).expect("finite")
}

/// `P_qΦ = (T_qΦ)^{1/3}` on the odd real branch.
pub fn apply_pq<T: Real>(p: &Profile<T>, family: &KernelFamily<T>, cfg: &OperatorConfig<T>) -> Profile<T> {
    apply_pq_cusp(p, family, cfg, T::zero())
}

pub fn apply_pq_cusp<T: Real>(
    p: &Profile<T>,
    family: &KernelFamily<T>,
    cfg: &OperatorConfig<T>,
    cusp: T,
) -> Profile<T> {
    apply_tq_cusp(p, family, cfg, cusp).map(signed_cube_root).expect("finite")
}

/// Slope at the origin of a smooth odd profile, fourth-order central stencil.
pub fn center_slope<T: Real>(values: &[T], h: T) -> T {
    let c = values.len() / 2;
    if c < 2 {
        return (values[c + 1] - values[c - 1]) / (h + h);
    }
    let d1 = values[c + 1] - values[c - 1];
    let d2 = values[c + 2] - values[c - 2];
    (cast::<T>(8.0) * d1 - d2) / (cast::<T>(12.0) * h)
}

/// Cusp amplitude `a` of `Φ ≈ a·sign(x)|x|^{1/3}`, read off the slope of
/// the smooth function `Φ³` at the origin. Smooth odd profiles give `≈ 0`.
pub fn estimate_cusp_amplitude<T: Real>(p: &Profile<T>) -> T {
    let cubes: Vec<T> = p.values().iter().map(|&v| v * v * v).collect();
    signed_cube_root(center_slope(&cubes, p.grid().spacing()))
}

/// Smooth test profiles for comparing the two discretisations: `erf`,
/// `tanh`, `Ψ`, and `n_random` odd profiles `erf(x) + Σ c_k sin(ω_k x)e^{-(x/3)²}`
/// whose spectra are concentrated at `|k| ≲ 3`.
pub fn smooth_profile_suite<T: Real, R: rand::Rng + ?Sized>(
    grid: &GridSpec<T>,
    n_random: usize,
    rng: &mut R,
) -> Result<Vec<(String, Profile<T>)>> {
    let one = T::one();
    let half: T = cast(0.5);
    let mut suite = vec![
        ("erf".to_string(), crate::grid::sample(|x: T| x.erf(), grid, one, -one)?),
        ("tanh".to_string(), crate::grid::sample(|x: T| x.tanh(), grid, one, -one)?),
        ("psi".to_string(), crate::grid::sample(psi, grid, half, -half)?),
    ];
    for i in 0..n_random {
        let modes: Vec<(f64, f64)> =
            (0..6).map(|_| (rng.gen_range(-0.3..0.3), rng.gen_range(0.2..2.5))).collect();
        let f = |x: T| {
            let xf = x.to_f64().expect("finite node");
            let wave: f64 = modes.iter().map(|(c, w)| c * (w * xf).sin()).sum();
            x.erf() + cast::<T>(wave * (-(xf / 3.0).powi(2)).exp())
        };
        suite.push((format!("band_limited_{i}"), crate::grid::sample(f, grid, one, -one)?));
    }
    Ok(suite)
}

/// `(name, sup |quadrature − spectral|)` of `T_q` over the smooth suite.
pub fn cross_validate<T: Real>(
    suite: &[(String, Profile<T>)],
    family: &KernelFamily<T>,
    window: T,
) -> Result<Vec<(String, T)>> {
    let quad = OperatorConfig::new(Method::Quadrature, window)?;
    let spec = OperatorConfig::new(Method::Spectral, window)?;
    suite
        .iter()
        .map(|(name, p)| {
            let d = apply_tq(p, family, &quad).sup_distance(&apply_tq(p, family, &spec))?;
            Ok((name.clone(), d))
        })
        .collect()
}

/// Kernel-mass check used by the operator tests: `Σ h·K_q(d·h)` over the
/// full lattice.
pub fn lattice_mass<T: Real>(family: &KernelFamily<T>, h: T, window: T) -> T {
    let reach = (window / h).floor().to_usize().expect("finite");
    (1..=reach).fold(h * family.eval(T::zero()), |acc, d| acc + h * cast::<T>(2.0) * family.eval(from_usize::<T>(d) * h))
        + cast::<T>(2.0) * family.signed_tail((from_usize::<T>(reach) + cast(0.5)) * h)
}
