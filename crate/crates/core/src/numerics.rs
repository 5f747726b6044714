//! Small one-dimensional numerical tools: adaptive Gauss–Kronrod quadrature,
//! golden-section maximisation and bisection.

use crate::error::KinkError;
use crate::scalar::{cast, Real};

// 15-point Kronrod abscissae (non-negative half) and weights; the 7-point
// Gauss rule uses the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = cast::<T>(0.5);
    let center = (a + b) * half;
    let radius = (b - a) * half;
    let fc = f(center);
    let mut kronrod = fc * cast(WGK[7]);
    let mut gauss = fc * cast(WG[3]);
    for j in 0..7 {
        let dx = radius * cast(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * cast(WGK[j]);
        if j % 2 == 1 {
            gauss += pair * cast(WG[j / 2]);
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of `f` on `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `abs_tol`; exceeding `max_intervals` is an error.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    abs_tol: T,
    max_intervals: usize,
) -> Result<Integral<T>, KinkError> {
    if a == b {
        return Ok(Integral { value: T::zero(), error: T::zero(), intervals: 0 });
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: T = parts.iter().map(|p| p.3).sum();
        if total_err <= abs_tol {
            let value = parts.iter().map(|p| p.2).sum();
            return Ok(Integral { value, error: total_err, intervals: parts.len() });
        }
        if parts.len() >= max_intervals {
            return Err(KinkError::Quadrature {
                achieved: total_err.to_f64().unwrap_or(f64::NAN),
                requested: abs_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).expect("finite error estimate"))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = (lo + hi) * cast(0.5);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Integrates over consecutive breakpoints, splitting the tolerance evenly.
pub fn integrate_pieces<T: Real, F: Fn(T) -> T>(
    f: F,
    breaks: &[T],
    abs_tol: T,
) -> Result<T, KinkError> {
    let pieces = breaks.len().saturating_sub(1).max(1);
    let tol = abs_tol / cast(pieces as f64);
    let mut total = T::zero();
    for w in breaks.windows(2) {
        total += integrate(&f, w[0], w[1], tol, 2000)?.value;
    }
    Ok(total)
}

/// Golden-section search for the maximiser of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = (cast::<T>(5.0).sqrt() - T::one()) * cast(0.5);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let x = (a + b) * cast(0.5);
    let fx = f(x);
    // The bracket endpoints may beat the interior when the maximum sits on the boundary.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect_root<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> Option<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Some(lo);
    }
    if fhi == T::zero() {
        return Some(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return None;
    }
    while hi - lo > tol {
        let mid = (lo + hi) * cast(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Some(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some((lo + hi) * cast(0.5))
}
