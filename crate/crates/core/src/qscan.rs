//! Scan in `q` for the end of the kink branch: warm-started coarse sweep,
//! bisection of the first kink / no-kink change, and a cold-start recheck
//! of every coarse sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::ConstantsLedger;
use crate::error::{KinkError, Result};
use crate::grid::{GridSpec, Profile};
use crate::operators::OperatorConfig;
use crate::scalar::{from_usize, Real};
use crate::solver::{solve, InitKind, SolveConfig, SolveReport};

pub const DEFAULT_Q_MIN: f64 = 0.0;
pub const DEFAULT_Q_MAX: f64 = 3.0;
pub const DEFAULT_COARSE_STEPS: usize = 12;
pub const DEFAULT_BISECT_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct ScanConfig<T> {
    pub q_min: T,
    pub q_max: T,
    pub coarse_steps: usize,
    pub bisect_tol: T,
    /// Re-solve every coarse sample from the `erf` guess.
    pub cold_check: bool,
    /// Template for each solve; `q` and `init` are overwritten.
    pub per_solve: SolveConfig<T>,
}

impl<T: Real> Default for ScanConfig<T> {
    fn default() -> Self {
        Self {
            q_min: crate::scalar::cast(DEFAULT_Q_MIN),
            q_max: crate::scalar::cast(DEFAULT_Q_MAX),
            coarse_steps: DEFAULT_COARSE_STEPS,
            bisect_tol: crate::scalar::cast(DEFAULT_BISECT_TOL),
            cold_check: true,
            per_solve: SolveConfig::new(T::zero()),
        }
    }
}

impl<T: Real> ScanConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_min >= T::zero()) || !(self.q_max > self.q_min) || !self.q_max.is_finite() {
            return Err(KinkError::InvalidParameter(format!(
                "need 0 <= q_min < q_max, got [{}, {}]",
                self.q_min, self.q_max
            )));
        }
        if !(self.bisect_tol > T::zero()) {
            return Err(KinkError::InvalidParameter(format!("bisect_tol must be positive, got {}", self.bisect_tol)));
        }
        if self.coarse_steps == 0 {
            return Err(KinkError::InvalidParameter("coarse_steps must be positive".into()));
        }
        self.per_solve.validate()
    }

    pub fn coarse_qs(&self) -> Vec<T> {
        let span = self.q_max - self.q_min;
        (0..=self.coarse_steps)
            .map(|k| self.q_min + span * from_usize::<T>(k) / from_usize::<T>(self.coarse_steps))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample<T> {
    pub q: T,
    pub converged: bool,
    pub final_residual: T,
    /// `Φ(L)`.
    pub kink_amplitude: T,
    pub is_kink: bool,
    pub iterations: usize,
}

impl<T: Real> ScanSample<T> {
    fn from_report(r: &SolveReport<T>) -> Self {
        Self {
            q: r.q,
            converged: r.converged,
            final_residual: r.final_residual,
            kink_amplitude: r.amplitude,
            is_kink: r.is_kink,
            iterations: r.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport<T> {
    /// Warm-started coarse sweep.
    pub samples: Vec<ScanSample<T>>,
    pub bisection: Vec<ScanSample<T>>,
    pub cold_samples: Vec<ScanSample<T>>,
    /// `(last kink q, first no-kink q)`.
    pub q_star_bracket: Option<(T, T)>,
    /// Coarse samples whose warm and cold classifications differ.
    pub cold_disagreements: Vec<T>,
    pub q0: T,
    /// `q*_low ≥ q₀`, when a bracket exists.
    pub bracket_above_q0: Option<bool>,
}

impl<T: Real + Serialize> ScanReport<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan report serialises")
    }

    /// Warm and bisection samples sorted by `q`.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<&ScanSample<T>> = self.samples.iter().chain(&self.bisection).collect();
        rows.sort_by(|a, b| a.q.partial_cmp(&b.q).expect("finite q"));
        let mut out = String::from("q,converged,residual,amplitude\n");
        for s in rows {
            out.push_str(&format!(
                "{:.16e},{},{:.16e},{:.16e}\n",
                s.q.to_f64().unwrap_or(f64::NAN),
                s.converged,
                s.final_residual.to_f64().unwrap_or(f64::NAN),
                s.kink_amplitude.to_f64().unwrap_or(f64::NAN)
            ));
        }
        out
    }
}

impl<T> ScanReport<T> {
    pub fn warm_cold_agree(&self) -> bool {
        self.cold_disagreements.is_empty()
    }
}

fn run<T: Real>(
    cfg: &ScanConfig<T>,
    q: T,
    start: Option<&Profile<T>>,
    grid: &GridSpec<T>,
    ledger: &ConstantsLedger<T>,
    cfg_op: &OperatorConfig<T>,
) -> Result<SolveReport<T>> {
    let mut s = cfg.per_solve.clone();
    s.q = q;
    s.init = match start {
        Some(p) => InitKind::FromProfile(p.clone()),
        None => InitKind::Erf,
    };
    solve(&s, grid, ledger, cfg_op)
}

pub fn scan<T: Real>(
    cfg: &ScanConfig<T>,
    grid: &GridSpec<T>,
    ledger: &ConstantsLedger<T>,
    cfg_op: &OperatorConfig<T>,
) -> Result<ScanReport<T>> {
    cfg.validate()?;
    let qs = cfg.coarse_qs();

    let mut samples = Vec::with_capacity(qs.len());
    let mut kink_solutions: Vec<Option<Profile<T>>> = Vec::with_capacity(qs.len());
    let mut previous: Option<Profile<T>> = None;
    for &q in &qs {
        let r = run(cfg, q, previous.as_ref(), grid, ledger, cfg_op)?;
        if r.converged {
            previous = r.solution.clone();
        }
        kink_solutions.push(if r.is_kink { r.solution.clone() } else { None });
        samples.push(ScanSample::from_report(&r));
    }

    let mut bisection = Vec::new();
    let mut q_star_bracket = None;
    if let Some(k) = (0..samples.len() - 1).find(|&k| samples[k].is_kink && !samples[k + 1].is_kink) {
        let (mut lo, mut hi) = (samples[k].q, samples[k + 1].q);
        let mut lo_solution = kink_solutions[k].clone().expect("kink sample keeps its solution");
        while hi - lo > cfg.bisect_tol {
            let mid = (lo + hi) * crate::scalar::cast(0.5);
            let r = run(cfg, mid, Some(&lo_solution), grid, ledger, cfg_op)?;
            bisection.push(ScanSample::from_report(&r));
            if r.is_kink {
                lo = mid;
                lo_solution = r.solution.expect("solve stores its solution");
            } else {
                hi = mid;
            }
        }
        q_star_bracket = Some((lo, hi));
    }

    let cold_samples: Vec<ScanSample<T>> = if cfg.cold_check {
        qs.par_iter()
            .map(|&q| run(cfg, q, None, grid, ledger, cfg_op).map(|r| ScanSample::from_report(&r)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let cold_disagreements =
        samples.iter().zip(&cold_samples).filter(|(w, c)| w.is_kink != c.is_kink).map(|(w, _)| w.q).collect();

    Ok(ScanReport {
        samples,
        bisection,
        cold_samples,
        q_star_bracket,
        cold_disagreements,
        q0: ledger.q0,
        bracket_above_q0: q_star_bracket.map(|(lo, _)| lo >= ledger.q0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::compute_constants;
    use crate::grid::make_grid;

    #[test]
    fn config_validation_and_grid() {
        let mut c = ScanConfig::<f64>::default();
        assert_eq!(c.coarse_qs().len(), 13);
        assert_eq!(c.coarse_qs()[12], 3.0);
        c.q_max = 0.0;
        assert!(c.validate().is_err());
        let mut c = ScanConfig::<f64>::default();
        c.bisect_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn scan_inside_proof_range_finds_no_boundary() {
        let g = make_grid(12.0, 0.1).unwrap();
        let op = OperatorConfig::quadrature();
        let l = compute_constants(&g, &op).unwrap();
        let cfg = ScanConfig { q_min: 0.0, q_max: l.q0, coarse_steps: 4, ..ScanConfig::default() };
        let r = scan(&cfg, &g, &l, &op).unwrap();
        assert!(r.samples.iter().all(|s| s.is_kink && s.converged));
        assert!(r.q_star_bracket.is_none() && r.bracket_above_q0.is_none());
        assert!(r.warm_cold_agree());
        assert_eq!(r.cold_samples.len(), 5);
        let csv = r.to_csv();
        assert!(csv.starts_with("q,converged,residual,amplitude\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
