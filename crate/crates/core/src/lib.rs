//! Kink solutions of the nonlocal equation `Φ³ = T_qΦ`, where `T_q` is
//! convolution with `K_q = K⁰ + q²K¹`, `K⁰` the heat kernel at time 1.
//!
//! The numerical core is generic over the scalar type ([`scalar::Real`],
//! implemented for `f32` and `f64`); the aliases below fix it to one of them.

pub mod cone;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod numerics;
pub mod operators;
pub mod qscan;
pub mod scalar;
pub mod solver;

pub use error::{KinkError, Result};
pub use scalar::Real;

pub type GridSpec64 = grid::GridSpec<f64>;
pub type Profile64 = grid::Profile<f64>;
pub type KernelFamily64 = kernels::KernelFamily<f64>;
pub type OperatorConfig64 = operators::OperatorConfig<f64>;
pub type ConstantsLedger64 = cone::ConstantsLedger<f64>;
pub type ConeReport64 = cone::ConeReport<f64>;
pub type SolveConfig64 = solver::SolveConfig<f64>;
pub type SolveReport64 = solver::SolveReport<f64>;
pub type ScanConfig64 = qscan::ScanConfig<f64>;
pub type ScanReport64 = qscan::ScanReport<f64>;

pub type GridSpec32 = grid::GridSpec<f32>;
pub type Profile32 = grid::Profile<f32>;
pub type KernelFamily32 = kernels::KernelFamily<f32>;
pub type OperatorConfig32 = operators::OperatorConfig<f32>;
pub type ConstantsLedger32 = cone::ConstantsLedger<f32>;
pub type SolveConfig32 = solver::SolveConfig<f32>;
pub type SolveReport32 = solver::SolveReport<f32>;
