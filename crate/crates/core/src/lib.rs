#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod grid;
pub mod kernels;
pub mod sensitivity;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{
    compute_j, compute_m, compute_s, compute_s_with, inclusion_map_check, strict_comparison_check, FunctionalOptions,
    MemoryFunctional, MemoryFunctionalReport,
};
pub use grid::{Side, TimeDomain, Trajectory};
pub use kernels::{classify, AdmissibilityReport, Kernel};
pub use sensitivity::{induce, InducedSensitivity, SensitivityModel};
pub use verify::{run_suite, VerificationConfig, VerificationReport};
