//! Numeric substrate: time grids, piecewise trajectories, quadrature and
//! supremum search.

mod domain;
pub mod io;
mod quadrature;
mod search;
mod trajectory;

pub use domain::{TimeDomain, DEFAULT_GRID_POINTS};
pub use quadrature::{
    integrate, integrate_plain, integrate_with, QuadratureConfig, QuadratureResult,
    DEFAULT_REL_TOL, MAX_HALVINGS,
};
pub use search::{sign_changes, sup_abs, sup_norm, supremum, supremum_sampled, SupremumResult, ARGMAX_TIE_TOL};
pub use trajectory::{Breakpoint, Piece, PieceFn, ScalarFn, Side, Trajectory};
