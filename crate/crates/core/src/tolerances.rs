//! Default numerical tolerances.
//!
//! The feasibility, membership and activity tolerances sit two orders of
//! magnitude above the residual Dykstra's method is driven to.

use serde::{Deserialize, Serialize};

/// Feasibility of projection results and LP margins.
pub const TOL_FEAS: f64 = 1e-9;
/// Membership tests (`dist ≤ tol`).
pub const TOL_MEMBER: f64 = 1e-7;
/// A polyhedral row counts as active when `c·k ≥ d − tol`.
pub const TOL_ACTIVE: f64 = 1e-7;
/// Dykstra stopping residual.
pub const DYKSTRA_RESIDUAL: f64 = 1e-10;
/// Dykstra sweep cap.
pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;

/// Tolerances recorded alongside every analysis result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feas: f64,
    pub member: f64,
    pub active: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: TOL_FEAS,
            member: TOL_MEMBER,
            active: TOL_ACTIVE,
        }
    }
}
