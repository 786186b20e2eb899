//! Every numerical tolerance in one table, for reporting alongside results.

use serde::Serialize;

use crate::design::{ThresholdOptions, FLOOR_CONVERGENCE_TOL};
use crate::{bounds, fit, graph, linalg, simulate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub zero_eigenvalue: f64,
    pub pbh_rank: f64,
    pub kronecker_max_dim: usize,
    pub threshold_scan_min: f64,
    pub threshold_scan_max: f64,
    pub threshold_scan_points: usize,
    pub threshold_bisection_rel: f64,
    pub hurwitz_margin: f64,
    pub floor_convergence: f64,
    pub fit_accept: f64,
    pub fit_max_condition: f64,
    pub convexity_slack: f64,
    pub gamma_quadrature: f64,
    pub divergence_norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let t = ThresholdOptions::default();
        Self {
            zero_eigenvalue: graph::ZERO_EIGENVALUE_TOL,
            pbh_rank: linalg::PBH_TOL,
            kronecker_max_dim: linalg::KRONECKER_MAX_DIM,
            threshold_scan_min: t.scan_min,
            threshold_scan_max: t.scan_max,
            threshold_scan_points: t.points,
            threshold_bisection_rel: t.tol,
            hurwitz_margin: t.margin,
            floor_convergence: FLOOR_CONVERGENCE_TOL,
            fit_accept: fit::FIT_ACCEPT_TOL,
            fit_max_condition: fit::FIT_MAX_CONDITION,
            convexity_slack: bounds::CONVEXITY_TOL,
            gamma_quadrature: bounds::GAMMA_QUAD_TOL,
            divergence_norm: simulate::DIVERGENCE_NORM,
        }
    }
}
