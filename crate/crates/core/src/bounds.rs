//! Graph-theoretic lower bounds on spectral sums and path/cycle asymptotics.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{enumerate_connected_unweighted, generate, laplacian, spectrum, GraphKind, WeightedGraph};
use crate::quadrature::integrate;
use crate::scalar::Real;
use crate::spectral::SpectralFunction;

/// Slack allowed on the divided-difference convexity test.
pub const CONVEXITY_TOL: f64 = 1e-9;

/// Default absolute and relative tolerance for [`gamma_n`].
pub const GAMMA_QUAD_TOL: f64 = 1e-10;

const CONVEXITY_POINTS: usize = 200;

fn sum_terms<T: Real>(f: &dyn SpectralFunction<T>, lambdas: &[T]) -> Result<T> {
    lambdas.iter().try_fold(T::zero(), |s, &l| Ok(s + f.eval(l)?))
}

/// Checks convexity of `f` on `[lo, hi]` by requiring slopes of a
/// log-spaced grid to be nondecreasing up to [`CONVEXITY_TOL`] plus the
/// rounding level of `T`.
pub fn check_convex<T: Real>(f: &dyn SpectralFunction<T>, lo: T, hi: T) -> Result<()> {
    let lo = lo.max(T::lit(1e-3)).max(f.valid_from() + T::lit(1e-3));
    if !(hi > lo) {
        return Ok(());
    }
    let grid = crate::fit::log_samples(lo, hi, CONVEXITY_POINTS);
    let vals: Vec<T> = grid.iter().map(|&l| f.eval(l)).collect::<Result<_>>()?;
    let slopes: Vec<T> = (0..grid.len() - 1)
        .map(|i| (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]))
        .collect();
    for i in 0..slopes.len() - 1 {
        let drop = slopes[i + 1] - slopes[i];
        // Rounding in the values shows up in the slopes scaled by 1/Δλ.
        let noise = T::machine_eps() * T::lit(8.0) * (vals[i].abs() + vals[i + 1].abs() + vals[i + 2].abs())
            / (grid[i + 1] - grid[i]);
        if drop < -(T::lit(CONVEXITY_TOL) * T::one().max(slopes[i].abs()) + noise) {
            return Err(Error::NotConvex(format!(
                "slope decreases near λ = {} on [{lo}, {hi}]",
                grid[i + 1]
            )));
        }
    }
    Ok(())
}

/// A lower bound with the flag for the topologies where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound<T> {
    pub value: T,
    /// True when the inputs describe a topology that attains the bound
    /// (complete or star for the unweighted bound).
    pub equality_case: bool,
}

/// `φ(1+Δ) + (N−2) φ((2M−1−Δ)/(N−2))`, valid for every connected graph with
/// `N` nodes, `M` unit-weight edges and maximum degree `Δ`.
pub fn lower_bound_unweighted<T: Real>(
    f: &dyn SpectralFunction<T>,
    n: usize,
    m: usize,
    delta: usize,
) -> Result<Bound<T>> {
    if n < 3 {
        return Err(Error::Invalid(format!("unweighted bound needs N >= 3, got {n}")));
    }
    if m < n - 1 || m > n * (n - 1) / 2 || delta == 0 || delta > n - 1 || 2 * m < delta + 1 {
        return Err(Error::Invalid(format!("(N, M, Δ) = ({n}, {m}, {delta}) is not a connected simple graph")));
    }
    let nf = T::from_usize(n).unwrap();
    let first = T::from_usize(1 + delta).unwrap();
    let rest = T::from_usize(2 * m - 1 - delta).unwrap() / (nf - T::lit(2.0));
    let hi = first.max(rest).max(T::from_usize(2 * delta).unwrap()).max(T::lit(4.0) + T::from_usize(delta).unwrap());
    check_convex(f, T::lit(1e-3), hi)?;
    let value = f.eval(first)? + (nf - T::lit(2.0)) * f.eval(rest)?;
    let complete = m == n * (n - 1) / 2;
    let star = m == n - 1 && delta == n - 1;
    Ok(Bound { value, equality_case: complete || star })
}

/// `(N−1) φ(2W/(N−1))`, valid for every connected weighted graph with
/// total weight `W`; attained by complete graphs with identical weights.
/// From `(N, W)` alone equality is only certain for `N = 2`.
pub fn lower_bound_weighted<T: Real>(f: &dyn SpectralFunction<T>, n: usize, w: T) -> Result<Bound<T>> {
    if n < 2 {
        return Err(Error::Invalid(format!("weighted bound needs N >= 2, got {n}")));
    }
    if !(w > T::zero()) {
        return Err(Error::Invalid(format!("total weight must be positive, got {w}")));
    }
    let k = T::from_usize(n - 1).unwrap();
    let at = T::lit(2.0) * w / k;
    check_convex(f, T::lit(1e-3), (T::lit(2.0) * w).max(T::lit(4.0)))?;
    Ok(Bound { value: k * f.eval(at)?, equality_case: n == 2 })
}

/// [`lower_bound_unweighted`] for a concrete unit-weight connected graph;
/// the equality flag reflects its actual topology.
pub fn lower_bound_unweighted_graph<T: Real>(f: &dyn SpectralFunction<T>, g: &WeightedGraph<T>) -> Result<Bound<T>> {
    if g.edges().iter().any(|e| e.2 != T::one()) {
        return Err(Error::Invalid("unweighted bound needs unit edge weights".into()));
    }
    if !g.is_connected() {
        return Err(Error::Invalid("bound needs a connected graph".into()));
    }
    lower_bound_unweighted(f, g.n_nodes(), g.n_edges(), g.max_degree())
}

/// [`lower_bound_weighted`] for a concrete connected graph; equality is
/// flagged for complete graphs with identical weights.
pub fn lower_bound_weighted_graph<T: Real>(f: &dyn SpectralFunction<T>, g: &WeightedGraph<T>) -> Result<Bound<T>> {
    if !g.is_connected() {
        return Err(Error::Invalid("bound needs a connected graph".into()));
    }
    let n = g.n_nodes();
    let mut b = lower_bound_weighted(f, n, g.total_weight())?;
    let w0 = g.edges()[0].2;
    b.equality_case = g.n_edges() == n * (n - 1) / 2 && g.edges().iter().all(|e| e.2 == w0);
    Ok(b)
}

/// `Γ_N = ∫_{1/N}^{1} φ(2 − 2cos(πx)) dx`, which requires `λ̃ = 0`.
pub fn gamma_n<T: Real>(f: &dyn SpectralFunction<T>, n: usize, quad_tol: T) -> Result<T> {
    if n < 2 {
        return Err(Error::Invalid(format!("Γ_N needs N >= 2, got {n}")));
    }
    if f.valid_from() != T::zero() {
        return Err(Error::Invalid(format!(
            "Γ_N requires a zero connectivity threshold, got {}",
            f.valid_from()
        )));
    }
    let pi = T::lit(PI);
    let a = T::one() / T::from_usize(n).unwrap();
    let mut breaks = Vec::new();
    let mut x = a * T::lit(2.0);
    while x < T::one() {
        breaks.push(x);
        x *= T::lit(2.0);
    }
    let g = |x: T| f.eval(T::lit(2.0) - T::lit(2.0) * (pi * x).cos());
    Ok(integrate(g, a, T::one(), &breaks, quad_tol, quad_tol, 20_000)?.value)
}

/// One row of [`path_cycle_ratio_experiment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsRow<T> {
    pub n: usize,
    pub rho_path: T,
    pub rho_cycle: T,
    pub gamma_n: T,
    /// `N · Γ_N`.
    pub n_gamma: T,
    /// `N · Γ_N / ρ_path`.
    pub ratio: T,
}

/// Path and cycle spectral sums next to `N·Γ_N` for each `N`.
pub fn path_cycle_ratio_experiment<T: Real>(
    f: &dyn SpectralFunction<T>,
    ns: &[usize],
) -> Result<Vec<AsymptoticsRow<T>>> {
    ns.par_iter()
        .map(|&n| {
            let path = generate(GraphKind::Path, n, T::one())?;
            let cycle = generate(GraphKind::Cycle, n, T::one())?;
            let rho_path = sum_terms(f, spectrum(&laplacian(&path))?.nonzero_index())?;
            let rho_cycle = sum_terms(f, spectrum(&laplacian(&cycle))?.nonzero_index())?;
            let gamma = gamma_n(f, n, T::lit(GAMMA_QUAD_TOL))?;
            let n_gamma = T::from_usize(n).unwrap() * gamma;
            Ok(AsymptoticsRow { n, rho_path, rho_cycle, gamma_n: gamma, n_gamma, ratio: n_gamma / rho_path })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// One graph of a survey.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyEntry<T> {
    pub edges: Vec<(usize, usize)>,
    pub rho: T,
    pub bound: T,
    /// `ρ / bound`, at least 1 for convex `φ`.
    pub r1: T,
}

/// Ratio `r₁ = ρ / bound` over every labeled connected graph on `n` nodes,
/// sorted by `r₁` (ties by edge list) so the empirical CDF can be read off.
pub fn survey_ratio_r1<T: Real>(f: &dyn SpectralFunction<T>, n: usize) -> Result<Vec<SurveyEntry<T>>> {
    if n < 3 {
        return Err(Error::Invalid(format!("survey needs n >= 3, got {n}")));
    }
    // Convexity once over the widest range any graph on n nodes can reach.
    check_convex(f, T::lit(1e-3), T::from_usize(4 + 2 * n).unwrap())?;
    let graphs: Vec<WeightedGraph<T>> = enumerate_connected_unweighted(n)?.collect();
    let mut out: Vec<SurveyEntry<T>> = graphs
        .par_iter()
        .map(|g| {
            let rho = sum_terms(f, spectrum(&laplacian(g))?.nonzero_index())?;
            let nf = T::from_usize(n).unwrap();
            let (m, delta) = (g.n_edges(), g.max_degree());
            let first = T::from_usize(1 + delta).unwrap();
            let rest = T::from_usize(2 * m - 1 - delta).unwrap() / (nf - T::lit(2.0));
            let bound = f.eval(first)? + (nf - T::lit(2.0)) * f.eval(rest)?;
            Ok(SurveyEntry {
                edges: g.edges().iter().map(|&(i, j, _)| (i, j)).collect(),
                rho,
                bound,
                r1: rho / bound,
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.r1.partial_cmp(&b.r1).unwrap().then_with(|| a.edges.cmp(&b.edges)));
    Ok(out)
}
