//! Connectivity thresholds, Riccati-based gain and observer synthesis, and
//! cheap-control performance floors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    is_detectable, is_hurwitz, is_stabilizable, solve_care, solve_care_newton, symmetric_eigenvalues,
    Mat,
};
use crate::model::SubsystemModel;
use crate::scalar::Real;

/// Scan settings for [`lambda_tilde`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Smallest scanned λ. A threshold below this scale is reported as 0.
    pub scan_min: f64,
    pub scan_max: f64,
    /// Number of log-spaced scan points (at least 200 are used).
    pub points: usize,
    /// Relative bisection tolerance on the refined threshold.
    pub tol: f64,
    /// Hurwitz margin: stable means every real part is below `-margin`.
    pub margin: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            scan_min: 1e-6,
            scan_max: 1e6,
            points: 400,
            tol: 1e-9,
            margin: 1e-9,
        }
    }
}

/// Outcome of a threshold scan.
///
/// `lambda_tilde` is `+∞` when the family is still unstable at `scan_max`,
/// and exactly `0` when every scanned point is stable. Stability is never
/// claimed at `lambda_tilde` itself, and the scan cannot certify stability
/// beyond `scan_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult<T> {
    pub lambda_tilde: T,
    pub scan_max: T,
    pub refined: bool,
    pub unstable_witness: Option<T>,
}

impl<T: Real> ThresholdResult<T> {
    pub fn is_finite(&self) -> bool {
        self.lambda_tilde.is_finite()
    }
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Threshold of an arbitrary matrix family `λ ↦ M(λ)`: the supremum of the
/// scanned λ at which `M(λ)` fails the Hurwitz test. Eigensolver failures
/// count as unstable.
pub fn threshold_of<T, F>(family: F, opts: &ThresholdOptions) -> ThresholdResult<T>
where
    T: Real,
    F: Fn(T) -> Mat<T> + Sync,
{
    let margin = T::lit(opts.margin);
    let stable = |l: T| is_hurwitz(&family(l), margin).unwrap_or(false);
    let grid = log_grid(opts.scan_min, opts.scan_max, opts.points.max(200));
    let flags: Vec<bool> = grid.par_iter().map(|&l| stable(T::lit(l))).collect();
    let scan_max = T::lit(opts.scan_max);
    if !flags[flags.len() - 1] {
        return ThresholdResult {
            lambda_tilde: T::lit(f64::INFINITY),
            scan_max,
            refined: false,
            unstable_witness: Some(scan_max),
        };
    }
    let Some(last_bad) = flags.iter().rposition(|&s| !s) else {
        return ThresholdResult {
            lambda_tilde: T::zero(),
            scan_max,
            refined: false,
            unstable_witness: None,
        };
    };
    let (mut lo, mut hi) = (T::lit(grid[last_bad]), T::lit(grid[last_bad + 1]));
    let tol = T::lit(opts.tol);
    for _ in 0..200 {
        if hi - lo <= tol * T::one().max(lo) {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if stable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ThresholdResult {
        lambda_tilde: hi,
        scan_max,
        refined: true,
        unstable_witness: Some(lo),
    }
}

/// Minimum connectivity threshold of `A − λ B K H`.
pub fn lambda_tilde<T: Real>(
    s: &SubsystemModel<T>,
    k: &Mat<T>,
    opts: &ThresholdOptions,
) -> Result<ThresholdResult<T>> {
    s.check_gain(k)?;
    let bkh = s.b() * k * s.h();
    Ok(threshold_of(|l| s.a() - &bkh * l, opts))
}

/// Threshold of the state-feedback family `A − λ B K` for `K` of size p × n.
pub fn lambda_tilde_state_feedback<T: Real>(
    s: &SubsystemModel<T>,
    k: &Mat<T>,
    opts: &ThresholdOptions,
) -> Result<ThresholdResult<T>> {
    if k.nrows() != s.p() || k.ncols() != s.n() {
        return Err(Error::Dimension(format!(
            "state-feedback gain must be {}x{}, got {}x{}",
            s.p(),
            s.n(),
            k.nrows(),
            k.ncols()
        )));
    }
    let bk = s.b() * k;
    Ok(threshold_of(|l| s.a() - &bk * l, opts))
}

/// Threshold of the estimator family `A − λ F H`.
pub fn lambda_tilde_observer<T: Real>(
    s: &SubsystemModel<T>,
    f: &Mat<T>,
    opts: &ThresholdOptions,
) -> Result<ThresholdResult<T>> {
    s.check_observer_gain(f)?;
    let fh = f * s.h();
    Ok(threshold_of(|l| s.a() - &fh * l, opts))
}

/// Synthesized gain with its certificate.
#[derive(Debug, Clone)]
pub struct GainDesign<T: Real> {
    pub gain: Mat<T>,
    /// Stabilizing Riccati solution the gain is built from.
    pub riccati: Mat<T>,
    /// Largest eigenvalue of the LMI expression at `Q = riccati⁻¹`; negative
    /// when the certificate holds.
    pub certificate_max_eig: T,
    pub threshold: ThresholdResult<T>,
}

fn check_c<T: Real>(c: T) -> Result<()> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::Invalid(format!("design parameter c must be positive, got {c}")));
    }
    Ok(())
}

/// State-feedback gain `K = ½ BᵀP` (p × n) from the stabilizing solution of
/// `AᵀP + PA − c·PBBᵀP + I = 0`.
///
/// With `Q = P⁻¹` this gives `AQ + QAᵀ − cBBᵀ = −Q² ≺ 0`, so `A − λBK` is
/// Hurwitz for every `λ ≥ c`.
pub fn design_gain<T: Real>(s: &SubsystemModel<T>, c: T) -> Result<GainDesign<T>> {
    check_c(c)?;
    let (a, b) = (s.a(), s.b());
    let n = s.n();
    let p = solve_care(a, b, c, &Mat::identity(n, n))?;
    let gain = b.transpose() * &p * T::lit(0.5);
    let q = p
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Riccati solution is not invertible".into()))?;
    let lmi = a * &q + &q * a.transpose() - b * b.transpose() * c;
    let certificate_max_eig = *symmetric_eigenvalues(&crate::linalg::symmetrize(&lmi)).last().unwrap();
    let threshold = lambda_tilde_state_feedback(s, &gain, &ThresholdOptions::default())?;
    Ok(GainDesign { gain, riccati: p, certificate_max_eig, threshold })
}

/// Observer gain `F = ½ S Hᵀ` (n × q) from the stabilizing solution of
/// `AS + SAᵀ − c·SHᵀHS + I = 0`; the dual of [`design_gain`].
pub fn design_observer<T: Real>(s: &SubsystemModel<T>, c: T) -> Result<GainDesign<T>> {
    check_c(c)?;
    let (a, h) = (s.a(), s.h());
    let n = s.n();
    let sol = match solve_care(&a.transpose(), &h.transpose(), c, &Mat::identity(n, n)) {
        Err(Error::NotStabilizable(_)) => {
            return Err(Error::NotDetectable("(A, H) fails the PBH rank test".into()))
        }
        other => other?,
    };
    let gain = &sol * h.transpose() * T::lit(0.5);
    let q = sol
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Riccati solution is not invertible".into()))?;
    let lmi = a.transpose() * &q + &q * a - h.transpose() * h * c;
    let certificate_max_eig = *symmetric_eigenvalues(&crate::linalg::symmetrize(&lmi)).last().unwrap();
    let threshold = lambda_tilde_observer(s, &gain, &ThresholdOptions::default())?;
    Ok(GainDesign { gain, riccati: sol, certificate_max_eig, threshold })
}

/// Which cheap-limit Riccati equation [`performance_floor`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorSide {
    /// `AᵀP + PA + CᵀC − ε⁻²PBBᵀP = 0`, floor `Tr(EᵀP₀E)`.
    Control,
    /// `AS + SAᵀ + EEᵀ − ε⁻²SHᵀHS = 0`, floor `Tr(C S₀ Cᵀ)` (the
    /// estimation function weights the error by `C`).
    Estimation,
}

/// Relative agreement required between successive traces and between the
/// last iterate and its extrapolation.
pub const FLOOR_CONVERGENCE_TOL: f64 = 1e-4;

/// Cheap-control limit estimated along a decreasing ε schedule.
#[derive(Debug, Clone)]
pub struct PerformanceFloor<T: Real> {
    pub side: FloorSide,
    /// Solution at the smallest ε that succeeded.
    pub p0: Mat<T>,
    /// Linear-in-ε extrapolation from the last two iterates.
    pub extrapolated: Option<Mat<T>>,
    /// `(ε, Tr(P_ε))` for every successful ε, in schedule order.
    pub epsilon_trace: Vec<(T, T)>,
    /// Floor value computed from `p0`.
    pub floor: T,
    pub converged: bool,
    /// Set when the Riccati solve failed before the schedule finished.
    pub failure: Option<Error>,
}

/// Default ε schedule `1e-1, 1e-2, …, 1e-6`.
pub fn default_eps_schedule<T: Real>() -> Vec<T> {
    (1..=6).map(|k| T::lit(10f64.powi(-k))).collect()
}

/// Solves the parametric Riccati equation along `eps_schedule` (sorted
/// descending internally), warm-starting each solve from the previous one.
pub fn performance_floor<T: Real>(
    s: &SubsystemModel<T>,
    side: FloorSide,
    eps_schedule: &[T],
) -> Result<PerformanceFloor<T>> {
    if eps_schedule.is_empty() || eps_schedule.iter().any(|e| !(*e > T::zero())) {
        return Err(Error::Invalid("ε schedule must be non-empty and positive".into()));
    }
    let mut eps: Vec<T> = eps_schedule.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (a, b, q) = match side {
        FloorSide::Control => {
            if !is_stabilizable(s.a(), s.b())? {
                return Err(Error::NotStabilizable("(A, B) fails the PBH rank test".into()));
            }
            if !is_detectable(s.a(), s.c())? {
                return Err(Error::NotDetectable("(A, C) fails the PBH rank test".into()));
            }
            (s.a().clone(), s.b().clone(), s.c().transpose() * s.c())
        }
        FloorSide::Estimation => {
            if !is_stabilizable(s.a(), s.e())? {
                return Err(Error::NotStabilizable("(A, E) fails the PBH rank test".into()));
            }
            if !is_detectable(s.a(), s.h())? {
                return Err(Error::NotDetectable("(A, H) fails the PBH rank test".into()));
            }
            (s.a().transpose(), s.h().transpose(), s.e() * s.e().transpose())
        }
    };
    let mut sols: Vec<(T, Mat<T>)> = Vec::new();
    let mut failure = None;
    for &e in &eps {
        let weight = T::one() / (e * e);
        let next = match sols.last() {
            None => solve_care(&a, &b, weight, &q),
            Some((_, prev)) => solve_care_newton(&a, &b, weight, &q, prev),
        };
        match next {
            Ok(p) => sols.push((e, p)),
            Err(err) => {
                failure = Some(err);
                break;
            }
        }
    }
    let Some((_, p0)) = sols.last().cloned() else {
        return Err(failure.unwrap_or_else(|| Error::Riccati("no ε succeeded".into())));
    };
    let epsilon_trace: Vec<(T, T)> = sols.iter().map(|(e, p)| (*e, p.trace())).collect();
    let tol = T::lit(FLOOR_CONVERGENCE_TOL);
    let close = |x: T, y: T| (x - y).abs() <= tol * T::one().max(x.abs()).max(y.abs());
    let extrapolated = if sols.len() >= 2 {
        let (e1, p1) = &sols[sols.len() - 2];
        let (e2, p2) = &sols[sols.len() - 1];
        Some((p2 * *e1 - p1 * *e2) / (*e1 - *e2))
    } else {
        None
    };
    let converged = failure.is_none()
        && sols.len() >= 2
        && close(epsilon_trace[sols.len() - 2].1, epsilon_trace[sols.len() - 1].1)
        && extrapolated.as_ref().is_some_and(|x| close(x.trace(), p0.trace()));
    let floor = match side {
        FloorSide::Control => (s.e().transpose() * &p0 * s.e()).trace(),
        FloorSide::Estimation => (s.c() * &p0 * s.c().transpose()).trace(),
    };
    Ok(PerformanceFloor {
        side,
        p0,
        extrapolated,
        epsilon_trace,
        floor,
        converged,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_hurwitz;

    fn m(r: usize, c: usize, v: &[f64]) -> Mat<f64> {
        Mat::from_row_slice(r, c, v)
    }

    fn model(a: Mat<f64>, b: Mat<f64>, h: Mat<f64>) -> SubsystemModel<f64> {
        let n = a.nrows();
        let e = Mat::identity(n, n);
        let c = Mat::identity(n, n);
        SubsystemModel::new(a, b, e, h, c, 0.0).unwrap()
    }

    #[test]
    fn threshold_triple_integrator() {
        let s = model(
            m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            m(3, 1, &[0.0, 0.0, 1.0]),
            Mat::identity(3, 3),
        );
        let r = lambda_tilde(&s, &m(1, 3, &[1.0, 1.0, 1.0]), &ThresholdOptions::default()).unwrap();
        assert!((r.lambda_tilde - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.refined);
    }

    #[test]
    fn threshold_zero_and_infinite() {
        let s = model(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]));
        let r = lambda_tilde(&s, &m(1, 1, &[1.0]), &ThresholdOptions::default()).unwrap();
        assert_eq!(r.lambda_tilde, 0.0);
        let r = lambda_tilde(&s, &m(1, 1, &[-1.0]), &ThresholdOptions::default()).unwrap();
        assert!(r.lambda_tilde.is_infinite());
        assert_eq!(r.unstable_witness, Some(1e6));
    }

    #[test]
    fn design_gain_scalar_examples() {
        let s = model(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]));
        let d = design_gain(&s, 1.0).unwrap();
        assert!((d.riccati[(0, 0)] - 1.0).abs() < 1e-10);
        assert!((d.gain[(0, 0)] - 0.5).abs() < 1e-10);
        assert_eq!(d.threshold.lambda_tilde, 0.0);
        let s = model(m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]));
        let d = design_gain(&s, 1.0).unwrap();
        let r = 1.0 + 2f64.sqrt();
        assert!((d.riccati[(0, 0)] - r).abs() < 1e-10);
        assert!((d.gain[(0, 0)] - r / 2.0).abs() < 1e-10);
        assert!(d.threshold.lambda_tilde <= 1.0 + 1e-6);
        assert!(d.certificate_max_eig < 0.0);
    }

    #[test]
    fn design_observer_examples() {
        let s = model(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]));
        let d = design_observer(&s, 1.0).unwrap();
        assert!((d.gain[(0, 0)] - 0.5).abs() < 1e-10);
        let dint = model(m(2, 2, &[0.0, 1.0, 0.0, 0.0]), m(2, 1, &[0.0, 1.0]), m(1, 2, &[1.0, 0.0]));
        let d = design_observer(&dint, 1.0).unwrap();
        assert!(d.gain[(0, 0)] > 0.0 && d.gain[(1, 0)] > 0.0);
        assert_eq!(d.threshold.lambda_tilde, 0.0);
        let bad = model(m(2, 2, &[1.0, 0.0, 0.0, -1.0]), m(2, 1, &[1.0, 1.0]), m(1, 2, &[0.0, 1.0]));
        assert!(matches!(design_observer(&bad, 1.0), Err(Error::NotDetectable(_))));
    }

    #[test]
    fn design_gain_rejects_unstabilizable() {
        let s = model(m(2, 2, &[1.0, 0.0, 0.0, -1.0]), m(2, 1, &[0.0, 1.0]), Mat::identity(2, 2));
        assert!(matches!(design_gain(&s, 1.0), Err(Error::NotStabilizable(_))));
    }

    #[test]
    fn floor_non_minimum_phase() {
        let zeta = 1.0;
        let s = SubsystemModel::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 1, &[1.0, 0.0]),
            Mat::identity(2, 2),
            m(1, 2, &[-zeta, 1.0]),
            0.0,
        )
        .unwrap();
        let f = performance_floor(&s, FloorSide::Control, &default_eps_schedule()).unwrap();
        assert!((f.p0.clone() - m(2, 2, &[2.0, 0.0, 0.0, 0.0])).amax() < 1e-3, "{}", f.p0);
        assert!((f.floor - 2.0).abs() < 1e-3);
        assert!(f.converged);
        assert_eq!(f.epsilon_trace.len(), 6);
    }

    #[test]
    fn floor_relative_degree_one_vanishes() {
        let s = SubsystemModel::new(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), 0.0).unwrap();
        let f = performance_floor(&s, FloorSide::Control, &default_eps_schedule()).unwrap();
        assert!(f.p0.trace() < 1e-4);
        assert!(f.converged);
    }

    #[test]
    fn warm_start_stays_stabilizing() {
        let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = m(2, 1, &[0.0, 1.0]);
        let q = Mat::identity(2, 2);
        let p1 = solve_care(&a, &b, 1.0, &q).unwrap();
        let p2 = solve_care_newton(&a, &b, 100.0, &q, &p1).unwrap();
        assert!(is_hurwitz(&(&a - &b * b.transpose() * &p2 * 100.0), 0.0).unwrap());
    }
}
