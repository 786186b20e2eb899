//! Recovery of a performance function as an explicit rational function
//! `p(λ)/q(λ)` from samples.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;
use crate::spectral::{PerformanceFunction, SpectralFunction};

/// Held-out relative error below which a degree pair is accepted.
pub const FIT_ACCEPT_TOL: f64 = 1e-7;

/// Condition number above which a least-squares system is rejected.
pub const FIT_MAX_CONDITION: f64 = 1e14;

/// `p(λ)/q(λ)`, coefficients in ascending degree, `q` monic.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFit<T> {
    pub numerator: Vec<T>,
    pub denominator: Vec<T>,
    /// Max relative error on the fitting samples.
    pub residual: T,
    /// Max relative error on the held-out samples.
    pub validation_error: T,
    /// Condition number of the column-scaled final least-squares system.
    pub condition: T,
}

fn horner<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &v| acc * x + v)
}

impl<T: Real> RationalFit<T> {
    pub fn eval(&self, lambda: T) -> T {
        horner(&self.numerator, lambda) / horner(&self.denominator, lambda)
    }

    pub fn numerator_degree(&self) -> usize {
        self.numerator.len() - 1
    }

    pub fn denominator_degree(&self) -> usize {
        self.denominator.len() - 1
    }
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_samples<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize(count.max(2) - 1).unwrap();
    (0..count)
        .map(|i| (a + (b - a) * T::from_usize(i).unwrap() / last).exp())
        .collect()
}

/// Default grid: `4 (max_degree + 1)` log-spaced points above the
/// function's threshold.
pub fn default_samples<T: Real>(valid_from: T, max_degree: usize) -> Vec<T> {
    let lo = T::lit(0.1).max(valid_from * T::lit(2.0) + T::lit(1e-3));
    let hi = T::lit(100.0).max(lo * T::lit(1e3));
    log_samples(lo, hi, 4 * (max_degree + 1))
}

/// Fits a performance function, rejecting degrees above the `n²` bound of
/// its realization.
pub fn fit_rational<T: Real>(
    pf: &PerformanceFunction<T>,
    lambda_samples: &[T],
    max_degree: usize,
) -> Result<RationalFit<T>> {
    let n = pf.realization().0.n();
    if max_degree > n * n {
        return Err(Error::Invalid(format!(
            "max_degree {max_degree} exceeds the bound n² = {} for this realization",
            n * n
        )));
    }
    fit_rational_fn(pf, lambda_samples, max_degree)
}

struct Candidate<T> {
    num: Vec<T>,
    den: Vec<T>,
    fit_err: T,
    val_err: T,
    condition: T,
}

/// Fits any spectral function. Degree pairs are tried by increasing total
/// degree (then increasing denominator degree); even-indexed samples are
/// fitted and odd-indexed ones held out. The first pair with held-out
/// relative error below [`FIT_ACCEPT_TOL`] wins; otherwise the best
/// well-conditioned candidate is returned with its errors.
pub fn fit_rational_fn<T: Real>(
    f: &dyn SpectralFunction<T>,
    lambda_samples: &[T],
    max_degree: usize,
) -> Result<RationalFit<T>> {
    if lambda_samples.len() < 4 {
        return Err(Error::Invalid("need at least 4 samples".into()));
    }
    let from = f.valid_from();
    if let Some(bad) = lambda_samples.iter().find(|&&l| !(l > from) || !l.is_finite()) {
        return Err(Error::Invalid(format!(
            "sample λ = {bad} is not above the threshold {from}"
        )));
    }
    let values: Vec<T> = lambda_samples
        .iter()
        .map(|&l| f.eval(l))
        .collect::<Result<_>>()?;
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v == T::zero()) {
        return Err(Error::Invalid(format!("function value {v} cannot be fitted in relative error")));
    }
    // Scale λ by the geometric mean so powers stay near unity.
    let log_mean = lambda_samples.iter().fold(T::zero(), |s, l| s + l.ln())
        / T::from_usize(lambda_samples.len()).unwrap();
    let g = log_mean.exp();
    let x: Vec<T> = lambda_samples.iter().map(|&l| l / g).collect();
    let (fit_idx, val_idx): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|i| i % 2 == 0);

    let mut best: Option<Candidate<T>> = None;
    let mut worst_condition = T::zero();
    for total in 0..=2 * max_degree {
        for dd in 0..=total.min(max_degree) {
            let dn = total - dd;
            if dn > max_degree || dn + 1 + dd > fit_idx.len() {
                continue;
            }
            let Some(c) = solve_pair(&x, &values, &fit_idx, &val_idx, dn, dd) else {
                continue;
            };
            if c.condition > T::lit(FIT_MAX_CONDITION) {
                worst_condition = worst_condition.max(c.condition);
                continue;
            }
            let accept = c.val_err < T::lit(FIT_ACCEPT_TOL);
            if best.as_ref().map_or(true, |b| c.val_err < b.val_err) {
                best = Some(c);
            }
            if accept {
                return Ok(unscale(best.unwrap(), g));
            }
        }
    }
    match best {
        Some(c) => Ok(unscale(c, g)),
        None => Err(Error::IllConditioned(format!(
            "every degree pair exceeded condition {FIT_MAX_CONDITION:e} (largest {})",
            worst_condition
        ))),
    }
}

fn rel_err<T: Real>(num: &[T], den: &[T], x: &[T], v: &[T], idx: &[usize]) -> T {
    idx.iter().fold(T::zero(), |m, &i| {
        let e = ((horner(num, x[i]) / horner(den, x[i]) - v[i]) / v[i]).abs();
        if e.is_finite() {
            m.max(e)
        } else {
            T::lit(f64::INFINITY)
        }
    })
}

fn solve_pair<T: Real>(
    x: &[T],
    v: &[T],
    fit_idx: &[usize],
    val_idx: &[usize],
    dn: usize,
    dd: usize,
) -> Option<Candidate<T>> {
    let cols = dn + 1 + dd;
    let mut weights: Vec<T> = fit_idx.iter().map(|&i| T::one() / v[i].abs()).collect();
    let mut result = None;
    // Linearized pass, then one pass reweighted by 1/q(λ).
    for pass in 0..2 {
        let mut a = Mat::<T>::zeros(fit_idx.len(), cols);
        let mut rhs = DVector::<T>::zeros(fit_idx.len());
        for (r, &i) in fit_idx.iter().enumerate() {
            let w = weights[r];
            let mut pw = T::one();
            for j in 0..=dn.max(dd) {
                if j <= dn {
                    a[(r, j)] = pw * w;
                }
                if j < dd {
                    a[(r, dn + 1 + j)] = -v[i] * pw * w;
                }
                if j == dd {
                    rhs[r] = v[i] * pw * w;
                }
                pw *= x[i];
            }
        }
        let scales: Vec<T> = (0..cols)
            .map(|j| {
                let n = a.column(j).norm();
                if n > T::zero() {
                    n
                } else {
                    T::one()
                }
            })
            .collect();
        for (j, s) in scales.iter().enumerate() {
            a.column_mut(j).scale_mut(T::one() / *s);
        }
        let svd = a.svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.iter().copied().fold(T::zero(), |m, s| m.max(s));
        let smin = sv.iter().copied().fold(smax, |m, s| m.min(s));
        let condition = if smin > T::zero() { smax / smin } else { T::lit(f64::INFINITY) };
        let sol = svd.solve(&rhs, T::zero()).ok()?;
        let coef: Vec<T> = sol.iter().zip(&scales).map(|(c, s)| *c / *s).collect();
        let num = coef[..=dn].to_vec();
        let mut den = coef[dn + 1..].to_vec();
        den.push(T::one());
        if coef.iter().any(|c| !c.is_finite()) {
            return None;
        }
        result = Some(Candidate {
            fit_err: rel_err(&num, &den, x, v, fit_idx),
            val_err: rel_err(&num, &den, x, v, val_idx),
            num,
            den,
            condition,
        });
        if pass == 0 {
            // p − φq is q times the relative error, so reweight by 1/|φ q|.
            let den = &result.as_ref().unwrap().den;
            weights = fit_idx
                .iter()
                .map(|&i| T::one() / (v[i].abs() * horner(den, x[i]).abs()).max(T::lit(f64::MIN_POSITIVE)))
                .collect();
        }
    }
    result
}

fn unscale<T: Real>(c: Candidate<T>, g: T) -> RationalFit<T> {
    let dd = c.den.len() - 1;
    let gdd = g.powi(dd as i32);
    let rescale = |v: &[T]| -> Vec<T> {
        v.iter()
            .enumerate()
            .map(|(j, &x)| x * gdd / g.powi(j as i32))
            .collect()
    };
    RationalFit {
        numerator: rescale(&c.num),
        denominator: rescale(&c.den),
        residual: c.fit_err,
        validation_error: c.val_err,
        condition: c.condition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SubsystemModel;
    use crate::spectral::FnSpectral;

    fn m(r: usize, c: usize, v: &[f64]) -> Mat<f64> {
        Mat::from_row_slice(r, c, v)
    }

    #[test]
    fn double_integrator_fit() {
        let s = SubsystemModel::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 1, &[0.0, 1.0]),
            Mat::identity(2, 2),
            m(1, 2, &[1.0, 0.0]),
            0.0,
        )
        .unwrap();
        let pf = PerformanceFunction::state_feedback(&s, &m(1, 2, &[1.0, 1.0])).unwrap();
        let samples = log_samples(0.2, 20.0, 12);
        let fit = fit_rational(&pf, &samples, 2).unwrap();
        assert_eq!(fit.numerator.len(), 1);
        assert_eq!(fit.denominator.len(), 3);
        assert!((fit.numerator[0] - 0.5).abs() < 1e-8);
        assert!(fit.denominator[0].abs() < 1e-8 && fit.denominator[1].abs() < 1e-8);
        assert_eq!(fit.denominator[2], 1.0);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn single_integrator_fit() {
        let s = SubsystemModel::new(m(1, 1, &[-1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), 0.0).unwrap();
        let pf = PerformanceFunction::state_feedback(&s, &m(1, 1, &[2.0])).unwrap();
        let fit = fit_rational(&pf, &log_samples(0.1, 50.0, 8), 1).unwrap();
        assert!((fit.numerator[0] - 0.25).abs() < 1e-10);
        assert!((fit.denominator[0] - 0.5).abs() < 1e-10);
        assert!((fit.denominator[1] - 1.0).abs() < 1e-15);
        assert!(fit_rational(&pf, &log_samples(0.1, 50.0, 8), 2).is_err());
    }

    #[test]
    fn constant_fit() {
        let f = FnSpectral { f: |_l: f64| Ok(3.5), valid_from: 0.0 };
        let fit = fit_rational_fn(&f, &log_samples(0.5, 5.0, 8), 2).unwrap();
        assert_eq!(fit.numerator.len(), 1);
        assert!((fit.numerator[0] - 3.5).abs() < 1e-12);
        assert_eq!(fit.denominator, vec![1.0]);
    }

    #[test]
    fn samples_below_threshold_rejected() {
        let f = FnSpectral { f: |l: f64| Ok(1.0 / l), valid_from: 1.0 };
        assert!(fit_rational_fn(&f, &[0.5, 2.0, 3.0, 4.0], 1).is_err());
    }
}
