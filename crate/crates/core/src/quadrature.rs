//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real, F: Fn(T) -> Result<T>>(f: &F, a: T, b: T) -> Result<Piece<T>> {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c)?;
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for k in 0..7 {
        let dx = h * T::lit(XGK[k]);
        let s = f(c - dx)? + f(c + dx)?;
        kron += s * T::lit(WGK[k]);
        if k % 2 == 1 {
            gauss += s * T::lit(WG[k / 2]);
        }
    }
    let value = kron * h;
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Piece { a, b, value, error: ((kron - gauss) * h).abs() })
}

/// Integrates `f` over `[a, b]`, pre-split at `breakpoints` (those inside
/// the interval), bisecting the interval with the largest error estimate
/// until the total error is below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<T: Real, F: Fn(T) -> Result<T>>(
    f: F,
    a: T,
    b: T,
    breakpoints: &[T],
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> Result<QuadEstimate<T>> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Invalid(format!("bad integration interval [{a}, {b}]")));
    }
    let mut cuts: Vec<T> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let mut pieces: Vec<Piece<T>> = cuts
        .windows(2)
        .map(|w| gk15(&f, w[0], w[1]))
        .collect::<Result<_>>()?;
    loop {
        let value = pieces.iter().fold(T::zero(), |s, p| s + p.value);
        let error = pieces.iter().fold(T::zero(), |s, p| s + p.error);
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadEstimate { value, error, intervals: pieces.len() });
        }
        if pieces.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {error} above tolerance after {} intervals",
                pieces.len()
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = pieces.swap_remove(worst);
        let mid = (p.a + p.b) * T::lit(0.5);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be bisected further",
                p.a, p.b
            )));
        }
        pieces.push(gk15(&f, p.a, mid)?);
        pieces.push(gk15(&f, mid, p.b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x: f64| Ok(x * x), 0.0, 3.0, &[], 1e-14, 1e-14, 100).unwrap();
        assert!((r.value - 9.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2, started slightly inside the singular end.
        let eps: f64 = 1e-12;
        let exact = 2.0 - 2.0 * eps.sqrt();
        let r = integrate(|x: f64| Ok(1.0 / x.sqrt()), eps, 1.0, &[1e-8, 1e-4], 1e-12, 1e-12, 2000).unwrap();
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn bad_interval() {
        assert!(integrate(|x: f64| Ok(x), 1.0, 0.0, &[], 1e-10, 1e-10, 10).is_err());
    }
}
