//! Performance functions and their spectral sums.
//!
//! For a mode with Laplacian eigenvalue `λ`, `φ(λ) = Tr(C P Cᵀ)` where
//!
//! ```text
//! (A − λBKH) P + P (A − λBKH)ᵀ + EEᵀ + λ²σ² (BKD)(BKD)ᵀ = 0
//! ```
//!
//! and the network variance is `ρ = Σ_{i≥2} φ(λᵢ)`. The full-network
//! oracles here assemble the stacked system instead and solve one large
//! Lyapunov equation on the consensus-orthogonal subspace.

use rayon::prelude::*;

use crate::design::{threshold_of, ThresholdOptions};
use crate::error::{Error, Result};
use crate::graph::{laplacian, spectrum, WeightedGraph};
use crate::linalg::{is_hurwitz, kron, LyapunovSolver, Mat};
use crate::model::{
    assemble_full, augment_observer, composite_matrices, CompositeSpec, ObserverAugmented,
    SubsystemModel,
};
use crate::scalar::Real;

/// Value of a performance function split into its disturbance and
/// measurement-noise parts: `total = xi + σ² · eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue<T> {
    pub total: T,
    pub xi: T,
    pub eta: T,
}

/// Anything that can be evaluated at a Laplacian eigenvalue.
pub trait SpectralFunction<T: Real>: Sync {
    fn eval(&self, lambda: T) -> Result<T>;
    /// Evaluation is only meaningful for `λ > valid_from()`.
    fn valid_from(&self) -> T;
}

/// Closure adapter for [`SpectralFunction`].
pub struct FnSpectral<F> {
    pub f: F,
    pub valid_from: f64,
}

impl<T: Real, F: Fn(T) -> Result<T> + Sync> SpectralFunction<T> for FnSpectral<F> {
    fn eval(&self, lambda: T) -> Result<T> {
        (self.f)(lambda)
    }
    fn valid_from(&self) -> T {
        T::lit(self.valid_from)
    }
}

/// Output-weighted H2 trace pair for one closed-loop matrix.
fn h2_split<T: Real>(acl: &Mat<T>, e: &Mat<T>, noise: &Mat<T>, c: &Mat<T>) -> Result<(T, T, Mat<T>, Mat<T>)> {
    let solver = LyapunovSolver::new(acl)?;
    let px = solver.solve(&(e * e.transpose()))?;
    let pn = solver.solve(&(noise * noise.transpose()))?;
    let xi = (c * &px * c.transpose()).trace();
    let eta = (c * &pn * c.transpose()).trace();
    Ok((xi, eta, px, pn))
}

fn below_threshold<T: Real>(what: &str, lambda: T) -> Error {
    Error::BelowThreshold(format!("{what} is not Hurwitz at λ = {lambda}"))
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(Error::Invalid(format!("λ must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

struct Solved<T: Real> {
    value: PhiValue<T>,
    px: Mat<T>,
    pn: Mat<T>,
}

fn solve_mode<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>, lambda: T, what: &str) -> Result<Solved<T>> {
    check_lambda(lambda)?;
    s.check_gain(k)?;
    let bk = s.b() * k;
    let acl = s.a() - &bk * s.h() * lambda;
    if !is_hurwitz(&acl, T::zero())? {
        return Err(below_threshold(what, lambda));
    }
    let noise = &bk * s.d() * lambda;
    let (xi, eta, px, pn) = h2_split(&acl, s.e(), &noise, s.c())?;
    let sig2 = s.sigma() * s.sigma();
    Ok(Solved {
        value: PhiValue { total: xi + sig2 * eta, xi, eta },
        px,
        pn,
    })
}

/// `φ(λ)` for output-feedback gain `K` (p × q), with its noise split.
pub fn phi<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>, lambda: T) -> Result<PhiValue<T>> {
    Ok(solve_mode(s, k, lambda, "A − λBKH")?.value)
}

/// Input-variance function `Tr(λ² K H P Hᵀ Kᵀ)`, with `P` the state
/// covariance of the mode. The white-noise feedthrough `λσKDη` itself has
/// unbounded variance and is not included.
pub fn phi_u<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>, lambda: T) -> Result<T> {
    let sol = solve_mode(s, k, lambda, "A − λBKH")?;
    let p = &sol.px + &sol.pn * (s.sigma() * s.sigma());
    let kh = k * s.h() * lambda;
    Ok((&kh * p * kh.transpose()).trace())
}

/// Estimation function `ψ(λ) = Tr(C Q Cᵀ)` with
/// `(A − λFH)Q + Q(A − λFH)ᵀ + EEᵀ + λ²σ²(FD)(FD)ᵀ = 0`.
///
/// The estimation error is weighted by the performance output; with
/// `C = I` this is `Tr(Q)`.
pub fn psi<T: Real>(s: &SubsystemModel<T>, f: &Mat<T>, lambda: T) -> Result<PhiValue<T>> {
    let est = estimation_model(s)?;
    Ok(solve_mode(&est, f, lambda, "A − λFH")?.value)
}

/// Realization whose `φ` is the estimation function of `s`: the observer
/// gain enters through an identity input map.
fn estimation_model<T: Real>(s: &SubsystemModel<T>) -> Result<SubsystemModel<T>> {
    let n = s.n();
    SubsystemModel::with_noise_map(
        s.a().clone(),
        Mat::identity(n, n),
        s.e().clone(),
        s.h().clone(),
        s.c().clone(),
        s.d().clone(),
        s.sigma(),
    )
}

fn check_regulator<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>) -> Result<()> {
    let acl = s.a() - s.b() * k;
    if !is_hurwitz(&acl, T::zero())? {
        return Err(Error::Unstable {
            context: "regulator A − BK".into(),
            abscissa: crate::linalg::spectral_abscissa(&acl)?.0.to_f64_lossy(),
        });
    }
    Ok(())
}

/// `φ(λ, K, F)` for observer-based feedback `u = −K x̂` (K of size p × n).
pub fn phi_observer<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>, f: &Mat<T>, lambda: T) -> Result<PhiValue<T>> {
    let aug = augment_observer(s, k, f)?;
    check_regulator(s, k)?;
    check_lambda(lambda)?;
    if !is_hurwitz(&(s.a() - f * s.h() * lambda), T::zero())? {
        return Err(below_threshold("estimator A − λFH", lambda));
    }
    Ok(solve_mode(&aug.model, &aug.gain, lambda, "observer closed loop")?.value)
}

/// Which function a [`PerformanceFunction`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerfKind {
    StateFeedback,
    Observer,
    Estimation,
    Input,
    Composite,
}

impl PerfKind {
    pub fn name(self) -> &'static str {
        match self {
            PerfKind::StateFeedback => "state_feedback",
            PerfKind::Observer => "observer",
            PerfKind::Estimation => "estimation",
            PerfKind::Input => "input",
            PerfKind::Composite => "composite",
        }
    }
}

/// An evaluable performance function bound to a model and gain(s).
///
/// Internally every kind reduces to the `φ` of some realization under some
/// output-feedback gain; `valid_from` is that family's connectivity
/// threshold.
#[derive(Debug, Clone)]
pub struct PerformanceFunction<T: Real> {
    kind: PerfKind,
    model: SubsystemModel<T>,
    gain: Mat<T>,
    valid_from: T,
    /// Regulator and estimator pieces for observer kinds, kept for error
    /// messages that name the failing loop.
    observer_parts: Option<(SubsystemModel<T>, Mat<T>)>,
}

impl<T: Real> PerformanceFunction<T> {
    fn build(kind: PerfKind, model: SubsystemModel<T>, gain: Mat<T>) -> Result<Self> {
        model.check_gain(&gain)?;
        let bkh = model.b() * &gain * model.h();
        let t = threshold_of(|l| model.a() - &bkh * l, &ThresholdOptions::default());
        Ok(Self { kind, model, gain, valid_from: t.lambda_tilde, observer_parts: None })
    }

    pub fn state_feedback(s: &SubsystemModel<T>, k: &Mat<T>) -> Result<Self> {
        Self::build(PerfKind::StateFeedback, s.clone(), k.clone())
    }

    pub fn input(s: &SubsystemModel<T>, k: &Mat<T>) -> Result<Self> {
        Self::build(PerfKind::Input, s.clone(), k.clone())
    }

    pub fn estimation(s: &SubsystemModel<T>, f: &Mat<T>) -> Result<Self> {
        Self::build(PerfKind::Estimation, estimation_model(s)?, f.clone())
    }

    /// Observer-based feedback; fails up front when `A − BK` is not Hurwitz.
    pub fn observer(s: &SubsystemModel<T>, k: &Mat<T>, f: &Mat<T>) -> Result<Self> {
        let ObserverAugmented { model, gain } = augment_observer(s, k, f)?;
        check_regulator(s, k)?;
        let mut pf = Self::build(PerfKind::Observer, model, gain)?;
        let fh = f * s.h();
        pf.valid_from = threshold_of(|l| s.a() - &fh * l, &ThresholdOptions::default()).lambda_tilde;
        pf.observer_parts = Some((s.clone(), f.clone()));
        Ok(pf)
    }

    /// Module-level function of a two-level network, in the higher-level
    /// eigenvalue.
    pub fn composite(cs: &CompositeSpec<T>) -> Result<Self> {
        if cs.inner.sigma() != T::zero() {
            return Err(Error::Invalid("composite networks are modeled without feedback noise (σ must be 0)".into()));
        }
        let cm = composite_matrices(cs)?;
        Self::build(PerfKind::Composite, cm, cs.k2.clone())
    }

    pub fn kind(&self) -> PerfKind {
        self.kind
    }

    /// Realization and gain the function is evaluated on.
    pub fn realization(&self) -> (&SubsystemModel<T>, &Mat<T>) {
        (&self.model, &self.gain)
    }

    pub fn valid_from(&self) -> T {
        self.valid_from
    }

    /// Full evaluation with noise split. For the input kind `xi`/`eta` are
    /// the input variances driven by disturbance and noise respectively.
    pub fn value(&self, lambda: T) -> Result<PhiValue<T>> {
        check_lambda(lambda)?;
        if let Some((s, f)) = &self.observer_parts {
            if !is_hurwitz(&(s.a() - f * s.h() * lambda), T::zero())? {
                return Err(below_threshold("estimator A − λFH", lambda));
            }
        }
        let what = match self.kind {
            PerfKind::Estimation => "A − λFH",
            PerfKind::Observer => "observer closed loop",
            PerfKind::Composite => "module closed loop Ã − λB̃K₂H̃",
            _ => "A − λBKH",
        };
        let sol = solve_mode(&self.model, &self.gain, lambda, what)?;
        if self.kind != PerfKind::Input {
            return Ok(sol.value);
        }
        let kh = &self.gain * self.model.h() * lambda;
        let xi = (&kh * &sol.px * kh.transpose()).trace();
        let eta = (&kh * &sol.pn * kh.transpose()).trace();
        let sig2 = self.model.sigma() * self.model.sigma();
        Ok(PhiValue { total: xi + sig2 * eta, xi, eta })
    }
}

impl<T: Real> SpectralFunction<T> for PerformanceFunction<T> {
    fn eval(&self, lambda: T) -> Result<T> {
        Ok(self.value(lambda)?.total)
    }
    fn valid_from(&self) -> T {
        self.valid_from
    }
}

/// Spectral sum with its per-eigenvalue terms, in ascending eigenvalue order.
#[derive(Debug, Clone)]
pub struct SpectralSum<T> {
    pub total: T,
    pub terms: Vec<(T, PhiValue<T>)>,
}

/// `Σ_{i≥2} φ(λᵢ)` over the given eigenvalues `λ₂..λ_N`.
///
/// Terms are evaluated in parallel and summed in eigenvalue order.
pub fn spectral_sum<T: Real>(pf: &PerformanceFunction<T>, eigenvalues: &[T]) -> Result<SpectralSum<T>> {
    let terms: Vec<Result<PhiValue<T>>> = eigenvalues.par_iter().map(|&l| pf.value(l)).collect();
    let mut out = Vec::with_capacity(terms.len());
    let mut total = T::zero();
    for (i, (l, t)) in eigenvalues.iter().zip(terms).enumerate() {
        let v = t.map_err(|e| match e {
            Error::BelowThreshold(msg) => Error::BelowThreshold(format!("mode λ_{} = {l}: {msg}", i + 2)),
            other => other,
        })?;
        total += v.total;
        out.push((*l, v));
    }
    Ok(SpectralSum { total, terms: out })
}

/// `Σ_{i≥2} φ(λᵢ(L))` for any performance function.
pub fn rho_of<T: Real>(pf: &PerformanceFunction<T>, g: &WeightedGraph<T>) -> Result<SpectralSum<T>> {
    let spec = spectrum(&laplacian(g))?;
    spectral_sum(pf, spec.nonzero_index())
}

/// Feedback structure for [`rho_spectral`] and [`rho_oracle`].
#[derive(Debug, Clone, Copy)]
pub enum Variant<'a, T: Real> {
    /// `K` is the p × q output-feedback gain.
    State,
    /// `K` is a p × n state-feedback gain applied to the estimate produced
    /// with this observer gain.
    Observer(&'a Mat<T>),
}

fn performance_function<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>, variant: Variant<'_, T>) -> Result<PerformanceFunction<T>> {
    match variant {
        Variant::State => PerformanceFunction::state_feedback(s, k),
        Variant::Observer(f) => PerformanceFunction::observer(s, k, f),
    }
}

/// Network variance `ρ(L, K) = Σ_{i≥2} φ(λᵢ)`.
pub fn rho_spectral<T: Real>(
    s: &SubsystemModel<T>,
    g: &WeightedGraph<T>,
    k: &Mat<T>,
    variant: Variant<'_, T>,
) -> Result<SpectralSum<T>> {
    rho_of(&performance_function(s, k, variant)?, g)
}

/// Estimation measure `μ(L, F) = Σ_{i≥2} ψ(λᵢ)`.
pub fn mu_spectral<T: Real>(s: &SubsystemModel<T>, g: &WeightedGraph<T>, f: &Mat<T>) -> Result<SpectralSum<T>> {
    rho_of(&PerformanceFunction::estimation(s, f)?, g)
}

/// Input measure `ρ_u(L, K) = Σ_{i≥2} φ_u(λᵢ)`.
pub fn rho_u_spectral<T: Real>(s: &SubsystemModel<T>, g: &WeightedGraph<T>, k: &Mat<T>) -> Result<SpectralSum<T>> {
    rho_of(&PerformanceFunction::input(s, k)?, g)
}

/// Orthonormal basis of `1⊥` in `R^N` (Helmert contrasts), `N × (N−1)`.
pub fn helmert_basis<T: Real>(n: usize) -> Mat<T> {
    let mut v = Mat::zeros(n, n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        let k = T::from_usize(j + 1).unwrap();
        let norm = (k * (k + T::one())).sqrt();
        for i in 0..=j {
            v[(i, j)] = T::one() / norm;
        }
        v[(j + 1, j)] = -k / norm;
    }
    v
}

/// Steady-state covariance of the stacked system restricted to the
/// consensus-orthogonal subspace, returned in full coordinates together
/// with the output variance `Tr(C X Cᵀ)`.
///
/// `n_nodes` copies of an `n`-dimensional state are assumed; `A` must leave
/// both the consensus subspace and its complement invariant.
pub fn projected_h2<T: Real>(
    a: &Mat<T>,
    forcing: &Mat<T>,
    c: &Mat<T>,
    n_nodes: usize,
) -> Result<(T, Mat<T>)> {
    let big = a.nrows();
    if n_nodes == 0 || big % n_nodes != 0 {
        return Err(Error::Dimension(format!("{big} states do not split into {n_nodes} nodes")));
    }
    let n = big / n_nodes;
    let t = kron(&helmert_basis::<T>(n_nodes).transpose(), &Mat::identity(n, n));
    let ar = &t * a * t.transpose();
    let br = &t * forcing;
    if ar.nrows() == 0 {
        return Ok((T::zero(), Mat::zeros(big, big)));
    }
    if !is_hurwitz(&ar, T::zero())? {
        return Err(Error::unstable(
            "network dynamics on the consensus-orthogonal subspace",
            crate::linalg::spectral_abscissa(&ar)?.0.to_f64_lossy(),
        ));
    }
    let xr = LyapunovSolver::new(&ar)?.solve(&(&br * br.transpose()))?;
    let x = t.transpose() * xr * &t;
    let value = (c * &x * c.transpose()).trace();
    Ok((value, x))
}

fn hcat<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Full-network variance: assembles the stacked closed loop and solves one
/// Lyapunov equation on the consensus-orthogonal subspace.
pub fn rho_oracle<T: Real>(
    s: &SubsystemModel<T>,
    g: &WeightedGraph<T>,
    k: &Mat<T>,
    variant: Variant<'_, T>,
) -> Result<T> {
    let (model, gain) = match variant {
        Variant::State => (s.clone(), k.clone()),
        Variant::Observer(f) => {
            let aug = augment_observer(s, k, f)?;
            (aug.model, aug.gain)
        }
    };
    let net = assemble_full(&model, g, &gain)?;
    let forcing = hcat(&net.e_dist, &net.e_noise);
    Ok(projected_h2(&net.a_cl, &forcing, &net.c_out, net.n_nodes)?.0)
}

/// Full-network oracle for `μ(L, F)`.
pub fn mu_oracle<T: Real>(s: &SubsystemModel<T>, g: &WeightedGraph<T>, f: &Mat<T>) -> Result<T> {
    rho_oracle(&estimation_model(s)?, g, f, Variant::State)
}

/// Full-network oracle for `ρ_u(L, K)`: `Tr((L⊗KH) X (L⊗KH)ᵀ)`.
pub fn rho_u_oracle<T: Real>(s: &SubsystemModel<T>, g: &WeightedGraph<T>, k: &Mat<T>) -> Result<T> {
    let net = assemble_full(s, g, k)?;
    let forcing = hcat(&net.e_dist, &net.e_noise);
    let (_, x) = projected_h2(&net.a_cl, &forcing, &net.c_out, net.n_nodes)?;
    let lk = kron(&laplacian(g), &(k * s.h()));
    Ok((&lk * x * lk.transpose()).trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    fn m(r: usize, c: usize, v: &[f64]) -> Mat<f64> {
        Mat::from_row_slice(r, c, v)
    }

    fn single(a: f64) -> SubsystemModel<f64> {
        SubsystemModel::new(m(1, 1, &[-a]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), 0.0).unwrap()
    }

    fn double(sigma: f64) -> SubsystemModel<f64> {
        SubsystemModel::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 1, &[0.0, 1.0]),
            Mat::identity(2, 2),
            m(1, 2, &[1.0, 0.0]),
            sigma,
        )
        .unwrap()
    }

    fn double_obs(sigma: f64) -> SubsystemModel<f64> {
        SubsystemModel::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 2, &[1.0, 0.0]),
            sigma,
        )
        .unwrap()
    }

    #[test]
    fn phi_examples() {
        let v = phi(&single(0.0), &m(1, 1, &[1.0]), 2.0).unwrap();
        assert!((v.total - 0.25).abs() < 1e-14);
        let v = phi(&double(0.0), &m(1, 2, &[1.0, 1.0]), 2.0).unwrap();
        assert!((v.total - 0.125).abs() < 1e-14);
        let v = phi(&double(1.0), &m(1, 2, &[1.0, 1.0]), 1.0).unwrap();
        assert!((v.xi - 0.5).abs() < 1e-14);
        assert!((v.eta - 1.0).abs() < 1e-14);
        assert!((v.total - 1.5).abs() < 1e-14);
    }

    #[test]
    fn phi_below_threshold() {
        let err = phi(&single(0.0), &m(1, 1, &[1.0]), 0.0).unwrap_err();
        assert!(matches!(err, Error::BelowThreshold(_)));
    }

    #[test]
    fn observer_examples() {
        let k = m(1, 2, &[1.0, 1.0]);
        let f = m(2, 1, &[1.0, 1.0]);
        let v = phi_observer(&double_obs(0.0), &k, &f, 1.0).unwrap();
        assert!((v.total - 4.25).abs() < 1e-12);
        let v = phi_observer(&double_obs(0.0), &k, &f, 2.0).unwrap();
        assert!((v.total - 277.0 / 104.0).abs() < 1e-12);
        let v = phi_observer(&double_obs(1.0), &k, &f, 1.0).unwrap();
        assert!((v.total - 5.75).abs() < 1e-12);
        let err = phi_observer(&double_obs(0.0), &k, &m(2, 1, &[-1.0, 1.0]), 1.0).unwrap_err();
        assert!(err.to_string().contains("A − λFH"));
    }

    #[test]
    fn psi_examples() {
        let f = m(2, 1, &[1.0, 1.0]);
        assert!((psi(&double_obs(0.0), &f, 1.0).unwrap().total - 0.5).abs() < 1e-13);
        assert!((psi(&double_obs(1.0), &f, 1.0).unwrap().total - 1.5).abs() < 1e-13);
        assert!((psi(&double_obs(1.0), &f, 2.0).unwrap().total - 1.625).abs() < 1e-13);
    }

    #[test]
    fn phi_u_examples() {
        assert!((phi_u(&single(0.0), &m(1, 1, &[1.0]), 2.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((phi_u(&double(0.0), &m(1, 2, &[1.0, 1.0]), 2.0).unwrap() - 1.5).abs() < 1e-13);
        assert!((phi_u(&double(0.0), &m(1, 2, &[2.0, 1.0]), 1.0).unwrap() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn rho_examples() {
        let k = m(1, 1, &[1.0]);
        let p5 = generate(GraphKind::Path, 5, 1.0).unwrap();
        let r = rho_spectral(&single(0.0), &p5, &k, Variant::State).unwrap();
        assert!((r.total - 2.0).abs() < 1e-12);
        assert_eq!(r.terms.len(), 4);
        assert!((rho_oracle(&single(0.0), &p5, &k, Variant::State).unwrap() - 2.0).abs() < 1e-12);
        let k3 = generate(GraphKind::Complete, 3, 1.0).unwrap();
        let r = rho_spectral(&single(0.0), &k3, &k, Variant::State).unwrap();
        assert!((r.total - 1.0 / 3.0).abs() < 1e-12);
        let one = WeightedGraph::new(1, vec![]).unwrap();
        assert_eq!(rho_spectral(&single(0.0), &one, &k, Variant::State).unwrap().total, 0.0);
        let kd = m(1, 2, &[1.0, 1.0]);
        let o = rho_oracle(&double(0.0), &k3, &kd, Variant::State).unwrap();
        assert!((o - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn mu_and_rho_u_examples() {
        let k3 = generate(GraphKind::Complete, 3, 1.0).unwrap();
        let f = m(2, 1, &[1.0, 1.0]);
        assert!((mu_spectral(&double_obs(0.0), &k3, &f).unwrap().total - 1.0 / 9.0).abs() < 1e-12);
        assert!((mu_spectral(&double_obs(1.0), &k3, &f).unwrap().total - (1.0 / 9.0 + 4.0)).abs() < 1e-12);
        assert!((mu_oracle(&double_obs(1.0), &k3, &f).unwrap() - (1.0 / 9.0 + 4.0)).abs() < 1e-10);
        let r = rho_u_spectral(&single(0.0), &k3, &m(1, 1, &[1.0])).unwrap();
        assert!((r.total - 3.0).abs() < 1e-12);
        assert!((rho_u_oracle(&single(0.0), &k3, &m(1, 1, &[1.0])).unwrap() - 3.0).abs() < 1e-10);
        let p2 = generate(GraphKind::Path, 2, 1.0).unwrap();
        let r = rho_u_spectral(&double(0.0), &p2, &m(1, 2, &[1.0, 1.0])).unwrap();
        assert!((r.total - 1.5).abs() < 1e-12);
    }

    #[test]
    fn helmert_is_orthonormal_complement() {
        let v = helmert_basis::<f64>(6);
        assert!((v.transpose() * &v - Mat::identity(5, 5)).amax() < 1e-14);
        assert!((Mat::from_element(1, 6, 1.0) * v).amax() < 1e-14);
    }

    #[test]
    fn f32_phi() {
        let s = SubsystemModel::<f32>::new(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
            Mat::identity(2, 2),
            Mat::from_row_slice(1, 2, &[1.0, 0.0]),
            0.0,
        )
        .unwrap();
        let v = phi(&s, &Mat::from_row_slice(1, 2, &[1.0, 1.0]), 2.0).unwrap();
        assert!((v.total - 0.125).abs() < 1e-5);
    }
}
