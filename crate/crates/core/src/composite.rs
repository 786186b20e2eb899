//! Two-level networks: modules built over `G₁` with `K₁`, coupled through
//! one port node each over `G₂` with `K₂`.
//!
//! The composite variance splits as `ρ_nn = ρ(L₁, K₁) + Σ_{i≥2} φ_nn(λᵢ(L₂))`
//! where `φ_nn` is the ordinary performance function of the module-level
//! realization from [`composite_matrices`].

use crate::design::{lambda_tilde, threshold_of, ThresholdOptions, ThresholdResult};
use crate::error::{Error, Result};
use crate::graph::{laplacian, spectrum, WeightedGraph};
use crate::linalg::{is_hurwitz, kron, spectral_abscissa, Mat};
use crate::model::{centering, composite_matrices, CompositeSpec};
use crate::scalar::Real;
use crate::spectral::{projected_h2, rho_oracle, rho_spectral, spectral_sum, PerformanceFunction, PhiValue, Variant};

/// `ρ_nn` with its two parts; `total = inner + higher`.
#[derive(Debug, Clone)]
pub struct CompositeSum<T> {
    /// `ρ(L₁, K₁)` of one module.
    pub inner: T,
    /// `Σ_{i≥2} φ_nn(λᵢ(L₂))`.
    pub higher: T,
    pub total: T,
    pub terms: Vec<(T, PhiValue<T>)>,
}

fn check_spec<T: Real>(cs: &CompositeSpec<T>) -> Result<()> {
    cs.validate()?;
    if cs.inner.sigma() != T::zero() {
        return Err(Error::Invalid("composite networks are modeled without feedback noise (σ must be 0)".into()));
    }
    if !cs.g1.is_connected() {
        return Err(Error::Invalid("module graph G₁ must be connected".into()));
    }
    Ok(())
}

/// Every nonzero mode of the module must be stable for `ρ(L₁, K₁)` to be
/// finite.
fn check_inner<T: Real>(cs: &CompositeSpec<T>) -> Result<()> {
    let s = &cs.inner;
    let bkh = s.b() * &cs.k1 * s.h();
    for &l in spectrum(&laplacian(&cs.g1))?.nonzero_index() {
        let acl = s.a() - &bkh * l;
        if !is_hurwitz(&acl, T::zero())? {
            return Err(Error::unstable(
                format!("inner module network (mode λ = {l} of L₁)"),
                spectral_abscissa(&acl)?.0.to_f64_lossy(),
            ));
        }
    }
    Ok(())
}

/// Module-level performance function after validating the inner network.
pub fn composite_function<T: Real>(cs: &CompositeSpec<T>) -> Result<PerformanceFunction<T>> {
    check_spec(cs)?;
    check_inner(cs)?;
    PerformanceFunction::composite(cs)
}

/// `φ_nn(λ, K₂)`.
pub fn phi_nn<T: Real>(cs: &CompositeSpec<T>, lambda: T) -> Result<T> {
    Ok(composite_function(cs)?.value(lambda)?.total)
}

/// Composite variance via the spectral decomposition over `L₂`.
pub fn rho_nn<T: Real>(cs: &CompositeSpec<T>) -> Result<CompositeSum<T>> {
    let pf = composite_function(cs)?;
    let inner = if cs.g1.n_nodes() > 1 {
        rho_spectral(&cs.inner, &cs.g1, &cs.k1, Variant::State)?.total
    } else {
        T::zero()
    };
    let higher = spectral_sum(&pf, spectrum(&laplacian(&cs.g2))?.nonzero_index()).map_err(|e| match e {
        Error::BelowThreshold(msg) => Error::BelowThreshold(format!("higher-level graph G₂, {msg}")),
        other => other,
    })?;
    Ok(CompositeSum { inner, higher: higher.total, total: inner + higher.total, terms: higher.terms })
}

/// Direct oracle: assembles all `N·m` subsystems with the two coupling
/// terms `(I_N⊗L₁)⊗BK₁H` and `(L₂⊗e_p e_pᵀ)⊗BK₂H` (port `p` as given,
/// no relabeling) and solves one Lyapunov equation.
pub fn composite_oracle<T: Real>(cs: &CompositeSpec<T>) -> Result<T> {
    check_spec(cs)?;
    let s = &cs.inner;
    let (m, nn) = (cs.g1.n_nodes(), cs.g2.n_nodes());
    let total = m * nn;
    let mut port = Mat::<T>::zeros(m, m);
    port[(cs.port, cs.port)] = T::one();
    let l1 = kron(&Mat::identity(nn, nn), &laplacian(&cs.g1));
    let l2 = kron(&laplacian(&cs.g2), &port);
    let a = kron(&Mat::identity(total, total), s.a())
        - kron(&l1, &(s.b() * &cs.k1 * s.h()))
        - kron(&l2, &(s.b() * &cs.k2 * s.h()));
    let e = kron(&Mat::identity(total, total), s.e());
    let c = kron(&centering(total), s.c());
    Ok(projected_h2(&a, &e, &c, total)?.0)
}

/// `α` with `K₂ = α K₁`, if it exists and is positive.
pub fn proportional_factor<T: Real>(k1: &Mat<T>, k2: &Mat<T>) -> Option<T> {
    if k1.shape() != k2.shape() {
        return None;
    }
    let (idx, _) = k1.iter().enumerate().fold((0, T::zero()), |(bi, bv), (i, v)| {
        if v.abs() > bv {
            (i, v.abs())
        } else {
            (bi, bv)
        }
    });
    let pivot = k1.iter().nth(idx).copied()?;
    if pivot == T::zero() {
        return None;
    }
    let alpha = k2.iter().nth(idx).copied()? / pivot;
    let scale = k1.amax().max(k2.amax());
    let tol = T::lit(1e-12) * scale;
    let matches = k1.iter().zip(k2.iter()).all(|(&a, &b)| (b - alpha * a).abs() <= tol);
    (matches && alpha > T::zero()).then_some(alpha)
}

/// The single `N·m`-node graph equivalent to the composite when
/// `K₂ = α K₁`: module copies of `G₁` plus `α`-scaled `G₂` edges between
/// port nodes. Node `j` of module `i` is `i·m + j`.
pub fn flattened_graph<T: Real>(cs: &CompositeSpec<T>, alpha: T) -> Result<WeightedGraph<T>> {
    let m = cs.g1.n_nodes();
    let mut edges = Vec::with_capacity(cs.g2.n_nodes() * cs.g1.n_edges() + cs.g2.n_edges());
    for i in 0..cs.g2.n_nodes() {
        edges.extend(cs.g1.edges().iter().map(|&(a, b, w)| (i * m + a, i * m + b, w)));
    }
    edges.extend(
        cs.g2
            .edges()
            .iter()
            .map(|&(a, b, w)| (a * m + cs.port, b * m + cs.port, alpha * w)),
    );
    WeightedGraph::new(m * cs.g2.n_nodes(), edges)
}

/// Flattening oracle, valid only for `K₂ = α K₁` with `α > 0`.
pub fn flattened_oracle<T: Real>(cs: &CompositeSpec<T>) -> Result<T> {
    check_spec(cs)?;
    let alpha = proportional_factor(&cs.k1, &cs.k2)
        .ok_or_else(|| Error::Invalid("flattening needs K₂ = αK₁ with α > 0".into()))?;
    rho_oracle(&cs.inner, &flattened_graph(cs, alpha)?, &cs.k1, Variant::State)
}

/// Connectivity threshold of `Ã − λB̃K₂H̃` in the eigenvalues of `L₂`.
///
/// Requires `λ̃(K₁)` finite and a stable module network.
pub fn composite_threshold<T: Real>(cs: &CompositeSpec<T>, opts: &ThresholdOptions) -> Result<ThresholdResult<T>> {
    check_spec(cs)?;
    let inner = lambda_tilde(&cs.inner, &cs.k1, opts)?;
    if !inner.is_finite() {
        return Err(Error::Unstable {
            context: "inner gain K₁ has no finite connectivity threshold".into(),
            abscissa: f64::INFINITY,
        });
    }
    check_inner(cs)?;
    let cm = composite_matrices(cs)?;
    let bkh = cm.b() * &cs.k2 * cm.h();
    Ok(threshold_of(|l| cm.a() - &bkh * l, opts))
}
