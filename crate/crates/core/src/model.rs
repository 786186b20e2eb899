//! Subsystem realizations and the structured network matrices built from them.

use crate::error::{Error, Result};
use crate::graph::{laplacian, WeightedGraph};
use crate::linalg::{ensure_finite, kron, Mat};
use crate::scalar::Real;

/// Nodal realization
///
/// ```text
/// ẋ = A x + B u + E ξ,   y = H x + σ D η,   z = C x
/// ```
///
/// `D` maps the measurement noise into the `q` measured channels and
/// defaults to the identity, so `η` has `q` components unless a different
/// map is supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemModel<T: Real> {
    a: Mat<T>,
    b: Mat<T>,
    e: Mat<T>,
    h: Mat<T>,
    c: Mat<T>,
    d: Mat<T>,
    sigma: T,
}

fn dim_err(what: &str, expected: String, got: &Mat<impl Real>) -> Error {
    Error::Dimension(format!(
        "{what} must be {expected}, got {}x{}",
        got.nrows(),
        got.ncols()
    ))
}

impl<T: Real> SubsystemModel<T> {
    pub fn new(a: Mat<T>, b: Mat<T>, e: Mat<T>, h: Mat<T>, c: Mat<T>, sigma: T) -> Result<Self> {
        let q = h.nrows();
        Self::with_noise_map(a, b, e, h, c, Mat::identity(q, q), sigma)
    }

    pub fn with_noise_map(
        a: Mat<T>,
        b: Mat<T>,
        e: Mat<T>,
        h: Mat<T>,
        c: Mat<T>,
        d: Mat<T>,
        sigma: T,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(dim_err("A", "square and non-empty".into(), &a));
        }
        if b.nrows() != n {
            return Err(dim_err("B", format!("{n}xp"), &b));
        }
        if e.nrows() != n {
            return Err(dim_err("E", format!("{n}xm1"), &e));
        }
        if h.ncols() != n {
            return Err(dim_err("H", format!("qx{n}"), &h));
        }
        if c.ncols() != n {
            return Err(dim_err("C", format!("m2x{n}"), &c));
        }
        if d.nrows() != h.nrows() {
            return Err(dim_err("D", format!("{}xm3", h.nrows()), &d));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&e, "E"), (&h, "H"), (&c, "C"), (&d, "D")] {
            ensure_finite(m, name)?;
        }
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::Invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { a, b, e, h, c, d, sigma })
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }
    pub fn b(&self) -> &Mat<T> {
        &self.b
    }
    pub fn e(&self) -> &Mat<T> {
        &self.e
    }
    pub fn h(&self) -> &Mat<T> {
        &self.h
    }
    pub fn c(&self) -> &Mat<T> {
        &self.c
    }
    /// Measurement-noise map `D` (q × m₃).
    pub fn d(&self) -> &Mat<T> {
        &self.d
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Input dimension.
    pub fn p(&self) -> usize {
        self.b.ncols()
    }
    /// Measured output dimension.
    pub fn q(&self) -> usize {
        self.h.nrows()
    }
    /// Disturbance dimension.
    pub fn m1(&self) -> usize {
        self.e.ncols()
    }
    /// Performance output dimension.
    pub fn m2(&self) -> usize {
        self.c.nrows()
    }
    /// Measurement-noise dimension.
    pub fn m3(&self) -> usize {
        self.d.ncols()
    }

    /// Same realization with a different noise intensity.
    pub fn with_sigma(&self, sigma: T) -> Result<Self> {
        let mut out = self.clone();
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::Invalid(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        out.sigma = sigma;
        Ok(out)
    }

    /// Same realization with the disturbance map replaced.
    pub fn with_e(&self, e: Mat<T>) -> Result<Self> {
        Self::with_noise_map(
            self.a.clone(),
            self.b.clone(),
            e,
            self.h.clone(),
            self.c.clone(),
            self.d.clone(),
            self.sigma,
        )
    }

    /// Same realization with the performance output replaced.
    pub fn with_c(&self, c: Mat<T>) -> Result<Self> {
        Self::with_noise_map(
            self.a.clone(),
            self.b.clone(),
            self.e.clone(),
            self.h.clone(),
            c,
            self.d.clone(),
            self.sigma,
        )
    }

    /// Checks that `k` is a p × q output-feedback gain for this model.
    pub fn check_gain(&self, k: &Mat<T>) -> Result<()> {
        if k.nrows() != self.p() || k.ncols() != self.q() {
            return Err(Error::Dimension(format!(
                "gain K must be {}x{}, got {}x{}",
                self.p(),
                self.q(),
                k.nrows(),
                k.ncols()
            )));
        }
        ensure_finite(k, "K")
    }

    /// Checks that `f` is an n × q observer gain for this model.
    pub fn check_observer_gain(&self, f: &Mat<T>) -> Result<()> {
        if f.nrows() != self.n() || f.ncols() != self.q() {
            return Err(Error::Dimension(format!(
                "observer gain F must be {}x{}, got {}x{}",
                self.n(),
                self.q(),
                f.nrows(),
                f.ncols()
            )));
        }
        ensure_finite(f, "F")
    }
}

/// Feedback gain `K` (p × q) and optional observer gain `F` (n × q).
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet<T: Real> {
    pub k: Mat<T>,
    pub f: Option<Mat<T>>,
}

/// Full network in stacked coordinates:
/// `ẋ = A_cl x + E_dist ξ + E_noise η`, `ν = C_out x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopNetwork<T: Real> {
    pub a_cl: Mat<T>,
    pub e_dist: Mat<T>,
    pub e_noise: Mat<T>,
    pub c_out: Mat<T>,
    pub n_nodes: usize,
}

/// `A − λ B K H`, the closed loop of the mode with Laplacian eigenvalue `λ`.
pub fn decoupled_matrix<T: Real>(s: &SubsystemModel<T>, k: &Mat<T>, lambda: T) -> Result<Mat<T>> {
    s.check_gain(k)?;
    Ok(s.a() - s.b() * k * s.h() * lambda)
}

/// Centering matrix `I_N − 11ᵀ/N`.
pub fn centering<T: Real>(n: usize) -> Mat<T> {
    let inv = T::one() / T::from_usize(n).unwrap();
    Mat::from_fn(n, n, |i, j| if i == j { T::one() - inv } else { -inv })
}

/// Stacked closed loop of `N` identical subsystems under the consensus
/// law `u_i = −K Σ_j w_ij (y_i − y_j)`.
pub fn assemble_full<T: Real>(
    s: &SubsystemModel<T>,
    g: &WeightedGraph<T>,
    k: &Mat<T>,
) -> Result<ClosedLoopNetwork<T>> {
    s.check_gain(k)?;
    let n = g.n_nodes();
    let l = laplacian(g);
    let eye = Mat::<T>::identity(n, n);
    let bk = s.b() * k;
    Ok(ClosedLoopNetwork {
        a_cl: kron(&eye, s.a()) - kron(&l, &(&bk * s.h())),
        e_dist: kron(&eye, s.e()),
        e_noise: kron(&l, &(&bk * s.d())) * (-s.sigma()),
        c_out: kron(&centering(n), s.c()),
        n_nodes: n,
    })
}

/// Observer-based subsystem in `(x, x̂)` coordinates with the gain folded in.
///
/// Running the consensus law on `model` with `gain` reproduces
/// `u_i = −K x̂_i` and the observer
/// `x̂̇_i = (A − BK) x̂_i + F Σ_j w_ij ((y_i − y_j) − H(x̂_i − x̂_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverAugmented<T: Real> {
    pub model: SubsystemModel<T>,
    /// Identity of size 2q; the observer gain already sits in the input map.
    pub gain: Mat<T>,
}

/// Builds the augmented `2n`-state subsystem for state-feedback gain `K`
/// (p × n) and observer gain `F` (n × q).
pub fn augment_observer<T: Real>(
    s: &SubsystemModel<T>,
    k: &Mat<T>,
    f: &Mat<T>,
) -> Result<ObserverAugmented<T>> {
    let (n, p, q) = (s.n(), s.p(), s.q());
    if k.nrows() != p || k.ncols() != n {
        return Err(Error::Dimension(format!(
            "observer-based feedback needs a state-feedback gain K of size {p}x{n}, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    ensure_finite(k, "K")?;
    s.check_observer_gain(f)?;
    let bk = s.b() * k;
    let mut a = Mat::zeros(2 * n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(s.a());
    a.view_mut((0, n), (n, n)).copy_from(&(-&bk));
    a.view_mut((n, n), (n, n)).copy_from(&(s.a() - &bk));
    let mut b = Mat::zeros(2 * n, 2 * q);
    b.view_mut((n, 0), (n, q)).copy_from(&(-f));
    b.view_mut((n, q), (n, q)).copy_from(f);
    let mut e = Mat::zeros(2 * n, s.m1());
    e.view_mut((0, 0), (n, s.m1())).copy_from(s.e());
    let mut h = Mat::zeros(2 * q, 2 * n);
    h.view_mut((0, 0), (q, n)).copy_from(s.h());
    h.view_mut((q, n), (q, n)).copy_from(s.h());
    let mut c = Mat::zeros(s.m2(), 2 * n);
    c.view_mut((0, 0), (s.m2(), n)).copy_from(s.c());
    let mut d = Mat::zeros(2 * q, s.m3());
    d.view_mut((0, 0), (q, s.m3())).copy_from(s.d());
    Ok(ObserverAugmented {
        model: SubsystemModel::with_noise_map(a, b, e, h, c, d, s.sigma())?,
        gain: Mat::identity(2 * q, 2 * q),
    })
}

/// Two-level network: `N` copies of an `m`-node module (graph `g1`, gain
/// `k1`) whose port nodes are coupled by `g2` with gain `k2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpec<T: Real> {
    pub inner: SubsystemModel<T>,
    pub g1: WeightedGraph<T>,
    pub k1: Mat<T>,
    pub port: usize,
    pub g2: WeightedGraph<T>,
    pub k2: Mat<T>,
}

impl<T: Real> CompositeSpec<T> {
    /// Spec with the port on the last module node.
    pub fn new(
        inner: SubsystemModel<T>,
        g1: WeightedGraph<T>,
        k1: Mat<T>,
        g2: WeightedGraph<T>,
        k2: Mat<T>,
    ) -> Self {
        let port = g1.n_nodes() - 1;
        Self { inner, g1, k1, port, g2, k2 }
    }

    pub fn with_port(mut self, port: usize) -> Self {
        self.port = port;
        self
    }

    pub fn module_size(&self) -> usize {
        self.g1.n_nodes()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let m = self.g1.n_nodes();
        if self.port >= m {
            return Err(Error::Invalid(format!(
                "port {} is outside the module's nodes 0..{m}",
                self.port
            )));
        }
        self.inner.check_gain(&self.k1)?;
        self.inner.check_gain(&self.k2)
    }

    /// Module graph with the port swapped onto the last index.
    pub fn relabeled_module_graph(&self) -> Result<WeightedGraph<T>> {
        self.validate()?;
        let last = self.g1.n_nodes() - 1;
        let swap = |v: usize| {
            if v == self.port {
                last
            } else if v == last {
                self.port
            } else {
                v
            }
        };
        WeightedGraph::new(
            self.g1.n_nodes(),
            self.g1
                .edges()
                .iter()
                .map(|&(i, j, w)| (swap(i), swap(j), w))
                .collect(),
        )
    }
}

/// Module-level realization: each module becomes one subsystem with
/// `Ã = I_m⊗A − L₁⊗BK₁H`, `B̃ = e_m⊗B`, `Ẽ = I_m⊗E`, `H̃ = e_mᵀ⊗H`,
/// `C̃ = I_m⊗C`, `D̃ = D`.
pub fn composite_matrices<T: Real>(cs: &CompositeSpec<T>) -> Result<SubsystemModel<T>> {
    let g1 = cs.relabeled_module_graph()?;
    let s = &cs.inner;
    let m = g1.n_nodes();
    let eye = Mat::<T>::identity(m, m);
    let l1 = laplacian(&g1);
    let mut em = Mat::<T>::zeros(m, 1);
    em[(m - 1, 0)] = T::one();
    let a = kron(&eye, s.a()) - kron(&l1, &(s.b() * &cs.k1 * s.h()));
    SubsystemModel::with_noise_map(
        a,
        kron(&em, s.b()),
        kron(&eye, s.e()),
        kron(&em.transpose(), s.h()),
        kron(&eye, s.c()),
        s.d().clone(),
        s.sigma(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    fn m(r: usize, c: usize, v: &[f64]) -> Mat<f64> {
        Mat::from_row_slice(r, c, v)
    }

    fn single() -> SubsystemModel<f64> {
        SubsystemModel::new(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), 0.0).unwrap()
    }

    fn double_full_state() -> SubsystemModel<f64> {
        SubsystemModel::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 1, &[0.0, 1.0]),
            Mat::identity(2, 2),
            m(1, 2, &[1.0, 0.0]),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn decoupled_examples() {
        assert_eq!(decoupled_matrix(&single(), &m(1, 1, &[1.0]), 2.0).unwrap(), m(1, 1, &[-2.0]));
        let a = decoupled_matrix(&double_full_state(), &m(1, 2, &[1.0, 1.0]), 1.0).unwrap();
        assert_eq!(a, m(2, 2, &[0.0, 1.0, -1.0, -1.0]));
        let triple = SubsystemModel::new(
            m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            m(3, 1, &[0.0, 0.0, 1.0]),
            m(3, 1, &[0.0, 0.0, 1.0]),
            Mat::identity(3, 3),
            m(1, 3, &[1.0, 0.0, 0.0]),
            0.0,
        )
        .unwrap();
        let a = decoupled_matrix(&triple, &m(1, 3, &[1.0, 1.0, 1.0]), 1.0).unwrap();
        assert_eq!(a.row(2).iter().copied().collect::<Vec<_>>(), vec![-1.0, -1.0, -1.0]);
        assert!(decoupled_matrix(&triple, &m(1, 2, &[1.0, 1.0]), 1.0).is_err());
    }

    #[test]
    fn assemble_examples() {
        let one = WeightedGraph::new(1, vec![]).unwrap();
        let net = assemble_full(&single(), &one, &m(1, 1, &[1.0])).unwrap();
        assert_eq!(net.a_cl, m(1, 1, &[0.0]));
        assert_eq!(net.c_out, m(1, 1, &[0.0]));
        let g = generate(GraphKind::Path, 2, 1.0).unwrap();
        let net = assemble_full(&single(), &g, &m(1, 1, &[1.0])).unwrap();
        assert_eq!(net.a_cl, m(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
    }

    #[test]
    fn assemble_double_on_path3() {
        let s = double_full_state();
        let k = m(1, 2, &[2.0, 3.0]);
        let g = generate(GraphKind::Path, 3, 1.0).unwrap();
        let net = assemble_full(&s, &g, &k).unwrap();
        // Block (i, j) is δ_ij A − L_ij B K H, expanded entry by entry.
        let lap = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for bi in 0..3 {
            for bj in 0..3 {
                let diag = if bi == bj { 1.0 } else { 0.0 };
                let block = [
                    [0.0, diag * 1.0],
                    [-lap[bi][bj] * 2.0, -lap[bi][bj] * 3.0],
                ];
                for r in 0..2 {
                    for c in 0..2 {
                        assert_eq!(net.a_cl[(2 * bi + r, 2 * bj + c)], block[r][c]);
                    }
                }
            }
        }
    }

    #[test]
    fn observer_augmentation_blocks() {
        let s = SubsystemModel::new(
            m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            m(2, 1, &[0.0, 1.0]),
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 2, &[1.0, 0.0]),
            0.0,
        )
        .unwrap();
        let aug = augment_observer(&s, &m(1, 2, &[1.0, 1.0]), &m(2, 1, &[1.0, 1.0])).unwrap();
        assert_eq!(aug.model.n(), 4);
        let acl = decoupled_matrix(&aug.model, &aug.gain, 1.0).unwrap();
        // Error coordinates e = x − x̂ give the block-triangular form.
        let t = m(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let tinv = t.clone().try_inverse().unwrap();
        let re = &t * acl * tinv;
        let expected = m(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                -1.0, -1.0, 1.0, 1.0, //
                0.0, 0.0, -1.0, 1.0, //
                0.0, 0.0, -1.0, 0.0,
            ],
        );
        assert!((re - expected).amax() < 1e-14);
        assert!(augment_observer(&s, &m(1, 1, &[1.0]), &m(2, 1, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn composite_examples() {
        let s = single();
        let k = m(1, 1, &[1.0]);
        let one = WeightedGraph::new(1, vec![]).unwrap();
        let g2 = generate(GraphKind::Path, 3, 1.0).unwrap();
        let cs = CompositeSpec::new(s.clone(), one, k.clone(), g2.clone(), k.clone());
        assert_eq!(composite_matrices(&cs).unwrap(), s);

        let cs = CompositeSpec::new(s.clone(), generate(GraphKind::Path, 2, 1.0).unwrap(), k.clone(), g2.clone(), k.clone());
        let cm = composite_matrices(&cs).unwrap();
        assert_eq!(cm.a(), &m(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
        assert_eq!(cm.b(), &m(2, 1, &[0.0, 1.0]));
        assert_eq!(cm.h(), &m(1, 2, &[0.0, 1.0]));

        let cs = CompositeSpec::new(s, generate(GraphKind::Complete, 3, 1.0).unwrap(), k.clone(), g2, k);
        let cm = composite_matrices(&cs).unwrap();
        assert!((0..3).all(|i| cm.a()[(i, i)] == -2.0));
        assert!(composite_matrices(&cs.clone().with_port(3)).is_err());
    }

    #[test]
    fn validation_errors() {
        let bad = SubsystemModel::new(m(2, 2, &[0.0; 4]), m(1, 1, &[1.0]), m(2, 1, &[1.0, 0.0]), m(1, 2, &[1.0, 0.0]), m(1, 2, &[1.0, 0.0]), 0.0);
        assert!(matches!(bad, Err(Error::Dimension(_))));
        let bad = SubsystemModel::new(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]), -1.0);
        assert!(matches!(bad, Err(Error::Invalid(_))));
    }
}
