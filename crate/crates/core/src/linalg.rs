//! Dense matrix kernels: eigenvalue-based stability tests, Lyapunov and
//! Riccati solvers, and PBH rank tests.
//!
//! Every routine here is a pure function of its inputs.

use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense real matrix, column-major storage.
pub type Mat<T> = DMatrix<T>;

/// Largest dimension for which [`solve_lyapunov`] takes the vectorized
/// Kronecker route.
pub const KRONECKER_MAX_DIM: usize = 8;

/// Relative tolerance of the PBH rank test.
pub const PBH_TOL: f64 = 1e-8;

/// Maximum real part over the eigenvalues of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SpectralAbscissa<T>(pub T);

impl<T: Real> SpectralAbscissa<T> {
    pub fn value(self) -> T {
        self.0
    }
}

pub(crate) fn ensure_square<T: Real>(m: &Mat<T>, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn ensure_finite<T: Real>(m: &Mat<T>, name: &str) -> Result<()> {
    if let Some((idx, v)) = m.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        let (r, c) = (idx % m.nrows().max(1), idx / m.nrows().max(1));
        return Err(Error::Invalid(format!(
            "{name} has non-finite entry {v} at ({r}, {c})"
        )));
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.kronecker(b)
}

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize<T: Real>(m: &Mat<T>) -> Mat<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn schur<T: Real>(m: &Mat<T>, what: &str) -> Result<(Mat<T>, Mat<T>)> {
    ensure_finite(m, what)?;
    let n = m.nrows();
    Schur::try_new(m.clone(), T::default_epsilon(), 1_000 * n.max(1))
        .map(|s| s.unpack())
        .ok_or_else(|| Error::Eigensolver(format!("Schur iteration on {n}x{n} {what}")))
}

/// Eigenvalues from faer's multishift QR, used when the plain Francis sweep
/// stalls (it has no exceptional shifts and can cycle on repeated
/// eigenvalues, which Kronecker-structured network matrices have).
fn eigenvalues_fallback<T: Real>(m: &Mat<T>) -> Result<Vec<Complex<T>>> {
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].to_f64_lossy());
    let ev = fm
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{n}x{n} matrix: {e:?}")))?;
    Ok(ev.into_iter().map(|z| Complex::new(T::lit(z.re), T::lit(z.im))).collect())
}

/// Diagonal block layout `(start, size)` of a real quasi-triangular Schur factor.
fn diagonal_blocks<T: Real>(t: &Mat<T>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n {
            let sub = t[(k + 1, k)].abs();
            let scale = t[(k, k)].abs() + t[(k + 1, k + 1)].abs();
            if sub > T::machine_eps() * scale && sub != T::zero() {
                blocks.push((k, 2));
                k += 2;
                continue;
            }
        }
        blocks.push((k, 1));
        k += 1;
    }
    blocks
}

fn block_eigenvalues<T: Real>(t: &Mat<T>) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(t.nrows());
    for (k, size) in diagonal_blocks(t) {
        if size == 1 {
            out.push(Complex::new(t[(k, k)], T::zero()));
            continue;
        }
        let (a, b, c, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
        let half_tr = (a + d) * T::lit(0.5);
        let half_diff = (a - d) * T::lit(0.5);
        let disc = half_diff * half_diff + b * c;
        if disc >= T::zero() {
            let r = disc.sqrt();
            out.push(Complex::new(half_tr + r, T::zero()));
            out.push(Complex::new(half_tr - r, T::zero()));
        } else {
            let im = (-disc).sqrt();
            out.push(Complex::new(half_tr, im));
            out.push(Complex::new(half_tr, -im));
        }
    }
    out
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues<T: Real>(m: &Mat<T>) -> Result<Vec<Complex<T>>> {
    ensure_square(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    match schur(m, "matrix") {
        Ok((_, t)) => Ok(block_eigenvalues(&t)),
        Err(Error::Eigensolver(_)) => eigenvalues_fallback(m),
        Err(e) => Err(e),
    }
}

pub fn spectral_abscissa<T: Real>(m: &Mat<T>) -> Result<SpectralAbscissa<T>> {
    let eig = eigenvalues(m)?;
    let max = eig
        .iter()
        .map(|z| z.re)
        .fold(T::min_value().unwrap_or(-T::one() / T::default_epsilon()), |a, b| {
            if b > a {
                b
            } else {
                a
            }
        });
    Ok(SpectralAbscissa(max))
}

/// True iff every eigenvalue of `m` has real part `< -margin`.
///
/// Eigensolver failure is reported as an error, never as `false`.
pub fn is_hurwitz<T: Real>(m: &Mat<T>, margin: T) -> Result<bool> {
    Ok(spectral_abscissa(m)?.0 < -margin)
}

/// Symmetric eigenvalues in ascending order.
pub fn symmetric_eigenvalues<T: Real>(m: &Mat<T>) -> Vec<T> {
    let mut v: Vec<T> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Kronecker sum `A ⊗ I + I ⊗ A`, the matrix of the linear map
/// `vec(P) ↦ vec(AP + PAᵀ)` under column-major vectorization.
pub fn vectorized_lyapunov_matrix<T: Real>(a: &Mat<T>) -> Mat<T> {
    let n = a.nrows();
    let eye = Mat::<T>::identity(n, n);
    kron(a, &eye) + kron(&eye, a)
}

fn check_lyapunov_inputs<T: Real>(a: &Mat<T>, w: &Mat<T>) -> Result<()> {
    if a.nrows() != w.nrows() || w.nrows() != w.ncols() {
        return Err(Error::Dimension(format!(
            "A is {}x{} but W is {}x{}",
            a.nrows(),
            a.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    ensure_finite(w, "W")?;
    let asym = (w - w.transpose()).amax();
    if asym > T::lit(1e-8) * (T::one() + w.amax()) {
        return Err(Error::Invalid(format!(
            "W is not symmetric (max asymmetry {asym})"
        )));
    }
    Ok(())
}

/// Which algorithm a [`LyapunovSolver`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovRoute {
    Kronecker,
    Schur,
    /// Matrix sign function of `[[A, W], [0, −Aᵀ]]`; taken automatically when
    /// the Schur factorization does not converge.
    Sign,
}

enum Factor<T: Real> {
    Kronecker(nalgebra::linalg::FullPivLU<T, nalgebra::Dyn, nalgebra::Dyn>),
    Schur {
        z: Mat<T>,
        t: Mat<T>,
        blocks: Vec<(usize, usize)>,
    },
    Sign(Mat<T>),
}

/// Factorization of a Hurwitz `A` for repeated solves of
/// `A P + P Aᵀ + W = 0` with different forcing `W`.
pub struct LyapunovSolver<T: Real> {
    n: usize,
    factor: Factor<T>,
}

impl<T: Real> LyapunovSolver<T> {
    /// Picks the Kronecker route for `n <= KRONECKER_MAX_DIM`, Schur otherwise.
    pub fn new(a: &Mat<T>) -> Result<Self> {
        let route = if a.nrows() <= KRONECKER_MAX_DIM {
            LyapunovRoute::Kronecker
        } else {
            LyapunovRoute::Schur
        };
        Self::with_route(a, route)
    }

    pub fn with_route(a: &Mat<T>, route: LyapunovRoute) -> Result<Self> {
        ensure_square(a, "A")?;
        ensure_finite(a, "A")?;
        let n = a.nrows();
        let factor = match route {
            LyapunovRoute::Kronecker => {
                if n > 0 {
                    let abscissa = spectral_abscissa(a)?.0;
                    if abscissa >= T::zero() {
                        return Err(Error::unstable("Lyapunov solve", abscissa.to_f64_lossy()));
                    }
                }
                Factor::Kronecker(vectorized_lyapunov_matrix(a).full_piv_lu())
            }
            LyapunovRoute::Sign => Self::sign_factor(a)?,
            LyapunovRoute::Schur => {
                let (z, t) = if n == 0 {
                    (Mat::zeros(0, 0), Mat::zeros(0, 0))
                } else {
                    match schur(a, "A") {
                        Ok(zt) => zt,
                        Err(Error::Eigensolver(_)) => return Ok(Self { n, factor: Self::sign_factor(a)? }),
                        Err(e) => return Err(e),
                    }
                };
                let abscissa = block_eigenvalues(&t)
                    .iter()
                    .map(|e| e.re)
                    .fold(-T::one() / T::default_epsilon(), |m, x| if x > m { x } else { m });
                if n > 0 && abscissa >= T::zero() {
                    return Err(Error::unstable("Lyapunov solve", abscissa.to_f64_lossy()));
                }
                let blocks = diagonal_blocks(&t);
                Factor::Schur { z, t, blocks }
            }
        };
        Ok(Self { n, factor })
    }

    fn sign_factor(a: &Mat<T>) -> Result<Factor<T>> {
        if a.nrows() > 0 {
            let abscissa = spectral_abscissa(a)?.0;
            if abscissa >= T::zero() {
                return Err(Error::unstable("Lyapunov solve", abscissa.to_f64_lossy()));
            }
        }
        Ok(Factor::Sign(a.clone()))
    }

    pub fn route(&self) -> LyapunovRoute {
        match self.factor {
            Factor::Kronecker(_) => LyapunovRoute::Kronecker,
            Factor::Schur { .. } => LyapunovRoute::Schur,
            Factor::Sign(_) => LyapunovRoute::Sign,
        }
    }

    /// Symmetric solution `P` for forcing `W`.
    pub fn solve(&self, w: &Mat<T>) -> Result<Mat<T>> {
        let n = self.n;
        check_lyapunov_inputs(&Mat::<T>::zeros(n, n), w)?;
        if n == 0 {
            return Ok(Mat::zeros(0, 0));
        }
        let p = match &self.factor {
            Factor::Kronecker(lu) => {
                let rhs = nalgebra::DVector::from_iterator(n * n, w.iter().map(|&x| -x));
                let sol = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::Singular("vectorized Lyapunov operator".into()))?;
                Mat::from_column_slice(n, n, sol.as_slice())
            }
            Factor::Schur { z, t, blocks } => {
                let y = quasi_triangular_lyapunov(t, blocks, &(-(z.transpose() * w * z)))?;
                z * y * z.transpose()
            }
            Factor::Sign(a) => {
                // sign([[A, W], [0, −Aᵀ]]) = [[−I, 2P], [0, I]] for Hurwitz A.
                let mut h = Mat::<T>::zeros(2 * n, 2 * n);
                h.view_mut((0, 0), (n, n)).copy_from(a);
                h.view_mut((0, n), (n, n)).copy_from(w);
                h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
                let sign = matrix_sign(&h).map_err(|_| Error::Singular("sign iteration for Lyapunov solve".into()))?;
                sign.view((0, n), (n, n)) * T::lit(0.5)
            }
        };
        Ok(symmetrize(&p))
    }
}

/// Block back-substitution for `T Y + Y Tᵀ = C` with `T` quasi-triangular.
fn quasi_triangular_lyapunov<T: Real>(
    t: &Mat<T>,
    blocks: &[(usize, usize)],
    c: &Mat<T>,
) -> Result<Mat<T>> {
    let n = t.nrows();
    let mut y = Mat::<T>::zeros(n, n);
    for &(i0, pi) in blocks.iter().rev() {
        for &(j0, pj) in blocks.iter().rev() {
            let mut rhs = c.view((i0, j0), (pi, pj)).clone_owned();
            let iend = i0 + pi;
            if iend < n {
                rhs -= t.view((i0, iend), (pi, n - iend)) * y.view((iend, j0), (n - iend, pj));
            }
            let jend = j0 + pj;
            if jend < n {
                rhs -= y.view((i0, jend), (pi, n - jend))
                    * t.view((j0, jend), (pj, n - jend)).transpose();
            }
            let tii = t.view((i0, i0), (pi, pi)).clone_owned();
            let tjj = t.view((j0, j0), (pj, pj)).clone_owned();
            let op = kron(&Mat::identity(pj, pj), &tii) + kron(&tjj, &Mat::identity(pi, pi));
            let sol = op
                .full_piv_lu()
                .solve(&nalgebra::DVector::from_column_slice(rhs.as_slice()))
                .ok_or_else(|| Error::Singular("Sylvester block in Bartels–Stewart".into()))?;
            y.view_mut((i0, j0), (pi, pj)).copy_from_slice(sol.as_slice());
        }
    }
    Ok(y)
}

/// Solves `A P + P Aᵀ + W = 0` for Hurwitz `A`.
///
/// Small systems use the vectorized Kronecker solve, larger ones the
/// Bartels–Stewart Schur route. The result is symmetrized.
pub fn solve_lyapunov<T: Real>(a: &Mat<T>, w: &Mat<T>) -> Result<Mat<T>> {
    check_lyapunov_inputs(a, w)?;
    LyapunovSolver::new(a)?.solve(w)
}

/// Lyapunov solve through the `n² × n²` linear system built by
/// [`vectorized_lyapunov_matrix`].
pub fn solve_lyapunov_kronecker<T: Real>(a: &Mat<T>, w: &Mat<T>) -> Result<Mat<T>> {
    check_lyapunov_inputs(a, w)?;
    LyapunovSolver::with_route(a, LyapunovRoute::Kronecker)?.solve(w)
}

/// Bartels–Stewart: real Schur form of `A`, block back-substitution on the
/// quasi-triangular factor, then back-transformation.
pub fn solve_lyapunov_schur<T: Real>(a: &Mat<T>, w: &Mat<T>) -> Result<Mat<T>> {
    check_lyapunov_inputs(a, w)?;
    LyapunovSolver::with_route(a, LyapunovRoute::Schur)?.solve(w)
}

/// Frobenius norm of `A P + P Aᵀ + W`.
pub fn lyapunov_residual<T: Real>(a: &Mat<T>, p: &Mat<T>, w: &Mat<T>) -> T {
    (a * p + p * a.transpose() + w).norm()
}

fn is_stabilizable_impl<T: Real>(a: &Mat<T>, b: &Mat<T>, tol: T) -> Result<bool> {
    ensure_square(a, "A")?;
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "B has {} rows, A is {}x{}",
            b.nrows(),
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let scale = T::one().max(a.norm()).max(b.norm());
    for mu in eigenvalues(a)? {
        if mu.re < -tol * scale {
            continue;
        }
        let mut pencil = DMatrix::<Complex<T>>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { mu - Complex::new(a[(i, j)], T::zero()) } else { Complex::new(-a[(i, j)], T::zero()) };
                pencil[(i, j)] = v;
            }
            for j in 0..b.ncols() {
                pencil[(i, n + j)] = Complex::new(b[(i, j)], T::zero());
            }
        }
        let sv = pencil.singular_values();
        let smin = sv.iter().copied().fold(T::max_value().unwrap_or(T::one() / T::default_epsilon()), |m, x| if x < m { x } else { m });
        if smin <= tol * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH test: every eigenvalue of `A` with nonnegative real part is
/// controllable through `B`.
pub fn is_stabilizable<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Result<bool> {
    is_stabilizable_impl(a, b, T::lit(PBH_TOL))
}

/// Dual PBH test on `(Aᵀ, Hᵀ)`.
pub fn is_detectable<T: Real>(a: &Mat<T>, h: &Mat<T>) -> Result<bool> {
    if h.ncols() != a.nrows() {
        return Err(Error::Dimension(format!(
            "H has {} columns, A is {}x{}",
            h.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    is_stabilizable_impl(&a.transpose(), &h.transpose(), T::lit(PBH_TOL))
}

fn care_residual<T: Real>(a: &Mat<T>, g: &Mat<T>, q: &Mat<T>, p: &Mat<T>) -> (T, T) {
    let ap = a.transpose() * p;
    let pgp = p * g * p;
    let res = &ap + ap.transpose() + q - &pgp;
    let scale = T::lit(2.0) * ap.norm() + q.norm() + pgp.norm();
    (res.norm(), scale)
}

fn care_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::machine_eps() * T::lit(1e4))
}

/// Matrix sign function of `h` by the scaled Newton iteration.
fn matrix_sign<T: Real>(h: &Mat<T>) -> Result<Mat<T>> {
    let n = h.nrows();
    let mut z = h.clone();
    let mut scaling = true;
    for _ in 0..100 {
        let lu = z.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Riccati("Hamiltonian has eigenvalues on the imaginary axis".into()))?;
        let c = if scaling {
            let lu = z.clone().lu();
            let u = lu.u();
            let logdet: T = (0..n).map(|i| u[(i, i)].abs().ln()).fold(T::zero(), |a, b| a + b);
            (-logdet / T::from_usize(n).unwrap()).exp()
        } else {
            T::one()
        };
        let next = (&z * c + inv / c) * T::lit(0.5);
        let delta = (&next - &z).norm() / next.norm();
        z = next;
        if delta < T::lit(1e-2) {
            scaling = false;
        }
        if delta < T::machine_eps().sqrt() * T::lit(1e-2) {
            return Ok(z);
        }
        if !delta.is_finite() {
            break;
        }
    }
    Err(Error::Riccati("sign iteration did not converge".into()))
}

/// Stabilizing solution of `AᵀP + PA + Q − s·PBBᵀP = 0`.
///
/// The stable invariant subspace of the Hamiltonian is extracted with the
/// matrix sign function; the result is then polished with Newton–Kleinman
/// steps and symmetrized.
pub fn solve_care<T: Real>(a: &Mat<T>, b: &Mat<T>, r_inv_scale: T, q: &Mat<T>) -> Result<Mat<T>> {
    check_care_inputs(a, b, r_inv_scale, q)?;
    if !is_stabilizable(a, b)? {
        return Err(Error::NotStabilizable("(A, B) fails the PBH rank test".into()));
    }
    let n = a.nrows();
    let g = b * b.transpose() * r_inv_scale;
    let mut ham = Mat::<T>::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-&g));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-q));
    ham.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let sign = matrix_sign(&ham)?;
    let eye = Mat::<T>::identity(n, n);
    let mut lhs = Mat::<T>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&sign.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(sign.view((n, n), (n, n)) + &eye));
    let mut rhs = Mat::<T>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(sign.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-sign.view((n, 0), (n, n)).clone_owned()));
    let p0 = lhs
        .svd(true, true)
        .solve(&rhs, T::machine_eps() * T::lit(100.0))
        .map_err(|e| Error::Riccati(format!("subspace solve: {e}")))?;
    solve_care_newton(a, b, r_inv_scale, q, &symmetrize(&p0))
}

fn check_care_inputs<T: Real>(a: &Mat<T>, b: &Mat<T>, s: T, q: &Mat<T>) -> Result<()> {
    ensure_square(a, "A")?;
    ensure_square(q, "Q")?;
    if b.nrows() != a.nrows() || q.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "A {}x{}, B {}x{}, Q {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::Invalid(format!("Riccati input weight must be positive, got {s}")));
    }
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(q, "Q")
}

/// Newton–Kleinman iteration for the same Riccati equation as
/// [`solve_care`], started from a stabilizing guess `p0`.
///
/// Any `p0` with `A − s·BBᵀp0` Hurwitz works; in particular the solution for
/// a smaller weight `s` is a valid start for a larger one.
pub fn solve_care_newton<T: Real>(
    a: &Mat<T>,
    b: &Mat<T>,
    r_inv_scale: T,
    q: &Mat<T>,
    p0: &Mat<T>,
) -> Result<Mat<T>> {
    check_care_inputs(a, b, r_inv_scale, q)?;
    let g = b * b.transpose() * r_inv_scale;
    let tol = care_tolerance::<T>();
    let mut p = p0.clone();
    let mut best: Option<(T, Mat<T>)> = None;
    for _ in 0..60 {
        let acl = a - &g * &p;
        let w = q + &p * &g * &p;
        let next = match solve_lyapunov(&acl.transpose(), &symmetrize(&w)) {
            Ok(x) => x,
            Err(Error::Unstable { abscissa, .. }) => {
                return Err(Error::Riccati(format!(
                    "Newton iterate lost stability (abscissa {abscissa:e})"
                )))
            }
            Err(e) => return Err(e),
        };
        let step = (&next - &p).norm() / T::one().max(next.norm());
        p = next;
        let (res, scale) = care_residual(a, &g, q, &p);
        let rel = res / T::one().max(scale);
        if best.as_ref().map_or(true, |(r, _)| rel < *r) {
            best = Some((rel, p.clone()));
        }
        if step < T::machine_eps() * T::lit(100.0) || rel < T::machine_eps() * T::lit(10.0) {
            break;
        }
    }
    let (rel, p) = best.ok_or_else(|| Error::Riccati("no Newton iterate".into()))?;
    if !(rel <= tol) {
        return Err(Error::Riccati(format!("residual {:e} above tolerance", rel.to_f64_lossy())));
    }
    let acl = a - &g * &p;
    let abscissa = spectral_abscissa(&acl)?.0;
    if abscissa >= T::zero() {
        return Err(Error::Riccati(format!(
            "solution is not stabilizing (abscissa {:e})", abscissa.to_f64_lossy()
        )));
    }
    Ok(symmetrize(&p))
}
