//! Monte-Carlo validation of network variances by Euler–Maruyama.
//!
//! The state is integrated on the consensus-orthogonal subspace: every
//! forcing increment is centered across nodes, which leaves the performance
//! output `ν = (M_N ⊗ C) x` unchanged and keeps a marginal or unstable
//! consensus mode from drifting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, kron, Mat};
use crate::model::{centering, ClosedLoopNetwork};
use crate::scalar::Real;
use crate::spectral::helmert_basis;

/// A state norm above this is reported as divergence.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Default horizon in units of the slowest time constant.
pub const DEFAULT_HORIZON: f64 = 200.0;

/// Integration settings. Times are in the model's time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// `dt = 0.01 / max(1, ‖A_cl‖_F)`, `t_end = 200 / min |Re λ|` over the
    /// consensus-orthogonal modes, burn-in a tenth of that, 32 paths.
    pub fn default_for<T: Real>(net: &ClosedLoopNetwork<T>, seed: u64) -> Result<Self> {
        let decay = slowest_decay(net)?;
        let norm = net.a_cl.norm().to_f64_lossy();
        let t_end = DEFAULT_HORIZON / decay;
        Ok(Self {
            dt: 0.01 / norm.max(1.0),
            t_end,
            burn_in: t_end / 10.0,
            n_paths: 32,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return Err(Error::Invalid(format!(
                "burn_in must lie in [0, t_end), got {} with t_end {}",
                self.burn_in, self.t_end
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Invalid("n_paths must be at least 1".into()));
        }
        let steps = (self.t_end / self.dt).ceil();
        if steps > 1e10 {
            return Err(Error::Invalid(format!("{steps:e} integration steps requested")));
        }
        Ok(())
    }

    fn steps(&self) -> (usize, usize) {
        let total = (self.t_end / self.dt).round().max(1.0) as usize;
        let skip = (self.burn_in / self.dt).round() as usize;
        (total, skip.min(total - 1))
    }
}

/// Monte-Carlo variance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate<T> {
    pub estimate: T,
    /// Standard error over paths; infinite with a single path.
    pub stderr: T,
    pub per_path: Vec<T>,
    /// Non-fatal diagnostics, e.g. a coarse step.
    pub warnings: Vec<String>,
}

fn projected<T: Real>(net: &ClosedLoopNetwork<T>) -> Mat<T> {
    let n = net.a_cl.nrows() / net.n_nodes;
    let t = kron(&helmert_basis::<T>(net.n_nodes).transpose(), &Mat::identity(n, n));
    &t * &net.a_cl * t.transpose()
}

/// Smallest `|Re λ|` of the consensus-orthogonal dynamics, which must be
/// Hurwitz.
pub fn slowest_decay<T: Real>(net: &ClosedLoopNetwork<T>) -> Result<f64> {
    check_net(net)?;
    let ar = projected(net);
    if ar.nrows() == 0 {
        return Ok(1.0);
    }
    let eig = eigenvalues(&ar)?;
    let max_re = eig.iter().map(|z| z.re.to_f64_lossy()).fold(f64::NEG_INFINITY, f64::max);
    if !(max_re < 0.0) {
        return Err(Error::unstable("network dynamics on the consensus-orthogonal subspace", max_re));
    }
    Ok(-max_re)
}

fn check_net<T: Real>(net: &ClosedLoopNetwork<T>) -> Result<()> {
    let big = net.a_cl.nrows();
    if net.n_nodes == 0 || big % net.n_nodes != 0 || !net.a_cl.is_square() {
        return Err(Error::Dimension(format!("A_cl of size {big} does not split into {} nodes", net.n_nodes)));
    }
    if net.e_dist.nrows() != big || net.e_noise.nrows() != big || net.c_out.ncols() != big {
        return Err(Error::Dimension("network matrices disagree on the state dimension".into()));
    }
    Ok(())
}

/// One integrator shared by the variance and trajectory drivers.
struct Stepper<T: Real> {
    a: Mat<T>,
    g_dist: Mat<T>,
    g_noise: Mat<T>,
    c: Mat<T>,
    dt: T,
    sqrt_dt: T,
}

impl<T: Real> Stepper<T> {
    fn new(net: &ClosedLoopNetwork<T>, dt: f64) -> Self {
        let n = net.a_cl.nrows() / net.n_nodes;
        let m = kron(&centering::<T>(net.n_nodes), &Mat::identity(n, n));
        Self {
            a: net.a_cl.clone(),
            g_dist: &m * &net.e_dist,
            g_noise: &m * &net.e_noise,
            c: net.c_out.clone(),
            dt: T::lit(dt),
            sqrt_dt: T::lit(dt.sqrt()),
        }
    }

    /// Path `path` uses streams `2·path` (disturbance) and `2·path + 1`
    /// (measurement noise) of the seeded generator.
    fn rngs(seed: u64, path: usize) -> (ChaCha8Rng, ChaCha8Rng) {
        let mut dist = ChaCha8Rng::seed_from_u64(seed);
        dist.set_stream(2 * path as u64);
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        noise.set_stream(2 * path as u64 + 1);
        (dist, noise)
    }

    fn fill(rng: &mut ChaCha8Rng, v: &mut nalgebra::DVector<T>) {
        for x in v.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *x = T::lit(z);
        }
    }

    /// Runs `steps` steps from `x`, calling `visit(k, x)` after each.
    fn run(
        &self,
        x: &mut nalgebra::DVector<T>,
        steps: usize,
        seed: u64,
        path: usize,
        mut visit: impl FnMut(usize, &nalgebra::DVector<T>),
    ) -> Result<()> {
        let (mut rd, mut rn) = Self::rngs(seed, path);
        let mut wd = nalgebra::DVector::<T>::zeros(self.g_dist.ncols());
        let mut wn = nalgebra::DVector::<T>::zeros(self.g_noise.ncols());
        let mut ax = nalgebra::DVector::<T>::zeros(x.len());
        let limit = T::lit(DIVERGENCE_NORM);
        for k in 1..=steps {
            ax.gemv(T::one(), &self.a, x, T::zero());
            Self::fill(&mut rd, &mut wd);
            Self::fill(&mut rn, &mut wn);
            x.axpy(self.dt, &ax, T::one());
            x.gemv(self.sqrt_dt, &self.g_dist, &wd, T::one());
            x.gemv(self.sqrt_dt, &self.g_noise, &wn, T::one());
            let norm = x.norm();
            if !(norm <= limit) {
                return Err(Error::Diverged(format!(
                    "state norm {} exceeds {DIVERGENCE_NORM:e} at t = {} on path {path}",
                    norm,
                    (self.dt * T::from_usize(k).unwrap())
                )));
            }
            visit(k, x);
        }
        Ok(())
    }
}

/// Estimates `lim E‖ν(t)‖²` as the post-burn-in time average of `‖ν‖²`,
/// averaged over independent paths started at zero.
pub fn simulate_variance<T: Real>(net: &ClosedLoopNetwork<T>, cfg: &SimulationConfig) -> Result<VarianceEstimate<T>> {
    cfg.validate()?;
    slowest_decay(net)?;
    let mut warnings = Vec::new();
    let norm = net.a_cl.norm().to_f64_lossy();
    if norm * cfg.dt >= 0.1 {
        warnings.push(format!("dt·‖A_cl‖ = {:.3} is not below 0.1; Euler–Maruyama bias may be large", norm * cfg.dt));
    }
    let stepper = Stepper::new(net, cfg.dt);
    let (steps, skip) = cfg.steps();
    let count = T::from_usize(steps - skip).unwrap();
    let results: Vec<Result<T>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut x = nalgebra::DVector::<T>::zeros(net.a_cl.nrows());
            let mut acc = T::zero();
            let mut nu = nalgebra::DVector::<T>::zeros(stepper.c.nrows());
            stepper.run(&mut x, steps, cfg.seed, path, |k, x| {
                if k > skip {
                    nu.gemv(T::one(), &stepper.c, x, T::zero());
                    acc += nu.norm_squared();
                }
            })?;
            Ok(acc / count)
        })
        .collect();
    let per_path: Vec<T> = results.into_iter().collect::<Result<_>>()?;
    let np = T::from_usize(per_path.len()).unwrap();
    let estimate = per_path.iter().fold(T::zero(), |s, &v| s + v) / np;
    let stderr = if per_path.len() > 1 {
        let ss = per_path.iter().fold(T::zero(), |s, &v| s + (v - estimate) * (v - estimate));
        (ss / (np - T::one()) / np).sqrt()
    } else {
        T::lit(f64::INFINITY)
    };
    Ok(VarianceEstimate { estimate, stderr, per_path, warnings })
}

/// Sampled performance outputs of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    /// `ν(t)` at each sample, node-major (`n_nodes` blocks of `outputs`).
    pub values: Vec<Vec<T>>,
    pub n_nodes: usize,
    pub outputs: usize,
}

impl<T: Real> Trajectory<T> {
    /// CSV with header `t,node,output_component,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,node,output_component,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            for node in 0..self.n_nodes {
                for comp in 0..self.outputs {
                    out.push_str(&format!(
                        "{:.16e},{node},{comp},{:.16e}\n",
                        t.to_f64_lossy(),
                        v[node * self.outputs + comp].to_f64_lossy()
                    ));
                }
            }
        }
        out
    }
}

/// One path (path index 0 of `cfg.seed`) from `x0`, recording `ν` every
/// `record_every` steps including `t = 0`. `n_paths` and `burn_in` are
/// ignored.
pub fn simulate_trajectory<T: Real>(
    net: &ClosedLoopNetwork<T>,
    cfg: &SimulationConfig,
    x0: &[T],
    record_every: usize,
) -> Result<Trajectory<T>> {
    check_net(net)?;
    if !(cfg.dt > 0.0 && cfg.t_end > 0.0 && cfg.dt.is_finite() && cfg.t_end.is_finite()) {
        return Err(Error::Invalid("dt and t_end must be positive".into()));
    }
    if x0.len() != net.a_cl.nrows() {
        return Err(Error::Dimension(format!("x0 has {} entries, the network has {} states", x0.len(), net.a_cl.nrows())));
    }
    if record_every == 0 {
        return Err(Error::Invalid("record_every must be at least 1".into()));
    }
    let stepper = Stepper::new(net, cfg.dt);
    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let mut x = nalgebra::DVector::from_column_slice(x0);
    let sample = |x: &nalgebra::DVector<T>| (&stepper.c * x).iter().copied().collect::<Vec<T>>();
    let mut times = vec![T::zero()];
    let mut values = vec![sample(&x)];
    stepper.run(&mut x, steps, cfg.seed, 0, |k, x| {
        if k % record_every == 0 {
            times.push(stepper.dt * T::from_usize(k).unwrap());
            values.push(sample(x));
        }
    })?;
    Ok(Trajectory { times, values, n_nodes: net.n_nodes, outputs: net.c_out.nrows() / net.n_nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture_with;
    use crate::graph::{generate, GraphKind};
    use crate::model::assemble_full;

    fn single_path(n: usize) -> ClosedLoopNetwork<f64> {
        let fx = fixture_with::<f64>("single_integrator", &[]).unwrap();
        assemble_full(&fx.model, &generate(GraphKind::Path, n, 1.0).unwrap(), &fx.gains.k).unwrap()
    }

    #[test]
    fn no_forcing_is_zero() {
        let fx = fixture_with::<f64>("single_integrator", &[]).unwrap();
        let model = fx.model.with_e(Mat::zeros(1, 1)).unwrap();
        let net = assemble_full(&model, &generate(GraphKind::Path, 3, 1.0).unwrap(), &fx.gains.k).unwrap();
        let cfg = SimulationConfig { dt: 0.01, t_end: 5.0, burn_in: 1.0, n_paths: 3, seed: 1 };
        let r = simulate_variance(&net, &cfg).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn deterministic() {
        let net = single_path(4);
        let cfg = SimulationConfig { dt: 0.01, t_end: 20.0, burn_in: 2.0, n_paths: 4, seed: 9 };
        let a = simulate_variance(&net, &cfg).unwrap();
        let b = simulate_variance(&net, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_variance(&net, &SimulationConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn consensus_state_is_silent() {
        let net = single_path(3);
        let cfg = SimulationConfig { dt: 0.01, t_end: 1.0, burn_in: 0.0, n_paths: 1, seed: 0 };
        let fx = fixture_with::<f64>("single_integrator", &[]).unwrap();
        let quiet = assemble_full(&fx.model.with_e(Mat::zeros(1, 1)).unwrap(), &generate(GraphKind::Path, 3, 1.0).unwrap(), &fx.gains.k).unwrap();
        let tr = simulate_trajectory(&quiet, &cfg, &[2.0, 2.0, 2.0], 10).unwrap();
        assert!(tr.values.iter().flatten().all(|&v| v.abs() < 1e-12));
        let tr = simulate_trajectory(&net, &cfg, &[1.0, 0.0, -1.0], 25).unwrap();
        assert_eq!(tr.times.len(), 5);
        assert!(tr.to_csv().starts_with("t,node,output_component,value\n0.0000000000000000e0,0,0,"));
    }

    #[test]
    fn rejects_bad_config() {
        let net = single_path(3);
        let cfg = SimulationConfig { dt: 0.01, t_end: 1.0, burn_in: 1.0, n_paths: 1, seed: 0 };
        assert!(simulate_variance(&net, &cfg).unwrap_err().is_validation());
    }
}
