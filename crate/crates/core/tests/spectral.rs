use lapnet::fit::{default_samples, fit_rational, fit_rational_fn, log_samples};
use lapnet::fixtures::fixture_with;
use lapnet::graph::{generate, GraphKind};
use lapnet::linalg::Mat;
use lapnet::model::SubsystemModel;
use lapnet::spectral::{
    mu_oracle, mu_spectral, phi, psi, rho_oracle, rho_spectral, rho_u_oracle, rho_u_spectral, FnSpectral,
    PerformanceFunction, Variant,
};
use lapnet::Error;
use proptest::prelude::*;

fn m(r: usize, c: usize, v: &[f64]) -> Mat<f64> {
    Mat::from_row_slice(r, c, v)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn table_one_examples() {
    let s = fixture_with::<f64>("single_integrator", &[("a", 1.0), ("k", 2.0)]).unwrap();
    assert!(rel(phi(&s.model, &s.gains.k, 1.0).unwrap().total, 1.0 / 6.0) < 1e-12);
    let d = fixture_with::<f64>("double_integrator", &[]).unwrap();
    assert!(rel(phi(&d.model, &d.gains.k, 2.0).unwrap().total, 0.125) < 1e-12);
}

#[test]
fn estimation_examples() {
    let d = fixture_with::<f64>("double_integrator", &[("position_only", 1.0)]).unwrap();
    let f = d.gains.f.as_ref().unwrap();
    assert!(rel(psi(&d.model, f, 1.0).unwrap().total, 0.5) < 1e-12);
    let noisy = d.model.with_sigma(1.0).unwrap();
    assert!(rel(psi(&noisy, f, 1.0).unwrap().total, 1.5) < 1e-12);
    assert!(rel(psi(&noisy, f, 2.0).unwrap().total, 1.625) < 1e-12);
}

#[test]
fn below_threshold_is_reported() {
    let t = fixture_with::<f64>("triple_integrator", &[]).unwrap();
    let pf = PerformanceFunction::state_feedback(&t.model, &t.gains.k).unwrap();
    assert!((pf.valid_from() - 1.0).abs() < 1e-6);
    assert!(pf.value(1.5).unwrap().total.is_finite());
    assert!(matches!(pf.value(0.5), Err(Error::BelowThreshold(_))));
    let g = generate(GraphKind::Path, 3, 1.0).unwrap();
    assert!(matches!(rho_spectral(&t.model, &g, &t.gains.k, Variant::State), Err(Error::BelowThreshold(_))));
    let heavy = generate(GraphKind::Path, 3, 4.0).unwrap();
    assert!(rho_spectral(&t.model, &heavy, &t.gains.k, Variant::State).is_ok());
}

#[test]
fn single_integrator_path_rho() {
    let s = fixture_with::<f64>("single_integrator", &[]).unwrap();
    for n in [2usize, 5, 10, 30] {
        let g = generate(GraphKind::Path, n, 1.0).unwrap();
        let r = rho_spectral(&s.model, &g, &s.gains.k, Variant::State).unwrap().total;
        let nf = n as f64;
        assert!(rel(r, (nf * nf - 1.0) / 12.0) < 1e-10);
    }
}

#[test]
fn input_and_estimation_sums_match_oracles() {
    let d = fixture_with::<f64>("double_integrator", &[("position_only", 1.0), ("sigma", 0.5)]).unwrap();
    let g = generate(GraphKind::Star, 5, 1.5).unwrap();
    let f = d.gains.f.as_ref().unwrap();
    let mu = mu_spectral(&d.model, &g, f).unwrap().total;
    assert!(rel(mu, mu_oracle(&d.model, &g, f).unwrap()) < 1e-9);
    let full = fixture_with::<f64>("double_integrator", &[("sigma", 0.5)]).unwrap();
    let ru = rho_u_spectral(&full.model, &g, &full.gains.k).unwrap().total;
    assert!(rel(ru, rho_u_oracle(&full.model, &g, &full.gains.k).unwrap()) < 1e-9);
}

#[test]
fn fit_examples() {
    let d = fixture_with::<f64>("double_integrator", &[]).unwrap();
    let pf = PerformanceFunction::state_feedback(&d.model, &d.gains.k).unwrap();
    let fit = fit_rational(&pf, &log_samples(0.2, 20.0, 12), 2).unwrap();
    assert!(fit.residual < 1e-8);
    assert_eq!((fit.numerator_degree(), fit.denominator_degree()), (0, 2));
    assert!(rel(fit.numerator[0] / fit.denominator[2], 0.5) < 1e-8);

    let s = fixture_with::<f64>("single_integrator", &[("a", 1.0), ("k", 2.0)]).unwrap();
    let pf = PerformanceFunction::state_feedback(&s.model, &s.gains.k).unwrap();
    let fit = fit_rational(&pf, &default_samples(0.0, 1), 1).unwrap();
    assert!(rel(fit.numerator[0], 0.25) < 1e-8);
    assert!(rel(fit.denominator[0], 0.5) < 1e-8);

    let c = FnSpectral { f: |_l: f64| Ok(3.0), valid_from: 0.0 };
    let fit = fit_rational_fn(&c, &log_samples(0.1, 10.0, 8), 2).unwrap();
    assert_eq!((fit.numerator_degree(), fit.denominator_degree()), (0, 0));
    assert!(rel(fit.numerator[0], 3.0) < 1e-12);
}

#[test]
fn fit_generalizes_to_unseen_points() {
    let h = fixture_with::<f64>("harmonic_oscillator", &[]).unwrap();
    let pf = PerformanceFunction::state_feedback(&h.model, &h.gains.k).unwrap();
    let fit = fit_rational(&pf, &default_samples(0.0, 4), 4).unwrap();
    for l in [0.37, 1.9, 7.3, 41.0] {
        assert!(rel(fit.eval(l), pf.value(l).unwrap().total) < 1e-6);
    }
}

fn decreasing_convex(pf: &PerformanceFunction<f64>) {
    let grid = log_samples(0.1, 50.0, 80);
    let v: Vec<f64> = grid.iter().map(|&l| pf.value(l).unwrap().total).collect();
    for i in 1..v.len() {
        assert!(v[i] < v[i - 1]);
    }
    for i in 1..v.len() - 1 {
        let (h0, h1) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let second = (v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0;
        assert!(second > 0.0, "not convex at λ = {}", grid[i]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn table_one_is_decreasing_and_convex(a in 0.0f64..2.0, k in 0.2f64..3.0, k1 in 0.2f64..3.0, k2 in 0.2f64..3.0, b0 in 0.0f64..2.0) {
        let s = fixture_with::<f64>("single_integrator", &[("a", a), ("k", k)]).unwrap();
        decreasing_convex(&PerformanceFunction::state_feedback(&s.model, &s.gains.k).unwrap());
        let d = fixture_with::<f64>("double_integrator", &[("a1", a), ("b0", b0), ("k1", k1), ("k2", k2)]).unwrap();
        decreasing_convex(&PerformanceFunction::state_feedback(&d.model, &d.gains.k).unwrap());
    }

    #[test]
    fn noise_split_and_independence(v in prop::collection::vec(-1.0f64..1.0, 4), sigma in 0.0f64..2.0, lambda in 0.3f64..5.0) {
        let base = fixture_with::<f64>("double_integrator", &[("k1", 1.0 + v[0].abs()), ("k2", 1.0 + v[1].abs())]).unwrap();
        let s = base.model.with_sigma(sigma).unwrap();
        let p = phi(&s, &base.gains.k, lambda).unwrap();
        prop_assert!((p.total - (p.xi + sigma * sigma * p.eta)).abs() <= 1e-12 * p.total.max(1.0));
        let other = s.with_e(m(2, 1, &[v[2], v[3]])).unwrap();
        let q = phi(&other, &base.gains.k, lambda).unwrap();
        prop_assert!((q.eta - p.eta).abs() <= 1e-12 * p.eta.max(1.0));
    }

    #[test]
    fn estimation_is_dual_to_feedback(v in prop::collection::vec(-1.0f64..1.0, 4 + 2 + 2 + 2), lambda in 0.5f64..4.0) {
        let a = Mat::from_column_slice(2, 2, &v[..4]);
        let e = Mat::from_column_slice(2, 1, &v[4..6]);
        let c = Mat::from_column_slice(1, 2, &v[6..8]);
        let h = m(1, 2, &[1.0, 0.0]);
        let f = m(2, 1, &[2.0 + v[8].abs(), 2.0 + v[9].abs()]) * 2.0;
        prop_assume!(lapnet::linalg::is_hurwitz(&(&a - &f * &h * lambda), 1e-3).unwrap());
        let s = SubsystemModel::new(a.clone(), m(2, 1, &[0.0, 1.0]), e.clone(), h.clone(), c.clone(), 0.0).unwrap();
        let est = psi(&s, &f, lambda).unwrap().total;
        let dual = SubsystemModel::new(a.transpose(), h.transpose(), c.transpose(), Mat::identity(2, 2), e.transpose(), 0.0).unwrap();
        let fb = phi(&dual, &f.transpose(), lambda).unwrap().total;
        prop_assert!((est - fb).abs() <= 1e-10 * est.abs().max(1e-12));
    }

    #[test]
    fn observer_sum_matches_oracle(n in 2usize..=6, w in 0.5f64..3.0, sigma in 0.0f64..1.0) {
        let d = fixture_with::<f64>("double_integrator", &[("position_only", 1.0), ("sigma", sigma)]).unwrap();
        let g = generate(GraphKind::Path, n, w).unwrap();
        let f = d.gains.f.as_ref().unwrap();
        let r = rho_spectral(&d.model, &g, &d.gains.k, Variant::Observer(f)).unwrap().total;
        let o = rho_oracle(&d.model, &g, &d.gains.k, Variant::Observer(f)).unwrap();
        prop_assert!(rel(r, o) <= 1e-9);
    }
}
