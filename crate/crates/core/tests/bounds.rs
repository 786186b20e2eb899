use lapnet::bounds::{
    check_convex, gamma_n, lower_bound_unweighted_graph, lower_bound_weighted_graph, survey_ratio_r1, GAMMA_QUAD_TOL,
};
use lapnet::fixtures::fixture_with;
use lapnet::graph::{enumerate_connected_unweighted, generate, laplacian, spectrum, GraphKind};
use lapnet::spectral::{FnSpectral, PerformanceFunction};
use lapnet::Error;
use rayon::prelude::*;

fn convex_fixtures() -> Vec<PerformanceFunction<f64>> {
    ["single_integrator", "double_integrator", "harmonic_oscillator"]
        .iter()
        .map(|n| {
            let f = fixture_with::<f64>(n, &[]).unwrap();
            PerformanceFunction::state_feedback(&f.model, &f.gains.k).unwrap()
        })
        .collect()
}

#[test]
fn bounds_and_sparsity_hold_up_to_six_nodes() {
    let fixtures = convex_fixtures();
    for n in 3..=6 {
        let graphs: Vec<_> = enumerate_connected_unweighted::<f64>(n).unwrap().collect();
        graphs.par_iter().for_each(|g| {
            let ev = spectrum(&laplacian(g)).unwrap();
            for pf in &fixtures {
                let rho: f64 = ev.nonzero_index().iter().map(|&l| pf.value(l).unwrap().total).sum();
                let u = lower_bound_unweighted_graph(pf, g).unwrap().value;
                let w = lower_bound_weighted_graph(pf, g).unwrap().value;
                assert!(u <= rho * (1.0 + 1e-9), "unweighted bound on {:?}", g.edges());
                assert!(w <= rho * (1.0 + 1e-9), "weighted bound on {:?}", g.edges());
                let mean = 2.0 * g.n_edges() as f64 / (n - 1) as f64;
                let sparse = pf.value(mean).unwrap().total;
                assert!(sparse <= rho / (n - 1) as f64 * (1.0 + 1e-9));
            }
        });
    }
}

#[test]
fn small_survey_ratios() {
    let pf = &convex_fixtures()[0];
    let entries = survey_ratio_r1(pf, 3).unwrap();
    assert_eq!(entries.len(), 4);
    assert!(entries.iter().all(|e| e.r1 >= 1.0 - 1e-12));
}

#[test]
fn nonconvex_is_rejected() {
    let wiggle = FnSpectral { f: |l: f64| Ok(2.0 + (3.0 * l).sin()), valid_from: 0.0 };
    assert!(matches!(check_convex(&wiggle, 0.1, 5.0), Err(Error::NotConvex(_))));
    let g = generate::<f64>(GraphKind::Path, 4, 1.0).unwrap();
    assert!(lower_bound_unweighted_graph(&wiggle, &g).is_err());
}

#[test]
fn gamma_single_integrator_closed_form() {
    // ∫ over [0,π] of 1/(2·2(1−cos θ)) restricted to θ ≥ π/N.
    let pf = &convex_fixtures()[0];
    for n in [10usize, 50, 200] {
        let g = gamma_n(pf, n, GAMMA_QUAD_TOL).unwrap();
        let exact = (std::f64::consts::PI / (2.0 * n as f64)).tan().recip() / (4.0 * std::f64::consts::PI);
        assert!((g - exact).abs() < 1e-8 * exact, "N = {n}: {g} vs {exact}");
    }
}
