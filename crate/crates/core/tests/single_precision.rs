//! The solvers are generic over the scalar; these run the main paths in f32.

use lapnet::bounds::lower_bound_unweighted_graph;
use lapnet::design::{design_gain, lambda_tilde, ThresholdOptions};
use lapnet::fixtures::fixture_with;
use lapnet::graph::{generate, GraphKind};
use lapnet::spectral::{phi, rho_oracle, rho_spectral, PerformanceFunction, Variant};

#[test]
fn f32_spectral_sum_and_oracle() {
    let d = fixture_with::<f32>("double_integrator", &[("sigma", 0.5)]).unwrap();
    let g = generate::<f32>(GraphKind::Star, 5, 1.0).unwrap();
    let r = rho_spectral(&d.model, &g, &d.gains.k, Variant::State).unwrap().total;
    let o = rho_oracle(&d.model, &g, &d.gains.k, Variant::State).unwrap();
    assert!((r - o).abs() < 1e-4 * o);
    assert!((phi(&d.model, &d.gains.k, 2.0f32).unwrap().xi - 0.125).abs() < 1e-6);
}

#[test]
fn f32_threshold_design_and_bounds() {
    let t = fixture_with::<f32>("triple_integrator", &[]).unwrap();
    let r = lambda_tilde(&t.model, &t.gains.k, &ThresholdOptions::default()).unwrap();
    assert!((r.lambda_tilde - 1.0).abs() < 1e-4);
    let s = fixture_with::<f32>("harmonic_oscillator", &[]).unwrap();
    let k = design_gain(&s.model, 0.5f32).unwrap();
    assert!(k.threshold.lambda_tilde <= 0.5 * (1.0 + 1e-4));
    let pf = PerformanceFunction::state_feedback(&s.model, &s.gains.k).unwrap();
    let g = generate::<f32>(GraphKind::Complete, 4, 1.0).unwrap();
    let b = lower_bound_unweighted_graph(&pf, &g).unwrap();
    assert!(b.equality_case);
}
