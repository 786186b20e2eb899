use lapnet::fixtures::fixture_with;
use lapnet::graph::{generate, laplacian, spectrum, GraphKind, WeightedGraph};
use lapnet::linalg::{eigenvalues, kron, Mat};
use lapnet::model::{assemble_full, augment_observer, composite_matrices, decoupled_matrix, CompositeSpec, SubsystemModel};
use proptest::prelude::*;

fn m(r: usize, c: usize, v: &[f64]) -> Mat<f64> {
    Mat::from_row_slice(r, c, v)
}

fn system_strategy() -> impl Strategy<Value = (SubsystemModel<f64>, Mat<f64>)> {
    (1usize..=3, 1usize..=2, 1usize..=2).prop_flat_map(|(n, p, q)| {
        (
            prop::collection::vec(-1.5f64..1.5, n * n + n * p + n + q * n + n + p * q),
            0.0f64..1.0,
        )
            .prop_map(move |(v, sigma)| {
                let mut it = v.into_iter();
                let mut take = |r: usize, c: usize| Mat::from_iterator(r, c, it.by_ref().take(r * c));
                let a = take(n, n);
                let b = take(n, p);
                let e = take(n, 1);
                let h = take(q, n);
                let c = take(1, n);
                let k = take(p, q);
                (SubsystemModel::new(a, b, e, h, c, sigma).unwrap(), k)
            })
    })
}

fn connected_graph(n: usize, weights: &[f64]) -> WeightedGraph<f64> {
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, weights[i])).collect();
    for i in 0..n.saturating_sub(2) {
        if weights[i] > 1.5 {
            edges.push((i, i + 2, weights[i] - 1.0));
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

#[test]
fn triple_integrator_companion() {
    let f = fixture_with::<f64>("triple_integrator", &[]).unwrap();
    let a = decoupled_matrix(&f.model, &f.gains.k, 1.0).unwrap();
    assert_eq!(a, m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, -1.0, -1.0]));
}

#[test]
fn composite_path_two_modules() {
    let one = m(1, 1, &[1.0]);
    let s = SubsystemModel::new(m(1, 1, &[0.0]), one.clone(), one.clone(), one.clone(), one.clone(), 0.0).unwrap();
    let cs = CompositeSpec::new(
        s.clone(),
        generate(GraphKind::Path, 2, 1.0).unwrap(),
        one.clone(),
        generate(GraphKind::Path, 3, 1.0).unwrap(),
        one.clone(),
    );
    let cm = composite_matrices(&cs).unwrap();
    assert_eq!(cm.a(), &m(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
    assert_eq!(cm.b(), &m(2, 1, &[0.0, 1.0]));
    assert_eq!(cm.h(), &m(1, 2, &[0.0, 1.0]));

    let cs3 = CompositeSpec::new(s, generate(GraphKind::Complete, 3, 1.0).unwrap(), one.clone(), generate(GraphKind::Path, 2, 1.0).unwrap(), one);
    let a3 = composite_matrices(&cs3).unwrap();
    assert!((0..3).all(|i| a3.a()[(i, i)] == -2.0));
}

#[test]
fn port_relabeling_keeps_the_function() {
    let f = fixture_with::<f64>("double_integrator", &[]).unwrap();
    let g1 = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
    let g2 = generate(GraphKind::Path, 3, 1.0).unwrap();
    let base = CompositeSpec::new(f.model.clone(), g1.clone(), f.gains.k.clone(), g2.clone(), f.gains.k.clone());
    let mirrored = WeightedGraph::new(3, vec![(2, 1, 1.0), (1, 0, 2.0)]).unwrap();
    let other = CompositeSpec::new(f.model.clone(), mirrored, f.gains.k.clone(), g2, f.gains.k.clone()).with_port(0);
    for l in [0.5, 1.0, 3.0] {
        let a = lapnet::composite::phi_nn(&base, l).unwrap();
        let b = lapnet::composite::phi_nn(&other, l).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn modal_block_diagonalization((s, k) in system_strategy(), n in 2usize..=8, w in prop::collection::vec(0.5f64..2.0, 8)) {
        let g = connected_graph(n, &w);
        let net = assemble_full(&s, &g, &k).unwrap();
        let sp = spectrum(&laplacian(&g)).unwrap();
        let t = kron(&sp.eigenvectors, &Mat::identity(s.n(), s.n()));
        let modal = t.transpose() * &net.a_cl * &t;
        let noise = t.transpose() * &net.e_noise * kron(&sp.eigenvectors, &Mat::identity(s.m3(), s.m3()));
        let bk = s.b() * &k;
        let scale = net.a_cl.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let blk = modal.view((i * s.n(), j * s.n()), (s.n(), s.n()));
                let nblk = noise.view((i * s.n(), j * s.m3()), (s.n(), s.m3()));
                if i == j {
                    let want = decoupled_matrix(&s, &k, sp.eigenvalues[i]).unwrap();
                    prop_assert!((blk - &want).amax() <= 1e-9 * scale);
                    let nwant = &bk * s.d() * (-s.sigma() * sp.eigenvalues[i]);
                    prop_assert!((nblk - nwant).amax() <= 1e-9 * scale);
                } else {
                    prop_assert!(blk.amax() <= 1e-9 * scale);
                    prop_assert!(nblk.amax() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn observer_separation(v in prop::collection::vec(-1.5f64..1.5, 4 + 2 + 2 + 2), lambda in 0.1f64..5.0) {
        let a = Mat::from_column_slice(2, 2, &v[..4]);
        let b = Mat::from_column_slice(2, 1, &v[4..6]);
        let h = m(1, 2, &[1.0, 0.0]);
        let k = Mat::from_column_slice(1, 2, &v[6..8]);
        let f = Mat::from_column_slice(2, 1, &v[8..10]);
        let s = SubsystemModel::new(a.clone(), b.clone(), Mat::identity(2, 2), h.clone(), Mat::identity(2, 2), 0.0).unwrap();
        let aug = augment_observer(&s, &k, &f).unwrap();
        let big = decoupled_matrix(&aug.model, &aug.gain, lambda).unwrap();
        let mut got: Vec<(f64, f64)> = eigenvalues(&big).unwrap().iter().map(|z| (z.re, z.im)).collect();
        let mut want: Vec<(f64, f64)> = eigenvalues(&(&a - &b * &k))
            .unwrap()
            .into_iter()
            .chain(eigenvalues(&(&a - &f * &h * lambda)).unwrap())
            .map(|z| (z.re, z.im))
            .collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in got.iter().zip(&want) {
            prop_assert!((x.0 - y.0).abs() <= 1e-8 * (1.0 + big.amax()) && (x.1.abs() - y.1.abs()).abs() <= 1e-6);
        }
    }
}
