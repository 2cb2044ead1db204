//! Cross-checks of the sparse class-restricted engine against the dense
//! exact-diagonalization reference, plus whole-partition closure checks.

use nalgebra::DVector;
use opclass::dynamics::{evolve, uniform_grid, EvolveOptions, Method, Probe, ProductState};
use opclass::model::InteractionGraph;
use opclass::oracle::{exact_class_projection, exact_heisenberg};
use opclass::{
    build_kitaev, build_xy, build_xyzz, generate_class, heisenberg_expectation, partition_all,
    AdjointGenerator, Boundary, Hamiltonian, PauliString, SiteOp, XYCouplings, XYZZCouplings,
    DEFAULT_BUDGET,
};

fn assert_matches_exact(
    h: &Hamiltonian,
    observable: &PauliString,
    state: &ProductState,
    t_max: f64,
    tol: f64,
) {
    let grid = uniform_grid(0.0, t_max, 101).unwrap();
    let engine = heisenberg_expectation(
        h,
        observable,
        state,
        &grid,
        &EvolveOptions::default(),
        DEFAULT_BUDGET,
    )
    .unwrap();
    let exact = exact_heisenberg(h, observable, state, &grid).unwrap();
    for ((t, a), b) in grid.iter().zip(&engine.values).zip(&exact.values) {
        assert!(
            (a - b).abs() < tol,
            "t={t}: engine {a} vs exact {b} (diff {:.3e})",
            (a - b).abs()
        );
    }
    assert!(engine.max_norm_drift() < 1e-9);
}

#[test]
fn xy_chain_matches_exact_diagonalization() {
    let l = 6;
    let h = build_xy(&XYCouplings::random(l, 0.4, 1.3, 41, Boundary::Open).unwrap()).unwrap();
    let obs = PauliString::single(l, 3, SiteOp::Z).unwrap();
    let state = ProductState::infinite_temperature(l)
        .with_bloch(3, [0.3, 0.4, 0.8])
        .unwrap()
        .with_bloch(5, [0.0, 0.6, 0.0])
        .unwrap();
    assert_matches_exact(&h, &obs, &state, 10.0, 1e-8);
}

#[test]
fn xy_periodic_matches_exact_diagonalization() {
    let l = 6;
    let h = build_xy(&XYCouplings::random(l, 0.4, 1.3, 42, Boundary::Periodic).unwrap()).unwrap();
    let obs = PauliString::single(l, 1, SiteOp::X).unwrap();
    let state = ProductState::plus_x(l, 1).unwrap();
    assert_matches_exact(&h, &obs, &state, 10.0, 1e-8);
}

#[test]
fn kitaev_graph_matches_exact_diagonalization() {
    let l = 6;
    let g = InteractionGraph::kitaev_chain(l, &[1.0, 0.8, 1.2, 0.9, 1.1]).unwrap();
    let h = build_kitaev(&g).unwrap();
    let obs = PauliString::single(l, 2, SiteOp::Y).unwrap();
    let state = ProductState::infinite_temperature(l)
        .with_bloch(2, [0.2, 0.9, 0.1])
        .unwrap()
        .with_bloch(1, [0.0, 0.0, -1.0])
        .unwrap();
    assert_matches_exact(&h, &obs, &state, 10.0, 1e-8);
}

#[test]
fn xyzz_chain_matches_exact_diagonalization() {
    let n = 7;
    let h = build_xyzz(&XYZZCouplings::random(n, 0.4, 1.3, 43).unwrap()).unwrap();
    let obs = PauliString::single(n, 1, SiteOp::Z).unwrap();
    let state = ProductState::infinite_temperature(n)
        .with_bloch(1, [0.6, 0.0, 0.8])
        .unwrap();
    assert_matches_exact(&h, &obs, &state, 10.0, 1e-8);
}

#[test]
fn both_integrators_match_exact_diagonalization() {
    let l = 5;
    let h = build_xy(&XYCouplings::random(l, 0.4, 1.3, 44, Boundary::Open).unwrap()).unwrap();
    let obs = PauliString::single(l, 2, SiteOp::X).unwrap();
    let state = ProductState::plus_x(l, 2).unwrap();
    let grid = uniform_grid(0.0, 8.0, 81).unwrap();
    let exact = exact_heisenberg(&h, &obs, &state, &grid).unwrap();
    // fourth-order error over T=8 needs a step below the default to clear
    // the uniform 1e-8 bar
    // the fixed-step integrator converges at fourth order (halving the step
    // cuts the uniform error about 16x); 0.00125 lands near 1e-9 here while
    // the dense exponential is exact to rounding
    for (method, step, tol) in [
        (Method::MatrixExp, None, 1e-10),
        (Method::RungeKutta, Some(0.00125), 1e-8),
    ] {
        let opts = EvolveOptions { method, step };
        let engine =
            heisenberg_expectation(&h, &obs, &state, &grid, &opts, DEFAULT_BUDGET).unwrap();
        for (a, b) in engine.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < tol, "{method:?}: {a} vs {b}");
        }
    }
}

#[test]
fn reversed_generator_undoes_evolution() {
    let l = 6;
    let h = build_xy(&XYCouplings::random(l, 0.4, 1.3, 45, Boundary::Open).unwrap()).unwrap();
    let seed = PauliString::single(l, 1, SiteOp::Z).unwrap();
    let class = generate_class(&h, &seed, DEFAULT_BUDGET).unwrap();
    let gen = AdjointGenerator::build(&h, &class).unwrap();
    let mut c0 = DVector::zeros(gen.dim());
    c0[class.index_of(&seed).unwrap()] = 1.0;
    let grid = uniform_grid(0.0, 5.0, 11).unwrap();
    let probe = Probe::coefficient(0);
    let opts = EvolveOptions::default();
    let (_, forward) = evolve(&gen, c0.clone(), &grid, &probe, &opts).unwrap();
    let (_, back) = evolve(&gen.negated(), forward, &grid, &probe, &opts).unwrap();
    let err = (&back - &c0).amax();
    assert!(err < 1e-8, "round trip error {err:.3e}");
}

#[test]
fn partitions_are_closed_under_commutation() {
    let models: Vec<Hamiltonian> = vec![
        build_xy(&XYCouplings::random(6, 0.4, 1.3, 46, Boundary::Open).unwrap()).unwrap(),
        build_kitaev(&InteractionGraph::kitaev_chain(6, &[1.0, 0.8, 1.2, 0.9, 1.1]).unwrap())
            .unwrap(),
        build_xyzz(&XYZZCouplings::random(6, 0.4, 1.3, 47).unwrap()).unwrap(),
    ];
    for h in &models {
        let partition = partition_all(h).unwrap();
        partition.verify_disjoint().unwrap();
        assert_eq!(partition.total_dimension(), 1 << (2 * h.num_sites()));
        for class in partition.classes() {
            class.verify_closed(h).unwrap();
        }
    }
}

#[test]
fn dense_projection_recovers_classes_at_moderate_length() {
    for l in [4u32, 5] {
        let h = build_xy(&XYCouplings::random(l, 0.4, 1.3, 48, Boundary::Open).unwrap()).unwrap();
        for seed in [
            PauliString::single(l, 1, SiteOp::X).unwrap(),
            PauliString::single(l, 1, SiteOp::Z).unwrap(),
        ] {
            let dense = exact_class_projection(&h, &seed).unwrap();
            let engine = generate_class(&h, &seed, DEFAULT_BUDGET).unwrap();
            assert_eq!(dense, engine.members());
        }
    }
}
