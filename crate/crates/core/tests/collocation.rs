use pfasst_lfa::collocation::*;
use pfasst_lfa::linalg::{BlockBidiagonal, Lu, RMatrix};
use pfasst_lfa::quadrature::QuadratureRule;
use pfasst_lfa::space::make_diffusion;
use pfasst_lfa::Error;
use proptest::prelude::*;

/// Stability function of the M-node Radau IIA method.
fn radau_stability(m: usize, z: f64) -> f64 {
    match m {
        1 => 1.0 / (1.0 - z),
        2 => (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0),
        3 => (1.0 + 2.0 * z / 5.0 + z * z / 20.0) / (1.0 - 3.0 * z / 5.0 + 3.0 * z * z / 20.0 - z * z * z / 60.0),
        _ => unreachable!(),
    }
}

fn scalar_solution(m: usize, l: usize, lambda: f64, dt: f64) -> Vec<f64> {
    let a = RMatrix::from_rows(&[vec![lambda]]);
    let p = collocation_matrix(&a, &QuadratureRule::radau(m).unwrap(), dt).unwrap();
    let sys = composite_system(&p, l, &[1.0]).unwrap();
    Lu::factor(&sys.matrix).unwrap().solve(&sys.rhs)
}

#[test]
fn composite_scalar_solution_follows_stability_function() {
    for m in 1..=3 {
        for &z in &[-0.1, -2.0, -25.0, 0.3] {
            let l = 4;
            let u = scalar_solution(m, l, z / 0.5, 0.5);
            for k in 0..l {
                let got = last_node(&u, m, 1, k)[0];
                let want = radau_stability(m, z).powi(k as i32 + 1);
                assert!((got - want).abs() < 1e-13 * want.abs().max(1.0), "m {m} z {z} interval {k}");
            }
        }
    }
}

#[test]
fn composite_matrix_matches_kronecker_form() {
    let p = make_diffusion(8, 0.05).unwrap();
    let a = p.operator.materialize();
    let c = collocation_matrix(&a, &QuadratureRule::radau(3).unwrap(), 0.1).unwrap();
    let sys = composite_system(&c, 3, &[1.0; 8]).unwrap();
    let k = three_layer_matrix(&c, 3, false).unwrap();
    assert_eq!(sys.matrix.sub_mat(&k).max_abs(), 0.0);
    assert_eq!(sys.dim(), 72);
    // The periodic variant only adds the wrap-around coupling in the top right block.
    let per = three_layer_matrix(&c, 3, true).unwrap();
    let diff = per.sub_mat(&k);
    let top_right = diff.block(0, 48, 24, 24);
    assert_eq!(top_right.add_mat(&sys.n_matrix).max_abs(), 0.0);
    assert_eq!(diff.max_abs(), 1.0);
}

#[test]
fn composite_solution_equals_sequential_intervals() {
    let p = make_diffusion(8, 0.05).unwrap();
    let a = p.operator.materialize();
    let c = collocation_matrix(&a, &QuadratureRule::radau(2).unwrap(), 0.1).unwrap();
    let u0: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
    let sys = composite_system(&c, 3, &u0).unwrap();
    let u = BlockBidiagonal::new(3, c.matrix.clone(), Some(sys.n_matrix.clone())).unwrap().solve(&sys.rhs);
    let lu = Lu::factor(&c.matrix).unwrap();
    let mut start = u0.clone();
    for k in 0..3 {
        let uk = lu.solve(&spread_initial(&start, 2, 1));
        let block = &u[k * 16..(k + 1) * 16];
        assert!(uk.iter().zip(block).all(|(x, y)| (x - y).abs() < 1e-14));
        start = last_node(&uk, 2, 8, 0).to_vec();
    }
}

#[test]
fn helper_matrices() {
    let e = subdiagonal(3);
    assert_eq!(e[(1, 0)], 1.0);
    assert_eq!(e[(0, 2)], 0.0);
    let ec = cyclic_subdiagonal(3);
    assert_eq!(ec[(0, 2)], 1.0);
    assert_eq!(ec.sub_mat(&e).max_abs(), 1.0);
    assert_eq!(cyclic_subdiagonal(1)[(0, 0)], 1.0);
    let n = node_propagation(2, 2);
    assert_eq!(n.matvec(&[1.0, 2.0, 3.0, 4.0]), vec![3.0, 4.0, 3.0, 4.0]);
    assert_eq!(spread_initial(&[1.0, 2.0], 2, 2), vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
}

#[test]
fn input_validation() {
    let a = RMatrix::identity(2);
    let rule = QuadratureRule::radau(2).unwrap();
    assert!(matches!(collocation_matrix(&RMatrix::zeros(2, 3), &rule, 0.1), Err(Error::Dimension(_))));
    assert!(matches!(collocation_matrix(&a, &rule, 0.0), Err(Error::Range(_))));
    assert!(matches!(collocation_matrix(&a, &rule, f64::INFINITY), Err(Error::Range(_))));
    let c = collocation_matrix(&a, &rule, 0.1).unwrap();
    assert!(matches!(composite_system(&c, 0, &[1.0, 1.0]), Err(Error::Range(_))));
    assert!(matches!(composite_system(&c, 2, &[1.0]), Err(Error::Dimension(_))));
    assert!(matches!(composite_system(&c, 1 << 20, &[1.0, 1.0]), Err(Error::Size(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collocation_is_exact_for_zero_operator(m in 1usize..=6, l in 1usize..=5) {
        // A = 0: the solution is u0 at every node of every interval.
        let a = RMatrix::zeros(2, 2);
        let c = collocation_matrix(&a, &QuadratureRule::radau(m).unwrap(), 0.3).unwrap();
        let sys = composite_system(&c, l, &[1.5, -2.0]).unwrap();
        let u = Lu::factor(&sys.matrix).unwrap().solve(&sys.rhs);
        prop_assert_eq!(u, spread_initial(&[1.5, -2.0], m, l));
    }

    #[test]
    fn scalar_last_node_matches_exponential_to_high_order(m in 2usize..=5, z in -0.2f64..0.0) {
        // Radau IIA is of order 2M - 1: the one-step error is O(z^{2M}).
        let u = scalar_solution(m, 1, z, 1.0);
        let got = last_node(&u, m, 1, 0)[0];
        prop_assert!((got - z.exp()).abs() <= 2.0 * z.abs().powi(2 * m as i32) + 1e-15);
    }
}
