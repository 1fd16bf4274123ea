mod common;

use common::{bump_slip, free_square, graded, rel_l2, square};
use dislox::dislocation::manufactured::{convergence_level, manufactured_case, ManufacturedKind};
use dislox::dislocation::{
    merge_load, solve_continuous, solve_neumann_variant, solve_split_node, InterfaceOperator,
};
use dislox::fem::{CgOptions, LinearSolver, SlipField};
use dislox::{Error, Execution};

const EXEC: Execution = Execution::Parallel;

#[test]
fn interface_and_split_node_agree() {
    for n in [16, 32] {
        let setup = square(n, false);
        let model = graded(&setup.mesh.regions());
        let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
        let split = solve_split_node(&setup, &model, &slip, None, LinearSolver::Cholesky, EXEC).unwrap();
        let op = InterfaceOperator::build(&setup, &model, EXEC).unwrap();
        let (isol, iface) = op.solve(&setup, &model, &slip, None).unwrap();
        assert!(rel_l2(&setup, &iface.field, &split.field) <= 1e-6);
        assert!(isol.iterations < 2 * op.dim());
        assert!(split.report.slip_error < 1e-14);
        assert!(iface.report.slip_error < 1e-9);
    }
}

#[test]
fn cg_and_cholesky_give_the_same_split_solution() {
    let setup = square(16, false);
    let model = graded(&setup.mesh.regions());
    let slip = bump_slip(&setup, 0.01, [1.0, 0.0]);
    let a = solve_split_node(&setup, &model, &slip, None, LinearSolver::Cholesky, EXEC).unwrap();
    let cg = LinearSolver::Cg(CgOptions { tol: 1e-12, maxiter_factor: 10.0 });
    let b = solve_split_node(&setup, &model, &slip, None, cg, EXEC).unwrap();
    assert!(rel_l2(&setup, &b.field, &a.field) < 1e-9);
}

#[test]
fn solution_is_linear_in_the_slip() {
    let setup = square(16, false);
    let model = graded(&setup.mesh.regions());
    let g1 = bump_slip(&setup, 0.01, [1.0, 0.0]);
    let g2 = bump_slip(&setup, 0.003, [0.0, 1.0]);
    let mut sum = g1.clone();
    for (k, v) in &g2.values {
        let e = sum.values.entry(*k).or_insert([0.0, 0.0]);
        e[0] += v[0];
        e[1] += v[1];
    }
    let solve = |g: &SlipField| solve_split_node(&setup, &model, g, None, LinearSolver::Cholesky, EXEC).unwrap().field;
    let (u1, u2, u12) = (solve(&g1), solve(&g2), solve(&sum));
    let combined: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
    assert!(rel_l2(&setup, &u12, &combined) < 1e-12);
    let doubled = solve(&g1.scaled(2.0));
    let twice: Vec<f64> = u1.iter().map(|v| 2.0 * v).collect();
    assert!(rel_l2(&setup, &doubled, &twice) < 1e-12);
}

#[test]
fn zero_data_gives_the_zero_field() {
    let setup = square(16, false);
    let model = graded(&setup.mesh.regions());
    let zero = SlipField::zero(&setup.ft);
    let u = solve_split_node(&setup, &model, &zero, None, LinearSolver::Cholesky, EXEC).unwrap();
    assert!(u.field.iter().all(|v| v.abs() <= 1e-12));
    let op = InterfaceOperator::build(&setup, &model, EXEC).unwrap();
    let (_, w) = op.solve(&setup, &model, &zero, None).unwrap();
    assert!(w.field.iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn zero_slip_collapses_to_the_unsplit_problem() {
    let setup = square(32, false);
    let case = manufactured_case(ManufacturedKind::SmoothJump, &setup).unwrap();
    let zero = SlipField::zero(&setup.ft);
    let split = solve_split_node(&setup, &case.model, &zero, Some(&case.load), LinearSolver::Cholesky, EXEC).unwrap();
    let merged = merge_load(&setup, &case.load);
    let cont = solve_continuous(&setup, &case.model, Some(&merged), LinearSolver::Cholesky, EXEC).unwrap();
    for (v, &m) in setup.split.merge.iter().enumerate() {
        for c in 0..2 {
            assert!((split.field[2 * v + c] - cont[2 * m + c]).abs() <= 1e-12);
        }
    }
}

#[test]
fn interface_solution_does_not_depend_on_the_extension() {
    let a = square(32, false);
    let b = square(32, true);
    assert_eq!(a.mesh.nodes, b.mesh.nodes);
    assert_ne!(a.ft.gamma_nodes, b.ft.gamma_nodes);
    let model_a = graded(&a.mesh.regions());
    let model_b = graded(&b.mesh.regions());
    let slip_a = bump_slip(&a, 0.01, [0.6, 0.8]);
    let slip_b = bump_slip(&b, 0.01, [0.6, 0.8]);
    let (_, ua) = InterfaceOperator::build(&a, &model_a, EXEC).unwrap().solve(&a, &model_a, &slip_a, None).unwrap();
    let (_, ub) = InterfaceOperator::build(&b, &model_b, EXEC).unwrap().solve(&b, &model_b, &slip_b, None).unwrap();
    assert!(rel_l2(&a, &ub.field, &ua.field) <= 1e-6);
}

#[test]
fn interface_operator_is_symmetric_positive() {
    for n in [16, 32] {
        let setup = square(n, n == 32);
        let model = graded(&setup.mesh.regions());
        let op = InterfaceOperator::build(&setup, &model, EXEC).unwrap();
        let probe = op.probe(20, 3);
        assert!(probe.symmetry_defect <= 1e-9, "{probe:?}");
        assert!(probe.min_rayleigh > 0.0, "{probe:?}");
    }
}

#[test]
fn traction_is_continuous_across_gamma() {
    let setup = square(32, false);
    let model = graded(&setup.mesh.regions());
    let slip = bump_slip(&setup, 0.01, [1.0, 0.0]);
    let u = solve_split_node(&setup, &model, &slip, None, LinearSolver::Cholesky, EXEC).unwrap();
    let r = &u.report;
    assert!(r.relative_residual() < 1e-9, "{r:?}");
    assert!(r.continuity_error < 1e-12);
}

#[test]
fn linear_manufactured_field_is_reproduced_exactly() {
    let row = convergence_level(ManufacturedKind::ZeroJump, 16, EXEC).unwrap();
    assert!(row.l2_split < 1e-10 && row.l2_interface < 1e-10, "{row:?}");
    assert!(row.h1_split < 1e-9 && row.h1_interface < 1e-9, "{row:?}");
}

#[test]
fn neumann_variant_superposes() {
    let setup = free_square(16);
    let model = graded(&setup.mesh.regions());
    let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
    let h = |x: dislox::mesh::Point| [0.1 * x[1], -0.05 + 0.02 * x[0]];
    let loads = dislox::fem::Loads { body: None, traction: vec![(3, &h)] };
    let load = setup.nodal_load(&loads).unwrap();
    let sol = solve_neumann_variant(&setup, &model, &slip, Some(&load), EXEC).unwrap();
    assert!(sol.superposition_defect <= 1e-9);
    assert!(sol.combined.report.slip_error < 1e-14);

    let clamped = square(16, false);
    let err = solve_neumann_variant(&clamped, &model, &slip, None, EXEC).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
}

#[test]
fn sequential_and_parallel_runs_are_bitwise_equal() {
    let setup = square(16, false);
    let model = graded(&setup.mesh.regions());
    let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
    let run = |exec| {
        let op = InterfaceOperator::build(&setup, &model, exec).unwrap();
        op.solve(&setup, &model, &slip, None).unwrap().1.field
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}
