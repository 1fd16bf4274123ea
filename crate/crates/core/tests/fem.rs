use dislox::fem::{
    assemble_system, element_stiffness, nodal_load, recover_traction, rigid_motion_basis, solve_spd, CgOptions,
    DofMap, LinearSolver, Loads, SkylineCholesky,
};
use dislox::material::{Admissibility, ElasticModel};
use dislox::mesh::generate::{triangulate, ColumnGrid, Side, Tagging};
use dislox::mesh::{Element, Facet, Mesh, Point};
use dislox::Execution;
use nalgebra::{DMatrix, DVector};

const ADM: Admissibility = Admissibility { alpha0: 0.1, beta0: 0.1, m_bound: 10.0 };

fn unit_triangle() -> [Point; 3] {
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
}

/// Two-triangle unit square: left edge tag 1, right edge tag 2, rest tag 3.
fn two_triangle_square() -> Mesh {
    Mesh {
        dim: 2,
        nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        elements: vec![Element { region: 1, vertices: [0, 1, 2] }, Element { region: 1, vertices: [0, 2, 3] }],
        facets: vec![
            Facet { tag: 3, vertices: [0, 1] },
            Facet { tag: 2, vertices: [1, 2] },
            Facet { tag: 3, vertices: [2, 3] },
            Facet { tag: 1, vertices: [3, 0] },
        ],
    }
}

fn distorted_grid(n: usize) -> Mesh {
    let mut g = ColumnGrid::rect(n, n, [0.0, 1.0], [0.0, 1.0]);
    for (i, col) in g.heights.iter_mut().enumerate() {
        let s = i as f64 / n as f64;
        let last = col.len() - 1;
        for (j, y) in col.iter_mut().enumerate() {
            if j > 0 && j < last {
                *y += 0.15 / n as f64 * (std::f64::consts::PI * 2.0 * s).sin();
            }
        }
    }
    triangulate(&g, &Tagging { region: &|_| 1, boundary: &|s, _| s as i32 + 1, interior: &|_, _| None })
}

#[test]
fn element_matrix_matches_hand_assembly() {
    let k = element_stiffness(unit_triangle(), 0.0, 1.0).unwrap();
    let upper: [&[f64]; 6] = [
        &[1.5, 0.5, -1.0, -0.5, -0.5, 0.0],
        &[1.5, 0.0, -0.5, -0.5, -1.0],
        &[1.0, 0.0, 0.0, 0.0],
        &[0.5, 0.5, 0.0],
        &[0.5, 0.0],
        &[1.0],
    ];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            assert!((k[i][j] - v).abs() < 1e-15, "K[{i}][{j}] = {} expected {v}", k[i][j]);
            assert_eq!(k[i][j], k[j][i]);
        }
    }
}

#[test]
fn rigid_motions_are_in_the_element_kernel() {
    let p = [[0.3, 0.1], [1.2, 0.4], [0.5, 0.9]];
    let k = element_stiffness(p, 2.0, 0.7).unwrap();
    let fields: [[f64; 6]; 3] = [
        [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        [-p[0][1], p[0][0], -p[1][1], p[1][0], -p[2][1], p[2][0]],
    ];
    for u in fields {
        for row in &k {
            let r: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!(r.abs() < 1e-12, "K r = {r}");
        }
    }
}

#[test]
fn edge_and_body_loads_integrate_hats_exactly() {
    let mesh = Mesh {
        dim: 2,
        nodes: vec![[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
        elements: vec![Element { region: 1, vertices: [0, 1, 2] }],
        facets: vec![Facet { tag: 7, vertices: [2, 0] }],
    };
    let zero = nodal_load(&mesh, &[0], &Loads::default()).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));

    let h = |_: Point| [0.0, -1.0];
    let l = nodal_load(&mesh, &[0], &Loads { body: None, traction: vec![(7, &h)] }).unwrap();
    assert_eq!(l, vec![0.0, -0.5, 0.0, 0.0, 0.0, -0.5]);

    let f = |_: i32, _: Point| [1.0, 0.0];
    let l = nodal_load(&mesh, &[0], &Loads { body: Some(&f), traction: vec![] }).unwrap();
    for a in 0..3 {
        assert!((l[2 * a] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(l[2 * a + 1], 0.0);
    }
}

#[test]
fn solvers_match_a_dense_lu_oracle() {
    let mesh = two_triangle_square();
    let model = ElasticModel::homogeneous(&[1], 1.5, 1.0, ADM);
    let clamped = [true, false, false, true];
    let dofmap = DofMap::new(&mesh, &[0, 1], &clamped);
    let h = |x: Point| [0.3 + 0.1 * x[1], -0.2];
    let load = nodal_load(&mesh, &[0, 1], &Loads { body: None, traction: vec![(2, &h)] }).unwrap();
    let sys = assemble_system(&mesh, &model, &[0, 1], &dofmap, None, Some(&load), Execution::Sequential).unwrap();

    let n = sys.rhs.len();
    let dense = sys.matrix.to_dense();
    let a = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let oracle = a.lu().solve(&DVector::from_vec(sys.rhs.clone())).unwrap();

    let chol = SkylineCholesky::factor(&sys.matrix).unwrap().solve(&sys.rhs);
    let cg = solve_spd(&sys.matrix, &sys.rhs, CgOptions::default()).unwrap().x;
    let scale = oracle.norm();
    for x in [&chol, &cg] {
        let diff: f64 = x.iter().zip(oracle.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff <= 1e-9 * scale, "relative difference {}", diff / scale);
    }
    assert_eq!(LinearSolver::Cholesky.solve(&sys).unwrap(), chol);
}

#[test]
fn affine_fields_pass_the_patch_test() {
    let mesh = distorted_grid(6);
    let model = ElasticModel::homogeneous(&[1], 2.0, 0.8, ADM);
    let elements: Vec<usize> = (0..mesh.elements.len()).collect();
    let affine = |x: Point| [0.1 + 0.3 * x[0] - 0.2 * x[1], -0.05 + 0.15 * x[0] + 0.4 * x[1]];
    let boundary = mesh.boundary_nodes();
    let mut lift = vec![0.0; 2 * mesh.nodes.len()];
    for (v, &b) in boundary.iter().enumerate() {
        if b {
            let u = affine(mesh.nodes[v]);
            lift[2 * v] = u[0];
            lift[2 * v + 1] = u[1];
        }
    }
    let dofmap = DofMap::new(&mesh, &elements, &boundary);
    let sys = assemble_system(&mesh, &model, &elements, &dofmap, Some(&lift), None, Execution::Parallel).unwrap();
    let x = LinearSolver::Cholesky.solve(&sys).unwrap();
    let u = dofmap.expand(&x, Some(&lift));
    for (v, p) in mesh.nodes.iter().enumerate() {
        let e = affine(*p);
        assert!((u[2 * v] - e[0]).abs() < 1e-12 && (u[2 * v + 1] - e[1]).abs() < 1e-12);
    }
}

#[test]
fn recovered_traction_matches_the_applied_load() {
    let mesh = distorted_grid(4);
    let model = ElasticModel::homogeneous(&[1], 1.0, 1.0, ADM);
    let elements: Vec<usize> = (0..mesh.elements.len()).collect();
    let right = Side::Right as i32 + 1;
    let bottom = Side::Bottom as i32 + 1;
    let mut clamped = vec![false; mesh.nodes.len()];
    for f in mesh.facets.iter().filter(|f| f.tag == bottom) {
        clamped[f.vertices[0]] = true;
        clamped[f.vertices[1]] = true;
    }
    let h = |x: Point| [0.2 * x[1], -0.1];
    let load = nodal_load(&mesh, &elements, &Loads { body: None, traction: vec![(right, &h)] }).unwrap();
    let dofmap = DofMap::new(&mesh, &elements, &clamped);
    let sys = assemble_system(&mesh, &model, &elements, &dofmap, None, Some(&load), Execution::Sequential).unwrap();
    let u = dofmap.expand(&LinearSolver::Cholesky.solve(&sys).unwrap(), None);

    let facets: Vec<[usize; 2]> = mesh.facets.iter().filter(|f| f.tag == right).map(|f| f.vertices).collect();
    let zero = vec![0.0; load.len()];
    let t = recover_traction(&mesh, &model, &elements, &u, &zero, &facets, Execution::Sequential).unwrap();
    for (&v, tv) in &t {
        if clamped[v] {
            continue;
        }
        assert!((tv[0] - load[2 * v]).abs() < 1e-10 && (tv[1] - load[2 * v + 1]).abs() < 1e-10, "node {v}");
    }

    let rigid: Vec<f64> = mesh.nodes.iter().flat_map(|p| [0.3 - 0.2 * p[1], -0.1 + 0.2 * p[0]]).collect();
    let t = recover_traction(&mesh, &model, &elements, &rigid, &zero, &facets, Execution::Sequential).unwrap();
    assert!(t.values().all(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12));
}

#[test]
fn rigid_basis_is_lumped_mass_orthonormal() {
    let mesh = distorted_grid(5);
    let elements: Vec<usize> = (0..mesh.elements.len()).collect();
    let basis = rigid_motion_basis(&mesh, &elements);
    assert_eq!(basis.vectors.len(), 3);
    for i in 0..3 {
        for j in 0..3 {
            let g = basis.inner(&basis.vectors[i], &basis.vectors[j]);
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((g - expected).abs() < 1e-12, "gram[{i}][{j}] = {g}");
        }
    }
}
