mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use stagemg::fem::{
    apply_dirichlet, assemble, assemble_load, element_matrices, l2_error, prolongation, refine, unit_square_mesh,
    FunctionSpace, Mesh, VertexOrigin,
};

fn space(n: usize, degree: usize) -> Arc<FunctionSpace> {
    Arc::new(FunctionSpace::new(Arc::new(unit_square_mesh(n).unwrap()), degree).unwrap())
}

/// Coordinates scaled to integers on the 1/n grid so sets compare exactly.
fn coordinate_set(mesh: &Mesh, n: usize) -> BTreeSet<(i64, i64)> {
    mesh.vertices()
        .iter()
        .map(|p| ((p[0] * n as f64).round() as i64, (p[1] * n as f64).round() as i64))
        .collect()
}

#[test]
fn unit_square_mesh_counts() {
    for n in 1..6 {
        let m = unit_square_mesh(n).unwrap();
        assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
        assert_eq!(m.num_triangles(), 2 * n * n);
        assert_eq!(m.edges().len(), 3 * n * n + 2 * n);
        assert_eq!(m.boundary_vertices().len(), 4 * n);
        let area: f64 = (0..m.num_triangles()).map(|t| m.area(t)).sum();
        assert_abs_diff_eq!(area, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.h_max(), 2f64.sqrt() / n as f64, epsilon = 1e-14);
    }
    assert!(unit_square_mesh(0).is_err());
}

#[test]
fn mesh_rejects_clockwise_and_dangling_triangles() {
    let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    assert!(Mesh::new(v.clone(), vec![[0, 1, 2]]).is_ok());
    assert!(Mesh::new(v.clone(), vec![[0, 2, 1]]).is_err());
    assert!(Mesh::new(v, vec![[0, 1, 3]]).is_err());
}

#[test]
fn double_refinement_reproduces_the_finer_structured_mesh() {
    let m4 = Arc::new(unit_square_mesh(4).unwrap());
    let m8 = Arc::new(refine(&m4));
    let m16 = refine(&m8);
    let direct = unit_square_mesh(16).unwrap();
    assert_eq!(m16.num_vertices(), direct.num_vertices());
    assert_eq!(m16.num_triangles(), direct.num_triangles());
    assert_eq!(coordinate_set(&m16, 16), coordinate_set(&direct, 16));
    assert_eq!(m16.level(), 2);
    assert_eq!(m16.boundary_vertices().len(), 64);
}

#[test]
fn refinement_records_vertex_origins() {
    let coarse = Arc::new(unit_square_mesh(2).unwrap());
    let fine = refine(&coarse);
    let parent = fine.parent().unwrap();
    assert!(Arc::ptr_eq(&parent.coarse, &coarse));
    for (v, origin) in parent.vertex_origin.iter().enumerate() {
        match *origin {
            VertexOrigin::Vertex(c) => assert_eq!(fine.vertices()[v], coarse.vertices()[c]),
            VertexOrigin::EdgeMidpoint(a, b) => {
                let (p, q) = (coarse.vertices()[a], coarse.vertices()[b]);
                assert_eq!(fine.vertices()[v], [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            }
        }
    }
    // children cover each parent with a quarter of its area
    for t in 0..coarse.num_triangles() {
        let kids: f64 = (4 * t..4 * t + 4).map(|c| fine.area(c)).sum();
        assert_abs_diff_eq!(kids, coarse.area(t), epsilon = 1e-15);
    }
}

#[test]
fn mesh_text_export_lists_nodes_and_elements() {
    let m = unit_square_mesh(1).unwrap();
    let nodes: Vec<Vec<f64>> = m
        .to_node_text()
        .lines()
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(nodes, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    assert_eq!(m.to_element_text(), "0 1 3\n0 3 2\n");

    let dir = tempfile::tempdir().unwrap();
    let (np, ep) = (dir.path().join("mesh.node"), dir.path().join("mesh.ele"));
    m.write_node_element_files(&np, &ep).unwrap();
    assert_eq!(std::fs::read_to_string(&ep).unwrap(), m.to_element_text());
}

#[test]
fn function_space_dof_counts() {
    for n in 1..5 {
        let p1 = space(n, 1);
        assert_eq!(p1.ndof(), (n + 1) * (n + 1));
        assert_eq!(p1.boundary_dofs().len(), 4 * n);
        let p2 = space(n, 2);
        assert_eq!(p2.ndof(), (2 * n + 1) * (2 * n + 1));
        assert_eq!(p2.boundary_dofs().len(), 8 * n);
        assert_eq!(p2.interior_dofs().len(), p2.ndof() - 8 * n);
    }
    assert!(FunctionSpace::new(Arc::new(unit_square_mesh(2).unwrap()), 3).is_err());
}

/// Hand-computed P1 element matrices on a scaled, translated right triangle:
/// the mass scales with the area and the stiffness is scale invariant.
#[test]
fn p1_element_matrices_match_hand_values() {
    let hand_m = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
    let hand_k = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    for (h, origin) in [(1.0, [0.0, 0.0]), (0.25, [0.5, 0.25])] {
        let p = [origin, [origin[0] + h, origin[1]], [origin[0], origin[1] + h]];
        let (m, k) = element_matrices(1, p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(m[(i, j)], hand_m[i][j] * h * h / 24.0, epsilon = 1e-15);
                assert_abs_diff_eq!(k[(i, j)], hand_k[i][j], epsilon = 1e-14);
            }
        }
    }
}

/// Standard P2 reference-element mass entries: vertex-vertex 6/360,
/// vertex-vertex off 1/360 negative, edge-edge 32/360 and 16/360.
#[test]
fn p2_element_mass_matches_hand_values() {
    let (m, k) = element_matrices(2, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    let s = 1.0 / 360.0;
    for i in 0..3 {
        for j in 0..3 {
            let vv = if i == j { 6.0 * s } else { -s };
            assert_abs_diff_eq!(m[(i, j)], vv, epsilon = 1e-15);
            let ee = if i == j { 32.0 * s } else { 16.0 * s };
            assert_abs_diff_eq!(m[(3 + i, 3 + j)], ee, epsilon = 1e-15);
        }
    }
    let total: f64 = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|ij| m[ij]).sum();
    assert_abs_diff_eq!(total, 0.5, epsilon = 1e-15);
    for i in 0..6 {
        let row: f64 = (0..6).map(|j| k[(i, j)]).sum();
        assert_abs_diff_eq!(row, 0.0, epsilon = 1e-14);
    }
}

#[test]
fn assembled_matrices_are_symmetric_with_constant_kernel() {
    for degree in [1, 2] {
        for n in [1, 2, 5] {
            let sp = space(n, degree);
            let f = assemble(&sp).unwrap();
            assert_eq!(f.m.transpose(), f.m);
            assert_eq!(f.k.transpose(), f.k);
            let ones = vec![1.0; sp.ndof()];
            assert!(f.k.spmv(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
            let total: f64 = f.m.spmv(&ones).unwrap().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn mass_is_positive_definite_and_stiffness_semidefinite() {
    for degree in [1, 2] {
        let sp = space(3, degree);
        let f = assemble(&sp).unwrap();
        let m = common::na_sparse(&f.m);
        assert!(m.clone().cholesky().is_some(), "M not SPD for degree {degree}");
        let k = common::na_sparse(&f.k);
        let ev = k.clone().symmetric_eigenvalues();
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-12, "K has eigenvalue {min}");
        // only the constants are in the kernel
        assert_eq!(ev.iter().filter(|v| v.abs() < 1e-10).count(), 1);
        // after Dirichlet elimination K is SPD as well
        let kd = common::na_sparse(&apply_dirichlet(&f).k) + DMatrix::from_fn(sp.ndof(), sp.ndof(), |i, j| {
            if i == j && sp.is_boundary_dof(i) { 1.0 } else { 0.0 }
        });
        assert!(kd.cholesky().is_some());
    }
}

/// Energies of interpolated polynomials the space reproduces are exact.
#[test]
fn stiffness_energy_of_interpolants_is_exact() {
    let sp = space(4, 2);
    let f = assemble(&sp).unwrap();
    let u = sp.interpolate(|p| p[0] * p[0] + p[0] * p[1]);
    let ku = f.k.spmv(&u).unwrap();
    let energy: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
    // ∇u = (2x + y, x): ∫ 4x² + 4xy + y² + x² = 4/3 + 1 + 1/3 + 1/3
    assert_abs_diff_eq!(energy, 3.0, epsilon = 1e-12);

    let sp1 = space(3, 1);
    let f1 = assemble(&sp1).unwrap();
    let v = sp1.interpolate(|p| 2.0 * p[0] - 3.0 * p[1]);
    let kv = f1.k.spmv(&v).unwrap();
    let e1: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
    assert_abs_diff_eq!(e1, 13.0, epsilon = 1e-12);
}

#[test]
fn load_vector_oracles() {
    for degree in [1, 2] {
        let sp = space(3, degree);
        let f = assemble(&sp).unwrap();
        let ones = vec![1.0; sp.ndof()];
        let load = assemble_load(&sp, |_, _| 1.0, 0.0).unwrap();
        let m1 = f.m.spmv(&ones).unwrap();
        for (a, b) in load.iter().zip(&m1) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let lx = assemble_load(&sp, |p, _| p[0], 0.0).unwrap();
        assert_abs_diff_eq!(lx.iter().sum::<f64>(), 0.5, epsilon = 1e-14);
        // time enters only through the forcing
        let lt = assemble_load(&sp, |_, t| t, 2.5).unwrap();
        assert_abs_diff_eq!(lt.iter().sum::<f64>(), 2.5, epsilon = 1e-13);
    }
}

#[test]
fn l2_error_of_interpolant_and_known_difference() {
    let sp = space(2, 2);
    let u = sp.interpolate(|p| p[0] * p[1]);
    assert!(l2_error(&sp, &u, |p| p[0] * p[1]).unwrap() < 1e-14);
    // ‖xy − (xy + 1)‖ = 1
    assert_abs_diff_eq!(l2_error(&sp, &u, |p| p[0] * p[1] + 1.0).unwrap(), 1.0, epsilon = 1e-13);
    let sp1 = space(8, 1);
    let w = sp1.interpolate(|p| (p[0] * 3.0).sin());
    let e8 = l2_error(&sp1, &w, |p| (p[0] * 3.0).sin()).unwrap();
    let sp2 = space(16, 1);
    let w2 = sp2.interpolate(|p| (p[0] * 3.0).sin());
    let e16 = l2_error(&sp2, &w2, |p| (p[0] * 3.0).sin()).unwrap();
    let rate = (e8 / e16).log2();
    assert!((rate - 2.0).abs() < 0.1, "P1 interpolation rate {rate}");
}

#[test]
fn dirichlet_elimination_makes_boundary_rows_inert() {
    let sp = space(3, 2);
    let f = assemble(&sp).unwrap();
    let d = apply_dirichlet(&f);
    for i in 0..sp.ndof() {
        let (cols, vals) = d.m.row(i);
        if sp.is_boundary_dof(i) {
            assert_eq!((cols, vals), (&[i][..], &[1.0][..]));
            assert_eq!(d.k.get(i, i), 0.0);
            assert!(d.k.row(i).1.iter().all(|&v| v == 0.0));
        } else {
            for (&j, &v) in cols.iter().zip(vals) {
                if !sp.is_boundary_dof(j) {
                    assert_eq!(v, f.m.get(i, j));
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }
    assert_eq!(d.m.transpose(), d.m);
    assert_eq!(d.k.transpose(), d.k);
}

#[test]
fn prolongation_preserves_constants_and_is_exact_at_fine_nodes() {
    let cm = Arc::new(unit_square_mesh(3).unwrap());
    let fm = Arc::new(refine(&cm));
    for degree in [1, 2] {
        let coarse = FunctionSpace::new(Arc::clone(&cm), degree).unwrap();
        let fine = FunctionSpace::new(Arc::clone(&fm), degree).unwrap();
        let p = prolongation(&coarse, &fine).unwrap();
        assert_eq!((p.nrows(), p.ncols()), (fine.ndof(), coarse.ndof()));
        let pc = p.spmv(&vec![1.0; coarse.ndof()]).unwrap();
        assert!(pc.iter().all(|v| (v - 1.0).abs() < 1e-14));
        // polynomials of the coarse space are reproduced at fine nodes
        let poly = |q: [f64; 2]| match degree {
            1 => 1.0 + 2.0 * q[0] - q[1],
            _ => q[0] * q[0] - 3.0 * q[0] * q[1] + q[1],
        };
        let pu = p.spmv(&coarse.interpolate(poly)).unwrap();
        let want = fine.interpolate(poly);
        for (a, b) in pu.iter().zip(&want) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }
}

#[test]
fn p1_prolongation_has_injection_and_midpoint_rows() {
    let cm = Arc::new(unit_square_mesh(2).unwrap());
    let fm = Arc::new(refine(&cm));
    let coarse = FunctionSpace::new(Arc::clone(&cm), 1).unwrap();
    let fine = FunctionSpace::new(Arc::clone(&fm), 1).unwrap();
    let p = prolongation(&coarse, &fine).unwrap();
    for (v, origin) in fm.parent().unwrap().vertex_origin.iter().enumerate() {
        let (cols, vals) = p.row(v);
        match *origin {
            VertexOrigin::Vertex(c) => assert_eq!((cols, vals), (&[c][..], &[1.0][..])),
            VertexOrigin::EdgeMidpoint(a, b) => {
                let mut want = vec![(a, 0.5), (b, 0.5)];
                want.sort_by_key(|e| e.0);
                let got: Vec<(usize, f64)> = cols.iter().copied().zip(vals.iter().copied()).collect();
                assert_eq!(got, want);
            }
        }
    }
}

#[test]
fn prolongation_rejects_unrelated_meshes_and_degree_mismatch() {
    let a = space(2, 1);
    let b = space(4, 1);
    assert!(prolongation(&a, &b).is_err());
    let cm = Arc::new(unit_square_mesh(2).unwrap());
    let fm = Arc::new(refine(&cm));
    let c1 = FunctionSpace::new(Arc::clone(&cm), 1).unwrap();
    let f2 = FunctionSpace::new(fm, 2).unwrap();
    assert!(prolongation(&c1, &f2).is_err());
}

/// `PᵀC_hP = C_H` for nested conforming spaces, computed densely.
#[test]
fn galerkin_identity_for_mass_and_stiffness() {
    let cm = Arc::new(unit_square_mesh(4).unwrap());
    let fm = Arc::new(refine(&cm));
    for degree in [1, 2] {
        let coarse = Arc::new(FunctionSpace::new(Arc::clone(&cm), degree).unwrap());
        let fine = Arc::new(FunctionSpace::new(Arc::clone(&fm), degree).unwrap());
        let p = common::na_sparse(&prolongation(&coarse, &fine).unwrap());
        let (fc, ff) = (assemble(&coarse).unwrap(), assemble(&fine).unwrap());
        let gk = p.transpose() * common::na_sparse(&ff.k) * &p;
        let gm = p.transpose() * common::na_sparse(&ff.m) * &p;
        assert!((gk - common::na_sparse(&fc.k)).amax() < 1e-11);
        assert!((gm - common::na_sparse(&fc.m)).amax() < 1e-11);
    }
}
