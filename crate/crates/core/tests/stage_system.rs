mod common;

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use stagemg::cli::{heat_exact, heat_forcing, integrate_heat, HeatParams};
use stagemg::fem::{apply_dirichlet, assemble, assemble_load, unit_square_mesh, FunctionSpace};
use stagemg::linalg::{DenseMatrix, SparseMatrix};
use stagemg::multigrid::{MgConfig, SmootherKind};
use stagemg::stage_system::{
    apply_stage_coefficients, butcher_transform, characteristic_pencil, rk_update, stage_rhs, ForcingSpec,
    StageSystem,
};
use stagemg::tableau::{ButcherTableau, Family};
use stagemg::Error;

fn heat(n: usize, degree: usize, family: Family, s: usize, dt: f64) -> (Arc<FunctionSpace>, StageSystem) {
    let space = Arc::new(FunctionSpace::new(Arc::new(unit_square_mesh(n).unwrap()), degree).unwrap());
    let f = apply_dirichlet(&assemble(&space).unwrap());
    let sys = StageSystem::new(Arc::new(f.m), Arc::new(f.k), family.tableau(s).unwrap(), dt).unwrap();
    (space, sys)
}

fn dense_b(sys: &StageSystem) -> DMatrix<f64> {
    let a = common::na_real(&sys.tableau().a);
    common::stage_matrix(&a, &common::na_sparse(sys.m()), &common::na_sparse(sys.k()), sys.dt())
}

#[test]
fn constructor_rejects_bad_inputs() {
    let m = Arc::new(SparseMatrix::identity(3));
    let t = Family::RadauIIA.tableau(2).unwrap();
    assert!(StageSystem::new(Arc::clone(&m), Arc::clone(&m), t.clone(), 0.0).is_err());
    assert!(StageSystem::new(Arc::clone(&m), Arc::clone(&m), t.clone(), -1.0).is_err());
    assert!(StageSystem::new(Arc::clone(&m), Arc::new(SparseMatrix::identity(4)), t, 0.1).is_err());
}

#[test]
fn shapes_follow_stage_major_layout() {
    let (space, sys) = heat(3, 2, Family::GaussLegendre, 2, 0.1);
    assert_eq!(sys.stages(), 2);
    assert_eq!(sys.ndof(), space.ndof());
    assert_eq!(sys.dim(), 2 * space.ndof());
    assert!(matches!(sys.apply(&[1.0; 3]), Err(Error::DimensionMismatch(_))));
}

#[test]
fn matrix_free_apply_matches_dense_oracle_and_materialized_operator() {
    let mut rng = common::rng(21);
    for (family, s) in [(Family::RadauIIA, 1), (Family::RadauIIA, 3), (Family::GaussLegendre, 2)] {
        for degree in [1, 2] {
            let (_, sys) = heat(3, degree, family, s, 0.37);
            let oracle = dense_b(&sys);
            let mat = common::na_sparse(&sys.materialize().unwrap());
            assert!((&mat - &oracle).amax() < 1e-13 * oracle.amax());
            let x = common::random_vec(&mut rng, sys.dim());
            let y = sys.apply(&x).unwrap();
            let want = &oracle * DVector::from_column_slice(&x);
            let err = y.iter().zip(want.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-13 * want.amax().max(1.0));
        }
    }
}

#[test]
fn apply_is_linear_and_works_on_complex_vectors() {
    let (_, sys) = heat(2, 1, Family::RadauIIA, 2, 0.2);
    let mut rng = common::rng(22);
    let (x, y) = (common::random_vec(&mut rng, sys.dim()), common::random_vec(&mut rng, sys.dim()));
    let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let (bx, by, bc) = (sys.apply(&x).unwrap(), sys.apply(&y).unwrap(), sys.apply(&combo).unwrap());
    for i in 0..sys.dim() {
        assert_abs_diff_eq!(bc[i], 2.0 * bx[i] - 0.5 * by[i], epsilon = 1e-13);
    }
    let z: Vec<Complex64> = x.iter().zip(&y).map(|(&a, &b)| Complex64::new(a, b)).collect();
    let bz = sys.apply(&z).unwrap();
    for i in 0..sys.dim() {
        assert_abs_diff_eq!(bz[i].re, bx[i], epsilon = 1e-15);
        assert_abs_diff_eq!(bz[i].im, by[i], epsilon = 1e-15);
    }
}

#[test]
fn materialize_respects_cap() {
    let (_, sys) = heat(4, 1, Family::RadauIIA, 3, 0.1);
    assert!(matches!(sys.materialize_with_cap(10), Err(Error::CapExceeded { .. })));
    assert_eq!(sys.materialize_with_cap(sys.dim()).unwrap().nrows(), sys.dim());
}

/// With f = t the stage loads are `(t_n + c_i Δt) M·1` off the boundary.
#[test]
fn stage_rhs_evaluates_forcing_at_stage_times() {
    let (space, sys) = heat(3, 2, Family::RadauIIA, 3, 0.2);
    let fs = ForcingSpec::new(Arc::clone(&space), |_, t| t);
    let rhs = stage_rhs(&fs, 1.0, sys.tableau(), 0.2).unwrap();
    let m1 = assemble_load(&space, |_, _| 1.0, 0.0).unwrap();
    let n = space.ndof();
    for (i, &c) in sys.tableau().c.iter().enumerate() {
        for d in 0..n {
            let want = if space.is_boundary_dof(d) { 0.0 } else { (1.0 + 0.2 * c) * m1[d] };
            assert_abs_diff_eq!(rhs[i * n + d], want, epsilon = 1e-15);
        }
    }
}

#[test]
fn step_rhs_subtracts_stiffness_action_in_every_stage() {
    let (space, sys) = heat(3, 1, Family::GaussLegendre, 2, 0.1);
    let n = space.ndof();
    let load: Vec<f64> = (0..2 * n).map(|i| i as f64).collect();
    let u = space.interpolate(|p| p[0] * (1.0 - p[0]) * p[1]);
    let ku = common::na_sparse(sys.k()) * DVector::from_column_slice(&u);
    let rhs = sys.step_rhs(&load, &u).unwrap();
    for i in 0..2 {
        for d in 0..n {
            assert_abs_diff_eq!(rhs[i * n + d], load[i * n + d] - ku[d], epsilon = 1e-14);
        }
    }
}

#[test]
fn rk_update_small_example() {
    let t = Family::RadauIIA.tableau(2).unwrap();
    let u = rk_update(&[1.0, 2.0], &[4.0, 8.0, -4.0, 0.0], &t, 0.5).unwrap();
    // u + Δt (3/4 k₁ + 1/4 k₂)
    assert_abs_diff_eq!(u[0], 1.0 + 0.5 * (0.75 * 4.0 + 0.25 * -4.0), epsilon = 1e-15);
    assert_abs_diff_eq!(u[1], 2.0 + 0.5 * (0.75 * 8.0), epsilon = 1e-15);
    assert!(rk_update(&[1.0], &[1.0], &t, 0.5).is_err());
}

/// One RadauIIA(2) step solved densely here must match the step built from
/// the library's right-hand side and update.
#[test]
fn radau2_step_matches_dense_oracle() {
    let dt = 0.1;
    let (space, sys) = heat(3, 1, Family::RadauIIA, 2, dt);
    let fs = ForcingSpec::new(Arc::clone(&space), heat_forcing);
    let u0 = space.interpolate(|p| heat_exact(p, 0.0));
    let rhs = sys.step_rhs(&stage_rhs(&fs, 0.0, sys.tableau(), dt).unwrap(), &u0).unwrap();
    let k = dense_b(&sys).lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
    let u1 = rk_update(&u0, k.as_slice(), sys.tableau(), dt).unwrap();

    // oracle: hand-written loads and update with the closed-form coefficients
    let n = space.ndof();
    let (m, kk) = (common::na_sparse(sys.m()), common::na_sparse(sys.k()));
    let a = [[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]];
    let c = [1.0 / 3.0, 1.0];
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    let mut f = DVector::zeros(2 * n);
    let ku0 = &kk * DVector::from_column_slice(&u0);
    for i in 0..2 {
        let load = assemble_load(&space, heat_forcing, c[i] * dt).unwrap();
        for d in 0..n {
            f[i * n + d] = if space.is_boundary_dof(d) { 0.0 } else { load[d] } - ku0[d];
        }
        for j in 0..2 {
            let blk = &kk * (dt * a[i][j]) + if i == j { m.clone() } else { DMatrix::zeros(n, n) };
            big.view_mut((i * n, j * n), (n, n)).copy_from(&blk);
        }
    }
    let stages = big.lu().solve(&f).unwrap();
    for d in 0..n {
        let want = u0[d] + dt * (0.75 * stages[d] + 0.25 * stages[n + d]);
        assert_abs_diff_eq!(u1[d], want, epsilon = 1e-12);
    }
    // stiffly accurate: the update equals uⁿ + Δt Σ a_sj k_j, the last stage value
    for d in 0..n {
        let last = u0[d] + dt * (a[1][0] * stages[d] + a[1][1] * stages[n + d]);
        assert_abs_diff_eq!(u1[d], last, epsilon = 1e-12);
    }
}

#[test]
fn butcher_transform_has_the_same_solution() {
    let mut rng = common::rng(23);
    for (family, s) in [(Family::RadauIIA, 3), (Family::GaussLegendre, 2)] {
        let (_, sys) = heat(3, 2, family, s, 0.3);
        let f = common::random_vec(&mut rng, sys.dim());
        let (op, g) = butcher_transform(&sys, &f).unwrap();
        let ainv = common::na_real(op.a_inverse());
        let a = common::na_real(&sys.tableau().a);
        assert!((&ainv * &a - DMatrix::identity(s, s)).amax() < 1e-12);
        let k = dense_b(&sys).lu().solve(&DVector::from_column_slice(&f)).unwrap();
        // the transformed operator applied to the true solution gives its rhs
        let tk = op.apply(k.as_slice()).unwrap();
        let scale = g.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        for (x, y) in tk.iter().zip(&g) {
            assert!((x - y).abs() < 1e-9 * scale);
        }
    }
}

#[test]
fn stage_coefficients_act_as_kronecker_with_identity() {
    let coeffs = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]);
    let y = apply_stage_coefficients(&coeffs, &[1.0, 2.0, 3.0, 10.0, 20.0, 30.0]).unwrap();
    assert_eq!(y, vec![21.0, 42.0, 63.0, 4.0, 8.0, 12.0]);
}

#[test]
fn characteristic_pencil_matches_dense_definition() {
    let (_, sys) = heat(2, 2, Family::RadauIIA, 2, 0.25);
    let lambda = Complex64::new(1.0 / 3.0, 2f64.sqrt() / 6.0);
    let pencil = characteristic_pencil(sys.m(), sys.k(), lambda, 0.25);
    assert_eq!(pencil.z, lambda * 0.25);
    let dense = common::na_complex(&pencil.to_dense());
    let m = common::na_sparse(sys.m()).map(|v| common::C64::new(v, 0.0));
    let k = common::na_sparse(sys.k()).map(|v| common::C64::new(v, 0.0));
    let want = &m + &k * common::C64::new(pencil.z.re, pencil.z.im);
    assert!(common::max_abs_complex(&(dense - &want)) < 1e-15);
    // applying and solving are consistent
    let mut rng = common::rng(24);
    let x: Vec<Complex64> = common::random_vec(&mut rng, pencil.ndof()).into_iter().map(|v| Complex64::new(v, -v)).collect();
    let y = pencil.apply(&x).unwrap();
    let back = pencil.factor().unwrap().solve(&y).unwrap();
    assert!(back.iter().zip(&x).all(|(a, b)| (a - b).norm() < 1e-12));
}

/// Global error on `u' = −u` over [0, 1]: order 2s − 1 for RadauIIA and 2s
/// for Gauss–Legendre, measured by halving Δt.
#[test]
fn scalar_surrogate_reaches_classical_order() {
    let one = Arc::new(SparseMatrix::identity(1));
    let run = |t: &ButcherTableau, steps: usize| {
        let dt = 1.0 / steps as f64;
        let sys = StageSystem::new(Arc::clone(&one), Arc::clone(&one), t.clone(), dt).unwrap();
        let b = sys.materialize().unwrap().to_dense().lu().unwrap();
        let mut u = vec![1.0];
        for _ in 0..steps {
            let rhs = sys.step_rhs(&vec![0.0; t.stages()], &u).unwrap();
            let k = b.solve(&rhs).unwrap();
            u = rk_update(&u, &k, t, dt).unwrap();
        }
        (u[0] - (-1f64).exp()).abs()
    };
    for (family, s, order) in [
        (Family::RadauIIA, 1, 1),
        (Family::RadauIIA, 2, 3),
        (Family::RadauIIA, 3, 5),
        (Family::GaussLegendre, 1, 2),
        (Family::GaussLegendre, 2, 4),
    ] {
        let t = family.tableau(s).unwrap();
        let (coarse, fine) = (run(&t, 4), run(&t, 8));
        let rate = (coarse / fine).log2();
        assert!((rate - order as f64).abs() < 0.3, "{family}({s}) rate {rate}, expected {order}");
    }
}

/// Backward Euler on the heat system: halving Δt halves the temporal error,
/// measured against a fine RadauIIA(3) reference on the same mesh.
#[test]
fn backward_euler_heat_error_halves_with_step() {
    let t_final = 0.5;
    let params = |family: Family, s: usize, steps: usize| HeatParams {
        family,
        stages: s,
        degree: 1,
        base_n: 4,
        levels: 2,
        dt: t_final / steps as f64,
        smoother: SmootherKind::AsmStar,
        cfg: MgConfig::default(),
        tol: 1e-12,
    };
    let solve = |p: &HeatParams, steps: usize| {
        let levels = p.hierarchy().unwrap();
        let space = &levels.last().unwrap().space;
        let u0 = space.interpolate(|q| heat_exact(q, 0.0));
        let (u, _, converged) = integrate_heat(p, &levels, &u0, heat_forcing, steps).unwrap();
        assert!(converged);
        (u, Arc::clone(space))
    };
    let (reference, space) = solve(&params(Family::RadauIIA, 3, 64), 64);
    let err = |steps: usize| {
        let (u, _) = solve(&params(Family::RadauIIA, 1, steps), steps);
        let diff: Vec<f64> = u.iter().zip(&reference).map(|(a, b)| a - b).collect();
        let m = common::na_sparse(&assemble(&space).unwrap().m);
        let d = DVector::from_vec(diff);
        (d.dot(&(&m * &d))).sqrt()
    };
    let (e4, e8, e16) = (err(4), err(8), err(16));
    for ratio in [e4 / e8, e8 / e16] {
        assert!((ratio - 2.0).abs() < 0.25, "error ratio {ratio} (errors {e4:e}, {e8:e}, {e16:e})");
    }
}
