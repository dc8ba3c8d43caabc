mod common;

use nalgebra::{DMatrix, DVector};
use stagemg::analysis::{coupled_cycle_operator, preconditioner_inverse_matrix};
use stagemg::linalg::{spectral_radius, GmresOptions};
use stagemg::multigrid::{
    build_hierarchy, cycle, mg_preconditioned_gmres, mg_stationary_solve, two_grid_step, MgConfig, MgLevel,
    SmootherKind,
};
use stagemg::tableau::Family;

fn hierarchy(family: Family, s: usize, degree: usize, levels: usize, smoother: SmootherKind) -> Vec<MgLevel> {
    build_hierarchy(2, levels, degree, &family.tableau(s).unwrap(), 0.25, smoother).unwrap()
}

fn dense_b(level: &MgLevel) -> DMatrix<f64> {
    let a = common::na_real(&level.sys.tableau().a);
    common::stage_matrix(&a, &common::na_sparse(level.sys.m()), &common::na_sparse(level.sys.k()), level.sys.dt())
}

fn dense_p(coarse: &MgLevel) -> DMatrix<f64> {
    let s = coarse.sys.stages();
    common::kron(&DMatrix::identity(s, s), &common::na_sparse(coarse.p.as_ref().unwrap()))
}

/// Two-grid error propagation written out densely:
/// `S_post (I − P B_H⁻¹ Pᵀ B_h) S_pre`, `S = (I − ω W⁻¹ B)^ν`.
fn two_grid_oracle(fine: &MgLevel, coarse: &MgLevel, cfg: &MgConfig) -> DMatrix<f64> {
    let b = dense_b(fine);
    let dim = b.nrows();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let winv = common::na_real(&preconditioner_inverse_matrix(&fine.prec).unwrap());
    let s1 = &eye - &winv * &b * cfg.omega;
    let p = dense_p(coarse);
    let bh = dense_b(coarse);
    let cgc = &eye - &p * bh.try_inverse().unwrap() * p.transpose() * &b;
    s1.pow(cfg.nu_post as u32) * cgc * s1.pow(cfg.nu_pre as u32)
}

#[test]
fn config_validation() {
    assert!(MgConfig::default().validate().is_ok());
    assert_eq!(MgConfig::default().nu_pre, 2);
    assert_eq!(MgConfig::default().gamma, 1);
    assert!(MgConfig { gamma: 0, ..MgConfig::default() }.validate().is_err());
    assert!(MgConfig { omega: 0.0, ..MgConfig::default() }.validate().is_err());
    assert!(MgConfig { omega: f64::NAN, ..MgConfig::default() }.validate().is_err());
}

#[test]
fn hierarchy_shapes_and_transfers() {
    let levels = hierarchy(Family::RadauIIA, 2, 2, 3, SmootherKind::AsmStar);
    let dofs: Vec<usize> = levels.iter().map(|l| l.sys.ndof()).collect();
    assert_eq!(dofs, vec![25, 81, 289]);
    for l in 0..2 {
        let p = levels[l].p.as_ref().unwrap();
        assert_eq!((p.nrows(), p.ncols()), (dofs[l + 1], dofs[l]));
        assert_eq!(levels[l].restriction().unwrap(), &p.transpose());
        // coarse boundary columns and fine boundary rows are empty
        for (i, j, _) in p.triplets() {
            assert!(!levels[l].space.is_boundary_dof(j));
            assert!(!levels[l + 1].space.is_boundary_dof(i));
        }
    }
    assert!(levels[2].p.is_none());
    assert!(build_hierarchy(2, 0, 1, &Family::RadauIIA.tableau(1).unwrap(), 0.1, SmootherKind::BlockJacobi).is_err());
}

/// Blockwise Galerkin identity for the Dirichlet-constrained stage operator:
/// `(I ⊗ Pᵀ) B_h (I ⊗ P)` equals `B_H` on interior coarse dofs.
#[test]
fn stage_operator_galerkin_identity_on_interior_dofs() {
    for degree in [1, 2] {
        let levels = hierarchy(Family::GaussLegendre, 2, degree, 2, SmootherKind::BlockJacobi);
        let p = dense_p(&levels[0]);
        let g = p.transpose() * dense_b(&levels[1]) * &p;
        let bh = dense_b(&levels[0]);
        let n = levels[0].sys.ndof();
        let interior = |r: usize| !levels[0].space.is_boundary_dof(r % n);
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                if interior(r) && interior(c) {
                    assert!((g[(r, c)] - bh[(r, c)]).abs() < 1e-12);
                } else {
                    assert_eq!(g[(r, c)], 0.0);
                }
            }
        }
    }
}

#[test]
fn two_grid_operator_matches_dense_oracle() {
    let cfg = MgConfig::default();
    for smoother in [SmootherKind::BlockJacobi, SmootherKind::AsmStar, SmootherKind::PointJacobi] {
        for degree in [1, 2] {
            let levels = hierarchy(Family::RadauIIA, 2, degree, 2, smoother);
            let oracle = two_grid_oracle(&levels[1], &levels[0], &cfg);
            let t = common::na_real(&coupled_cycle_operator(&levels, &cfg).unwrap());
            assert!((&t - &oracle).amax() < 1e-11, "{smoother} P{degree}");
            // two_grid_step applied to an error with zero rhs gives T e
            let mut rng = common::rng(41);
            let e = common::random_vec(&mut rng, t.nrows());
            let te = two_grid_step(&levels[1], &levels[0], &cfg, &e, &vec![0.0; e.len()]).unwrap();
            let want = &oracle * DVector::from_column_slice(&e);
            assert!(te.iter().zip(want.iter()).all(|(a, b)| (a - b).abs() < 1e-11));
        }
    }
}

#[test]
fn exact_solution_is_a_fixed_point_and_zero_rhs_gives_zero() {
    let mut rng = common::rng(42);
    let cfg = MgConfig::default();
    for smoother in [SmootherKind::BlockJacobi, SmootherKind::AsmStar] {
        let levels = hierarchy(Family::RadauIIA, 3, 2, 3, smoother);
        let top = levels[2].sys.dim();
        let xs = common::random_vec(&mut rng, top);
        let b = levels[2].sys.apply(&xs).unwrap();
        let x1 = cycle(&levels, &cfg, 2, &xs, &b).unwrap();
        assert!(x1.iter().zip(&xs).all(|(a, b)| (a - b).abs() < 1e-12));
        let zero = vec![0.0; top];
        assert!(cycle(&levels, &cfg, 2, &zero, &zero).unwrap().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn cycle_is_affine_in_its_arguments() {
    let mut rng = common::rng(43);
    let cfg = MgConfig::default();
    let levels = hierarchy(Family::GaussLegendre, 2, 1, 3, SmootherKind::AsmStar);
    let dim = levels[2].sys.dim();
    let (x, y) = (common::random_vec(&mut rng, dim), common::random_vec(&mut rng, dim));
    let (b, c) = (common::random_vec(&mut rng, dim), common::random_vec(&mut rng, dim));
    let comb = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| 0.3 * p + 0.7 * q).collect::<Vec<_>>();
    let lhs = cycle(&levels, &cfg, 2, &comb(&x, &y), &comb(&b, &c)).unwrap();
    let rhs = comb(&cycle(&levels, &cfg, 2, &x, &b).unwrap(), &cycle(&levels, &cfg, 2, &y, &c).unwrap());
    assert!(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn cycle_rejects_bad_inputs() {
    let cfg = MgConfig::default();
    let levels = hierarchy(Family::RadauIIA, 1, 1, 2, SmootherKind::BlockJacobi);
    assert!(cycle(&levels, &cfg, 1, &[0.0; 3], &[0.0; 3]).is_err());
    assert!(cycle(&levels, &cfg, 5, &[], &[]).is_err());
}

/// Stationary multigrid converges, and its asymptotic contraction factor
/// does not exceed the spectral radius of the dense error propagator.
#[test]
fn stationary_iteration_contracts_at_the_spectral_radius() {
    let cfg = MgConfig::default();
    let mut rng = common::rng(44);
    for (family, s, smoother) in [
        (Family::RadauIIA, 2, SmootherKind::AsmStar),
        (Family::GaussLegendre, 2, SmootherKind::BlockJacobi),
        (Family::RadauIIA, 3, SmootherKind::BlockJacobi),
    ] {
        let levels = hierarchy(family, s, 1, 3, smoother);
        let rho = spectral_radius(&coupled_cycle_operator(&levels, &cfg).unwrap()).unwrap();
        assert!(rho < 1.0);
        let b = common::random_vec(&mut rng, levels[2].sys.dim());
        let (x, hist) = mg_stationary_solve(&levels, &cfg, &b, 1e-10, 50).unwrap();
        assert!(*hist.last().unwrap() <= 1e-10, "{family}({s}) {smoother}: {hist:?}");
        assert!(hist.len() <= 51);
        let tail = &hist[hist.len().saturating_sub(4)..];
        let rate = (tail[tail.len() - 1] / tail[0]).powf(1.0 / (tail.len() - 1) as f64);
        assert!(rate <= rho + 0.05, "{family}({s}) {smoother}: rate {rate} vs rho {rho}");
        let r = levels[2].sys.apply(&x).unwrap();
        let res = r.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res / bn <= 1e-10);
    }
}

#[test]
fn single_level_gmres_is_a_direct_solve() {
    let levels = hierarchy(Family::RadauIIA, 2, 1, 1, SmootherKind::BlockJacobi);
    let mut rng = common::rng(45);
    let b = common::random_vec(&mut rng, levels[0].sys.dim());
    let (x, stats, tel) = mg_preconditioned_gmres(&levels, &MgConfig::default(), &b, &GmresOptions::default()).unwrap();
    assert_eq!(stats.iterations, 1);
    assert!(tel.converged);
    let want = dense_b(&levels[0]).lu().solve(&DVector::from_column_slice(&b)).unwrap();
    assert!(x.iter().zip(want.iter()).all(|(a, c)| (a - c).abs() < 1e-10));
}

#[test]
fn preconditioned_gmres_converges_and_reports_telemetry() {
    let cfg = MgConfig::default();
    let levels = hierarchy(Family::RadauIIA, 3, 2, 3, SmootherKind::AsmStar);
    let mut rng = common::rng(46);
    let b = common::random_vec(&mut rng, levels[2].sys.dim());
    let opts = GmresOptions { tol: 1e-10, ..GmresOptions::default() };
    let (x, stats, tel) = mg_preconditioned_gmres(&levels, &cfg, &b, &opts).unwrap();
    assert!(tel.converged && tel.true_residual <= 1e-10);
    assert!(stats.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(tel.iterations < 30);
    assert_eq!(tel.sweeps_per_level.len(), 3);
    assert_eq!(tel.sweeps_per_level[0], 0);
    // the preconditioner runs once per Arnoldi step plus residual checks
    assert!(tel.sweeps_per_level[2] >= 4 * tel.iterations);
    assert_eq!(tel.sweeps_per_level[1], tel.sweeps_per_level[2]);
    let r = levels[2].sys.apply(&x).unwrap();
    let res = r.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
    assert!(res / b.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-10);
}

/// A W-cycle contracts at least as well as a V-cycle on three levels.
#[test]
fn w_cycle_is_no_worse_than_v_cycle() {
    let levels = hierarchy(Family::GaussLegendre, 2, 1, 3, SmootherKind::AsmStar);
    let v = MgConfig::default();
    let w = MgConfig { gamma: 2, ..v };
    let rho_v = spectral_radius(&coupled_cycle_operator(&levels, &v).unwrap()).unwrap();
    let rho_w = spectral_radius(&coupled_cycle_operator(&levels, &w).unwrap()).unwrap();
    assert!(rho_w <= rho_v + 1e-12, "W {rho_w} vs V {rho_v}");
}
