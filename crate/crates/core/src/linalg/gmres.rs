//! Restarted, left-preconditioned GMRES.

use super::scalar::{axpy, dot, norm2, Scalar};
use crate::error::{ensure_dims, Result};

/// Arnoldi vectors whose norm falls below this (relative to the norm before
/// orthogonalization) signal an invariant subspace.
const BREAKDOWN_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct GmresOptions {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Krylov dimension before restart.
    pub restart: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            restart: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresStats {
    /// Arnoldi steps taken (operator applications excluding residual checks).
    pub iterations: usize,
    /// Preconditioned relative residual norms, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Unpreconditioned `‖b - A x‖ / ‖b‖` at exit.
    pub true_residual: f64,
}

impl GmresStats {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

/// Solves `A x = b` from a zero initial guess.
///
/// `apply_prec` applies `W⁻¹`; the Krylov space is built for `W⁻¹A` and
/// convergence requires both the preconditioned and the true relative
/// residual to be at most `opts.tol`.
pub fn gmres<T, Op, Prec>(
    mut apply_op: Op,
    mut apply_prec: Prec,
    b: &[T],
    opts: &GmresOptions,
) -> Result<(Vec<T>, GmresStats)>
where
    T: Scalar,
    Op: FnMut(&[T]) -> Result<Vec<T>>,
    Prec: FnMut(&[T]) -> Result<Vec<T>>,
{
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            x,
            GmresStats {
                iterations: 0,
                residual_history: vec![0.0],
                converged: true,
                true_residual: 0.0,
            },
        ));
    }
    let pb = apply_prec(b)?;
    ensure_dims!(pb.len() == n, "preconditioner returned length {} for length {}", pb.len(), n);
    let pbnorm = norm2(&pb);
    let restart = opts.restart.max(1);

    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut true_rel;

    loop {
        let ax = apply_op(&x)?;
        ensure_dims!(ax.len() == n, "operator returned length {} for length {}", ax.len(), n);
        let raw: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        true_rel = norm2(&raw) / bnorm;
        let mut r = apply_prec(&raw)?;
        let beta = norm2(&r);
        let rel = if pbnorm > 0.0 { beta / pbnorm } else { true_rel };
        if history.is_empty() {
            history.push(rel);
        }
        if rel <= opts.tol && true_rel <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter || beta == 0.0 {
            break;
        }

        let inv_beta = 1.0 / beta;
        r.iter_mut().for_each(|v| *v = v.scale(inv_beta));
        let mut basis: Vec<Vec<T>> = vec![r];
        // Hessenberg columns, each of length j + 2
        let mut hcols: Vec<Vec<T>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<T> = Vec::with_capacity(restart);
        let mut g = vec![T::from_real(beta)];

        for j in 0..restart {
            if iterations >= opts.max_iter {
                break;
            }
            iterations += 1;
            let av = apply_op(&basis[j])?;
            let mut w = apply_prec(&av)?;
            let wnorm0 = norm2(&w);
            let mut h = vec![T::zero(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[i] = hij;
                axpy(-hij, v, &mut w);
            }
            let hnext = norm2(&w);
            h[j + 1] = T::from_real(hnext);

            for i in 0..j {
                let (a, bb) = (h[i], h[i + 1]);
                h[i] = a.scale(cs[i]) + sn[i] * bb;
                h[i + 1] = -(sn[i].conj() * a) + bb.scale(cs[i]);
            }
            let (c, s) = givens(h[j], h[j + 1]);
            h[j] = h[j].scale(c) + s * h[j + 1];
            h[j + 1] = T::zero();
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = gj.scale(c);
            g.push(-(s.conj() * gj));
            hcols.push(h);

            let rel = g[j + 1].modulus() / pbnorm;
            history.push(rel);

            let breakdown = hnext <= BREAKDOWN_TOLERANCE * wnorm0.max(f64::MIN_POSITIVE);
            if breakdown || rel <= opts.tol {
                break;
            }
            let inv = 1.0 / hnext;
            basis.push(w.iter().map(|v| v.scale(inv)).collect());
        }

        let k = hcols.len();
        if k == 0 {
            break;
        }
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for l in i + 1..k {
                acc -= hcols[l][i] * y[l];
            }
            y[i] = acc / hcols[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut x);
        }
    }

    Ok((
        x,
        GmresStats {
            iterations,
            residual_history: history,
            converged,
            true_residual: true_rel,
        },
    ))
}

fn givens<T: Scalar>(x: T, y: T) -> (f64, T) {
    let ax = x.modulus();
    let ay = y.modulus();
    if ay == 0.0 {
        return (1.0, T::zero());
    }
    if ax == 0.0 {
        return (0.0, T::one());
    }
    let r = ax.hypot(ay);
    (ax / r, x.scale(1.0 / ax) * y.conj().scale(1.0 / r))
}
