//! Dense nonsymmetric eigenvalues.
//!
//! Both paths reduce to upper Hessenberg form with Householder reflections and
//! then run shifted QR on the active window until every eigenvalue deflates:
//! the real path uses the Francis implicit double shift (so conjugate pairs
//! come out as exact conjugates), the complex path a Wilkinson single shift
//! applied with Givens rotations.

use num_complex::Complex64;

use super::dense::{ComplexDenseMatrix, DenseMatrix};
use super::scalar::Scalar;
use crate::error::{ensure_dims, Error, Result};

/// QR sweeps allowed per eigenvalue.
const SWEEPS_PER_EIGENVALUE: usize = 30;

/// Eigenvalues of a real or complex square matrix, sorted by (Re, Im).
pub fn dense_eigenvalues<T: Scalar>(a: &DenseMatrix<T>) -> Result<Vec<Complex64>> {
    let mut ev = if T::is_complex() {
        complex_eigenvalues(&a.map(|v| Complex64::new(v.re(), v.im())))?
    } else {
        real_eigenvalues(&a.map(|v| v.re()))?
    };
    sort_by_re_im(&mut ev);
    Ok(ev)
}

pub fn sort_by_re_im(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

pub fn sort_by_im_re(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: Scalar>(a: &DenseMatrix<T>) -> Result<f64> {
    Ok(dense_eigenvalues(a)?
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm())))
}

fn real_eigenvalues(a: &DenseMatrix<f64>) -> Result<Vec<Complex64>> {
    ensure_dims!(a.is_square(), "eigenvalues of non-square {}x{} matrix", a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    real_hessenberg(&mut h);
    real_hqr(&mut h)
}

/// Householder reduction to upper Hessenberg form, in place.
fn real_hessenberg(h: &mut DenseMatrix<f64>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    let high = n - 1;
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
        for i in m + 1..=high {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn real_hqr(h: &mut DenseMatrix<f64>) -> Result<Vec<Complex64>> {
    let nn = h.nrows();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z): (f64, f64, f64, f64, f64);
    let (mut w, mut x, mut y);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let max_sweeps = SWEEPS_PER_EIGENVALUE * nn.max(1);
    let mut sweeps = 0usize;
    let mut iter = 0usize;
    let mut n = nn as isize - 1;
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            sweeps += 1;
            if sweeps > max_sweeps {
                let found = nn - (n as usize + 1);
                return Err(Error::EigenNoConvergence {
                    sweeps: max_sweeps,
                    found,
                    n: nn,
                });
            }
            x = h[(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..=nu {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in l..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    Ok(d.into_iter().zip(e).map(|(re, im)| Complex64::new(re, im)).collect())
}

fn complex_eigenvalues(a: &ComplexDenseMatrix) -> Result<Vec<Complex64>> {
    ensure_dims!(a.is_square(), "eigenvalues of non-square {}x{} matrix", a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    complex_hessenberg(&mut h);
    complex_qr(&mut h)
}

fn complex_hessenberg(h: &mut ComplexDenseMatrix) {
    let n = h.nrows();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for m in 1..n.saturating_sub(1) {
        let scale: f64 = (m..n).map(|i| h[(i, m - 1)].l1_norm()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut sigma = 0.0;
        for i in m..n {
            v[i] = h[(i, m - 1)] / scale;
            sigma += v[i].norm_sqr();
        }
        let alpha = sigma.sqrt();
        // reflector I - 2 u u^H / (u^H u), u = x + e^{i arg x_m} |x| e_m
        let phase = if v[m].norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            v[m] / v[m].norm()
        };
        v[m] += phase * alpha;
        let unorm2: f64 = (m..n).map(|i| v[i].norm_sqr()).sum();
        if unorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / unorm2;
        // left: H <- (I - beta u u^H) H
        for j in (m - 1)..n {
            let f: Complex64 = (m..n).map(|i| v[i].conj() * h[(i, j)]).sum::<Complex64>() * beta;
            for i in m..n {
                let vi = v[i];
                h[(i, j)] -= f * vi;
            }
        }
        // right: H <- H (I - beta u u^H)
        for i in 0..n {
            let f: Complex64 = (m..n).map(|j| h[(i, j)] * v[j]).sum::<Complex64>() * beta;
            for j in m..n {
                let vj = v[j].conj();
                h[(i, j)] -= f * vj;
            }
        }
        for i in m + 1..n {
            h[(i, m - 1)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Single-shift QR with Wilkinson shifts on a complex Hessenberg matrix.
fn complex_qr(h: &mut ComplexDenseMatrix) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let eps = f64::EPSILON;
    let mut eig = vec![zero; n];
    let norm: f64 = h.as_slice().iter().map(|z| z.l1_norm()).sum();
    let max_sweeps = SWEEPS_PER_EIGENVALUE * n.max(1);
    let mut sweeps = 0usize;
    let mut iter = 0usize;
    let mut hi = n as isize - 1;
    while hi >= 0 {
        let hu = hi as usize;
        let mut l = hu;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].l1_norm() + h[(l, l)].l1_norm();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].l1_norm() < eps * s {
                h[(l, l - 1)] = zero;
                break;
            }
            l -= 1;
        }
        if l == hu {
            eig[hu] = h[(hu, hu)];
            hi -= 1;
            iter = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::EigenNoConvergence {
                sweeps: max_sweeps,
                found: n - (hu + 1),
                n,
            });
        }
        let shift = if iter > 0 && iter % 10 == 0 {
            // exceptional shift
            let t = h[(hu, hu - 1)].re.abs() + if hu >= 2 { h[(hu - 1, hu - 2)].re.abs() } else { 0.0 };
            h[(hu, hu)] + Complex64::new(t, 0.0)
        } else {
            wilkinson_shift(
                h[(hu - 1, hu - 1)],
                h[(hu - 1, hu)],
                h[(hu, hu - 1)],
                h[(hu, hu)],
            )
        };
        iter += 1;

        let mut x = h[(l, l)] - shift;
        let mut y = h[(l + 1, l)];
        for k in l..hu {
            let (c, s) = givens(x, y);
            let jstart = if k > l { k - 1 } else { l };
            for j in jstart..=hu {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            for i in l..=hu.min(k + 2) {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            if k + 1 < hu {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    Ok(eig)
}

/// Eigenvalue of `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}
