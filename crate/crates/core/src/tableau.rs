//! Collocation Runge–Kutta tableaux and the eigendecomposition of their
//! coefficient matrix.
//!
//! RadauIIA and Gauss–Legendre methods are built from their quadrature nodes:
//! `a_ij = ∫₀^{c_i} ℓ_j(t) dt` for the Lagrange basis `ℓ_j` on the nodes. The
//! eigendecomposition `A = X Λ X⁻¹` is what lets a stage-coupled operator be
//! split into single-stage problems with complex time steps `λ_i Δt`.

use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::eigen::{dense_eigenvalues, sort_by_im_re};
use crate::linalg::{ComplexDenseMatrix, DenseMatrix};

pub const MAX_STAGES: usize = 6;

/// Eigenvectors with a 2-norm condition number beyond this are treated as a
/// defective coefficient matrix.
const DEFECTIVE_COND: f64 = 1e12;

const NEWTON_POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    RadauIIA,
    GaussLegendre,
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RadauIIA => "RadauIIA",
            Family::GaussLegendre => "GaussLegendre",
            Family::Custom => "Custom",
        }
    }

    /// Builds the `s`-stage member of a collocation family.
    pub fn tableau(self, s: usize) -> Result<ButcherTableau> {
        match self {
            Family::RadauIIA => make_radau_iia(s),
            Family::GaussLegendre => make_gauss_legendre(s),
            Family::Custom => Err(Error::InvalidArgument(
                "custom tableaux must be given explicitly".into(),
            )),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "radauiia" | "radau" => Ok(Family::RadauIIA),
            "gausslegendre" | "gauss" | "gl" => Ok(Family::GaussLegendre),
            _ => Err(Error::Parse(format!("unknown tableau family '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub family: Family,
    pub a: DenseMatrix<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    /// Pass-through constructor for arbitrary coefficients.
    pub fn custom(a: DenseMatrix<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 || !a.is_square() || a.nrows() != s || c.len() != s {
            return Err(Error::DimensionMismatch(format!(
                "tableau with A {}x{}, b {}, c {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self {
            family: Family::Custom,
            a,
            b,
            c,
        })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

fn check_stage_count(s: usize) -> Result<()> {
    if (1..=MAX_STAGES).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "stage count {s} outside supported range 1..={MAX_STAGES}"
        )))
    }
}

/// `s`-stage RadauIIA: right Radau nodes on (0, 1], stiffly accurate.
pub fn make_radau_iia(s: usize) -> Result<ButcherTableau> {
    check_stage_count(s)?;
    // right Radau nodes are the roots of P̃_s - P̃_{s-1}
    let ps = shifted_legendre(s);
    let ps1 = shifted_legendre(s - 1);
    let poly: Vec<f64> = (0..=s)
        .map(|k| ps[k] - ps1.get(k).copied().unwrap_or(0.0))
        .collect();
    let mut c = real_roots(&poly)?;
    let last = c.len() - 1;
    c[last] = 1.0;
    if c.windows(2).any(|w| w[0] >= w[1]) || c[0] <= 0.0 {
        return Err(Error::InvalidArgument(format!("Radau nodes for s={s} not increasing in (0,1]")));
    }
    let a = collocation_matrix(&c)?;
    let b = a.row(s - 1).to_vec();
    Ok(ButcherTableau {
        family: Family::RadauIIA,
        a,
        b,
        c,
    })
}

/// `s`-stage Gauss–Legendre: nodes are the roots of the shifted Legendre
/// polynomial, weights the Gauss weights.
pub fn make_gauss_legendre(s: usize) -> Result<ButcherTableau> {
    check_stage_count(s)?;
    let c = real_roots(&shifted_legendre(s))?;
    if c.windows(2).any(|w| w[0] >= w[1]) || c[0] <= 0.0 || c[s - 1] >= 1.0 {
        return Err(Error::InvalidArgument(format!("Gauss nodes for s={s} not increasing in (0,1)")));
    }
    let a = collocation_matrix(&c)?;
    let b = (0..s)
        .map(|j| integrate_poly(&lagrange_basis(&c, j), 1.0))
        .collect();
    Ok(ButcherTableau {
        family: Family::GaussLegendre,
        a,
        b,
        c,
    })
}

/// `a_ij = ∫₀^{c_i} ℓ_j(t) dt`.
pub fn collocation_matrix(c: &[f64]) -> Result<DenseMatrix<f64>> {
    let s = c.len();
    if s == 0 {
        return Err(Error::InvalidArgument("empty node vector".into()));
    }
    if let Some(&bad) = c.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidArgument(format!("node {bad} outside (0, 1]")));
    }
    for i in 0..s {
        for j in i + 1..s {
            if c[i] == c[j] {
                return Err(Error::InvalidArgument(format!("duplicate node {}", c[i])));
            }
        }
    }
    let basis: Vec<Vec<f64>> = (0..s).map(|j| lagrange_basis(c, j)).collect();
    Ok(DenseMatrix::from_fn(s, s, |i, j| integrate_poly(&basis[j], c[i])))
}

/// Monomial coefficients (ascending degree) of the `j`-th Lagrange basis
/// polynomial on `nodes`.
fn lagrange_basis(nodes: &[f64], j: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    for (k, &ck) in nodes.iter().enumerate() {
        if k == j {
            continue;
        }
        let denom = nodes[j] - ck;
        let mut next = vec![0.0; poly.len() + 1];
        for (m, &p) in poly.iter().enumerate() {
            next[m + 1] += p / denom;
            next[m] -= p * ck / denom;
        }
        poly = next;
    }
    poly
}

fn integrate_poly(coeffs: &[f64], upper: f64) -> f64 {
    // Horner on ∫₀^x Σ a_m t^m = Σ a_m x^{m+1}/(m+1)
    coeffs
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (m, &a)| acc * upper + a / (m as f64 + 1.0))
        * upper
}

/// Coefficients of `P_n(2x - 1)`, ascending degree.
fn shifted_legendre(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let sign = if (n + k) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, k) * binomial(n + k, k)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Real roots of a polynomial with simple real roots, ascending.
fn real_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let mut roots: Vec<f64> = if deg == 1 {
        vec![-coeffs[0] / lead]
    } else {
        let companion = DenseMatrix::from_fn(deg, deg, |i, j| {
            if i == 0 {
                -coeffs[deg - 1 - j] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let ev = dense_eigenvalues(&companion)?;
        if let Some(z) = ev.iter().find(|z| z.im.abs() > 1e-8) {
            return Err(Error::InvalidArgument(format!("polynomial has complex root {z}")));
        }
        ev.iter().map(|z| z.re).collect()
    };
    for r in &mut roots {
        for _ in 0..NEWTON_POLISH_STEPS {
            let (p, dp) = horner(coeffs, *r);
            if dp != 0.0 {
                *r -= p / dp;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// `A = X diag(λ) X⁻¹` with eigenvalues ordered by (Im, Re) and unit-norm
/// eigenvector columns. Eigenvectors of conjugate eigenvalue pairs are exact
/// conjugates of each other and eigenvectors of real eigenvalues are real.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub lambdas: Vec<Complex64>,
    pub x: ComplexDenseMatrix,
    pub xinv: ComplexDenseMatrix,
    /// 2-norm condition number of `x`.
    pub cond2: f64,
}

impl SpectralDecomposition {
    pub fn stages(&self) -> usize {
        self.lambdas.len()
    }

    /// `X diag(λ) X⁻¹`.
    pub fn reconstruct(&self) -> ComplexDenseMatrix {
        let s = self.stages();
        let xl = ComplexDenseMatrix::from_fn(s, s, |i, j| self.x[(i, j)] * self.lambdas[j]);
        xl.matmul(&self.xinv).expect("square factors")
    }
}

pub fn eig_decompose(t: &ButcherTableau) -> Result<SpectralDecomposition> {
    let a = &t.a;
    let s = a.nrows();
    let mut lambdas = dense_eigenvalues(a)?;
    sort_by_im_re(&mut lambdas);

    let ac = a.to_complex();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut cols: Vec<Option<Vec<Complex64>>> = vec![None; s];
    for (i, &lam) in lambdas.iter().enumerate() {
        if lam.im >= 0.0 {
            let v = inverse_iteration(&ac, lam, scale)?;
            let resid = ac
                .matvec(&v)?
                .iter()
                .zip(&v)
                .map(|(av, vi)| (av - lam * vi).norm())
                .fold(0.0, f64::max);
            if resid > 1e-8 * scale {
                return Err(Error::Defective(format!(
                    "eigenvector residual {resid:.3e} for eigenvalue {lam}"
                )));
            }
            cols[i] = Some(v);
        }
    }
    for i in 0..s {
        if cols[i].is_some() {
            continue;
        }
        let target = lambdas[i].conj();
        let partner = (0..s)
            .filter(|&j| lambdas[j].im > 0.0)
            .min_by(|&p, &q| {
                (lambdas[p] - target)
                    .norm()
                    .total_cmp(&(lambdas[q] - target).norm())
            })
            .ok_or_else(|| Error::Defective(format!("no conjugate partner for {}", lambdas[i])))?;
        let v: Vec<Complex64> = cols[partner].as_ref().unwrap().iter().map(|z| z.conj()).collect();
        cols[i] = Some(v);
    }
    let cols: Vec<Vec<Complex64>> = cols.into_iter().map(Option::unwrap).collect();
    let x = ComplexDenseMatrix::from_columns(s, &cols)?;
    let xinv = x
        .lu()
        .map_err(|e| Error::Defective(format!("eigenvector matrix not invertible: {e}")))?
        .inverse();
    let cond2 = condition_number(&x)?;
    if !(cond2.is_finite()) || cond2 > DEFECTIVE_COND {
        return Err(Error::Defective(format!("eigenvector condition number {cond2:.3e}")));
    }
    Ok(SpectralDecomposition {
        lambdas,
        x,
        xinv,
        cond2,
    })
}

fn inverse_iteration(a: &ComplexDenseMatrix, lam: Complex64, scale: f64) -> Result<Vec<Complex64>> {
    let s = a.nrows();
    let sigma = lam + Complex64::new(1e-10 * scale, 0.0);
    let shifted = ComplexDenseMatrix::from_fn(s, s, |i, j| {
        if i == j {
            a[(i, j)] - sigma
        } else {
            a[(i, j)]
        }
    });
    let lu = shifted.lu()?;
    let mut v: Vec<Complex64> = (0..s).map(|k| Complex64::new(1.0 + 0.1 * k as f64, 0.0)).collect();
    for _ in 0..3 {
        v = lu.solve(&v)?;
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= nrm);
    }
    // fix the phase so the largest component is real and positive
    let kmax = (0..s)
        .max_by(|&p, &q| v[p].norm().total_cmp(&v[q].norm()))
        .unwrap_or(0);
    let phase = v[kmax].conj() / v[kmax].norm();
    v.iter_mut().for_each(|z| *z *= phase);
    if lam.im == 0.0 {
        v.iter_mut().for_each(|z| z.im = 0.0);
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= nrm);
    }
    Ok(v)
}

/// `σ_max / σ_min` from the eigenvalues of `X^H X`.
fn condition_number(x: &ComplexDenseMatrix) -> Result<f64> {
    let gram = x.conj_transpose().matmul(x)?;
    let ev = dense_eigenvalues(&gram)?;
    let max = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let min = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((max / min).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub family: Family,
    pub s: usize,
    pub lambda: Complex64,
    pub cond2: f64,
}

/// One row per eigenvalue for each stage count in `s_range`.
pub fn spectrum_report(family: Family, s_range: RangeInclusive<usize>) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::new();
    for s in s_range {
        let t = family.tableau(s)?;
        let dec = eig_decompose(&t)?;
        rows.extend(dec.lambdas.iter().map(|&lambda| SpectrumRow {
            family,
            s,
            lambda,
            cond2: dec.cond2,
        }));
    }
    Ok(rows)
}

pub const SPECTRUM_CSV_HEADER: &str = "family,s,re,im,cond2";

pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SPECTRUM_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e}",
            r.family, r.s, r.lambda.re, r.lambda.im, r.cond2
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_count_range_is_enforced() {
        for s in [0, 7] {
            assert!(make_radau_iia(s).is_err());
            assert!(make_gauss_legendre(s).is_err());
        }
    }

    #[test]
    fn collocation_rejects_bad_nodes() {
        assert!(collocation_matrix(&[0.5, 0.5]).is_err());
        assert!(collocation_matrix(&[0.0, 1.0]).is_err());
        assert!(collocation_matrix(&[0.5, 1.5]).is_err());
        assert!(collocation_matrix(&[]).is_err());
    }

    #[test]
    fn collocation_trivial_cases() {
        assert_eq!(collocation_matrix(&[1.0]).unwrap()[(0, 0)], 1.0);
        assert_eq!(collocation_matrix(&[0.5]).unwrap()[(0, 0)], 0.5);
    }

    #[test]
    fn gauss_one_is_midpoint() {
        let t = make_gauss_legendre(1).unwrap();
        assert!((t.a[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((t.b[0] - 1.0).abs() < 1e-15);
        assert!((t.c[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn radau_one_is_backward_euler() {
        let t = make_radau_iia(1).unwrap();
        assert_eq!(t.c, vec![1.0]);
        assert!((t.a[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((t.b[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn family_parsing() {
        assert_eq!("radauiia".parse::<Family>().unwrap(), Family::RadauIIA);
        assert_eq!("gauss-legendre".parse::<Family>().unwrap(), Family::GaussLegendre);
        assert!("dirk".parse::<Family>().is_err());
    }

    #[test]
    fn defective_matrix_is_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let t = ButcherTableau::custom(a, vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(eig_decompose(&t).is_err());
    }
}
