use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use num_traits::{One, Zero};

/// Field scalar shared by the real production path and the complex
/// characteristic-stage path.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + 'static
{
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    /// Modulus.
    fn modulus(self) -> f64;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn scale(self, x: f64) -> Self {
        self * Self::from_real(x)
    }
    fn is_complex() -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn is_complex() -> bool {
        false
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        Complex64::new(self.re * x, self.im * x)
    }
    fn is_complex() -> bool {
        true
    }
}

/// Hermitian inner product `Σ conj(x_i) y_i`, summed in index order.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter()
        .fold(0.0, |acc, &v| {
            let m = v.modulus();
            acc + m * m
        })
        .sqrt()
}

pub fn norm_inf<T: Scalar>(x: &[T]) -> f64 {
    x.iter().fold(0.0f64, |acc, &v| acc.max(v.modulus()))
}

/// `y += alpha * x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
