//! Forward-mode automatic differentiation.
//!
//! Every geometric quantity in this crate is evaluated through the [`Scalar`]
//! trait, so the same code path runs on plain `f64`, on first-order duals
//! ([`Dual64`]) and on nested duals (`Dual<Dual64>`) when a second derivative
//! is needed, e.g. the derivative of Christoffel symbols that are themselves
//! obtained by differentiating the metric.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type the geometry is generic over.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;

    /// The primal (non-infinitesimal) value.
    fn value(&self) -> f64;

    fn exp(self) -> Self;

    fn powi(self, k: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline]
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

pub type Dual64 = Dual<f64>;

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, eps: S) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: S) -> Self {
        Self { re, eps: S::zero() }
    }

    /// Independent variable: derivative seed 1.
    pub fn variable(re: S) -> Self {
        Self { re, eps: S::one() }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = rhs.re.recip();
        let re = self.re * inv;
        Self::new(re, (self.eps - re * rhs.eps) * inv)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_f64(v: f64) -> Self {
        Self::constant(S::from_f64(v))
    }

    fn value(&self) -> f64 {
        self.re.value()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Self::new(e, e * self.eps)
    }

    fn powi(self, k: i32) -> Self {
        match k {
            0 => Self::one(),
            _ => {
                let lower = self.re.powi(k - 1);
                Self::new(lower * self.re, S::from_f64(k as f64) * lower * self.eps)
            }
        }
    }
}

/// Lifts a slice of points into duals seeded along axis `axis`.
pub fn seed<S: Scalar>(x: &[S], axis: usize) -> Vec<Dual<S>> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if i == axis {
                Dual::variable(v)
            } else {
                Dual::constant(v)
            }
        })
        .collect()
}

/// Derivative of a scalar function of one variable.
pub fn derivative<F>(f: F, x: f64) -> f64
where
    F: Fn(Dual64) -> Dual64,
{
    f(Dual::variable(x)).eps
}
