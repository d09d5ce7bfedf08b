//! Scalars the matrix code is generic over: plain complex numbers and
//! complex forward-mode dual numbers.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub use num_complex::Complex64 as C64;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn from_c64(z: C64) -> Self;
    /// Primal value.
    fn value(self) -> C64;
    fn scale(self, c: C64) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_exact_zero(&self) -> bool;
    /// Size used for trimming and norms; includes any tangent part.
    fn size(self) -> f64;

    fn zero() -> Self {
        Self::from_c64(C64::new(0.0, 0.0))
    }
    fn one() -> Self {
        Self::from_c64(C64::new(1.0, 0.0))
    }
    fn from_f64(x: f64) -> Self {
        Self::from_c64(C64::new(x, 0.0))
    }
}

impl Scalar for C64 {
    #[inline]
    fn from_c64(z: C64) -> Self {
        z
    }
    #[inline]
    fn value(self) -> C64 {
        self
    }
    #[inline]
    fn scale(self, c: C64) -> Self {
        self * c
    }
    fn exp(self) -> Self {
        C64::exp(self)
    }
    fn ln(self) -> Self {
        C64::ln(self)
    }
    fn sqrt(self) -> Self {
        C64::sqrt(self)
    }
    #[inline]
    fn is_exact_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    #[inline]
    fn size(self) -> f64 {
        self.norm()
    }
}

/// `re + eps * ε` with `ε² = 0`. All operations are holomorphic, so the
/// tangent is the complex derivative along the seeded direction.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub re: C64,
    pub eps: C64,
}

impl Dual {
    pub const fn new(re: C64, eps: C64) -> Self {
        Dual { re, eps }
    }
    pub fn variable(re: C64) -> Self {
        Dual { re, eps: C64::new(1.0, 0.0) }
    }
    pub fn constant(re: C64) -> Self {
        Dual { re, eps: C64::new(0.0, 0.0) }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let inv = C64::new(1.0, 0.0) / o.re;
        let q = self.re * inv;
        Dual::new(q, (self.eps - q * o.eps) * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        self.re += o.re;
        self.eps += o.eps;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Dual) {
        self.re -= o.re;
        self.eps -= o.eps;
    }
}

impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}

impl Scalar for Dual {
    #[inline]
    fn from_c64(z: C64) -> Self {
        Dual::constant(z)
    }
    #[inline]
    fn value(self) -> C64 {
        self.re
    }
    #[inline]
    fn scale(self, c: C64) -> Self {
        Dual::new(self.re * c, self.eps * c)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.eps)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }
    #[inline]
    fn is_exact_zero(&self) -> bool {
        self.re.is_exact_zero() && self.eps.is_exact_zero()
    }
    #[inline]
    fn size(self) -> f64 {
        self.re.norm() + self.eps.norm()
    }
}

/// Value and gradient of `f` at `z`, one forward pass per coordinate.
pub fn gradient<E>(f: impl Fn(&[Dual]) -> Result<Dual, E>, z: &[C64]) -> Result<(C64, alloc::vec::Vec<C64>), E> {
    let mut seeded: alloc::vec::Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
    let mut grad = alloc::vec::Vec::with_capacity(z.len());
    let mut value = C64::new(0.0, 0.0);
    for i in 0..z.len() {
        seeded[i].eps = C64::new(1.0, 0.0);
        let out = f(&seeded)?;
        seeded[i].eps = C64::new(0.0, 0.0);
        value = out.re;
        grad.push(out.eps);
    }
    if z.is_empty() {
        value = f(&seeded)?.re;
    }
    Ok((value, grad))
}

/// Seeds `z + ε v`.
pub fn seed_direction(z: &[C64], v: &[C64]) -> alloc::vec::Vec<Dual> {
    z.iter().zip(v).map(|(&a, &b)| Dual::new(a, b)).collect()
}
