use alloc::vec::Vec;

use crate::algebra::SquareMatrix;
use crate::error::{Error, Result};
use crate::scalar::{C64, Scalar};

/// Expansion point. At infinity the local parameter is `1/λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Finite(C64),
    Infinity,
}

impl Point {
    pub const ORIGIN: Point = Point::Finite(C64 { re: 0.0, im: 0.0 });

    pub fn same_as(&self, other: &Point) -> bool {
        match (self, other) {
            (Point::Infinity, Point::Infinity) => true,
            (Point::Finite(a), Point::Finite(b)) => (a - b).norm() <= super::POLE_EPS,
            _ => false,
        }
    }
}

/// Truncated matrix Laurent series `Σ_{n=low}^{trunc} c_n w^n` in the local
/// parameter `w` at `point`. Coefficients past `trunc` are unknown, not zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<S = C64> {
    dim: usize,
    point: Point,
    low: i32,
    coeffs: Vec<SquareMatrix<S>>,
}

impl<S: Scalar> LaurentSeries<S> {
    pub fn new(dim: usize, point: Point, low: i32, coeffs: Vec<SquareMatrix<S>>) -> Result<Self> {
        for c in &coeffs {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
            }
        }
        Ok(LaurentSeries { dim, point, low, coeffs })
    }

    /// Zero series known through order `trunc`.
    pub fn zero(dim: usize, point: Point, low: i32, trunc: i32) -> Self {
        let len = (trunc - low + 1).max(0) as usize;
        LaurentSeries { dim, point, low, coeffs: (0..len).map(|_| SquareMatrix::zeros(dim)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> Point {
        self.point
    }

    pub fn low(&self) -> i32 {
        self.low
    }

    /// Highest order that is known.
    pub fn trunc(&self) -> i32 {
        self.low + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[SquareMatrix<S>] {
        &self.coeffs
    }

    /// Coefficient of `w^n`; zero below `low`, an error above `trunc`.
    pub fn coeff(&self, n: i32) -> Result<SquareMatrix<S>> {
        if n > self.trunc() {
            return Err(Error::TruncationTooShort { needed: n, available: self.trunc() });
        }
        if n < self.low {
            return Ok(SquareMatrix::zeros(self.dim));
        }
        Ok(self.coeffs[(n - self.low) as usize].clone())
    }

    pub fn coeff_ref(&self, n: i32) -> Option<&SquareMatrix<S>> {
        if n < self.low || n > self.trunc() { None } else { Some(&self.coeffs[(n - self.low) as usize]) }
    }

    /// Mutable coefficient of `w^n`; panics outside the known range.
    pub fn coeff_mut(&mut self, n: i32) -> &mut SquareMatrix<S> {
        let i = (n - self.low) as usize;
        &mut self.coeffs[i]
    }

    /// Drops known coefficients above `trunc`.
    pub fn truncate(mut self, trunc: i32) -> Self {
        let len = (trunc - self.low + 1).max(0) as usize;
        self.coeffs.truncate(len);
        self
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if !self.point.same_as(&other.point) {
            return Err(Error::InvalidConfig("series expanded at different points"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let low = self.low.min(other.low);
        let trunc = self.trunc().min(other.trunc());
        let mut out = Self::zero(self.dim, self.point, low, trunc);
        for n in low..=trunc {
            let c = out.coeff_mut(n);
            if let Some(a) = self.coeff_ref(n) {
                *c = &*c + a;
            }
            if let Some(b) = other.coeff_ref(n) {
                *c = &*c + b;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: S) -> Self {
        LaurentSeries {
            dim: self.dim,
            point: self.point,
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-S::one()))
    }

    /// Product, known through the largest order both factors determine,
    /// optionally capped at `cap`.
    pub fn mul_capped(&self, other: &Self, cap: Option<i32>) -> Result<Self> {
        self.check_compatible(other)?;
        let low = self.low + other.low;
        let mut trunc = (self.trunc() + other.low).min(other.trunc() + self.low);
        if let Some(c) = cap {
            trunc = trunc.min(c);
        }
        let mut out = Self::zero(self.dim, self.point, low, trunc);
        for (i, a) in self.coeffs.iter().enumerate() {
            let na = self.low + i as i32;
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let n = na + other.low + j as i32;
                if n > trunc {
                    break;
                }
                let c = out.coeff_mut(n);
                *c = &*c + &(a * b);
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_capped(other, None)
    }

    /// `self^k` for `k ≥ 1`, known through `cap` (or as far as determined).
    pub fn pow(&self, k: usize, cap: Option<i32>) -> Result<Self> {
        if k == 0 {
            let mut id = Self::zero(self.dim, self.point, 0, cap.unwrap_or(0));
            if let Some(c) = id.coeffs.first_mut() {
                *c = SquareMatrix::identity(self.dim);
            }
            return Ok(id);
        }
        // L^j must be known through cap - (k-j)·low for L^k to reach cap.
        let mut acc = self.clone();
        for j in 2..=k {
            let cj = cap.map(|c| c - (k - j) as i32 * self.low);
            acc = acc.mul_capped(self, cj)?;
        }
        Ok(match cap {
            Some(c) => acc.truncate(c),
            None => acc,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Coefficient of `w^n` in `Tr(self · other)`.
    pub fn trace_product_coeff(&self, other: &Self, n: i32) -> Result<S> {
        self.check_compatible(other)?;
        let need_self = n - other.low;
        let need_other = n - self.low;
        if need_self > self.trunc() {
            return Err(Error::TruncationTooShort { needed: need_self, available: self.trunc() });
        }
        if need_other > other.trunc() {
            return Err(Error::TruncationTooShort { needed: need_other, available: other.trunc() });
        }
        let mut t = S::zero();
        for (i, a) in self.coeffs.iter().enumerate() {
            let m = n - (self.low + i as i32);
            if let Some(b) = other.coeff_ref(m) {
                t += a.trace_product(b);
            }
        }
        Ok(t)
    }

    /// Multiplies by the scalar series `Σ_k f[k] w^{f_low + k}` (assumed exact,
    /// e.g. a polynomial).
    pub fn mul_scalar_poly(&self, f_low: i32, f: &[C64]) -> Self {
        let low = self.low + f_low;
        let trunc = self.trunc() + f_low;
        let mut out = Self::zero(self.dim, self.point, low, trunc);
        for (k, &fk) in f.iter().enumerate() {
            if fk == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, a) in self.coeffs.iter().enumerate() {
                let n = self.low + i as i32 + f_low + k as i32;
                if n > trunc {
                    break;
                }
                out.coeff_mut(n).add_scaled_c(a, fk);
            }
        }
        out
    }

    pub fn values(&self) -> LaurentSeries<C64> {
        LaurentSeries {
            dim: self.dim,
            point: self.point,
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| c.values()).collect(),
        }
    }
}

impl LaurentSeries<C64> {
    /// Max coefficient distance over orders known in both series.
    pub fn dist(&self, other: &Self) -> f64 {
        let lo = self.low.min(other.low);
        let hi = self.trunc().min(other.trunc());
        let zero = SquareMatrix::zeros(self.dim);
        let mut d: f64 = 0.0;
        for n in lo..=hi {
            let a = self.coeff_ref(n).unwrap_or(&zero);
            let b = other.coeff_ref(n).unwrap_or(&zero);
            d = d.max(a.dist(b));
        }
        d
    }

    /// Largest coefficient entry.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// Binomial coefficient as a float.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}
