//! Dense square matrices over `gl_T`, roots of unity and the cyclic
//! automorphism `σ(E_ij) = ω^{j-i} E_ij` with its grading.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{C64, Scalar};

/// Row-major `dim × dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<S = C64> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix { dim, data: vec![S::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = S::one();
        }
        m
    }

    /// Matrix unit `E_ij` (0-based).
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.data[i * dim + j] = S::one();
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        SquareMatrix { dim, data }
    }

    pub fn from_row_major(dim: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn diagonal(entries: &[S]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] += v;
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn scale(&self, s: S) -> Self {
        SquareMatrix { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_c(&self, c: C64) -> Self {
        SquareMatrix { dim: self.dim, data: self.data.iter().map(|&x| x.scale(c)).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> S {
        let mut t = S::zero();
        for i in 0..self.dim {
            t += self.data[i * self.dim + i];
        }
        t
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> S {
        let n = self.dim;
        let mut t = S::zero();
        for i in 0..n {
            for k in 0..n {
                t += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        t
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, other: &Self, c: S) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * c;
        }
    }

    pub fn add_scaled_c(&mut self, other: &Self, c: C64) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b.scale(c);
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_exact_zero())
    }

    /// Largest entry size (primal plus tangent parts for duals).
    pub fn max_size(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| f64::max(m, x.size()))
    }

    /// Primal-value projection.
    pub fn values(&self) -> SquareMatrix<C64> {
        SquareMatrix { dim: self.dim, data: self.data.iter().map(|x| x.value()).collect() }
    }

    pub fn lift(m: &SquareMatrix<C64>) -> Self {
        SquareMatrix { dim: m.dim, data: m.data.iter().map(|&z| S::from_c64(z)).collect() }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> SquareMatrix<T> {
        SquareMatrix { dim: self.dim, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Gauss-Jordan inverse with partial pivoting on primal magnitudes.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.max_size().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let mut piv = col;
            let mut best = 0.0;
            for r in col..n {
                let v = a[r * n + col].value().norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= 1e-14 * scale {
                return Err(Error::SingularMatrix);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                    inv.swap(piv * n + j, col * n + j);
                }
            }
            let d = S::one() / a[col * n + col];
            for j in 0..n {
                a[col * n + j] *= d;
                inv[col * n + j] *= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f.is_exact_zero() {
                    continue;
                }
                for j in 0..n {
                    let ac = a[col * n + j];
                    let ic = inv[col * n + j];
                    a[r * n + j] -= f * ac;
                    inv[r * n + j] -= f * ic;
                }
            }
        }
        Ok(SquareMatrix { dim: n, data: inv })
    }

    /// Determinant by LU elimination with partial pivoting.
    pub fn det(&self) -> S {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = S::one();
        for col in 0..n {
            let mut piv = col;
            let mut best = 0.0;
            for r in col..n {
                let v = a[r * n + col].value().norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return S::zero();
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        det
    }
}

impl SquareMatrix<C64> {
    /// Max-entry distance between primal values.
    pub fn dist(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| f64::max(m, (a - b).norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.max_size()
    }

    /// Infinity-norm condition number; infinite for singular input.
    pub fn condition(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => inf_norm(self) * inf_norm(&inv),
            Err(_) => f64::INFINITY,
        }
    }
}

fn inf_norm(m: &SquareMatrix<C64>) -> f64 {
    let n = m.dim;
    (0..n).map(|i| (0..n).map(|j| m.get(i, j).norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl<S: Scalar> Add for &SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn add(self, o: &SquareMatrix<S>) -> SquareMatrix<S> {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        SquareMatrix { dim: self.dim, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<S: Scalar> Sub for &SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn sub(self, o: &SquareMatrix<S>) -> SquareMatrix<S> {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        SquareMatrix { dim: self.dim, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<S: Scalar> Neg for &SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn neg(self) -> SquareMatrix<S> {
        SquareMatrix { dim: self.dim, data: self.data.iter().map(|&a| -a).collect() }
    }
}

impl<S: Scalar> Mul for &SquareMatrix<S> {
    type Output = SquareMatrix<S>;
    fn mul(self, o: &SquareMatrix<S>) -> SquareMatrix<S> {
        assert_eq!(self.dim, o.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * o.data[k * n + j];
                }
            }
        }
        SquareMatrix { dim: n, data: out }
    }
}

/// The primitive root `ω = exp(2πi/T)` with its power table.
#[derive(Clone, Debug, PartialEq)]
pub struct RootOfUnity {
    order: usize,
    powers: Vec<C64>,
}

impl RootOfUnity {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let powers = (0..order)
            .map(|k| {
                let (s, c) = libm::sincos(2.0 * PI * k as f64 / order as f64);
                C64::new(c, s)
            })
            .collect();
        Ok(RootOfUnity { order, powers })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn omega(&self) -> C64 {
        self.pow(1)
    }

    /// `ω^k` for any integer `k`.
    #[inline]
    pub fn pow(&self, k: i64) -> C64 {
        self.powers[k.rem_euclid(self.order as i64) as usize]
    }

    /// `(σ^k X)_ij = ω^{k(j-i)} X_ij`.
    pub fn sigma_pow<S: Scalar>(&self, x: &SquareMatrix<S>, k: i64) -> SquareMatrix<S> {
        SquareMatrix::from_fn(x.dim(), |i, j| x.get(i, j).scale(self.pow(k * (j as i64 - i as i64))))
    }

    pub fn sigma<S: Scalar>(&self, x: &SquareMatrix<S>) -> SquareMatrix<S> {
        self.sigma_pow(x, 1)
    }
}

/// Component of `x` in `g^(n)`, i.e. entries with `j - i ≡ n (mod T)`.
pub fn grade_component<S: Scalar>(x: &SquareMatrix<S>, n: i64) -> SquareMatrix<S> {
    let t = x.dim() as i64;
    SquareMatrix::from_fn(
        x.dim(),
        |i, j| {
            if (j as i64 - i as i64 - n).rem_euclid(t) == 0 { x.get(i, j) } else { S::zero() }
        },
    )
}

/// Largest entry of `x` lying outside `g^(n)`.
pub fn grade_defect(x: &SquareMatrix<C64>, n: i64) -> f64 {
    x.dist(&grade_component(x, n))
}

/// Builds a `T × T` complex matrix from row slices; convenience for tests and examples.
pub fn cmat(rows: &[&[C64]]) -> SquareMatrix<C64> {
    let n = rows.len();
    SquareMatrix::from_fn(n, |i, j| rows[i][j])
}
