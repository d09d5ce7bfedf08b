use alloc::vec;
use alloc::vec::Vec;

use super::{PhaseState, cyclic_shift};
use crate::algebra::{RootOfUnity, SquareMatrix};
use crate::error::{Error, Result};
use crate::gaudin::GaudinCoefficients;
use crate::ratmat::RationalMatrix;
use crate::scalar::{C64, Scalar};

/// DST model: `K1 = x Xᵀ` on the orbit of `ζ`, constant `K0_0 = diag(c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DstState {
    pub x: Vec<C64>,
    pub big_x: Vec<C64>,
    pub c: Vec<C64>,
    pub zeta: C64,
}

impl DstState {
    pub fn new(x: Vec<C64>, big_x: Vec<C64>, c: Vec<C64>, zeta: C64) -> Result<Self> {
        let t = x.len();
        for n in [big_x.len(), c.len()] {
            if n != t {
                return Err(Error::DimensionMismatch { expected: t, found: n });
            }
        }
        if t < 2 {
            return Err(Error::InvalidOrder(t));
        }
        if zeta.norm() <= crate::ratmat::POLE_EPS {
            return Err(Error::InvalidConfig("zeta must be non-zero"));
        }
        Ok(DstState { x, big_x, c, zeta })
    }

    pub fn order(&self) -> usize {
        self.x.len()
    }

    /// `Tr K1 = Σ x_i X_i`.
    pub fn trace_k1(&self) -> C64 {
        self.x.iter().zip(&self.big_x).map(|(a, b)| a * b).sum()
    }
}

pub(super) fn outer<S: Scalar>(x: &[S], big_x: &[S]) -> SquareMatrix<S> {
    SquareMatrix::from_fn(x.len(), |i, j| x[i] * big_x[j])
}

pub(super) fn coefficients<S: Scalar>(s: &DstState, z: &[S]) -> GaudinCoefficients<S> {
    let t = s.order();
    let c: Vec<S> = s.c.iter().map(|&v| S::from_c64(v)).collect();
    GaudinCoefficients {
        a0_0: SquareMatrix::diagonal(&c),
        a0_1: SquareMatrix::zeros(t),
        a_r: vec![outer(&z[..t], &z[t..])],
        a_inf: cyclic_shift(t, |_| S::one()),
    }
}

/// `L = Σ c_i E_ii/λ + (1/T) Σ_k σ^k K1/(λ - ω^k ζ) + Σ E_{i,i+1}`.
pub fn dst_lax(s: &DstState) -> Result<RationalMatrix<C64>> {
    PhaseState::Dst(s.clone()).lax()
}

/// `(1/T) Σ_{k∈ks} Σ_j ω^{k(j-i)} x_j X_j` for each `i`.
pub(super) fn orbit_average(x: &[C64], big_x: &[C64], ks: core::ops::Range<i64>) -> Vec<C64> {
    let t = x.len();
    let root = RootOfUnity::new(t).expect("order checked at construction");
    (0..t)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for k in ks.clone() {
                for j in 0..t {
                    acc += root.pow(k * (j as i64 - i as i64)) * x[j] * big_x[j];
                }
            }
            acc / t as f64
        })
        .collect()
}

pub(super) fn printed_flow(s: &DstState, r: usize) -> Vec<C64> {
    let t = s.order();
    if r == 0 {
        return vec![C64::new(0.0, 0.0); 2 * t];
    }
    let avg = orbit_average(&s.x, &s.big_x, 1..t as i64);
    let mut v = Vec::with_capacity(2 * t);
    for i in 0..t {
        v.push(s.c[i] * s.x[i] + s.zeta * s.x[(i + 1) % t] + avg[i] * s.x[i]);
    }
    for i in 0..t {
        v.push(-s.c[i] * s.big_x[i] - s.zeta * s.big_x[(i + t - 1) % t] - avg[i] * s.big_x[i]);
    }
    v
}

pub(super) fn printed_h1(s: &DstState, r: usize) -> C64 {
    let t = s.order();
    if r == 0 {
        return s.c.iter().map(|c| c * c).sum::<C64>() * 0.5;
    }
    let root = RootOfUnity::new(t).expect("order checked at construction");
    let mut quartic = C64::new(0.0, 0.0);
    for i in 0..t {
        for j in 0..t {
            let mut w = C64::new(0.0, 0.0);
            for k in 0..t as i64 {
                w += root.pow(k * (j as i64 - i as i64));
            }
            quartic += w * s.x[i] * s.x[j] * s.big_x[i] * s.big_x[j];
        }
    }
    let mut h = quartic / (2 * t) as f64;
    for i in 0..t {
        h += s.c[i] * s.x[i] * s.big_x[i] + s.zeta * s.x[(i + 1) % t] * s.big_x[i];
    }
    h
}

/// `x_i = S_{i1}`, `X_i = (S^{-1})_{1i}`, so `Tr K1 = 1`.
pub fn dst_from_orbit(s: &SquareMatrix<C64>, c: Vec<C64>, zeta: C64) -> Result<DstState> {
    let t = s.dim();
    let inv = s.inverse()?;
    let x = (0..t).map(|i| s.get(i, 0)).collect();
    let big_x = (0..t).map(|i| inv.get(0, i)).collect();
    DstState::new(x, big_x, c, zeta)
}

/// `max |L(λ) - λ^{-1} D L̂(λ^T) D^{-1}|` with `D = diag(λ^{-1}, …, λ^{-T})`.
pub fn dst_gauge_residual(s: &DstState, lambda: C64) -> Result<f64> {
    let t = s.order();
    let b = s.zeta;
    let mu = lambda.powi(t as i32);
    let bt = b.powi(t as i32);
    let lhat = SquareMatrix::from_fn(t, |i, j| {
        let kk = s.x[i] * s.big_x[j];
        let mut v = b.powi(t as i32 + i as i32 - j as i32) * kk / (mu - bt);
        if i >= j {
            v += b.powi(i as i32 - j as i32) * kk;
        }
        if i == j {
            v += s.c[i];
        }
        if j == i + 1 {
            v += C64::new(1.0, 0.0);
        }
        if i == t - 1 && j == 0 {
            v += mu;
        }
        v
    });
    let d: Vec<C64> = (0..t).map(|i| lambda.powi(-(i as i32 + 1))).collect();
    let gauged = SquareMatrix::from_fn(t, |i, j| lhat.get(i, j) * d[i] / d[j] / lambda);
    Ok(dst_lax(s)?.eval(lambda)?.dist(&gauged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaudin::FlowId;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn printed_first_flow_example() {
        let s = DstState::new(
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0); 2],
            c(1.0, 0.0),
        )
        .unwrap();
        let v = PhaseState::Dst(s).printed_flow_field(FlowId::new(1, 1)).unwrap();
        let expect = [c(0.5, 0.0), c(1.0, 0.0), c(-0.5, 0.0), c(-1.0, 0.0)];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).norm() < 1e-14, "{v:?}");
        }
    }

    #[test]
    fn orbit_construction_normalises_trace() {
        let m = SquareMatrix::from_fn(3, |i, j| c(if i == j { 2.0 } else { 0.3 * (i + 2 * j) as f64 }, 0.1));
        let s = dst_from_orbit(&m, vec![c(0.1, 0.0); 3], c(0.7, 0.2)).unwrap();
        assert!((s.trace_k1() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gauge_form() {
        let m = SquareMatrix::from_fn(3, |i, j| c(if i == j { 1.5 } else { 0.2 * (i + j) as f64 }, 0.05 * j as f64));
        let s = dst_from_orbit(&m, vec![c(0.3, 0.0), c(-0.2, 0.1), c(0.5, 0.0)], c(0.9, 0.4)).unwrap();
        let r = dst_gauge_residual(&s, c(0.6, 0.75)).unwrap();
        assert!(r < 1e-12, "{r}");
    }
}
