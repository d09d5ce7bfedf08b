use alloc::vec::Vec;

use super::{PhaseState, REAL_TOL, cyclic_shift, toda_lower};
use crate::algebra::SquareMatrix;
use crate::error::{Error, Result};
use crate::gaudin::{GaudinCoefficients, OrbitData};
use crate::ratmat::RationalMatrix;
use crate::scalar::{C64, Scalar};

/// Periodic Toda chain, real canonical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TodaState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl TodaState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        if q.len() < 2 {
            return Err(Error::InvalidOrder(q.len()));
        }
        Ok(TodaState { q, p })
    }

    pub fn order(&self) -> usize {
        self.q.len()
    }

    /// `a_i = exp(q_i - q_{i+1})`, cyclically.
    pub fn a(&self) -> Vec<f64> {
        let t = self.order();
        (0..t).map(|i| libm::exp(self.q[i] - self.q[(i + 1) % t])).collect()
    }
}

pub(super) fn coefficients<S: Scalar>(z: &[S]) -> GaudinCoefficients<S> {
    let t = z.len() / 2;
    GaudinCoefficients {
        a0_0: SquareMatrix::diagonal(&z[t..]),
        a0_1: toda_lower(&z[..t]),
        a_r: Vec::new(),
        a_inf: cyclic_shift(t, |_| S::one()),
    }
}

/// `L = diag(p)/λ + Σ e^{q_i - q_{i+1}} E_{i+1,i}/λ² + Σ E_{i,i+1}`.
pub fn toda_lax(s: &TodaState) -> Result<RationalMatrix<C64>> {
    PhaseState::Toda(s.clone()).lax()
}

pub(super) fn printed_flow(s: &TodaState) -> Vec<C64> {
    let t = s.order();
    let a = s.a();
    let mut v: Vec<C64> = s.p.iter().map(|&p| C64::new(-p, 0.0)).collect();
    for i in 0..t {
        v.push(C64::new(a[i] - a[(i + t - 1) % t], 0.0));
    }
    v
}

pub(super) fn printed_h1(s: &TodaState) -> C64 {
    let kinetic: f64 = s.p.iter().map(|p| 0.5 * p * p).sum();
    C64::new(kinetic + s.a().iter().sum::<f64>(), 0.0)
}

/// Orbit data with `φ0_0 = diag(u)`, `φ0_1 = Σ v_i E_{i,i+1}`,
/// `Λ0_1 = Σ E_{i+1,i}` and `Λ_inf = Σ E_{i,i+1}`.
pub fn toda_orbit_data(u: &[C64], v: &[C64]) -> Result<OrbitData> {
    let t = u.len();
    if v.len() != t {
        return Err(Error::DimensionMismatch { expected: t, found: v.len() });
    }
    let mut lower = SquareMatrix::zeros(t);
    for i in 0..t {
        lower.set((i + 1) % t, i, C64::new(1.0, 0.0));
    }
    OrbitData::new(
        SquareMatrix::diagonal(u),
        cyclic_shift(t, |i| v[i]),
        SquareMatrix::zeros(t),
        lower,
        Vec::new(),
        Vec::new(),
        cyclic_shift(t, |_| C64::new(1.0, 0.0)),
    )
}

/// `q_i = -ln u_i`, `p_i = v_i/u_i - v_{i-1}/u_{i-1}`; the result must be real.
pub fn toda_from_orbit(u: &[C64], v: &[C64]) -> Result<TodaState> {
    let t = u.len();
    if v.len() != t {
        return Err(Error::DimensionMismatch { expected: t, found: v.len() });
    }
    if u.iter().any(|x| x.norm() == 0.0) {
        return Err(Error::SingularMatrix);
    }
    let q: Vec<C64> = u.iter().map(|x| -x.ln()).collect();
    let p: Vec<C64> = (0..t).map(|i| v[i] / u[i] - v[(i + t - 1) % t] / u[(i + t - 1) % t]).collect();
    let imag = q.iter().chain(&p).fold(0.0, |m: f64, z| m.max(z.im.abs()));
    if imag > REAL_TOL {
        return Err(Error::NonReal { imag });
    }
    TodaState::new(q.iter().map(|z| z.re).collect(), p.iter().map(|z| z.re).collect())
}

/// `max |L(λ) - λ^{-1} Q L̃(λ^T) Q^{-1}|` with `Q = diag(e^{-q_i/2} λ^{-i})`.
pub fn toda_gauge_residual(s: &TodaState, lambda: C64) -> Result<f64> {
    let t = s.order();
    let a = s.a();
    let mu = lambda.powi(t as i32);
    let mut lt = SquareMatrix::diagonal(&s.p.iter().map(|&p| C64::new(p, 0.0)).collect::<Vec<_>>());
    for i in 0..t - 1 {
        let r = C64::new(libm::sqrt(a[i]), 0.0);
        lt.add_at(i, i + 1, r);
        lt.add_at(i + 1, i, r);
    }
    let rt = libm::sqrt(a[t - 1]);
    lt.add_at(0, t - 1, C64::new(rt, 0.0) / mu);
    lt.add_at(t - 1, 0, mu * rt);
    let qd: Vec<C64> = (0..t).map(|i| C64::new(libm::exp(-s.q[i] / 2.0), 0.0) * lambda.powi(-(i as i32 + 1))).collect();
    let gauged = SquareMatrix::from_fn(t, |i, j| lt.get(i, j) * qd[i] / qd[j] / lambda);
    Ok(toda_lax(s)?.eval(lambda)?.dist(&gauged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaudin::{FlowId, dress};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn static_t2_lax_value() {
        let s = TodaState::new(alloc::vec![0.0; 2], alloc::vec![0.0; 2]).unwrap();
        let l = toda_lax(&s).unwrap().eval(c(1.0)).unwrap();
        let expect = SquareMatrix::from_fn(2, |i, j| if i == j { c(0.0) } else { c(2.0) });
        assert!(l.dist(&expect) < 1e-15);
    }

    #[test]
    fn static_t3_hamiltonians() {
        let s = PhaseState::Toda(TodaState::new(alloc::vec![0.0; 3], alloc::vec![0.0; 3]).unwrap());
        assert!((s.hamiltonian(FlowId::new(1, 0)).unwrap() - c(3.0)).norm() < 1e-13);
        assert!(s.hamiltonian(FlowId::new(2, 0)).unwrap().norm() < 1e-13);
    }

    #[test]
    fn trivial_orbit_point() {
        let s = toda_from_orbit(&[c(1.0); 3], &[c(0.0); 3]).unwrap();
        assert_eq!(s.q, alloc::vec![0.0; 3]);
        assert_eq!(s.p, alloc::vec![0.0; 3]);
    }

    #[test]
    fn dressing_reproduces_toda_lax() {
        let u = [c(1.3), c(0.7), c(2.1)];
        let v = [c(0.4), c(-1.2), c(0.9)];
        let s = toda_from_orbit(&u, &v).unwrap();
        let coeffs = dress(&toda_orbit_data(&u, &v).unwrap()).unwrap();
        let state = PhaseState::Toda(s);
        let direct = state.coefficients_at(&state.coords());
        assert!(coeffs.dist(&direct) < 1e-13);
    }

    #[test]
    fn first_flow_example() {
        let s = PhaseState::Toda(TodaState::new(alloc::vec![0.0; 3], alloc::vec![1.0, -1.0, 0.0]).unwrap());
        let v = s.flow_field(FlowId::new(1, 0)).unwrap();
        let expect = [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - c(b)).norm() < 1e-13);
        }
    }

    #[test]
    fn gauge_form() {
        let s = TodaState::new(alloc::vec![0.3, -0.2, 0.5, 0.1], alloc::vec![0.4, -0.1, 0.2, -0.5]).unwrap();
        let r = toda_gauge_residual(&s, C64::new(0.8, 0.45)).unwrap();
        assert!(r < 1e-12, "{r}");
    }
}
