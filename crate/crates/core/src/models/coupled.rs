use alloc::vec::Vec;

use super::dst::{orbit_average, outer};
use super::{PhaseState, cyclic_shift, toda_lower};
use crate::algebra::SquareMatrix;
use crate::error::{Error, Result};
use crate::gaudin::GaudinCoefficients;
use crate::ratmat::RationalMatrix;
use crate::scalar::{C64, Scalar};

/// Toda chain coupled to one DST copy with strength `β`.
///
/// `q`, `p` are complex here: the (1,1) flow drives them with `x_i X_i`,
/// which is complex for generic orbit data.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState {
    pub q: Vec<C64>,
    pub p: Vec<C64>,
    pub x: Vec<C64>,
    pub big_x: Vec<C64>,
    pub c: Vec<C64>,
    pub zeta: C64,
    pub beta: f64,
}

impl CoupledState {
    pub fn new(
        q: Vec<C64>,
        p: Vec<C64>,
        x: Vec<C64>,
        big_x: Vec<C64>,
        c: Vec<C64>,
        zeta: C64,
        beta: f64,
    ) -> Result<Self> {
        let t = q.len();
        for n in [p.len(), x.len(), big_x.len(), c.len()] {
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
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidConfig("beta must be finite and non-negative"));
        }
        Ok(CoupledState { q, p, x, big_x, c, zeta, beta })
    }

    pub fn order(&self) -> usize {
        self.q.len()
    }

    pub fn a(&self) -> Vec<C64> {
        let t = self.order();
        (0..t).map(|i| (self.q[i] - self.q[(i + 1) % t]).exp()).collect()
    }
}

pub(super) fn coefficients<S: Scalar>(s: &CoupledState, z: &[S]) -> GaudinCoefficients<S> {
    let t = s.order();
    let b = S::from_f64(s.beta);
    let a0_0: Vec<S> = (0..t).map(|i| z[t + i] + b * S::from_c64(s.c[i])).collect();
    GaudinCoefficients {
        a0_0: SquareMatrix::diagonal(&a0_0),
        a0_1: toda_lower(&z[..t]),
        a_r: alloc::vec![outer(&z[2 * t..3 * t], &z[3 * t..]).scale(b)],
        a_inf: cyclic_shift(t, |_| S::from_f64(1.0 + s.beta)),
    }
}

/// `L = L_Toda + β L_DST` on the pole set `{0, Γζ, ∞}`.
pub fn coupled_lax(s: &CoupledState) -> Result<RationalMatrix<C64>> {
    PhaseState::Coupled(s.clone()).lax()
}

pub(super) fn printed_flow(s: &CoupledState, r: usize) -> Vec<C64> {
    let t = s.order();
    let a = s.a();
    let b = s.beta;
    let z = s.zeta;
    let (x, bx) = (&s.x, &s.big_x);
    let nx = |i: usize| (i + 1) % t;
    let pv = |i: usize| (i + t - 1) % t;
    let mut qd = Vec::with_capacity(t);
    let mut pd = Vec::with_capacity(t);
    let mut xd = Vec::with_capacity(t);
    let mut bxd = Vec::with_capacity(t);
    if r == 0 {
        for i in 0..t {
            qd.push(-s.p[i] - s.c[i] * b);
            pd.push((a[i] - a[pv(i)]) * (1.0 + b) + (a[pv(i)] * x[pv(i)] * bx[i] - a[i] * x[i] * bx[nx(i)]) * b / z);
            bxd.push(a[i] * bx[nx(i)] / z);
            xd.push(-a[pv(i)] * x[pv(i)] / z);
        }
    } else {
        let avg = orbit_average(x, bx, 0..t as i64);
        for i in 0..t {
            qd.push(-x[i] * bx[i] * b);
            pd.push((a[i] * x[i] * bx[nx(i)] - a[pv(i)] * x[pv(i)] * bx[i]) * b / z);
            bxd.push(
                -s.p[i] * bx[i]
                    - s.c[i] * bx[i] * b
                    - a[i] * bx[nx(i)] / z
                    - avg[i] * bx[i] * b
                    - z * bx[pv(i)] * (1.0 + b),
            );
            xd.push(
                s.p[i] * x[i]
                    + s.c[i] * x[i] * b
                    + a[pv(i)] * x[pv(i)] / z
                    + avg[i] * x[i] * b
                    + z * x[nx(i)] * (1.0 + b),
            );
        }
    }
    qd.into_iter().chain(pd).chain(xd).chain(bxd).collect()
}

pub(super) fn printed_h1(s: &CoupledState, r: usize) -> C64 {
    let t = s.order();
    let a = s.a();
    let b = s.beta;
    let z = s.zeta;
    let (x, bx) = (&s.x, &s.big_x);
    let nx = |i: usize| (i + 1) % t;
    let hop: C64 = (0..t).map(|i| a[i] * x[i] * bx[nx(i)]).sum::<C64>() * b / z;
    if r == 0 {
        let mut h = C64::new(0.0, 0.0);
        for i in 0..t {
            h += s.p[i] * s.p[i] * 0.5 + s.c[i] * s.p[i] * b + s.c[i] * s.c[i] * (b * b / 2.0) + a[i] * (1.0 + b);
        }
        return h - hop;
    }
    let avg = orbit_average(x, bx, 0..t as i64);
    let mut h = C64::new(0.0, 0.0);
    for i in 0..t {
        h += avg[i] * x[i] * bx[i] * (b * b / 2.0)
            + s.p[i] * x[i] * bx[i] * b
            + s.c[i] * x[i] * bx[i] * (b * b)
            + z * x[nx(i)] * bx[i] * (b + b * b);
    }
    h + hop
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaudin::FlowId;
    use crate::models::{TodaState, max_dist, toda_lax};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn seeded(beta: f64) -> CoupledState {
        CoupledState::new(
            alloc::vec![c(0.2, 0.0), c(-0.4, 0.0)],
            alloc::vec![c(0.5, 0.0), c(-0.3, 0.0)],
            alloc::vec![c(0.8, 0.1), c(0.3, -0.2)],
            alloc::vec![c(0.9, 0.0), c(0.7, 0.3)],
            alloc::vec![c(0.1, 0.0), c(-0.25, 0.0)],
            c(1.1, 0.3),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn beta_zero_is_toda() {
        let s = seeded(0.0);
        let toda = TodaState::new(alloc::vec![0.2, -0.4], alloc::vec![0.5, -0.3]).unwrap();
        let lam = c(0.7, 0.4);
        let a = coupled_lax(&s).unwrap().eval(lam).unwrap();
        let b = toda_lax(&toda).unwrap().eval(lam).unwrap();
        assert!(a.dist(&b) < 1e-13);
    }

    #[test]
    fn residue_at_zeta() {
        let s = seeded(0.6);
        let l = coupled_lax(&s).unwrap();
        let k1 = outer(&s.x, &s.big_x).scale(C64::new(0.6 / 2.0, 0.0));
        assert!(l.residue(s.zeta).dist(&k1) < 1e-13);
    }

    #[test]
    fn printed_flows_match_gradient_flows() {
        let st = PhaseState::Coupled(seeded(0.7));
        for r in 0..2 {
            let f = FlowId::new(1, r);
            let d = max_dist(&st.flow_field(f).unwrap(), &st.printed_flow_field(f).unwrap());
            assert!(d < 1e-11, "r={r}: {d}");
            let h = (st.hamiltonian(f).unwrap() - st.printed_hamiltonian(f).unwrap()).norm();
            assert!(h < 1e-11, "r={r}: {h}");
        }
    }
}
