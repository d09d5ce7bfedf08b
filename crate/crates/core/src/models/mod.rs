//! Concrete phase spaces: the periodic Toda chain (double pole at the
//! origin), the DST model (simple pole at the origin plus one orbit) and
//! their coupling `L_Toda + β L_DST`.
//!
//! Every state flattens to a coordinate vector: Toda `[q, p]`, DST `[x, X]`,
//! coupled `[q, p, x, X]`. The Poisson structure is
//! `{f,g} = Σ (∂_p f ∂_q g - ∂_q f ∂_p g) + (1/β) Σ (∂_x f ∂_X g - ∂_X f ∂_x g)`
//! (`β = 1` for pure DST), so `q̇ = -∂H/∂p`, `ṗ = ∂H/∂q`, `ẋ = ∂H/∂X / β`,
//! `Ẋ = -∂H/∂x / β`.

mod coupled;
mod dst;
mod toda;

use alloc::vec;
use alloc::vec::Vec;

pub use coupled::{CoupledState, coupled_lax};
pub use dst::{DstState, dst_from_orbit, dst_gauge_residual, dst_lax};
pub use toda::{TodaState, toda_from_orbit, toda_gauge_residual, toda_lax, toda_orbit_data};

use crate::algebra::SquareMatrix;
use crate::error::{Error, Result};
use crate::gaudin::{self, DressingVelocity, FlowId, GaudinCoefficients, PoleConfig, assemble_lax};
use crate::ratmat::RationalMatrix;
use crate::scalar::{C64, Dual, Scalar, gradient};

/// Imaginary drift tolerated in real Toda data.
pub const REAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Toda,
    Dst,
    Coupled,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Toda => "toda",
            ModelKind::Dst => "dst",
            ModelKind::Coupled => "coupled",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseState {
    Toda(TodaState),
    Dst(DstState),
    Coupled(CoupledState),
}

/// Canonical pair `(a, b, w)`: contributes `w (∂_a f ∂_b g - ∂_b f ∂_a g)`.
pub type SymplecticPair = (usize, usize, f64);

pub(crate) fn cyclic_shift<S: Scalar>(t: usize, weights: impl Fn(usize) -> S) -> SquareMatrix<S> {
    let mut m = SquareMatrix::zeros(t);
    for i in 0..t {
        m.add_at(i, (i + 1) % t, weights(i));
    }
    m
}

/// `Σ a_i E_{i+1,i}` with `a_i = exp(q_i - q_{i+1})`.
pub(crate) fn toda_lower<S: Scalar>(q: &[S]) -> SquareMatrix<S> {
    let t = q.len();
    let mut m = SquareMatrix::zeros(t);
    for i in 0..t {
        m.add_at((i + 1) % t, i, (q[i] - q[(i + 1) % t]).exp());
    }
    m
}

impl PhaseState {
    pub fn kind(&self) -> ModelKind {
        match self {
            PhaseState::Toda(_) => ModelKind::Toda,
            PhaseState::Dst(_) => ModelKind::Dst,
            PhaseState::Coupled(_) => ModelKind::Coupled,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            PhaseState::Toda(s) => s.q.len(),
            PhaseState::Dst(s) => s.x.len(),
            PhaseState::Coupled(s) => s.q.len(),
        }
    }

    pub fn pole_config(&self) -> Result<PoleConfig> {
        match self {
            PhaseState::Toda(s) => PoleConfig::new(s.q.len(), Vec::new()),
            PhaseState::Dst(s) => PoleConfig::new(s.x.len(), vec![s.zeta]),
            PhaseState::Coupled(s) => PoleConfig::new(s.q.len(), vec![s.zeta]),
        }
    }

    /// Max coordinate distance to `other`. Complex `q_i` enter every
    /// Hamiltonian through `e^{q_i - q_{i+1}}` only, so for the coupled model
    /// they are compared modulo `2πi`.
    pub fn distance(&self, other: &PhaseState) -> f64 {
        let (a, b) = (self.coords(), other.coords());
        let periodic = if matches!(self, PhaseState::Coupled(_)) { self.order() } else { 0 };
        a.iter().zip(&b).enumerate().fold(0.0, |m, (k, (x, y))| {
            let mut d = x - y;
            if k < periodic {
                d.im = libm::remainder(d.im, core::f64::consts::TAU);
            }
            m.max(d.norm())
        })
    }

    pub fn coords(&self) -> Vec<C64> {
        match self {
            PhaseState::Toda(s) => s.q.iter().chain(&s.p).map(|&v| C64::new(v, 0.0)).collect(),
            PhaseState::Dst(s) => s.x.iter().chain(&s.big_x).copied().collect(),
            PhaseState::Coupled(s) => s.q.iter().chain(&s.p).chain(&s.x).chain(&s.big_x).copied().collect(),
        }
    }

    /// Same parameters, new coordinates. Toda coordinates must stay real.
    pub fn with_coords(&self, z: &[C64]) -> Result<PhaseState> {
        let t = self.order();
        let n = self.coords().len();
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: z.len() });
        }
        Ok(match self {
            PhaseState::Toda(_) => {
                let imag = z.iter().fold(0.0, |m: f64, v| m.max(v.im.abs()));
                if imag > REAL_TOL {
                    return Err(Error::NonReal { imag });
                }
                PhaseState::Toda(TodaState {
                    q: z[..t].iter().map(|v| v.re).collect(),
                    p: z[t..].iter().map(|v| v.re).collect(),
                })
            }
            PhaseState::Dst(s) => PhaseState::Dst(DstState { x: z[..t].to_vec(), big_x: z[t..].to_vec(), ..s.clone() }),
            PhaseState::Coupled(s) => PhaseState::Coupled(CoupledState {
                q: z[..t].to_vec(),
                p: z[t..2 * t].to_vec(),
                x: z[2 * t..3 * t].to_vec(),
                big_x: z[3 * t..].to_vec(),
                ..s.clone()
            }),
        })
    }

    /// Lax coefficients as functions of the coordinates.
    pub fn coefficients_at<S: Scalar>(&self, z: &[S]) -> GaudinCoefficients<S> {
        match self {
            PhaseState::Toda(_) => toda::coefficients(z),
            PhaseState::Dst(s) => dst::coefficients(s, z),
            PhaseState::Coupled(s) => coupled::coefficients(s, z),
        }
    }

    pub fn lax_at<S: Scalar>(&self, z: &[S]) -> Result<RationalMatrix<S>> {
        assemble_lax(&self.coefficients_at(z), &self.pole_config()?)
    }

    pub fn lax(&self) -> Result<RationalMatrix<C64>> {
        self.lax_at(&self.coords())
    }

    pub fn symplectic_pairs(&self) -> Vec<SymplecticPair> {
        let t = self.order();
        match self {
            PhaseState::Toda(_) => (0..t).map(|i| (t + i, i, 1.0)).collect(),
            PhaseState::Dst(_) => (0..t).map(|i| (i, t + i, 1.0)).collect(),
            PhaseState::Coupled(s) => {
                (0..t).map(|i| (t + i, i, 1.0)).chain((0..t).map(|i| (2 * t + i, 3 * t + i, 1.0 / s.beta))).collect()
            }
        }
    }

    /// `{f, g}` from gradients in flattened coordinates.
    pub fn bracket_from_gradients(&self, df: &[C64], dg: &[C64]) -> C64 {
        self.symplectic_pairs().into_iter().map(|(a, b, w)| (df[a] * dg[b] - df[b] * dg[a]) * w).sum()
    }

    /// Hamiltonian vector field of a function with gradient `dh`.
    pub fn hamiltonian_vector(&self, dh: &[C64]) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dh.len()];
        for (a, b, w) in self.symplectic_pairs() {
            v[a] = dh[b] * w;
            v[b] = -dh[a] * w;
        }
        v
    }

    /// Flows with `1 ≤ p ≤ depth` carried by this model.
    pub fn admissible_flows(&self, depth: usize) -> Vec<FlowId> {
        let rs: &[usize] = match self {
            PhaseState::Toda(_) => &[0],
            _ => &[0, 1],
        };
        let mut out = Vec::new();
        for &r in rs {
            for p in 1..=depth {
                out.push(FlowId::new(p, r));
            }
        }
        out
    }

    pub fn check_flow(&self, f: FlowId) -> Result<()> {
        let max_r = if matches!(self, PhaseState::Toda(_)) { 0 } else { 1 };
        if f.p == 0 || f.r > max_r {
            return Err(Error::InadmissibleFlow { p: f.p, r: f.r });
        }
        Ok(())
    }

    /// `H_f` at coordinates `z`.
    pub fn hamiltonian_at<S: Scalar>(&self, f: FlowId, z: &[S]) -> Result<S> {
        self.check_flow(f)?;
        gaudin::hamiltonian(f, &self.lax_at(z)?, &self.pole_config()?)
    }

    pub fn hamiltonian(&self, f: FlowId) -> Result<C64> {
        self.hamiltonian_at(f, &self.coords())
    }

    /// `H_f` and `∂H_f/∂z` at `z`: the coefficient-space gradient from
    /// `gaudin::coefficient_gradient`, pulled back through the coefficient
    /// map with duals.
    pub fn hamiltonian_gradient(&self, f: FlowId, z: &[C64]) -> Result<(C64, Vec<C64>)> {
        self.check_flow(f)?;
        let config = self.pole_config()?;
        let (value, g) = gaudin::coefficient_gradient(f, &self.coefficients_at(z), &config)?;
        let mut seeded: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
        let mut grad = Vec::with_capacity(z.len());
        let pair = |g: &SquareMatrix<C64>, d: &SquareMatrix<Dual>| -> C64 {
            g.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a * b.eps).sum()
        };
        for n in 0..z.len() {
            seeded[n].eps = C64::new(1.0, 0.0);
            let dc = self.coefficients_at(&seeded);
            seeded[n].eps = C64::new(0.0, 0.0);
            let mut d = pair(&g.a0_0, &dc.a0_0) + pair(&g.a0_1, &dc.a0_1) + pair(&g.a_inf, &dc.a_inf);
            for (gr, dr) in g.a_r.iter().zip(&dc.a_r) {
                d += pair(gr, dr);
            }
            grad.push(d);
        }
        Ok((value, grad))
    }

    /// Gradient through tangent Lax matrices; a cross-check of the above.
    pub fn hamiltonian_gradient_tangent(&self, f: FlowId, z: &[C64]) -> Result<(C64, Vec<C64>)> {
        self.check_flow(f)?;
        let config = self.pole_config()?;
        let l = self.lax_at(z)?;
        let tangents = self.lax_tangents(z)?;
        gaudin::hamiltonian_with_tangents(f, &l, &tangents, &config)
    }

    /// Same as `hamiltonian_gradient` but pushing duals through the whole
    /// residue computation. Slower; kept as a cross-check.
    pub fn hamiltonian_gradient_dual(&self, f: FlowId, z: &[C64]) -> Result<(C64, Vec<C64>)> {
        self.check_flow(f)?;
        gradient(|d: &[Dual]| self.hamiltonian_at(f, d), z)
    }

    /// `∂L/∂z_n` for every coordinate.
    pub fn lax_tangents(&self, z: &[C64]) -> Result<Vec<RationalMatrix<C64>>> {
        let mut seeded: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
        let mut out = Vec::with_capacity(z.len());
        for n in 0..z.len() {
            seeded[n].eps = C64::new(1.0, 0.0);
            out.push(self.lax_at(&seeded)?.map_entries(|d: Dual| d.eps));
            seeded[n].eps = C64::new(0.0, 0.0);
        }
        Ok(out)
    }

    /// Velocity of flow `f` at coordinates `z`. The coupled model needs
    /// `β > 0` here since the (x, X) bracket carries `1/β`.
    pub fn flow_velocity(&self, f: FlowId, z: &[C64]) -> Result<Vec<C64>> {
        if let PhaseState::Coupled(s) = self
            && s.beta == 0.0
        {
            return Err(Error::InvalidConfig("coupled flows need beta > 0"));
        }
        let (_, dh) = self.hamiltonian_gradient(f, z)?;
        Ok(self.hamiltonian_vector(&dh))
    }

    /// `(q̇, ṗ)` of flow `f` for Toda and coupled states. Defined for every
    /// `β ≥ 0`, including the decoupled point.
    pub fn toda_sector_field(&self, f: FlowId) -> Result<Vec<C64>> {
        if matches!(self, PhaseState::Dst(_)) {
            return Err(Error::InvalidConfig("DST has no (q, p) sector"));
        }
        let t = self.order();
        let (_, dh) = self.hamiltonian_gradient(f, &self.coords())?;
        let mut v = vec![C64::new(0.0, 0.0); 2 * t];
        for i in 0..t {
            v[i] = -dh[t + i];
            v[t + i] = dh[i];
        }
        Ok(v)
    }

    /// Velocity of flow `f` at the current state.
    pub fn flow_field(&self, f: FlowId) -> Result<Vec<C64>> {
        self.flow_velocity(f, &self.coords())
    }

    /// Hand-transcribed first-flow equations of motion.
    pub fn printed_flow_field(&self, f: FlowId) -> Result<Vec<C64>> {
        self.check_flow(f)?;
        if f.p != 1 {
            return Err(Error::InadmissibleFlow { p: f.p, r: f.r });
        }
        Ok(match self {
            PhaseState::Toda(s) => toda::printed_flow(s),
            PhaseState::Dst(s) => dst::printed_flow(s, f.r),
            PhaseState::Coupled(s) => coupled::printed_flow(s, f.r),
        })
    }

    /// Hand-transcribed first Hamiltonians.
    pub fn printed_hamiltonian(&self, f: FlowId) -> Result<C64> {
        self.check_flow(f)?;
        if f.p != 1 {
            return Err(Error::InadmissibleFlow { p: f.p, r: f.r });
        }
        Ok(match self {
            PhaseState::Toda(s) => toda::printed_h1(s),
            PhaseState::Dst(s) => dst::printed_h1(s, f.r),
            PhaseState::Coupled(s) => coupled::printed_h1(s, f.r),
        })
    }

    /// `φ̇ φ^{-1}` implied by a coordinate velocity.
    pub fn dressing_velocity(&self, z: &[C64], zdot: &[C64]) -> DressingVelocity {
        let t = self.order();
        let origin_from = |qdot: &[C64]| Some(SquareMatrix::diagonal(&qdot.iter().map(|v| -v).collect::<Vec<_>>()));
        // ẋ Xᵀ / (X·x) moves x correctly; paired with A_1 = x Xᵀ it gives X·ẋ.
        let pole_from = |xdot: &[C64], x: &[C64], big_x: &[C64]| {
            let norm: C64 = x.iter().zip(big_x).map(|(a, b)| a * b).sum();
            SquareMatrix::from_fn(t, |i, j| xdot[i] * big_x[j] / norm)
        };
        match self {
            PhaseState::Toda(_) => DressingVelocity { origin: origin_from(&zdot[..t]), poles: Vec::new() },
            PhaseState::Dst(_) => {
                DressingVelocity { origin: None, poles: vec![Some(pole_from(&zdot[..t], &z[..t], &z[t..]))] }
            }
            PhaseState::Coupled(_) => DressingVelocity {
                origin: origin_from(&zdot[..t]),
                poles: vec![Some(pole_from(&zdot[2 * t..3 * t], &z[2 * t..3 * t], &z[3 * t..]))],
            },
        }
    }

    /// On-shell Lagrangian coefficient `𝓛_f` at coordinates `z` moving with
    /// velocity `zdot`. For the coupled model the total derivative
    /// `-β Σ c_i q̇_i` of the origin kinetic term is dropped.
    pub fn lagrangian_at(&self, f: FlowId, z: &[C64], zdot: &[C64]) -> Result<C64> {
        self.check_flow(f)?;
        let coeffs = self.coefficients_at(z);
        let vel = self.dressing_velocity(z, zdot);
        let mut value = gaudin::lagrangian_coeff(f, &coeffs, &self.pole_config()?, &vel)?;
        if let PhaseState::Coupled(s) = self {
            let t = self.order();
            for i in 0..t {
                value += s.c[i] * zdot[i] * s.beta;
            }
        }
        Ok(value)
    }

    /// Hand-transcribed `𝓛_{1,r}`.
    pub fn printed_lagrangian(&self, f: FlowId, zdot: &[C64]) -> Result<C64> {
        let h = self.printed_hamiltonian(f)?;
        let z = self.coords();
        let t = self.order();
        let kinetic: C64 = match self {
            PhaseState::Toda(_) => -(0..t).map(|i| z[t + i] * zdot[i]).sum::<C64>(),
            PhaseState::Dst(_) => (0..t).map(|i| z[t + i] * zdot[i]).sum(),
            PhaseState::Coupled(s) => {
                -(0..t).map(|i| z[t + i] * zdot[i]).sum::<C64>()
                    + (0..t).map(|i| z[3 * t + i] * zdot[2 * t + i]).sum::<C64>() * s.beta
            }
        };
        Ok(kinetic - h)
    }

    /// Direction of the residual `x → a x, X → X / a` symmetry (zero for Toda).
    pub fn gauge_direction(&self) -> Vec<C64> {
        let z = self.coords();
        let t = self.order();
        let mut g = vec![C64::new(0.0, 0.0); z.len()];
        let offset = match self {
            PhaseState::Toda(_) => return g,
            PhaseState::Dst(_) => 0,
            PhaseState::Coupled(_) => 2 * t,
        };
        for i in 0..t {
            g[offset + i] = z[offset + i];
            g[offset + t + i] = -z[offset + t + i];
        }
        g
    }

    /// Largest magnitude coordinate; used for divergence detection.
    pub fn max_abs(&self) -> f64 {
        self.coords().iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Removes the component of `d` along `g` (Hermitian projection).
pub fn modulo_direction(d: &[C64], g: &[C64]) -> Vec<C64> {
    let gg: f64 = g.iter().map(|v| v.norm_sqr()).sum();
    if gg == 0.0 {
        return d.to_vec();
    }
    let gd: C64 = g.iter().zip(d).map(|(a, b)| a.conj() * b).sum();
    let k = gd / gg;
    d.iter().zip(g).map(|(a, b)| a - b * k).collect()
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dst3() -> DstState {
        let m = SquareMatrix::from_fn(3, |i, j| {
            c(if i == j { 1.4 } else { 0.25 * (i + 2 * j) as f64 - 0.3 }, 0.1 * i as f64 - 0.05 * j as f64)
        });
        dst_from_orbit(&m, vec![c(0.3, 0.0), c(-0.4, 0.1), c(0.2, -0.2)], c(0.8, 0.5)).unwrap()
    }

    fn coupled2(beta: f64) -> CoupledState {
        CoupledState::new(
            vec![c(0.1, 0.0), c(-0.3, 0.0)],
            vec![c(0.6, 0.0), c(-0.2, 0.0)],
            vec![c(0.7, 0.2), c(0.4, -0.1)],
            vec![c(1.0, 0.1), c(0.5, 0.2)],
            vec![c(0.2, 0.0), c(-0.1, 0.0)],
            c(0.9, 0.4),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn dst_flows_agree_modulo_gauge() {
        let st = PhaseState::Dst(dst3());
        for r in 0..2 {
            let f = FlowId::new(1, r);
            let d: Vec<C64> =
                st.flow_field(f).unwrap().iter().zip(st.printed_flow_field(f).unwrap()).map(|(a, b)| a - b).collect();
            let rest = modulo_direction(&d, &st.gauge_direction());
            assert!(max_norm(&rest) < 1e-11, "r={r}: {}", max_norm(&rest));
        }
    }

    #[test]
    fn dst_lax_level_agreement() {
        // d/dt (x_i X_j) is blind to the gauge direction.
        let s = dst3();
        let st = PhaseState::Dst(s.clone());
        let f = FlowId::new(1, 1);
        let a = st.flow_field(f).unwrap();
        let b = st.printed_flow_field(f).unwrap();
        let t = 3;
        for i in 0..t {
            for j in 0..t {
                let da = a[i] * s.big_x[j] + s.x[i] * a[t + j];
                let db = b[i] * s.big_x[j] + s.x[i] * b[t + j];
                assert!((da - db).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn dst_printed_hamiltonians() {
        let st = PhaseState::Dst(dst3());
        for r in 0..2 {
            let f = FlowId::new(1, r);
            let d = (st.hamiltonian(f).unwrap() - st.printed_hamiltonian(f).unwrap()).norm();
            assert!(d < 1e-11, "r={r}: {d}");
        }
    }

    #[test]
    fn toda_printed_flow_matches() {
        let st = PhaseState::Toda(TodaState::new(vec![0.3, -0.1, 0.4, 0.0], vec![0.2, 0.5, -0.6, 0.1]).unwrap());
        let f = FlowId::new(1, 0);
        assert!(max_dist(&st.flow_field(f).unwrap(), &st.printed_flow_field(f).unwrap()) < 1e-11);
        assert!((st.hamiltonian(f).unwrap() - st.printed_hamiltonian(f).unwrap()).norm() < 1e-11);
    }

    #[test]
    fn coupled_beta_zero_reduces_to_toda() {
        let cs = coupled2(0.0);
        let st = PhaseState::Coupled(cs.clone());
        let toda = PhaseState::Toda(TodaState::new(vec![0.1, -0.3], vec![0.6, -0.2]).unwrap());
        let f = FlowId::new(1, 0);
        let a = st.toda_sector_field(f).unwrap();
        let b = toda.flow_field(f).unwrap();
        assert!(max_dist(&a, &b) < 1e-12);
        assert!(st.flow_field(f).is_err());
        let zdot: Vec<C64> = (0..8).map(|k| c(0.1 * k as f64 - 0.3, 0.02 * k as f64)).collect();
        let lc = st.lagrangian_at(f, &st.coords(), &zdot).unwrap();
        let zt: Vec<C64> = zdot[..4].to_vec();
        let lt = toda.lagrangian_at(f, &toda.coords(), &zt).unwrap();
        assert!((lc - lt).norm() < 1e-12, "{lc} vs {lt}");
    }

    #[test]
    fn lagrangians_match_printed_forms() {
        let states = [
            PhaseState::Toda(TodaState::new(vec![0.3, -0.1, 0.4], vec![0.2, 0.5, -0.6]).unwrap()),
            PhaseState::Dst(dst3()),
            PhaseState::Coupled(coupled2(0.7)),
        ];
        for st in &states {
            let z = st.coords();
            let zdot: Vec<C64> = (0..z.len()).map(|k| c(0.3 - 0.07 * k as f64, 0.01 * k as f64)).collect();
            for f in st.admissible_flows(1) {
                let a = st.lagrangian_at(f, &z, &zdot).unwrap();
                let b = st.printed_lagrangian(f, &zdot).unwrap();
                assert!((a - b).norm() < 1e-11, "{:?} {f}: {a} vs {b}", st.kind());
            }
        }
    }

    #[test]
    fn zero_velocity_lagrangian_is_minus_h() {
        let st = PhaseState::Coupled(coupled2(0.4));
        let z = st.coords();
        let zero = vec![c(0.0, 0.0); z.len()];
        for f in st.admissible_flows(2) {
            let l = st.lagrangian_at(f, &z, &zero).unwrap();
            assert!((l + st.hamiltonian(f).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn toda_static_lagrangian() {
        let st = PhaseState::Toda(TodaState::new(vec![0.0; 3], vec![0.0; 3]).unwrap());
        let l = st.lagrangian_at(FlowId::new(1, 0), &st.coords(), &[c(0.0, 0.0); 6]).unwrap();
        assert!((l - c(-3.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn analytic_gradient_matches_dual_gradient() {
        let states = [
            PhaseState::Toda(TodaState::new(vec![0.3, -0.1, 0.4], vec![0.2, 0.5, -0.6]).unwrap()),
            PhaseState::Dst(dst3()),
            PhaseState::Coupled(coupled2(0.7)),
        ];
        for st in &states {
            let z = st.coords();
            for f in st.admissible_flows(3) {
                let (h1, g1) = st.hamiltonian_gradient(f, &z).unwrap();
                let (h2, g2) = st.hamiltonian_gradient_dual(f, &z).unwrap();
                assert!((h1 - h2).norm() < 1e-12);
                assert!(max_dist(&g1, &g2) < 1e-11, "{:?} {f}", st.kind());
                let (_, g3) = st.hamiltonian_gradient_tangent(f, &z).unwrap();
                assert!(max_dist(&g3, &g2) < 1e-11, "{:?} {f}", st.kind());
            }
        }
    }

    #[test]
    fn inadmissible_flows_rejected() {
        let st = PhaseState::Toda(TodaState::new(vec![0.0; 2], vec![0.0; 2]).unwrap());
        assert!(matches!(st.flow_field(FlowId::new(1, 1)), Err(Error::InadmissibleFlow { .. })));
        assert!(st.printed_flow_field(FlowId::new(2, 0)).is_err());
    }
}
