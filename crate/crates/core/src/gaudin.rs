//! Cyclotomic Gaudin Lax matrices: assembly from coefficients, dressing of
//! coadjoint-orbit data, residue Hamiltonians, Lax partners and the
//! Lagrangian coefficients of the commuting flows.

use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{SquareMatrix, grade_defect};
use crate::error::{Error, Result};
use crate::ratmat::{Point, Pole, RationalMatrix, binom};
use crate::scalar::{C64, Scalar};

pub use crate::ratmat::PoleConfig;

/// Largest condition number accepted for a dressing matrix.
pub const MAX_CONDITION: f64 = 1e8;

/// Coefficients of
/// `L(λ) = A0_0/λ + A0_1/λ² + (1/T) Σ_r Σ_k σ^k A_r/(λ - ω^k ζ_r) + A_inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaudinCoefficients<S = C64> {
    pub a0_0: SquareMatrix<S>,
    pub a0_1: SquareMatrix<S>,
    pub a_r: Vec<SquareMatrix<S>>,
    pub a_inf: SquareMatrix<S>,
}

impl<S: Scalar> GaudinCoefficients<S> {
    pub fn zeros(dim: usize, n_poles: usize) -> Self {
        GaudinCoefficients {
            a0_0: SquareMatrix::zeros(dim),
            a0_1: SquareMatrix::zeros(dim),
            a_r: vec![SquareMatrix::zeros(dim); n_poles],
            a_inf: SquareMatrix::zeros(dim),
        }
    }

    pub fn values(&self) -> GaudinCoefficients<C64> {
        GaudinCoefficients {
            a0_0: self.a0_0.values(),
            a0_1: self.a0_1.values(),
            a_r: self.a_r.iter().map(|m| m.values()).collect(),
            a_inf: self.a_inf.values(),
        }
    }
}

impl GaudinCoefficients<C64> {
    pub fn dist(&self, other: &Self) -> f64 {
        let mut d = self.a0_0.dist(&other.a0_0).max(self.a0_1.dist(&other.a0_1));
        d = d.max(self.a_inf.dist(&other.a_inf));
        for (a, b) in self.a_r.iter().zip(&other.a_r) {
            d = d.max(a.dist(b));
        }
        d
    }
}

/// Orbit representatives `Λ` and dressing matrices `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitData {
    pub phi0_0: SquareMatrix<C64>,
    pub phi0_1: SquareMatrix<C64>,
    pub lambda0_0: SquareMatrix<C64>,
    pub lambda0_1: SquareMatrix<C64>,
    pub phi_r: Vec<SquareMatrix<C64>>,
    pub lambda_r: Vec<SquareMatrix<C64>>,
    pub lambda_inf: SquareMatrix<C64>,
}

impl OrbitData {
    /// Checks gradings and conditioning, then rescales `(φ0_0, φ0_1)` so
    /// that `det φ0_0 = 1`; the rescaling leaves the dressed coefficients
    /// unchanged.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        phi0_0: SquareMatrix<C64>,
        phi0_1: SquareMatrix<C64>,
        lambda0_0: SquareMatrix<C64>,
        lambda0_1: SquareMatrix<C64>,
        phi_r: Vec<SquareMatrix<C64>>,
        lambda_r: Vec<SquareMatrix<C64>>,
        lambda_inf: SquareMatrix<C64>,
    ) -> Result<Self> {
        let t = phi0_0.dim();
        for m in [&phi0_1, &lambda0_0, &lambda0_1, &lambda_inf].into_iter().chain(&phi_r).chain(&lambda_r) {
            if m.dim() != t {
                return Err(Error::DimensionMismatch { expected: t, found: m.dim() });
            }
        }
        if phi_r.len() != lambda_r.len() {
            return Err(Error::DimensionMismatch { expected: phi_r.len(), found: lambda_r.len() });
        }
        for (m, g, what) in [
            (&phi0_0, 0, "phi0_0 must have grade 0"),
            (&phi0_1, 1, "phi0_1 must have grade 1"),
            (&lambda0_0, 0, "Lambda0_0 must have grade 0"),
            (&lambda0_1, -1, "Lambda0_1 must have grade -1"),
            (&lambda_inf, 1, "Lambda_inf must have grade 1"),
        ] {
            if grade_defect(m, g) > 1e-12 * (1.0 + m.max_abs()) {
                return Err(Error::InvalidConfig(what));
            }
        }
        for phi in core::iter::once(&phi0_0).chain(&phi_r) {
            let condition = phi.condition();
            if condition.is_nan() || condition > MAX_CONDITION {
                return Err(Error::IllConditioned { condition });
            }
        }
        let det = phi0_0.det();
        let c = det.powf(-1.0 / t as f64);
        Ok(OrbitData {
            phi0_0: phi0_0.scale_c(c),
            phi0_1: phi0_1.scale_c(c),
            lambda0_0,
            lambda0_1,
            phi_r,
            lambda_r,
            lambda_inf,
        })
    }
}

/// Flow label `t_p^r`: `r = 0` is the origin, `r ≥ 1` the orbit of `ζ_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowId {
    pub p: usize,
    pub r: usize,
}

impl FlowId {
    pub const fn new(p: usize, r: usize) -> Self {
        FlowId { p, r }
    }
}

impl core::fmt::Display for FlowId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{})", self.p, self.r)
    }
}

fn check_flow(f: FlowId, config: &PoleConfig) -> Result<()> {
    if f.p == 0 || f.r > config.n_poles() {
        return Err(Error::InadmissibleFlow { p: f.p, r: f.r });
    }
    Ok(())
}

/// Builds `L(λ)` from its coefficients.
pub fn assemble_lax<S: Scalar>(c: &GaudinCoefficients<S>, config: &PoleConfig) -> Result<RationalMatrix<S>> {
    let dim = c.a0_0.dim();
    if c.a_r.len() != config.n_poles() {
        return Err(Error::DimensionMismatch { expected: config.n_poles(), found: c.a_r.len() });
    }
    let root = config.root();
    let t = config.order();
    let inv_t = C64::new(1.0 / t as f64, 0.0);
    let mut poles = vec![Pole::new(C64::new(0.0, 0.0), vec![c.a0_0.clone(), c.a0_1.clone()])];
    for (a, &z) in c.a_r.iter().zip(config.zetas()) {
        for k in 0..t as i64 {
            poles.push(Pole::new(root.pow(k) * z, vec![root.sigma_pow(a, k).scale_c(inv_t)]));
        }
    }
    RationalMatrix::new(dim, vec![c.a_inf.clone()], poles)
}

/// Reads the coefficients back from a rational matrix with the Lax pole structure.
pub fn coefficients_of<S: Scalar>(l: &RationalMatrix<S>, config: &PoleConfig) -> GaudinCoefficients<S> {
    let dim = l.dim();
    let t = config.order() as f64;
    let origin = l.pole_at(C64::new(0.0, 0.0));
    let get = |n: usize| origin.and_then(|p| p.principal.get(n).cloned()).unwrap_or_else(|| SquareMatrix::zeros(dim));
    GaudinCoefficients {
        a0_0: get(0),
        a0_1: get(1),
        a_r: config.zetas().iter().map(|&z| l.residue(z).scale_c(C64::new(t, 0.0))).collect(),
        a_inf: l.poly().first().cloned().unwrap_or_else(|| SquareMatrix::zeros(dim)),
    }
}

/// Dressed coefficients of an orbit point.
pub fn dress(o: &OrbitData) -> Result<GaudinCoefficients<C64>> {
    let inv0 = o.phi0_0.inverse()?;
    let a0_1 = &(&o.phi0_0 * &o.lambda0_1) * &inv0;
    let a0_0_main = &(&o.phi0_0 * &o.lambda0_0) * &inv0;
    let g = &o.phi0_1 * &inv0;
    let a0_0 = &a0_0_main + &g.commutator(&a0_1);
    let a_r = o
        .phi_r
        .iter()
        .zip(&o.lambda_r)
        .map(|(phi, lam)| Ok(&(phi * lam) * &phi.inverse()?))
        .collect::<Result<Vec<_>>>()?;
    Ok(GaudinCoefficients { a0_0, a0_1, a_r, a_inf: o.lambda_inf.clone() })
}

fn flow_point(f: FlowId, config: &PoleConfig) -> Point {
    if f.r == 0 { Point::ORIGIN } else { Point::Finite(config.zetas()[f.r - 1]) }
}

/// `H_{p,0} = Res_0 (λ^p/(p+1)) Tr L^{p+1}` and
/// `H_{p,r} = Res_{ζ_r} (T λ^p/(p+1)) Tr L^{p+1}`.
pub fn hamiltonian<S: Scalar>(f: FlowId, l: &RationalMatrix<S>, config: &PoleConfig) -> Result<S> {
    check_flow(f, config)?;
    let point = flow_point(f, config);
    let (top, o) = residue_window(f, l.pole_order_at(point));
    let e = l.laurent_expand(point, top + o * f.p as i32)?;
    let lp = e.pow(f.p, Some(top + o))?;
    let mut acc = S::zero();
    for (n, w) in residue_weights(f, config) {
        acc += lp.trace_product_coeff(&e, n)?.scale(w);
    }
    Ok(acc)
}

/// Highest residue order needed and the pole order at the flow's point.
fn residue_window(f: FlowId, order: usize) -> (i32, i32) {
    let p = f.p as i32;
    (if f.r == 0 { -1 - p } else { -1 }, order as i32)
}

/// `H_f = Σ w_n [λ_r^n] Tr L^{p+1}` as pairs `(n, w_n)`.
fn residue_weights(f: FlowId, config: &PoleConfig) -> Vec<(i32, C64)> {
    let p = f.p as i32;
    let inv = 1.0 / (p + 1) as f64;
    if f.r == 0 {
        return vec![(-1 - p, C64::new(inv, 0.0))];
    }
    let z = config.zetas()[f.r - 1];
    let t = config.order() as f64;
    (0..=f.p).map(|m| (-1 - m as i32, z.powi((f.p - m) as i32) * binom(f.p, m) * (t * inv))).collect()
}

/// `H_f` and its derivatives along each `dL` in `tangents`, using
/// `d Tr L^{p+1} = (p+1) Tr(L^p dL)`: one power of `L` serves every direction.
pub fn hamiltonian_with_tangents(
    f: FlowId,
    l: &RationalMatrix<C64>,
    tangents: &[RationalMatrix<C64>],
    config: &PoleConfig,
) -> Result<(C64, Vec<C64>)> {
    check_flow(f, config)?;
    let point = flow_point(f, config);
    let (top, o) = residue_window(f, l.pole_order_at(point));
    let trunc = top + o * f.p as i32;
    let e = l.laurent_expand(point, trunc)?;
    let lp = e.pow(f.p, Some(top + o))?;
    let weights = residue_weights(f, config);
    let mut value = C64::new(0.0, 0.0);
    for &(n, w) in &weights {
        value += lp.trace_product_coeff(&e, n)? * w;
    }
    let scale = (f.p + 1) as f64;
    let mut out = Vec::with_capacity(tangents.len());
    for dl in tangents {
        let de = dl.laurent_expand(point, trunc)?;
        let mut d = C64::new(0.0, 0.0);
        for &(n, w) in &weights {
            d += lp.trace_product_coeff(&de, n)? * w;
        }
        out.push(d * scale);
    }
    Ok((value, out))
}

/// `H_f` together with `G = ∂H_f/∂A` for every coefficient block, so that
/// `dH = Σ_ij G_ij dA_ij`. Uses `d Tr L^{p+1} = (p+1) Tr(L^p dL)` and the
/// linearity of `assemble_lax`, so no tangent Lax matrices are built.
pub fn coefficient_gradient(
    f: FlowId,
    c: &GaudinCoefficients<C64>,
    config: &PoleConfig,
) -> Result<(C64, GaudinCoefficients<C64>)> {
    check_flow(f, config)?;
    let t = config.order();
    let l = assemble_lax(c, config)?;
    let point = flow_point(f, config);
    let at = match point {
        Point::Finite(z) => z,
        Point::Infinity => unreachable!("flows live at finite points"),
    };
    // Tangents may raise the origin order to 2 even where L itself has a
    // simple pole there.
    let o_eff = (l.pole_order_at(point) as i32).max(if f.r == 0 { 2 } else { 1 });
    let (top, _) = residue_window(f, 0);
    let e = l.laurent_expand(point, top + o_eff * f.p as i32)?;
    let lp = e.pow(f.p, Some(top + o_eff))?;
    let weights = residue_weights(f, config);
    let mut value = C64::new(0.0, 0.0);
    for &(n, w) in &weights {
        value += lp.trace_product_coeff(&e, n)? * w;
    }
    // dH = Σ_m Tr(M_m dE_m) with M_m = (p+1) Σ_n w_n L^p[n - m].
    let scale = (f.p + 1) as f64;
    let m_lo = -o_eff;
    let m_hi = top - lp.low();
    let mut big_m = Vec::with_capacity((m_hi - m_lo + 1).max(0) as usize);
    for m in m_lo..=m_hi {
        let mut acc = SquareMatrix::zeros(t);
        for &(n, w) in &weights {
            if let Some(c) = lp.coeff_ref(n - m) {
                acc.add_scaled_c(c, w * scale);
            }
        }
        big_m.push(acc);
    }
    // Σ_m s(m) M_m for a scalar series s in the local parameter.
    let contract = |s: &dyn Fn(i32) -> C64| {
        let mut acc = SquareMatrix::zeros(t);
        for (i, mm) in big_m.iter().enumerate() {
            let sv = s(m_lo + i as i32);
            if sv != C64::new(0.0, 0.0) {
                acc.add_scaled_c(mm, sv);
            }
        }
        acc
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    // 1/(λ - a)^k expanded in w = λ - at.
    let pole_series = |a: C64, k: i32| {
        move |m: i32| -> C64 {
            let d = a - at;
            if d.norm() <= crate::ratmat::POLE_EPS {
                return if m == -k { one } else { zero };
            }
            if m < 0 {
                return zero;
            }
            // (w - d)^{-k} = (-d)^{-k} Σ C(m+k-1, m) (w/d)^m
            let b = binom((m + k - 1) as usize, m as usize);
            (-d).powi(-k) * d.powi(-m) * b
        }
    };
    let g0 = contract(&pole_series(zero, 1)).transpose();
    let g1 = contract(&pole_series(zero, 2)).transpose();
    let g_inf = contract(&|m| if m == 0 { one } else { zero }).transpose();
    let root = config.root();
    let inv_t = 1.0 / t as f64;
    let mut g_r = Vec::with_capacity(config.n_poles());
    for &z in config.zetas() {
        let mut acc = SquareMatrix::zeros(t);
        for k in 0..t as i64 {
            let mk = contract(&pole_series(root.pow(k) * z, 1));
            for i in 0..t {
                for j in 0..t {
                    let v = mk.get(j, i) * root.pow(k * (j as i64 - i as i64)) * inv_t;
                    acc.add_at(i, j, v);
                }
            }
        }
        g_r.push(acc);
    }
    Ok((value, GaudinCoefficients { a0_0: g0, a0_1: g1, a_r: g_r, a_inf: g_inf }))
}

/// `H_{p,∞} = Res_∞ (λ^p/(p+1)) Tr L^{p+1} dλ`.
pub fn hamiltonian_at_infinity<S: Scalar>(p: usize, l: &RationalMatrix<S>) -> Result<S> {
    let o = l.degree().unwrap_or(0) as i32;
    let top = p as i32 + 1;
    let e = l.laurent_expand(Point::Infinity, top + o * p as i32)?;
    let lp = e.pow(p, Some(top + o))?;
    Ok(lp.trace_product_coeff(&e, top)?.scale(C64::new(-1.0 / (p + 1) as f64, 0.0)))
}

/// Weight-0 equivariant `h` whose only principal parts sit on the orbit of
/// the flow's point and match those of `λ^p L^p` there.
pub fn lax_partner(f: FlowId, l: &RationalMatrix<C64>, config: &PoleConfig) -> Result<RationalMatrix<C64>> {
    check_flow(f, config)?;
    let p = f.p as i32;
    let point = flow_point(f, config);
    let o = l.pole_order_at(point) as i32;
    let dim = l.dim();
    if f.r == 0 {
        // (λ^p L^p)[n] = L^p[n - p]
        let e = l.laurent_expand(point, -1 - p + o * (p - 1))?;
        let lp = e.pow(f.p, Some(-1 - p))?;
        let order = (o * p - p).max(0);
        let principal = (1..=order).map(|k| lp.coeff(-k - p)).collect::<Result<Vec<_>>>()?;
        return RationalMatrix::new(dim, Vec::new(), vec![Pole::new(C64::new(0.0, 0.0), principal)]);
    }
    let z = config.zetas()[f.r - 1];
    let e = l.laurent_expand(point, -1 + o * (p - 1))?;
    let lp = e.pow(f.p, Some(-1))?;
    let ell: Vec<C64> = (0..=f.p).map(|m| z.powi((f.p - m) as i32) * binom(f.p, m)).collect();
    let prod = lp.mul_scalar_poly(0, &ell);
    let order = o * p;
    let principal = (1..=order).map(|k| prod.coeff(-k)).collect::<Result<Vec<_>>>()?;
    let root = config.root();
    let mut poles = Vec::new();
    for k in 0..config.order() as i64 {
        let pc = principal
            .iter()
            .enumerate()
            .map(|(n, c)| root.sigma_pow(c, k).scale_c(root.pow(k * (n as i64 + 1))))
            .collect();
        poles.push(Pole::new(root.pow(k) * z, pc));
    }
    RationalMatrix::new(dim, Vec::new(), poles)
}

/// `∂_{t_p^r} L = -[h, L]`, reduced to the pole orders of `L`, together with
/// the implied coefficient derivatives.
pub fn lax_rhs(
    f: FlowId,
    l: &RationalMatrix<C64>,
    config: &PoleConfig,
) -> Result<(RationalMatrix<C64>, GaudinCoefficients<C64>)> {
    let h = lax_partner(f, l, config)?;
    let full = l.mul(&h)?.sub(&h.mul(l)?)?;
    let tol = 1e-10 * (1.0 + h.max_coeff()) * (1.0 + l.max_coeff());
    let reduced = full.reduce_orders(|z| l.pole_order_at(Point::Finite(z)), l.degree(), tol)?;
    let coeffs = coefficients_of(&reduced, config);
    Ok((reduced, coeffs))
}

/// `φ̇ φ^{-1}` at the origin and at each `ζ_r`; `None` where the dressing is static.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DressingVelocity {
    pub origin: Option<SquareMatrix<C64>>,
    pub poles: Vec<Option<SquareMatrix<C64>>>,
}

/// `Σ_r Tr(A_r φ̇_r φ_r^{-1}) + Tr(A0_0 φ̇0_0 φ0_0^{-1}) - H_{p,r}`.
pub fn lagrangian_coeff(
    f: FlowId,
    coeffs: &GaudinCoefficients<C64>,
    config: &PoleConfig,
    velocity: &DressingVelocity,
) -> Result<C64> {
    let l = assemble_lax(coeffs, config)?;
    let mut kinetic = C64::new(0.0, 0.0);
    if let Some(om) = &velocity.origin {
        kinetic += coeffs.a0_0.trace_product(om);
    }
    for (a, om) in coeffs.a_r.iter().zip(&velocity.poles) {
        if let Some(om) = om {
            kinetic += a.trace_product(om);
        }
    }
    Ok(kinetic - hamiltonian(f, &l, config)?)
}

/// Closed forms of `H_{1,0}` and `H_{1,r}` in terms of the coefficients.
pub fn explicit_h1(coeffs: &GaudinCoefficients<C64>, config: &PoleConfig, r: usize) -> Result<C64> {
    check_flow(FlowId::new(1, r), config)?;
    let root = config.root();
    let t = config.order() as i64;
    let zetas = config.zetas();
    let c = coeffs;
    if r == 0 {
        let mut h = c.a0_0.trace_product(&c.a0_0) * 0.5 + c.a0_1.trace_product(&c.a_inf);
        for (a, &z) in c.a_r.iter().zip(zetas) {
            h -= c.a0_1.trace_product(a) / z;
        }
        return Ok(h);
    }
    let ar = &c.a_r[r - 1];
    let zr = zetas[r - 1];
    let mut h = c.a0_0.trace_product(ar) + c.a0_1.trace_product(ar) / zr + ar.trace_product(&c.a_inf) * zr;
    for k in 0..t {
        h += ar.trace_product(&root.sigma_pow(ar, k)) / (2 * t) as f64;
    }
    for (s, (a_s, &zs)) in c.a_r.iter().zip(zetas).enumerate() {
        if s == r - 1 {
            continue;
        }
        for k in 0..t {
            h += ar.trace_product(&root.sigma_pow(a_s, k)) * zr / (zr - root.pow(k) * zs) / t as f64;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::RootOfUnity;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn m(t: usize, seed: f64) -> SquareMatrix<C64> {
        SquareMatrix::from_fn(t, |i, j| {
            let x = seed + 0.93 * i as f64 + 0.41 * j as f64;
            c(libm::sin(2.3 * x), libm::cos(1.3 * x))
        })
    }

    fn sample(t: usize, zetas: Vec<C64>) -> (GaudinCoefficients<C64>, PoleConfig) {
        let config = PoleConfig::new(t, zetas).unwrap();
        let n = config.n_poles();
        let coeffs = GaudinCoefficients {
            a0_0: crate::algebra::grade_component(&m(t, 0.1), 0),
            a0_1: crate::algebra::grade_component(&m(t, 0.2), -1),
            a_r: (0..n).map(|r| m(t, 1.0 + r as f64)).collect(),
            a_inf: crate::algebra::grade_component(&m(t, 0.3), 1),
        };
        (coeffs, config)
    }

    #[test]
    fn zero_dynamics_gives_constant() {
        let config = PoleConfig::new(3, vec![c(1.0, 0.5)]).unwrap();
        let mut coeffs = GaudinCoefficients::<C64>::zeros(3, 1);
        coeffs.a_inf = crate::algebra::grade_component(&m(3, 0.0), 1);
        let l = assemble_lax(&coeffs, &config).unwrap();
        assert!(l.poles().is_empty());
        assert_eq!(l.poly(), &[coeffs.a_inf.clone()]);
    }

    #[test]
    fn lax_is_weight_one_equivariant() {
        let (coeffs, config) = sample(3, vec![c(1.1, 0.4)]);
        let l = assemble_lax(&coeffs, &config).unwrap();
        let res = crate::ratmat::check_equivariance(&l, 1, config.root()).unwrap();
        assert!(res < 1e-13, "{res}");
    }

    #[test]
    fn residue_theorem_for_hamiltonians() {
        let (coeffs, config) = sample(3, vec![c(1.1, 0.4), c(-0.6, 1.3)]);
        let l = assemble_lax(&coeffs, &config).unwrap();
        for p in 1..=3 {
            let mut sum = hamiltonian_at_infinity(p, &l).unwrap();
            for r in 0..=2 {
                sum += hamiltonian(FlowId::new(p, r), &l, &config).unwrap();
            }
            assert!(sum.norm() < 1e-10, "p={p}: {sum}");
        }
    }

    #[test]
    fn explicit_first_hamiltonians() {
        let (coeffs, config) = sample(3, vec![c(1.1, 0.4), c(-0.6, 1.3)]);
        let l = assemble_lax(&coeffs, &config).unwrap();
        for r in 0..=2 {
            let a = hamiltonian(FlowId::new(1, r), &l, &config).unwrap();
            let b = explicit_h1(&coeffs, &config, r).unwrap();
            assert!((a - b).norm() < 1e-11, "r={r}: {a} vs {b}");
        }
    }

    #[test]
    fn first_partners_closed_form() {
        let (coeffs, config) = sample(2, vec![c(0.8, -0.3)]);
        let l = assemble_lax(&coeffs, &config).unwrap();
        let h0 = lax_partner(FlowId::new(1, 0), &l, &config).unwrap();
        let lam = c(0.37, 0.52);
        let expect0 = coeffs.a0_1.scale_c(C64::new(1.0, 0.0) / lam);
        assert!(h0.eval(lam).unwrap().dist(&expect0) < 1e-13);
        let h1 = lax_partner(FlowId::new(1, 1), &l, &config).unwrap();
        let root = RootOfUnity::new(2).unwrap();
        let z = config.zetas()[0];
        let mut expect1 = SquareMatrix::zeros(2);
        for k in 0..2 {
            let w = root.pow(k) * z;
            expect1.add_scaled_c(&root.sigma_pow(&coeffs.a_r[0], k), w / (lam - w) / 2.0);
        }
        assert!(h1.eval(lam).unwrap().dist(&expect1) < 1e-13);
    }

    #[test]
    fn lax_rhs_preserves_spectrum() {
        let (coeffs, config) = sample(3, vec![c(1.1, 0.4)]);
        let l = assemble_lax(&coeffs, &config).unwrap();
        for f in [FlowId::new(1, 0), FlowId::new(2, 0), FlowId::new(1, 1), FlowId::new(3, 1)] {
            let (dl, _) = lax_rhs(f, &l, &config).unwrap();
            for lam in [c(0.7, 0.2), c(-0.4, 1.1)] {
                let lv = l.eval(lam).unwrap();
                let dv = dl.eval(lam).unwrap();
                let mut pw = SquareMatrix::identity(3);
                for _ in 1..=3 {
                    let tr = dv.trace_product(&pw);
                    assert!(tr.norm() < 1e-9 * (1.0 + pw.max_abs()), "{f}: {tr}");
                    pw = &pw * &lv;
                }
            }
        }
    }

    #[test]
    fn dressing_roundtrip_of_grades() {
        let t = 3;
        let root = RootOfUnity::new(t).unwrap();
        let _ = root;
        let o = OrbitData::new(
            SquareMatrix::diagonal(&[c(1.2, 0.1), c(0.8, -0.3), c(1.5, 0.2)]),
            crate::algebra::grade_component(&m(t, 3.0), 1),
            crate::algebra::grade_component(&m(t, 3.5), 0),
            crate::algebra::grade_component(&m(t, 4.0), -1),
            vec![&SquareMatrix::identity(t) + &m(t, 5.0).scale_c(c(0.2, 0.0))],
            vec![m(t, 6.0)],
            crate::algebra::grade_component(&m(t, 7.0), 1),
        )
        .unwrap();
        assert!((o.phi0_0.det() - c(1.0, 0.0)).norm() < 1e-13);
        let coeffs = dress(&o).unwrap();
        assert!(grade_defect(&coeffs.a0_0, 0) < 1e-13);
        assert!(grade_defect(&coeffs.a0_1, -1) < 1e-13);
    }
}
