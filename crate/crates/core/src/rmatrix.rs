//! The twisted classical r-matrix of the cyclotomic Gaudin algebra.
//!
//! Two-slot tensors act on `C^T ⊗ C^T` with the Kronecker layout
//! `(A⊗B)[(i,k),(j,l)] = A_ij B_kl`, flattened row-major as `i*T + k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{RootOfUnity, SquareMatrix};
use crate::error::{Error, Result};
use crate::models::PhaseState;
use crate::ratmat::{LocalTuple, POLE_EPS, Point, Pole, PoleConfig, RationalMatrix};
use crate::scalar::{C64, Dual, Scalar};

/// Operator on `C^T ⊗ C^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorKernel {
    t: usize,
    pub mat: SquareMatrix<C64>,
}

impl TensorKernel {
    pub fn zeros(t: usize) -> Self {
        TensorKernel { t, mat: SquareMatrix::zeros(t * t) }
    }

    pub fn order(&self) -> usize {
        self.t
    }

    pub fn kron(a: &SquareMatrix<C64>, b: &SquareMatrix<C64>) -> Self {
        let t = a.dim();
        let mat = SquareMatrix::from_fn(t * t, |row, col| a.get(row / t, col / t) * b.get(row % t, col % t));
        TensorKernel { t, mat }
    }

    /// `X ⊗ 1`
    pub fn first(a: &SquareMatrix<C64>) -> Self {
        Self::kron(a, &SquareMatrix::identity(a.dim()))
    }

    /// `1 ⊗ X`
    pub fn second(a: &SquareMatrix<C64>) -> Self {
        Self::kron(&SquareMatrix::identity(a.dim()), a)
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize, j: usize, l: usize) -> C64 {
        self.mat.get(i * self.t + k, j * self.t + l)
    }

    /// Exchanges the two tensor factors, `P K P`.
    pub fn swap(&self) -> Self {
        let t = self.t;
        let mat = SquareMatrix::from_fn(t * t, |row, col| self.get(row % t, row / t, col % t, col / t));
        TensorKernel { t, mat }
    }

    /// `Tr_2 K`
    pub fn partial_trace_second(&self) -> SquareMatrix<C64> {
        let t = self.t;
        SquareMatrix::from_fn(t, |i, j| (0..t).map(|k| self.get(i, k, j, k)).sum())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        TensorKernel { t: self.t, mat: self.mat.commutator(&other.mat) }
    }

    pub fn add(&self, other: &Self) -> Self {
        TensorKernel { t: self.t, mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &Self) -> Self {
        TensorKernel { t: self.t, mat: &self.mat - &other.mat }
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.mat.dist(&other.mat)
    }
}

/// `C_12 = Σ_ij E_ij ⊗ E_ji`.
pub fn casimir(t: usize) -> TensorKernel {
    let mut k = TensorKernel::zeros(t);
    for i in 0..t {
        for j in 0..t {
            k.mat.set(i * t + j, j * t + i, C64::new(1.0, 0.0));
        }
    }
    k
}

/// `r_12(λ,μ) = (1/T) Σ_k σ_1^k C_12 / (μ - ω^{-k} λ)`.
pub fn r_kernel(lambda: C64, mu: C64, root: &RootOfUnity) -> Result<TensorKernel> {
    let t = root.order();
    let mut denom_inv = Vec::with_capacity(t);
    for k in 0..t as i64 {
        let d = mu - root.pow(-k) * lambda;
        if d.norm() <= POLE_EPS {
            return Err(Error::AtPole { distance: d.norm() });
        }
        denom_inv.push(C64::new(1.0, 0.0) / d);
    }
    let mut out = TensorKernel::zeros(t);
    for i in 0..t {
        for j in 0..t {
            let mut c = C64::new(0.0, 0.0);
            for (k, inv) in denom_inv.iter().enumerate() {
                c += root.pow(k as i64 * (j as i64 - i as i64)) * inv;
            }
            out.mat.set(i * t + j, j * t + i, c / t as f64);
        }
    }
    Ok(out)
}

/// Places a two-slot kernel into factors `a` and `b` of `(C^T)^{⊗3}`.
pub fn embed3(k: &TensorKernel, a: usize, b: usize) -> SquareMatrix<C64> {
    let t = k.order();
    let n = t * t * t;
    let digits = |x: usize| [x / (t * t), (x / t) % t, x % t];
    let c = 3 - a - b;
    SquareMatrix::from_fn(n, |row, col| {
        let r = digits(row);
        let s = digits(col);
        if r[c] != s[c] {
            return C64::new(0.0, 0.0);
        }
        k.get(r[a], r[b], s[a], s[b])
    })
}

/// Classical Yang-Baxter residual
/// `[r12(λ,μ), r13(λ,ν)] + [r12(λ,μ), r23(μ,ν)] + [r32(ν,μ), r13(λ,ν)]`,
/// max-entry norm. Full assembly for `T ≤ 4`, 200 contraction probes above.
pub fn cybe_residual(lambda: C64, mu: C64, nu: C64, root: &RootOfUnity) -> Result<f64> {
    let r12 = embed3(&r_kernel(lambda, mu, root)?, 0, 1);
    let r13 = embed3(&r_kernel(lambda, nu, root)?, 0, 2);
    let r23 = embed3(&r_kernel(mu, nu, root)?, 1, 2);
    let r32 = embed3(&r_kernel(nu, mu, root)?, 2, 1);
    if root.order() <= 4 {
        let total = &(&r12.commutator(&r13) + &r12.commutator(&r23)) + &r32.commutator(&r13);
        return Ok(total.max_abs());
    }
    let n = r12.dim();
    let mut worst: f64 = 0.0;
    for probe in 0..200 {
        let v: Vec<C64> = (0..n)
            .map(|i| {
                let x = libm::sin(12.9898 * (i + 1) as f64 + 78.233 * (probe + 1) as f64) * 43758.5453;
                let y = libm::cos(4.1414 * (i + 3) as f64 + 9.731 * (probe + 2) as f64) * 24634.6345;
                C64::new(x - libm::floor(x) - 0.5, y - libm::floor(y) - 0.5)
            })
            .collect();
        let mut acc = vec![C64::new(0.0, 0.0); n];
        for (a, b) in [(&r12, &r13), (&r12, &r23), (&r32, &r13)] {
            let ab = matvec(a, &matvec(b, &v));
            let ba = matvec(b, &matvec(a, &v));
            for i in 0..n {
                acc[i] += ab[i] - ba[i];
            }
        }
        worst = acc.iter().fold(worst, |m, z| m.max(z.norm()));
    }
    Ok(worst)
}

fn matvec(a: &SquareMatrix<C64>, v: &[C64]) -> Vec<C64> {
    let n = a.dim();
    (0..n).map(|i| (0..n).map(|j| a.get(i, j) * v[j]).sum()).collect()
}

/// `|z1^{T-1-[l]} z2^{[l]} / (z1^T - z2^T) - (1/T) Σ_k ω^{-kl}/(z1 - ω^k z2)|`.
pub fn averaging_residual(z1: C64, z2: C64, l: i64, root: &RootOfUnity) -> Result<f64> {
    let t = root.order() as i64;
    let lm = l.rem_euclid(t) as i32;
    let denom = z1.powi(t as i32) - z2.powi(t as i32);
    if denom.norm() <= POLE_EPS {
        return Err(Error::AtPole { distance: denom.norm() });
    }
    let lhs = z1.powi(t as i32 - 1 - lm) * z2.powi(lm) / denom;
    let mut rhs = C64::new(0.0, 0.0);
    for k in 0..t {
        rhs += root.pow(-k * l) / (z1 - root.pow(k) * z2);
    }
    Ok((lhs - rhs / t as f64).norm())
}

/// Which ordering of the kernel expansion to contract with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSign {
    /// `⟨ι_μ ι_λ r_12, X_2⟩_2`, the regular (Taylor) projection.
    Plus,
    /// `⟨ι_λ ι_μ r_12, X_2⟩_2`, minus the singular projection.
    Minus,
}

/// Contracts the expanded r-matrix kernel with `X` in the second slot,
/// residue by residue, and returns the result as a tuple known through
/// `trunc` at every marked point.
pub fn kernel_projection(x: &LocalTuple, config: &PoleConfig, sign: KernelSign, trunc: i32) -> Result<LocalTuple> {
    match sign {
        KernelSign::Plus => kernel_plus(x, config, trunc),
        KernelSign::Minus => {
            let r = kernel_minus_rational(x, config)?;
            LocalTuple::of(&r, config, trunc)
        }
    }
}

/// Weight of marked point `idx` in the pairing.
fn slot_weight(idx: usize, config: &PoleConfig) -> f64 {
    if idx == 0 || idx == config.n_poles() + 1 { 1.0 } else { config.order() as f64 }
}

fn slot_center(idx: usize, config: &PoleConfig) -> C64 {
    if idx == 0 { C64::new(0.0, 0.0) } else { config.zetas()[idx - 1] }
}

/// `Σ_r w_r Res_{μ=ζ_r} X_r(μ) (μ - a)^{-(m+1)} dμ`, including infinity.
fn contract_pole_kernel(x: &LocalTuple, config: &PoleConfig, a: C64, m: usize) -> Result<SquareMatrix<C64>> {
    let dim = x.slots[0].dim();
    let n_fin = config.n_poles() + 1;
    let mut acc = SquareMatrix::zeros(dim);
    for idx in 0..n_fin {
        let xs = &x.slots[idx];
        let z = slot_center(idx, config);
        let w = slot_weight(idx, config);
        if (a - z).norm() <= POLE_EPS {
            acc.add_scaled_c(&xs.coeff(m as i32)?, C64::new(w, 0.0));
            continue;
        }
        // Taylor coefficients of (μ-a)^{-(m+1)} at z pair with X_r[-1-j].
        let inv = C64::new(1.0, 0.0) / (z - a);
        let mut f = inv.powi(m as i32 + 1);
        let mut j = 0usize;
        while -1 - (j as i32) >= xs.low() {
            let sgn = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            let g = f * sgn * crate::ratmat::binom(m + j, j) * w;
            acc.add_scaled_c(&xs.coeff(-1 - j as i32)?, g);
            f *= inv;
            j += 1;
        }
    }
    // Res_{μ=∞} = -[μ^{-1}] = -Σ_j C(m+j,j) a^j X_∞[u^{-(m+j)}]
    let xi = &x.slots[n_fin];
    let mut f = C64::new(1.0, 0.0);
    let mut j = 0usize;
    while -((m + j) as i32) >= xi.low() {
        let g = -f * crate::ratmat::binom(m + j, j);
        acc.add_scaled_c(&xi.coeff(-((m + j) as i32))?, g);
        f *= a;
        j += 1;
    }
    Ok(acc)
}

/// `Σ_r w_r Res_{μ=ζ_r} μ^m X_r(μ) dμ`, including infinity.
fn contract_monomial(x: &LocalTuple, config: &PoleConfig, m: usize) -> Result<SquareMatrix<C64>> {
    let dim = x.slots[0].dim();
    let n_fin = config.n_poles() + 1;
    let mut acc = SquareMatrix::zeros(dim);
    for idx in 0..n_fin {
        let xs = &x.slots[idx];
        let z = slot_center(idx, config);
        let w = slot_weight(idx, config);
        for j in 0..=m {
            if -1 - (j as i32) < xs.low() {
                break;
            }
            let g = z.powi((m - j) as i32) * crate::ratmat::binom(m, j) * w;
            acc.add_scaled_c(&xs.coeff(-1 - j as i32)?, g);
        }
    }
    let xi = &x.slots[n_fin];
    acc.add_scaled_c(&xi.coeff(m as i32 + 1)?, C64::new(-1.0, 0.0));
    Ok(acc)
}

fn kernel_plus(x: &LocalTuple, config: &PoleConfig, trunc: i32) -> Result<LocalTuple> {
    let root = config.root();
    let t = config.order() as i64;
    let dim = x.slots[0].dim();
    let mut slots = Vec::new();
    for (idx, point) in config.points().into_iter().enumerate() {
        let mut s = crate::ratmat::LaurentSeries::zero(dim, point, 0, trunc);
        match point {
            Point::Finite(zs) => {
                // (1/T) Σ_k ω^{-km} σ^k ⟨(μ - ω^{-k} ζ_s)^{-(m+1)}, X⟩
                for m in 0..=trunc.max(-1) {
                    let mut c = SquareMatrix::zeros(dim);
                    for k in 0..t {
                        let a = root.pow(-k) * zs;
                        let inner = contract_pole_kernel(x, config, a, m as usize)?;
                        c.add_scaled_c(&root.sigma_pow(&inner, k), root.pow(-k * m as i64));
                    }
                    *s.coeff_mut(m) = c.scale_c(C64::new(1.0 / t as f64, 0.0));
                }
                let _ = idx;
            }
            Point::Infinity => {
                // coefficient of λ^{-(m+1)}: -(1/T) Σ_k ω^{k(m+1)} σ^k ⟨μ^m, X⟩
                for m in 0..trunc.max(0) {
                    let inner = contract_monomial(x, config, m as usize)?;
                    let mut c = SquareMatrix::zeros(dim);
                    for k in 0..t {
                        c.add_scaled_c(&root.sigma_pow(&inner, k), root.pow(k * (m as i64 + 1)));
                    }
                    *s.coeff_mut(m + 1) = c.scale_c(C64::new(-1.0 / t as f64, 0.0));
                }
            }
        }
        slots.push(s);
    }
    Ok(LocalTuple { slots })
}

/// `⟨ι_λ ι_μ r_12, X_2⟩_2` as a rational function of `λ`.
pub fn kernel_minus_rational(x: &LocalTuple, config: &PoleConfig) -> Result<RationalMatrix<C64>> {
    let root = config.root();
    let t = config.order() as i64;
    let dim = x.slots[0].dim();
    let n_fin = config.n_poles() + 1;
    let mut total = RationalMatrix::zero(dim);
    for idx in 0..n_fin {
        let xs = &x.slots[idx];
        let z = slot_center(idx, config);
        let w = slot_weight(idx, config);
        let order = (-xs.low()).max(0) as usize;
        // -(w/T) Σ_k Σ_m ω^{k(m+1)} σ^k X_r[-1-m] / (λ - ω^k ζ_r)^{m+1}
        for k in 0..t {
            let principal = (0..order)
                .map(|m| {
                    let c = xs.coeff(-1 - m as i32)?;
                    Ok(root.sigma_pow(&c, k).scale_c(root.pow(k * (m as i64 + 1)) * (-w / t as f64)))
                })
                .collect::<Result<Vec<_>>>()?;
            let term = RationalMatrix::new(dim, Vec::new(), vec![Pole::new(root.pow(k) * z, principal)])?;
            total = total.add(&term)?;
        }
    }
    // (1/T) Σ_k Σ_m ω^{-km} λ^m σ^k (-X_∞[u^{-m}])
    let xi = &x.slots[n_fin];
    let deg = (-xi.low()).max(0) as usize;
    let poly = (0..=deg)
        .map(|m| {
            let c = xi.coeff(-(m as i32))?;
            let mut acc = SquareMatrix::zeros(dim);
            for k in 0..t {
                acc.add_scaled_c(&root.sigma_pow(&c, k), root.pow(-k * m as i64));
            }
            Ok(acc.scale_c(C64::new(-1.0 / t as f64, 0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    total.add(&RationalMatrix::new(dim, poly, Vec::new())?)
}

/// `max_s |R_+(X)_s - W_s|` and `max_s |R_-(X)_s + ι_s Z|` against the split,
/// each relative to `1 + ` the largest coefficient of the reference tuple.
/// Nearby pole orbits make Taylor coefficients grow like `sep^{-n}`, so the
/// absolute difference carries that scale.
pub fn projection_vs_split(x: &LocalTuple, config: &PoleConfig, trunc: i32) -> Result<(f64, f64)> {
    let (w, z) = crate::ratmat::split_tuple(x, config, 0)?;
    let plus = kernel_projection(x, config, KernelSign::Plus, trunc)?;
    let minus = kernel_projection(x, config, KernelSign::Minus, trunc)?;
    let neg_z = LocalTuple::of(&z.scale_c(C64::new(-1.0, 0.0)), config, trunc)?;
    Ok((plus.dist(&w) / (1.0 + w.max_abs()), minus.dist(&neg_z) / (1.0 + neg_z.max_abs())))
}

/// Embeds a `T×T` matrix-valued object into the generic scalar type.
pub fn lift_kernel<S: Scalar>(k: &TensorKernel) -> SquareMatrix<S> {
    SquareMatrix::lift(&k.mat)
}

/// `∂L(λ)/∂z_n` for every coordinate `z_n`, by forward-mode duals.
fn lax_derivatives(state: &PhaseState, lambda: C64) -> Result<Vec<SquareMatrix<C64>>> {
    let z = state.coords();
    let mut seeded: Vec<Dual> = z.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = Vec::with_capacity(z.len());
    for n in 0..z.len() {
        seeded[n].eps = C64::new(1.0, 0.0);
        let l = state.lax_at(&seeded)?.eval(lambda)?;
        seeded[n].eps = C64::new(0.0, 0.0);
        out.push(l.map(|d| d.eps));
    }
    Ok(out)
}

/// `{L_1(λ), L_2(μ)}` with entry `[(a,c),(b,d)] = {L_ab(λ), L_cd(μ)}`.
pub fn sklyanin_bracket(state: &PhaseState, lambda: C64, mu: C64) -> Result<TensorKernel> {
    let t = state.order();
    let dl = lax_derivatives(state, lambda)?;
    let dm = lax_derivatives(state, mu)?;
    let mut out = TensorKernel::zeros(t);
    for (a, b, w) in state.symplectic_pairs() {
        let term = TensorKernel::kron(&dl[a], &dm[b]).sub(&TensorKernel::kron(&dl[b], &dm[a]));
        out.mat.add_scaled_c(&term.mat, C64::new(w, 0.0));
    }
    Ok(out)
}

/// `[r_12(λ,μ), L_1(λ)] - [r_21(μ,λ), L_2(μ)]`.
pub fn sklyanin_rhs(state: &PhaseState, lambda: C64, mu: C64) -> Result<TensorKernel> {
    let config = state.pole_config()?;
    let root = config.root();
    for k in 0..root.order() as i64 {
        let d = (mu - root.pow(k) * lambda).norm();
        if d <= POLE_EPS {
            return Err(Error::PoleCollision { distance: d });
        }
    }
    let lax = state.lax()?;
    let l1 = TensorKernel::first(&lax.eval(lambda)?);
    let l2 = TensorKernel::second(&lax.eval(mu)?);
    let r12 = r_kernel(lambda, mu, root)?;
    let r21 = r_kernel(mu, lambda, root)?.swap();
    Ok(r12.commutator(&l1).sub(&r21.commutator(&l2)))
}

/// Max-abs of `{L_1(λ), L_2(μ)} - ([r_12, L_1] - [r_21, L_2])`.
pub fn sklyanin_residual(state: &PhaseState, lambda: C64, mu: C64) -> Result<f64> {
    let lhs = sklyanin_bracket(state, lambda, mu)?;
    let rhs = sklyanin_rhs(state, lambda, mu)?;
    Ok(lhs.sub(&rhs).mat.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn casimir_t2_entries() {
        let k = casimir(2);
        let flat: Vec<f64> = k.mat.as_slice().iter().map(|z| z.re).collect();
        assert_eq!(flat, [1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.]);
    }

    #[test]
    fn casimir_partial_trace_is_identity() {
        for t in 1..=5 {
            let tr = casimir(t).partial_trace_second();
            assert!(tr.dist(&SquareMatrix::identity(t)) < 1e-15);
        }
    }

    #[test]
    fn r_kernel_t2_values() {
        let root = RootOfUnity::new(2).unwrap();
        let r = r_kernel(c(1.0, 0.0), c(2.0, 0.0), &root).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if (j + 2 - i) % 2 == 0 { 2.0 / 3.0 } else { 1.0 / 3.0 };
                assert!((r.get(i, j, j, i) - c(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn r_kernel_t1_is_casimir_over_difference() {
        let root = RootOfUnity::new(1).unwrap();
        let r = r_kernel(c(0.5, 0.1), c(1.5, -0.2), &root).unwrap();
        assert!((r.get(0, 0, 0, 0) - C64::new(1.0, 0.0) / c(1.0, -0.3)).norm() < 1e-15);
    }

    #[test]
    fn averaging_example() {
        let root = RootOfUnity::new(2).unwrap();
        assert!(averaging_residual(c(2.0, 0.0), c(1.0, 0.0), 0, &root).unwrap() < 1e-15);
    }

    #[test]
    fn cybe_holds_at_a_sample_point() {
        for t in 1..=4 {
            let root = RootOfUnity::new(t).unwrap();
            let res = cybe_residual(c(0.3, 0.2), c(-0.7, 0.5), c(1.1, -0.4), &root).unwrap();
            assert!(res < 1e-12, "T={t}: {res}");
        }
    }

    #[test]
    fn swap_is_involution() {
        let root = RootOfUnity::new(3).unwrap();
        let r = r_kernel(c(0.3, 0.2), c(-0.7, 0.5), &root).unwrap();
        assert_eq!(r.swap().swap(), r);
        assert!(casimir(3).swap().dist(&casimir(3)) < 1e-15);
    }

    fn sample_matrix(t: usize, seed: f64) -> SquareMatrix<C64> {
        SquareMatrix::from_fn(t, |i, j| {
            let x = seed + 1.3 * i as f64 + 0.7 * j as f64;
            c(libm::sin(3.1 * x), libm::cos(1.7 * x))
        })
    }

    #[test]
    fn kernel_projection_matches_split() {
        for (t, zetas) in [(2usize, vec![]), (2, vec![c(1.3, 0.4)]), (3, vec![c(0.9, -0.5), c(-1.2, 1.7)])] {
            let config = PoleConfig::new(t, zetas.clone()).unwrap();
            let mut poles = vec![Pole::new(c(0.0, 0.0), vec![sample_matrix(t, 0.1), sample_matrix(t, 0.2)])];
            for (r, &z) in zetas.iter().enumerate() {
                poles.push(Pole::new(z, vec![sample_matrix(t, 1.0 + r as f64), sample_matrix(t, 2.0 + r as f64)]));
            }
            let poly = vec![sample_matrix(t, 5.0), sample_matrix(t, 6.0), sample_matrix(t, 7.0)];
            let r = RationalMatrix::new(t, poly, poles).unwrap();
            let x = LocalTuple::of(&r, &config, 8).unwrap().twisted(0);
            let (dp, dm) = projection_vs_split(&x, &config, 6).unwrap();
            assert!(dp < 1e-10 && dm < 1e-10, "T={t}: plus {dp:e} minus {dm:e}");
        }
    }

    fn dst3() -> PhaseState {
        let m =
            SquareMatrix::from_fn(3, |i, j| C64::new(if i == j { 1.5 } else { 0.2 * (i + j) as f64 }, 0.1 * j as f64));
        PhaseState::Dst(
            crate::models::dst_from_orbit(
                &m,
                alloc::vec![C64::new(0.1, 0.0), C64::new(-0.3, 0.2), C64::new(0.4, 0.0)],
                C64::new(0.9, 0.3),
            )
            .unwrap(),
        )
    }

    #[test]
    fn sklyanin_toda_example() {
        let st =
            PhaseState::Toda(crate::models::TodaState::new(alloc::vec![0.2, -0.1], alloc::vec![0.3, 0.5]).unwrap());
        let r = sklyanin_residual(&st, C64::new(0.7, 0.0), C64::new(0.0, 1.9)).unwrap();
        assert!(r < 1e-9, "{r}");
    }

    #[test]
    fn sklyanin_dst_and_coupled() {
        let (l, m) = (C64::new(0.6, 0.35), C64::new(-0.8, 1.1));
        assert!(sklyanin_residual(&dst3(), l, m).unwrap() < 1e-9);
        let cs = crate::models::CoupledState::new(
            alloc::vec![C64::new(0.1, 0.0), C64::new(-0.2, 0.0)],
            alloc::vec![C64::new(0.4, 0.0), C64::new(0.3, 0.0)],
            alloc::vec![C64::new(0.7, 0.1), C64::new(0.2, 0.0)],
            alloc::vec![C64::new(1.0, 0.0), C64::new(0.6, -0.2)],
            alloc::vec![C64::new(0.2, 0.0), C64::new(0.0, 0.0)],
            C64::new(1.2, 0.2),
            0.5,
        )
        .unwrap();
        assert!(sklyanin_residual(&PhaseState::Coupled(cs), l, m).unwrap() < 1e-9);
    }

    #[test]
    fn sklyanin_rejects_orbit_collision() {
        let st = dst3();
        let l = C64::new(0.6, 0.35);
        let m = RootOfUnity::new(3).unwrap().omega() * l;
        assert!(sklyanin_residual(&st, l, m).is_err());
    }

    #[test]
    fn sklyanin_bracket_matches_finite_differences() {
        // Cross-oracle: brackets from central differences with step 1e-6.
        let st = dst3();
        let (l, m) = (C64::new(0.6, 0.35), C64::new(-0.8, 1.1));
        let z = st.coords();
        let h = 1e-6;
        let fd = |lam: C64, n: usize| {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[n] += h;
            zm[n] -= h;
            let a = st.with_coords(&zp).unwrap().lax().unwrap().eval(lam).unwrap();
            let b = st.with_coords(&zm).unwrap().lax().unwrap().eval(lam).unwrap();
            (&a - &b).scale_c(C64::new(0.5 / h, 0.0))
        };
        let mut approx = TensorKernel::zeros(3);
        for (a, b, w) in st.symplectic_pairs() {
            let term = TensorKernel::kron(&fd(l, a), &fd(m, b)).sub(&TensorKernel::kron(&fd(l, b), &fd(m, a)));
            approx.mat.add_scaled_c(&term.mat, C64::new(w, 0.0));
        }
        let exact = sklyanin_bracket(&st, l, m).unwrap();
        assert!(exact.dist(&approx) < 1e-6, "{}", exact.dist(&approx));
    }
}
