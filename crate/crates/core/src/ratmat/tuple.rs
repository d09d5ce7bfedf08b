use alloc::vec::Vec;

use super::POLE_EPS;
use super::laurent::{LaurentSeries, Point};
use super::rational::{Pole, RationalMatrix};
use crate::algebra::{RootOfUnity, SquareMatrix};
use crate::error::{Error, Result};
use crate::scalar::{C64, Scalar};

/// Cyclic order `T` and orbit representatives `ζ_1..ζ_N` of the finite
/// non-zero poles. The marked set is `{0, ζ_1, …, ζ_N, ∞}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleConfig {
    root: RootOfUnity,
    zetas: Vec<C64>,
}

impl PoleConfig {
    pub fn new(order: usize, zetas: Vec<C64>) -> Result<Self> {
        let root = RootOfUnity::new(order)?;
        for (r, &z) in zetas.iter().enumerate() {
            if z.norm() <= POLE_EPS {
                return Err(Error::InvalidConfig("pole representative at the origin"));
            }
            for &w in &zetas[r + 1..] {
                for k in 0..order as i64 {
                    let d = (root.pow(k) * z - w).norm();
                    if d <= POLE_EPS {
                        return Err(Error::PoleCollision { distance: d });
                    }
                }
            }
        }
        Ok(PoleConfig { root, zetas })
    }

    pub fn order(&self) -> usize {
        self.root.order()
    }

    pub fn root(&self) -> &RootOfUnity {
        &self.root
    }

    pub fn zetas(&self) -> &[C64] {
        &self.zetas
    }

    pub fn n_poles(&self) -> usize {
        self.zetas.len()
    }

    /// Marked points in tuple order: origin, `ζ_1..ζ_N`, infinity.
    pub fn points(&self) -> Vec<Point> {
        let mut pts = alloc::vec![Point::ORIGIN];
        pts.extend(self.zetas.iter().map(|&z| Point::Finite(z)));
        pts.push(Point::Infinity);
        pts
    }

    /// Distance from `λ` to the nearest pole of an equivariant function
    /// with this configuration (including the origin).
    pub fn distance_to_poles(&self, lambda: C64) -> f64 {
        let mut d = lambda.norm();
        for &z in &self.zetas {
            for k in 0..self.order() as i64 {
                d = d.min((lambda - self.root.pow(k) * z).norm());
            }
        }
        d
    }
}

/// One truncated Laurent series per marked point, in `PoleConfig::points` order.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTuple {
    pub slots: Vec<LaurentSeries<C64>>,
}

impl LocalTuple {
    /// `ι_S R`: expansion of `R` at every marked point through `trunc`.
    pub fn of(r: &RationalMatrix<C64>, config: &PoleConfig, trunc: i32) -> Result<Self> {
        let slots = config.points().into_iter().map(|p| r.laurent_expand(p, trunc)).collect::<Result<Vec<_>>>()?;
        Ok(LocalTuple { slots })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let slots = self.slots.iter().zip(&other.slots).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
        Ok(LocalTuple { slots })
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.slots.iter().zip(&other.slots).fold(0.0, |m, (a, b)| m.max(a.dist(b)))
    }

    /// Largest coefficient entry over all slots.
    pub fn max_abs(&self) -> f64 {
        self.slots.iter().fold(0.0, |m, s| m.max(s.max_abs()))
    }

    /// Projects the origin and infinity slots onto the twisted subspace of
    /// the given weight: the coefficient of `w^n` keeps grade `n + weight`
    /// at the origin and `-n + weight` at infinity.
    pub fn twisted(&self, weight: i64) -> Self {
        let mut out = self.clone();
        let last = out.slots.len() - 1;
        for (idx, sign) in [(0usize, 1i64), (last, -1i64)] {
            let s = &self.slots[idx];
            let mut t = s.clone();
            for n in s.low()..=s.trunc() {
                let g = sign * n as i64 + weight;
                *t.coeff_mut(n) = crate::algebra::grade_component(&s.coeff(n).unwrap(), g);
            }
            out.slots[idx] = t;
        }
        out
    }
}

/// `π(X)`: the equivariant rational function of weight `weight` whose
/// principal parts at `0`, the `Γ`-orbits of `ζ_r` and `∞` are those of `X`.
pub fn singular_part(x: &LocalTuple, config: &PoleConfig, weight: i64) -> Result<RationalMatrix<C64>> {
    let n_pts = config.n_poles() + 2;
    if x.slots.len() != n_pts {
        return Err(Error::DimensionMismatch { expected: n_pts, found: x.slots.len() });
    }
    let dim = x.slots[0].dim();
    let root = config.root();
    let t = config.order() as i64;
    let mut poles = Vec::new();
    let origin = &x.slots[0];
    let order0 = (-origin.low()).max(0);
    let principal0 = (1..=order0).map(|n| origin.coeff(-n)).collect::<Result<Vec<_>>>()?;
    poles.push(Pole::new(C64::new(0.0, 0.0), principal0));
    for (r, &z) in config.zetas().iter().enumerate() {
        let s = &x.slots[r + 1];
        let order = (-s.low()).max(0);
        let principal = (1..=order).map(|n| s.coeff(-n)).collect::<Result<Vec<_>>>()?;
        // Σ_k ω^{-kw} σ^k X^{(n)} / (ω^{-k}λ - ζ)^{n+1}
        for k in 0..t {
            let pc = principal
                .iter()
                .enumerate()
                .map(|(n, c)| root.sigma_pow(c, k).scale_c(root.pow(k * (n as i64 + 1 - weight))))
                .collect();
            poles.push(Pole::new(root.pow(k) * z, pc));
        }
    }
    let inf = &x.slots[n_pts - 1];
    let deg = (-inf.low()).max(0);
    let poly = (0..=deg).map(|d| inf.coeff(-d)).collect::<Result<Vec<_>>>()?;
    RationalMatrix::new(dim, poly, poles)
}

/// Splits `X` into `(W, Z)` with `Z = π(X)` and `W = X - ι_S Z` regular
/// (Taylor at finite points, `O(1/λ)` at infinity).
pub fn split_tuple(x: &LocalTuple, config: &PoleConfig, weight: i64) -> Result<(LocalTuple, RationalMatrix<C64>)> {
    let z = singular_part(x, config, weight)?;
    let mut slots = Vec::with_capacity(x.slots.len());
    for s in &x.slots {
        let e = z.laurent_expand(s.point(), s.trunc())?;
        slots.push(s.sub(&e)?);
    }
    Ok((LocalTuple { slots }, z))
}

/// Split of `ι_S R`, expansions known through `trunc`.
pub fn split(
    r: &RationalMatrix<C64>,
    config: &PoleConfig,
    weight: i64,
    trunc: i32,
) -> Result<(LocalTuple, RationalMatrix<C64>)> {
    let x = LocalTuple::of(r, config, trunc)?;
    split_tuple(&x, config, weight)
}

fn residue_trace(y: &LaurentSeries<C64>, x: &LaurentSeries<C64>) -> Result<C64> {
    match y.point() {
        Point::Finite(_) => y.trace_product_coeff(x, -1),
        Point::Infinity => Ok(-y.trace_product_coeff(x, 1)?),
    }
}

/// `⟨Y, X⟩ = T Σ_{r≥1} Res Tr(Y_r X_r) + Σ_{r∈{0,∞}} Res Tr(Y_r X_r)`,
/// residues taken against `dλ`.
pub fn pair(y: &LocalTuple, x: &LocalTuple, config: &PoleConfig) -> Result<C64> {
    let n_pts = config.n_poles() + 2;
    if y.slots.len() != n_pts || x.slots.len() != n_pts {
        return Err(Error::DimensionMismatch { expected: n_pts, found: y.slots.len().min(x.slots.len()) });
    }
    let t = config.order() as f64;
    let mut total = C64::new(0.0, 0.0);
    for (i, (ys, xs)) in y.slots.iter().zip(&x.slots).enumerate() {
        let res = residue_trace(ys, xs)?;
        total += if i == 0 || i == n_pts - 1 { res } else { res * t };
    }
    Ok(total)
}

/// Deterministic probe points spread over an annulus.
pub fn probe_points(count: usize) -> Vec<C64> {
    (0..count)
        .map(|j| {
            let r = 0.45 + 0.11 * j as f64;
            let th = 0.37 + 2.39996 * j as f64;
            let (s, c) = libm::sincos(th);
            C64::new(r * c, r * s)
        })
        .collect()
}

/// `max |σ(R(λ)) - ω^w R(ωλ)|` over 20 probes away from the poles.
pub fn check_equivariance<S: Scalar>(r: &RationalMatrix<S>, weight: i64, root: &RootOfUnity) -> Result<f64> {
    let omega = root.omega();
    let mut worst: f64 = 0.0;
    let mut used = 0;
    let mut j = 0;
    while used < 20 {
        let lam = probe_points(j + 1)[j];
        j += 1;
        let near = |z: C64| r.poles().iter().any(|p| (p.at - z).norm() < 1e-6);
        if near(lam) || near(omega * lam) {
            continue;
        }
        let lhs = root.sigma(&r.eval(lam)?).values();
        let rhs = r.eval(omega * lam)?.values().scale_c(root.pow(weight));
        worst = worst.max(lhs.dist(&rhs));
        used += 1;
    }
    Ok(worst)
}

/// Fails with `NotEquivariant` when the residual exceeds `tol`.
pub fn require_equivariant<S: Scalar>(r: &RationalMatrix<S>, weight: i64, root: &RootOfUnity, tol: f64) -> Result<()> {
    let residual = check_equivariance(r, weight, root)?;
    if residual > tol * (1.0 + r.max_coeff()) {
        return Err(Error::NotEquivariant { residual });
    }
    Ok(())
}

/// Helper used by tests and suites: a pole at the origin with the given principal part.
pub fn origin_pole<S: Scalar>(principal: Vec<SquareMatrix<S>>) -> Pole<S> {
    Pole::new(C64::new(0.0, 0.0), principal)
}
