use alloc::vec::Vec;

use super::laurent::{LaurentSeries, Point, binom};
use super::{MAX_POLE_ORDER, POLE_EPS};
use crate::algebra::SquareMatrix;
use crate::error::{Error, Result};
use crate::scalar::{C64, Scalar};

/// Principal part at one pole: `principal[n]` multiplies `(λ-ζ)^{-(n+1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pole<S = C64> {
    pub at: C64,
    pub principal: Vec<SquareMatrix<S>>,
}

impl<S: Scalar> Pole<S> {
    pub fn new(at: C64, principal: Vec<SquareMatrix<S>>) -> Self {
        Pole { at, principal }
    }

    pub fn order(&self) -> usize {
        self.principal.len()
    }
}

/// Matrix-valued rational function in partial-fraction form:
/// `Σ_d poly[d] λ^d + Σ_poles Σ_n principal[n] (λ-ζ)^{-(n+1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix<S = C64> {
    dim: usize,
    poly: Vec<SquareMatrix<S>>,
    poles: Vec<Pole<S>>,
}

impl<S: Scalar> RationalMatrix<S> {
    /// Validates dimensions, pole separation and orders, then drops
    /// trailing zero coefficients.
    pub fn new(dim: usize, poly: Vec<SquareMatrix<S>>, poles: Vec<Pole<S>>) -> Result<Self> {
        for m in poly.iter().chain(poles.iter().flat_map(|p| p.principal.iter())) {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
        }
        for (i, a) in poles.iter().enumerate() {
            for b in &poles[i + 1..] {
                let d = (a.at - b.at).norm();
                if d <= POLE_EPS {
                    return Err(Error::PoleCollision { distance: d });
                }
            }
        }
        let mut r = RationalMatrix { dim, poly, poles };
        r.normalize();
        for p in &r.poles {
            if p.order() > MAX_POLE_ORDER {
                return Err(Error::PoleOrderTooHigh { order: p.order() });
            }
        }
        Ok(r)
    }

    fn normalize(&mut self) {
        while self.poly.last().is_some_and(|m| m.is_exact_zero()) {
            self.poly.pop();
        }
        for p in &mut self.poles {
            while p.principal.last().is_some_and(|m| m.is_exact_zero()) {
                p.principal.pop();
            }
        }
        self.poles.retain(|p| !p.principal.is_empty());
    }

    pub fn zero(dim: usize) -> Self {
        RationalMatrix { dim, poly: Vec::new(), poles: Vec::new() }
    }

    pub fn constant(m: SquareMatrix<S>) -> Self {
        let dim = m.dim();
        let mut r = RationalMatrix { dim, poly: alloc::vec![m], poles: Vec::new() };
        r.normalize();
        r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn poly(&self) -> &[SquareMatrix<S>] {
        &self.poly
    }

    pub fn poles(&self) -> &[Pole<S>] {
        &self.poles
    }

    /// Polynomial degree, `None` when the polynomial part vanishes.
    pub fn degree(&self) -> Option<usize> {
        self.poly.len().checked_sub(1)
    }

    pub fn pole_at(&self, z: C64) -> Option<&Pole<S>> {
        self.poles.iter().find(|p| (p.at - z).norm() <= POLE_EPS)
    }

    pub fn pole_order_at(&self, point: Point) -> usize {
        match point {
            Point::Finite(z) => self.pole_at(z).map_or(0, |p| p.order()),
            Point::Infinity => self.degree().unwrap_or(0),
        }
    }

    /// `Res_{λ=z} R dλ`; zero away from poles.
    pub fn residue(&self, z: C64) -> SquareMatrix<S> {
        self.pole_at(z).map_or_else(|| SquareMatrix::zeros(self.dim), |p| p.principal[0].clone())
    }

    /// `Res_{λ=∞} R dλ`, read off the expansion in `1/λ`.
    pub fn residue_at_infinity(&self) -> Result<SquareMatrix<S>> {
        let e = self.laurent_expand(Point::Infinity, 1)?;
        Ok(e.coeff(1)?.scale(-S::one()))
    }

    pub fn eval(&self, lambda: C64) -> Result<SquareMatrix<S>> {
        let mut out = SquareMatrix::zeros(self.dim);
        for p in &self.poles {
            let d = lambda - p.at;
            if d.norm() <= POLE_EPS {
                return Err(Error::AtPole { distance: d.norm() });
            }
            let inv = C64::new(1.0, 0.0) / d;
            let mut f = inv;
            for c in &p.principal {
                out.add_scaled_c(c, f);
                f *= inv;
            }
        }
        let mut acc = SquareMatrix::zeros(self.dim);
        for c in self.poly.iter().rev() {
            acc = &acc.scale_c(lambda) + c;
        }
        Ok(&out + &acc)
    }

    /// Laurent expansion at `point`, known through order `trunc` of the
    /// local parameter (`λ - a`, or `1/λ` at infinity).
    pub fn laurent_expand(&self, point: Point, trunc: i32) -> Result<LaurentSeries<S>> {
        match point {
            Point::Finite(a) => self.expand_finite(a, trunc),
            Point::Infinity => self.expand_infinity(trunc),
        }
    }

    fn expand_finite(&self, a: C64, trunc: i32) -> Result<LaurentSeries<S>> {
        let own = self.pole_at(a);
        let low = -(own.map_or(0, |p| p.order()) as i32);
        let mut s = LaurentSeries::zero(self.dim, Point::Finite(a), low, trunc);
        if let Some(p) = own {
            for (n, c) in p.principal.iter().enumerate() {
                let order = -(n as i32 + 1);
                if order <= trunc {
                    *s.coeff_mut(order) = c.clone();
                }
            }
        }
        if trunc < 0 {
            return Ok(s);
        }
        let tmax = trunc as usize;
        for p in &self.poles {
            if own.is_some_and(|o| core::ptr::eq(o, p)) {
                continue;
            }
            // (λ-ζ)^{-(n+1)} = Σ_m (-1)^m C(n+m,m) (a-ζ)^{-(n+1)-m} w^m
            let inv = C64::new(1.0, 0.0) / (a - p.at);
            for (n, c) in p.principal.iter().enumerate() {
                let mut f = inv.powi(n as i32 + 1);
                for m in 0..=tmax {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    s.coeff_mut(m as i32).add_scaled_c(c, f * sign * binom(n + m, m));
                    f *= inv;
                }
            }
        }
        // λ^d = Σ_m C(d,m) a^{d-m} w^m
        for (d, c) in self.poly.iter().enumerate() {
            for m in 0..=d.min(tmax) {
                let f = a.powi((d - m) as i32) * binom(d, m);
                s.coeff_mut(m as i32).add_scaled_c(c, f);
            }
        }
        Ok(s)
    }

    fn expand_infinity(&self, trunc: i32) -> Result<LaurentSeries<S>> {
        let low = -(self.degree().unwrap_or(0) as i32);
        let mut s = LaurentSeries::zero(self.dim, Point::Infinity, low, trunc);
        for (d, c) in self.poly.iter().enumerate() {
            let order = -(d as i32);
            if order <= trunc {
                *s.coeff_mut(order) = &s.coeff(order)? + c;
            }
        }
        // (λ-ζ)^{-(n+1)} = Σ_m C(n+m,m) ζ^m u^{n+1+m}
        for p in &self.poles {
            for (n, c) in p.principal.iter().enumerate() {
                let mut f = C64::new(1.0, 0.0);
                let mut m = 0usize;
                while (n + 1 + m) as i32 <= trunc {
                    s.coeff_mut((n + 1 + m) as i32).add_scaled_c(c, f * binom(n + m, m));
                    f *= p.at;
                    m += 1;
                }
            }
        }
        Ok(s)
    }

    fn merged_pole_sites(&self, other: &Self) -> Vec<C64> {
        let mut sites: Vec<C64> = self.poles.iter().map(|p| p.at).collect();
        for p in &other.poles {
            if !sites.iter().any(|z| (z - p.at).norm() <= POLE_EPS) {
                sites.push(p.at);
            }
        }
        sites
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let n = self.poly.len().max(other.poly.len());
        let zero = SquareMatrix::zeros(self.dim);
        let poly = (0..n).map(|d| self.poly.get(d).unwrap_or(&zero) + other.poly.get(d).unwrap_or(&zero)).collect();
        let mut poles = Vec::new();
        for z in self.merged_pole_sites(other) {
            let a = self.pole_at(z).map_or(&[][..], |p| &p.principal[..]);
            let b = other.pole_at(z).map_or(&[][..], |p| &p.principal[..]);
            let k = a.len().max(b.len());
            let principal = (0..k).map(|i| a.get(i).unwrap_or(&zero) + b.get(i).unwrap_or(&zero)).collect();
            poles.push(Pole::new(z, principal));
        }
        RationalMatrix::new(self.dim, poly, poles)
    }

    pub fn scale(&self, s: S) -> Self {
        let mut r = RationalMatrix {
            dim: self.dim,
            poly: self.poly.iter().map(|m| m.scale(s)).collect(),
            poles: self
                .poles
                .iter()
                .map(|p| Pole::new(p.at, p.principal.iter().map(|m| m.scale(s)).collect()))
                .collect(),
        };
        r.normalize();
        r
    }

    pub fn scale_c(&self, c: C64) -> Self {
        self.scale(S::from_c64(c))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-S::one()))
    }

    /// Applies `f` to every coefficient matrix (linear maps only).
    pub fn map_coeffs(&self, f: impl Fn(&SquareMatrix<S>) -> SquareMatrix<S>) -> Self {
        let mut r = RationalMatrix {
            dim: self.dim,
            poly: self.poly.iter().map(&f).collect(),
            poles: self.poles.iter().map(|p| Pole::new(p.at, p.principal.iter().map(&f).collect())).collect(),
        };
        r.normalize();
        r
    }

    /// Exact product, computed from local expansions at each pole and at infinity.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut poles = Vec::new();
        for z in self.merged_pole_sites(other) {
            let pt = Point::Finite(z);
            let o1 = self.pole_order_at(pt) as i32;
            let o2 = other.pole_order_at(pt) as i32;
            let e1 = self.laurent_expand(pt, o2 - 1)?;
            let e2 = other.laurent_expand(pt, o1 - 1)?;
            let prod = e1.mul_capped(&e2, Some(-1))?;
            let principal = (1..=o1 + o2).map(|n| prod.coeff(-n)).collect::<Result<Vec<_>>>()?;
            poles.push(Pole::new(z, principal));
        }
        let d1 = self.degree().map_or(0, |d| d as i32);
        let d2 = other.degree().map_or(0, |d| d as i32);
        let e1 = self.laurent_expand(Point::Infinity, d2)?;
        let e2 = other.laurent_expand(Point::Infinity, d1)?;
        let prod = e1.mul_capped(&e2, Some(0))?;
        let poly = (0..=d1 + d2).map(|d| prod.coeff(-d)).collect::<Result<Vec<_>>>()?;
        RationalMatrix::new(self.dim, poly, poles)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn values(&self) -> RationalMatrix<C64> {
        let mut r = RationalMatrix {
            dim: self.dim,
            poly: self.poly.iter().map(|m| m.values()).collect(),
            poles: self
                .poles
                .iter()
                .map(|p| Pole::new(p.at, p.principal.iter().map(|m| m.values()).collect()))
                .collect(),
        };
        r.normalize();
        r
    }

    /// Applies `f` entrywise to every coefficient, possibly changing the scalar type.
    pub fn map_entries<T: Scalar>(&self, f: impl Fn(S) -> T + Copy) -> RationalMatrix<T> {
        let mut r = RationalMatrix {
            dim: self.dim,
            poly: self.poly.iter().map(|m| m.map(f)).collect(),
            poles: self.poles.iter().map(|p| Pole::new(p.at, p.principal.iter().map(|m| m.map(f)).collect())).collect(),
        };
        r.normalize();
        r
    }

    /// Largest coefficient size.
    pub fn max_coeff(&self) -> f64 {
        self.poly.iter().chain(self.poles.iter().flat_map(|p| p.principal.iter())).fold(0.0, |m, c| m.max(c.max_size()))
    }

    /// Removes principal coefficients of order above `max_order(ζ)`,
    /// failing if any removed entry exceeds `tol`.
    pub fn reduce_orders(&self, max_order: impl Fn(C64) -> usize, max_degree: Option<usize>, tol: f64) -> Result<Self> {
        let mut worst: f64 = 0.0;
        let mut poles = Vec::new();
        for p in &self.poles {
            let k = max_order(p.at);
            for c in p.principal.iter().skip(k) {
                worst = worst.max(c.max_size());
            }
            poles.push(Pole::new(p.at, p.principal.iter().take(k).cloned().collect()));
        }
        let keep = max_degree.map_or(0, |d| d + 1);
        for c in self.poly.iter().skip(keep) {
            worst = worst.max(c.max_size());
        }
        if worst > tol {
            return Err(Error::StructuralResidual { residual: worst });
        }
        let poly = self.poly.iter().take(keep).cloned().collect();
        RationalMatrix::new(self.dim, poly, poles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn m(rows: [[f64; 2]; 2]) -> SquareMatrix<C64> {
        SquareMatrix::from_fn(2, |i, j| c(rows[i][j], 0.0))
    }

    fn sample() -> RationalMatrix<C64> {
        RationalMatrix::new(
            2,
            alloc::vec![m([[1.0, 2.0], [0.0, 1.0]]), m([[0.0, 1.0], [1.0, 0.0]])],
            alloc::vec![
                Pole::new(c(0.0, 0.0), alloc::vec![m([[1.0, 0.0], [0.0, 2.0]]), m([[0.0, 1.0], [0.0, 0.0]])]),
                Pole::new(c(1.0, 1.0), alloc::vec![m([[0.5, 0.5], [1.0, -1.0]])]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn simple_pole_residue() {
        let r = RationalMatrix::new(
            2,
            Vec::new(),
            alloc::vec![Pole::new(c(0.0, 0.0), alloc::vec![SquareMatrix::<C64>::identity(2)])],
        )
        .unwrap();
        assert_eq!(r.residue(c(0.0, 0.0)), SquareMatrix::identity(2));
        assert!(r.residue(c(1.0, 0.0)).is_exact_zero());
    }

    #[test]
    fn constant_expands_to_itself_at_infinity() {
        let a = m([[1.0, 2.0], [3.0, 4.0]]);
        let r = RationalMatrix::constant(a.clone());
        let s = r.laurent_expand(Point::Infinity, 3).unwrap();
        assert_eq!(s.coeff(0).unwrap(), a);
        for n in 1..=3 {
            assert!(s.coeff(n).unwrap().is_exact_zero());
        }
    }

    #[test]
    fn colliding_and_high_order_poles_rejected() {
        let p1 = Pole::new(c(1.0, 0.0), alloc::vec![SquareMatrix::<C64>::identity(2)]);
        let p2 = Pole::new(c(1.0 + 1e-13, 0.0), alloc::vec![SquareMatrix::<C64>::identity(2)]);
        assert!(matches!(RationalMatrix::new(2, Vec::new(), alloc::vec![p1, p2]), Err(Error::PoleCollision { .. })));
        let p = Pole::new(c(1.0, 0.0), alloc::vec![SquareMatrix::<C64>::identity(2); 9]);
        assert!(matches!(
            RationalMatrix::new(2, Vec::new(), alloc::vec![p]),
            Err(Error::PoleOrderTooHigh { order: 9 })
        ));
    }

    #[test]
    fn eval_at_pole_is_error() {
        assert!(matches!(sample().eval(c(1.0, 1.0)), Err(Error::AtPole { .. })));
    }

    #[test]
    fn expansion_resums_near_point() {
        let r = sample();
        let a = c(0.4, -0.3);
        let s = r.laurent_expand(Point::Finite(a), 40).unwrap();
        let w = c(0.05, 0.02);
        let mut acc = SquareMatrix::zeros(2);
        for n in s.low()..=s.trunc() {
            acc.add_scaled_c(&s.coeff(n).unwrap(), w.powi(n));
        }
        assert!(acc.dist(&r.eval(a + w).unwrap()) < 1e-12);
    }

    #[test]
    fn expansion_at_infinity_resums() {
        let r = sample();
        let s = r.laurent_expand(Point::Infinity, 60).unwrap();
        let lambda = c(9.0, 4.0);
        let u = C64::new(1.0, 0.0) / lambda;
        let mut acc = SquareMatrix::zeros(2);
        for n in s.low()..=s.trunc() {
            acc.add_scaled_c(&s.coeff(n).unwrap(), u.powi(n));
        }
        assert!(acc.dist(&r.eval(lambda).unwrap()) < 1e-12);
    }

    #[test]
    fn product_matches_pointwise() {
        let r = sample();
        let q = r.scale_c(c(0.0, 1.0)).add(&RationalMatrix::constant(m([[0.0, 1.0], [2.0, 0.0]]))).unwrap();
        let p = r.mul(&q).unwrap();
        for lam in [c(0.3, 0.7), c(-2.0, 0.5), c(3.0, -1.0)] {
            let direct = &r.eval(lam).unwrap() * &q.eval(lam).unwrap();
            assert!(p.eval(lam).unwrap().dist(&direct) < 1e-11);
        }
    }

    #[test]
    fn residues_sum_to_zero_with_infinity() {
        let r = sample();
        let mut total = r.residue_at_infinity().unwrap();
        for p in r.poles() {
            total = &total + &r.residue(p.at);
        }
        assert!(total.max_abs() < 1e-14);
    }
}
