//! Seeded draws of spectral points, states and generic orbit data.
//!
//! One 64-bit seed drives everything; each case gets its own ChaCha stream,
//! selected by hashing the case label, so adding or reordering cases leaves
//! the draws of the others untouched.

use gaudin_core::algebra::{SquareMatrix, grade_component};
use gaudin_core::gaudin::{GaudinCoefficients, OrbitData, PoleConfig, dress};
use gaudin_core::models::{CoupledState, DstState, PhaseState, TodaState, dst_from_orbit};
use gaudin_core::{C64, Result};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::{ModelChoice, RunConfig, complex};

pub type CaseRng = ChaCha8Rng;

/// Root seed from which per-case streams are split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree { seed }
    }

    pub fn stream(&self, label: &str) -> CaseRng {
        let digest = Sha256::digest(label.as_bytes());
        let mut id = [0u8; 8];
        id.copy_from_slice(&digest[..8]);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from_le_bytes(id));
        rng
    }
}

pub fn uniform(rng: &mut CaseRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Uniform in the square `[-r, r]²`.
pub fn boxed(rng: &mut CaseRng, r: f64) -> C64 {
    C64::new(uniform(rng, -r, r), uniform(rng, -r, r))
}

/// Uniform radius in `[lo, hi]`, uniform angle.
pub fn annulus(rng: &mut CaseRng, lo: f64, hi: f64) -> C64 {
    C64::from_polar(uniform(rng, lo, hi), uniform(rng, 0.0, std::f64::consts::TAU))
}

pub fn matrix(rng: &mut CaseRng, t: usize, r: f64) -> SquareMatrix<C64> {
    SquareMatrix::from_fn(t, |_, _| boxed(rng, r))
}

/// `I + r M`, well conditioned for small `r`.
pub fn near_identity(rng: &mut CaseRng, t: usize, r: f64) -> SquareMatrix<C64> {
    &SquareMatrix::identity(t) + &matrix(rng, t, r)
}

/// A point in the annulus `0.4 ≤ |λ| ≤ 1.6` at least `gap` away from every pole.
pub fn spectral_point(rng: &mut CaseRng, config: &PoleConfig, gap: f64) -> C64 {
    loop {
        let lam = annulus(rng, 0.4, 1.6);
        if config.distance_to_poles(lam) > gap {
            return lam;
        }
    }
}

/// Two spectral points off the poles whose `Γ`-orbits are well separated.
pub fn spectral_pair(rng: &mut CaseRng, config: &PoleConfig, gap: f64) -> (C64, C64) {
    let t = config.order() as i32;
    loop {
        let a = spectral_point(rng, config, gap);
        let b = spectral_point(rng, config, gap);
        if (a.powi(t) - b.powi(t)).norm() > gap {
            return (a, b);
        }
    }
}

/// Marked points with distinct moduli, hence distinct `Γ`-orbits.
pub fn zetas(rng: &mut CaseRng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|r| {
            C64::from_polar(0.75 + 0.35 * r as f64 + uniform(rng, 0.0, 0.15), uniform(rng, 0.0, std::f64::consts::TAU))
        })
        .collect()
}

pub fn toda(rng: &mut CaseRng, t: usize) -> Result<TodaState> {
    let q = (0..t).map(|_| uniform(rng, -0.5, 0.5)).collect();
    let p = (0..t).map(|_| uniform(rng, -0.5, 0.5)).collect();
    TodaState::new(q, p)
}

fn c_list(rng: &mut CaseRng, t: usize, fixed: Option<Vec<C64>>) -> Vec<C64> {
    fixed.unwrap_or_else(|| (0..t).map(|_| boxed(rng, 0.1)).collect())
}

/// Pole of a DST or coupled state. `|ζ|` and the `c_i` set the time scale of
/// the `(p,1)` flows, so both are kept small enough for depth-3 flows to stay
/// resolved at `h = 1e-3` over unit times.
fn zeta(rng: &mut CaseRng, fixed: Option<C64>) -> C64 {
    fixed.unwrap_or_else(|| C64::from_polar(uniform(rng, 0.3, 0.4), uniform(rng, 0.0, std::f64::consts::TAU)))
}

/// DST state on the orbit of a random near-identity dressing.
pub fn dst(rng: &mut CaseRng, t: usize, fixed_zeta: Option<C64>, fixed_c: Option<Vec<C64>>) -> Result<DstState> {
    let s = near_identity(rng, t, 0.3);
    let c = c_list(rng, t, fixed_c);
    let z = zeta(rng, fixed_zeta);
    dst_from_orbit(&s, c, z)
}

pub fn coupled(
    rng: &mut CaseRng,
    t: usize,
    beta: f64,
    fixed_zeta: Option<C64>,
    fixed_c: Option<Vec<C64>>,
) -> Result<CoupledState> {
    let toda = toda(rng, t)?;
    // The (x,X)-sector growth rates are smallest where the constant term
    // ζ^T (1+β)^T + ζ^{-T} of its characteristic polynomial vanishes:
    // |ζ|² (1+β) = 1, arg ζ = π(2m+1)/(2T). For T = 2 the shift is its own
    // inverse and the balance is ζ² (1+β) = -1 instead.
    let modulus = uniform(rng, 0.95, 1.05) / (1.0 + beta).sqrt();
    let pi = std::f64::consts::PI;
    let (first, step, sectors) = if t == 2 { (pi / 2.0, pi, 2) } else { (pi / (2 * t) as f64, pi / t as f64, 2 * t) };
    let arg = first + step * rng.random_range(0..sectors) as f64 + uniform(rng, -0.05, 0.05);
    let z = fixed_zeta.unwrap_or_else(|| C64::from_polar(modulus, arg));
    let d = dst(rng, t, Some(z), fixed_c)?;
    let real = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
    CoupledState::new(real(&toda.q), real(&toda.p), d.x, d.big_x, d.c, d.zeta, beta)
}

/// Random state of a concrete model, honouring fixed `ζ` and `c` from the
/// configuration.
pub fn model_state(rng: &mut CaseRng, model: ModelChoice, cfg: &RunConfig) -> Result<PhaseState> {
    let z = cfg.zeta_values().map(|z| z[0]);
    let c = cfg.c_values();
    Ok(match model {
        ModelChoice::Toda => PhaseState::Toda(toda(rng, cfg.t)?),
        ModelChoice::Dst => PhaseState::Dst(dst(rng, cfg.t, z, c)?),
        ModelChoice::Coupled | ModelChoice::GaudinGeneric => PhaseState::Coupled(coupled(rng, cfg.t, cfg.beta, z, c)?),
    })
}

/// Initial state for `simulate` and `closure`: the explicit state from the
/// configuration where given, seeded draws for the rest.
pub fn initial_state(cfg: &RunConfig, model: ModelChoice) -> Result<PhaseState> {
    let mut rng = SeedTree::new(cfg.seed).stream("initial-state");
    let drawn = model_state(&mut rng, model, cfg)?;
    let st = &cfg.state;
    let cplx = |v: &Option<Vec<[f64; 2]>>| v.as_ref().map(|v| v.iter().copied().map(complex).collect::<Vec<_>>());
    Ok(match drawn {
        PhaseState::Toda(s) => {
            PhaseState::Toda(TodaState::new(st.q.clone().unwrap_or(s.q), st.p.clone().unwrap_or(s.p))?)
        }
        PhaseState::Dst(s) => {
            PhaseState::Dst(DstState::new(cplx(&st.x).unwrap_or(s.x), cplx(&st.big_x).unwrap_or(s.big_x), s.c, s.zeta)?)
        }
        PhaseState::Coupled(s) => {
            let real =
                |v: &Option<Vec<f64>>| v.as_ref().map(|v| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
            PhaseState::Coupled(CoupledState::new(
                real(&st.q).unwrap_or(s.q),
                real(&st.p).unwrap_or(s.p),
                cplx(&st.x).unwrap_or(s.x),
                cplx(&st.big_x).unwrap_or(s.big_x),
                s.c,
                s.zeta,
                s.beta,
            )?)
        }
    })
}

/// Generic orbit data on `N` marked orbits, dressed into Lax coefficients.
pub fn gaudin_orbit(rng: &mut CaseRng, t: usize, zetas: Vec<C64>) -> Result<(GaudinCoefficients<C64>, PoleConfig)> {
    let n = zetas.len();
    let config = PoleConfig::new(t, zetas)?;
    let diag: Vec<C64> = (0..t).map(|_| C64::new(1.0, 0.0) + boxed(rng, 0.3)).collect();
    let orbit = OrbitData::new(
        SquareMatrix::diagonal(&diag),
        grade_component(&matrix(rng, t, 0.3), 1),
        grade_component(&matrix(rng, t, 0.5), 0),
        grade_component(&matrix(rng, t, 0.5), -1),
        (0..n).map(|_| near_identity(rng, t, 0.3)).collect(),
        (0..n).map(|_| matrix(rng, t, 0.5)).collect(),
        grade_component(&near_identity(rng, t, 0.3), 1),
    )?;
    Ok((dress(&orbit)?, config))
}
