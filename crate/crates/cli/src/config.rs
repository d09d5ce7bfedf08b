//! Run configuration: defaults, an optional TOML file, then flag overrides,
//! validated before any computation starts.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use gaudin_core::C64;
use gaudin_core::dynamics::{DEFAULT_DELTA, DEFAULT_STEP, Tolerances};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Largest cyclic order accepted; keeps suite runtimes bounded.
pub const MAX_ORDER: usize = 12;
/// Largest hierarchy depth accepted.
pub const MAX_DEPTH: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Toda,
    Dst,
    Coupled,
    GaudinGeneric,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Toda => "toda",
            ModelChoice::Dst => "dst",
            ModelChoice::Coupled => "coupled",
            ModelChoice::GaudinGeneric => "gaudin-generic",
        }
    }

    pub fn is_concrete(self) -> bool {
        self != ModelChoice::GaudinGeneric
    }
}

/// Every tolerance of the verification suites, defaulting to the library values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub cybe: f64,
    pub averaging: f64,
    pub sklyanin: f64,
    pub projection: f64,
    pub explicit: f64,
    pub residue_sum: f64,
    pub involutivity: f64,
    pub spectral_drift: f64,
    pub invariant_drift: f64,
    pub energy_drift: f64,
    pub spectral_invariance: f64,
    pub commutativity: f64,
    pub commutativity_ratio: f64,
    pub closure: f64,
    pub closure_ratio: f64,
    pub closure_control: f64,
    pub gauge: f64,
    pub coupled_limit: f64,
    pub el_lax: f64,
    pub equivariance: f64,
    pub arithmetic: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Tolerances::default().into()
    }
}

impl From<Tolerances> for ToleranceConfig {
    fn from(t: Tolerances) -> Self {
        ToleranceConfig {
            cybe: t.cybe,
            averaging: t.averaging,
            sklyanin: t.sklyanin,
            projection: t.projection,
            explicit: t.explicit,
            residue_sum: t.residue_sum,
            involutivity: t.involutivity,
            spectral_drift: t.spectral_drift,
            invariant_drift: t.invariant_drift,
            energy_drift: t.energy_drift,
            spectral_invariance: t.spectral_invariance,
            commutativity: t.commutativity,
            commutativity_ratio: t.commutativity_ratio,
            closure: t.closure,
            closure_ratio: t.closure_ratio,
            closure_control: t.closure_control,
            gauge: t.gauge,
            coupled_limit: t.coupled_limit,
            el_lax: t.el_lax,
            equivariance: t.equivariance,
            arithmetic: t.arithmetic,
        }
    }
}

impl From<ToleranceConfig> for Tolerances {
    fn from(t: ToleranceConfig) -> Self {
        Tolerances {
            cybe: t.cybe,
            averaging: t.averaging,
            sklyanin: t.sklyanin,
            projection: t.projection,
            explicit: t.explicit,
            residue_sum: t.residue_sum,
            involutivity: t.involutivity,
            spectral_drift: t.spectral_drift,
            invariant_drift: t.invariant_drift,
            energy_drift: t.energy_drift,
            spectral_invariance: t.spectral_invariance,
            commutativity: t.commutativity,
            commutativity_ratio: t.commutativity_ratio,
            closure: t.closure,
            closure_ratio: t.closure_ratio,
            closure_control: t.closure_control,
            gauge: t.gauge,
            coupled_limit: t.coupled_limit,
            el_lax: t.el_lax,
            equivariance: t.equivariance,
            arithmetic: t.arithmetic,
        }
    }
}

impl ToleranceConfig {
    /// Overrides one named tolerance.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        let mut map = serde_json::to_value(*self).expect("tolerances serialise");
        let obj = map.as_object_mut().expect("tolerances form an object");
        if !obj.contains_key(key) {
            return Err(CliError::Config(format!("unknown tolerance `{key}`")));
        }
        let num = serde_json::Number::from_f64(value)
            .ok_or_else(|| CliError::Config(format!("tolerance `{key}` must be finite")))?;
        obj.insert(key.to_string(), serde_json::Value::Number(num));
        *self = serde_json::from_value(map).expect("round trip of known keys");
        Ok(())
    }

    fn values(&self) -> Vec<(String, f64)> {
        let map = serde_json::to_value(*self).expect("tolerances serialise");
        map.as_object()
            .expect("tolerances form an object")
            .iter()
            .map(|(k, v)| (k.clone(), v.as_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

/// Explicit initial state for `simulate` and `closure`; unset parts are drawn
/// from the seeded generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub x: Option<Vec<[f64; 2]>>,
    #[serde(rename = "X")]
    pub big_x: Option<Vec<[f64; 2]>>,
}

impl StateConfig {
    fn is_empty(&self) -> bool {
        self.q.is_none() && self.p.is_none() && self.x.is_none() && self.big_x.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `None` runs model-dependent checks on Toda, DST and the coupled system.
    pub model: Option<ModelChoice>,
    #[serde(rename = "T")]
    pub t: usize,
    /// Number of marked orbits for generic Gaudin data.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub zetas: Option<Vec<[f64; 2]>>,
    pub c: Option<Vec<[f64; 2]>>,
    pub beta: f64,
    pub seed: u64,
    pub depth: usize,
    pub h: f64,
    pub delta: f64,
    pub tau: f64,
    pub tolerances: ToleranceConfig,
    pub state: StateConfig,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            t: 3,
            n: None,
            zetas: None,
            c: None,
            beta: 0.5,
            seed: 0,
            depth: 3,
            h: DEFAULT_STEP,
            delta: DEFAULT_DELTA,
            tau: 1.0,
            tolerances: ToleranceConfig::default(),
            state: StateConfig::default(),
            report: None,
            csv: None,
        }
    }
}

/// What the configuration will be used for; validation differs slightly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// `verify` of a suite; `true` when the suite accepts `T = 1`.
    Verify { allows_order_one: bool },
    /// `simulate` and `closure`: a concrete model is required.
    Integrate,
}

pub fn complex(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("configuration file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.into()
    }

    pub fn zeta_values(&self) -> Option<Vec<C64>> {
        self.zetas.as_ref().map(|z| z.iter().copied().map(complex).collect())
    }

    pub fn c_values(&self) -> Option<Vec<C64>> {
        self.c.as_ref().map(|z| z.iter().copied().map(complex).collect())
    }

    /// SHA-256 of the canonical JSON form, output paths excluded.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.report = None;
        canonical.csv = None;
        let text = serde_json::to_string(&canonical).expect("configuration serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self, purpose: Purpose) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        let min_t = match purpose {
            Purpose::Verify { allows_order_one: true } => 1,
            _ => 2,
        };
        if self.t < min_t || self.t > MAX_ORDER {
            return err(format!("T must lie in {min_t}..={MAX_ORDER}, got {}", self.t));
        }
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return err(format!("depth must lie in 1..={MAX_DEPTH}, got {}", self.depth));
        }
        for (name, v) in [("h", self.h), ("delta", self.delta), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return err(format!(
                "beta must be finite and positive, got {} (the decoupled limit is checked internally)",
                self.beta
            ));
        }
        for (name, v) in self.tolerances.values() {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("tolerance {name} must be finite and positive, got {v}"));
            }
        }
        if let Some(zs) = &self.zetas {
            if zs.iter().flatten().any(|v| !v.is_finite()) {
                return err("zeta values must be finite".into());
            }
            if zs.iter().any(|z| complex(*z).norm() <= 1e-8) {
                return err("zeta values must be non-zero".into());
            }
            if zs.is_empty() {
                return err("zeta list is empty".into());
            }
            if let Some(n) = self.n
                && n != zs.len()
            {
                return err(format!("N = {n} but {} zeta values given", zs.len()));
            }
            if matches!(self.model, Some(ModelChoice::Dst | ModelChoice::Coupled)) && zs.len() != 1 {
                return err("DST and coupled models take exactly one zeta".into());
            }
        }
        if let Some(n) = self.n
            && n > 4
        {
            return err(format!("N must be at most 4, got {n}"));
        }
        if let Some(c) = &self.c {
            if c.iter().flatten().any(|v| !v.is_finite()) {
                return err("c values must be finite".into());
            }
            if c.len() != self.t {
                return err(format!("c needs T = {} entries, got {}", self.t, c.len()));
            }
        }
        self.validate_state()?;
        if purpose == Purpose::Integrate {
            match self.model {
                None => return err("simulate and closure need --model".into()),
                Some(ModelChoice::GaudinGeneric) => {
                    return err("simulate and closure need a concrete model (toda, dst or coupled)".into());
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn validate_state(&self) -> Result<(), CliError> {
        let s = &self.state;
        if s.is_empty() {
            return Ok(());
        }
        let model = match self.model {
            Some(m) if m.is_concrete() => m,
            _ => return Err(CliError::Config("an explicit state needs a concrete --model".into())),
        };
        let real_ok =
            |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|v| v.len() == self.t && v.iter().all(|x| x.is_finite()));
        let cplx_ok = |v: &Option<Vec<[f64; 2]>>| {
            v.as_ref().is_none_or(|v| v.len() == self.t && v.iter().flatten().all(|x| x.is_finite()))
        };
        if !(real_ok(&s.q) && real_ok(&s.p) && cplx_ok(&s.x) && cplx_ok(&s.big_x)) {
            return Err(CliError::Config(format!("state vectors need T = {} finite entries", self.t)));
        }
        let has_qp = s.q.is_some() || s.p.is_some();
        let has_x = s.x.is_some() || s.big_x.is_some();
        if model == ModelChoice::Toda && has_x {
            return Err(CliError::Config("Toda states have no x, X".into()));
        }
        if model == ModelChoice::Dst && has_qp {
            return Err(CliError::Config("DST states have no q, p".into()));
        }
        if s.x.is_some() != s.big_x.is_some() {
            return Err(CliError::Config("x and X must be given together".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate(Purpose::Verify { allows_order_one: false }).unwrap();
    }

    #[test]
    fn order_one_only_for_rmatrix() {
        let cfg = RunConfig { t: 1, ..RunConfig::default() };
        assert!(cfg.validate(Purpose::Verify { allows_order_one: false }).is_err());
        cfg.validate(Purpose::Verify { allows_order_one: true }).unwrap();
    }

    #[test]
    fn file_values_parse() {
        let cfg = RunConfig::from_toml_str(
            "model = \"coupled\"\nT = 2\nbeta = 0.7\nzetas = [[1.1, 0.3]]\n[tolerances]\nclosure = 1e-7\n",
        )
        .unwrap();
        assert_eq!(cfg.model, Some(ModelChoice::Coupled));
        assert_eq!(cfg.t, 2);
        assert_eq!(cfg.tolerances.closure, 1e-7);
        assert_eq!(cfg.tolerances.cybe, 1e-12);
        cfg.validate(Purpose::Integrate).unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("temperature = 3").is_err());
        assert!(RunConfig::from_toml_str("[tolerances]\nfoo = 1.0").is_err());
    }

    #[test]
    fn tolerance_override_by_name() {
        let mut t = ToleranceConfig::default();
        t.set("gauge", 1e-9).unwrap();
        assert_eq!(t.gauge, 1e-9);
        assert!(t.set("nope", 1.0).is_err());
    }

    #[test]
    fn digest_ignores_output_paths() {
        let a = RunConfig::default();
        let b = RunConfig { report: Some("out.json".into()), ..RunConfig::default() };
        let c = RunConfig { seed: 1, ..RunConfig::default() };
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn invalid_numbers_rejected() {
        for cfg in [
            RunConfig { h: f64::NAN, ..RunConfig::default() },
            RunConfig { beta: -1.0, ..RunConfig::default() },
            RunConfig { depth: 0, ..RunConfig::default() },
            RunConfig { zetas: Some(vec![[0.0, 0.0]]), ..RunConfig::default() },
            RunConfig { c: Some(vec![[0.1, 0.0]]), ..RunConfig::default() },
        ] {
            assert!(cfg.validate(Purpose::Verify { allows_order_one: false }).is_err());
        }
    }

    #[test]
    fn integrate_needs_concrete_model() {
        assert!(RunConfig::default().validate(Purpose::Integrate).is_err());
        let cfg = RunConfig { model: Some(ModelChoice::GaudinGeneric), ..RunConfig::default() };
        assert!(cfg.validate(Purpose::Integrate).is_err());
    }
}
