//! Experiment configuration files.

use std::path::Path;

use plateau_core::analytics::{PrefactorMode, Setting};
use plateau_core::estimator::KMode;
use plateau_core::{prune, CircuitSpec, EntanglerKind, GeneratorPolicy, InitKind, PauliString, RandomStream, ThetaDist};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> usize {
    1
}

fn default_tag() -> String {
    "sample".into()
}

fn default_k_mode() -> KMode {
    KMode::RandomEffective
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub layers: usize,
    #[serde(default = "one")]
    pub block_width: usize,
    #[serde(default)]
    pub entangler: EntanglerKind,
    #[serde(default)]
    pub generator_policy: GeneratorPolicy,
    #[serde(default)]
    pub init_kind: InitKind,
    /// Every slot is active when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_mask: Option<Vec<bool>>,
    #[serde(default)]
    pub theta_dist: ThetaDist,
}

impl CircuitConfig {
    pub fn setting(&self) -> Setting {
        Setting { generator_policy: self.generator_policy, entangler: self.entangler, init_kind: self.init_kind }
    }
}

/// Axes swept as a Cartesian product, in field order. An absent axis takes
/// its value from the circuit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_fraction: Option<Vec<f64>>,
    /// Observable `Z^⊗m ⊗ I^⊗(n−m)` for each `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default = "default_tag")]
    pub tag: String,
    pub circuit: CircuitConfig,
    /// Pauli text such as `"ZZIX"`; `Z` on every qubit when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(default = "default_k_mode")]
    pub k_mode: KMode,
    pub n_samples: usize,
    pub master_seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub prefactor_mode: PrefactorMode,
    /// Amplitude of the deep-circuit predictor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepAxes>,
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub n: usize,
    pub l: usize,
    pub s: usize,
    pub prune_fraction: f64,
    pub support: Option<usize>,
}

/// A sweep point with its circuit and observable built.
#[derive(Debug, Clone)]
pub struct ResolvedPoint {
    pub point: SweepPoint,
    pub spec: CircuitSpec,
    pub observable: PauliString,
}

/// SHA-256 of `value` serialized as compact JSON, hex encoded.
pub fn content_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Reads a JSON file; a run manifest is accepted in place of the config it
/// echoes.
pub fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let inner = match value.get("config") {
        Some(c) if value.get("config_hash").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn axis<T: Copy>(name: &str, axis: &Option<Vec<T>>, fallback: T) -> Result<Vec<T>> {
    match axis {
        Some(v) if v.is_empty() => Err(CliError::config(format!("sweep.{name}: axis is empty"))),
        Some(v) => Ok(v.clone()),
        None => Ok(vec![fallback]),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = read_json_config(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hash of the config with the worker count excluded, since it never
    /// affects results.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.workers = 0;
        content_hash(&c)
    }

    pub fn setting_id(&self) -> String {
        self.setting_id.clone().unwrap_or_else(|| self.circuit.setting().id())
    }

    /// Checks every field and builds every sweep point once.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "schema: unsupported version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.n_samples < 2 {
            return Err(CliError::config("n_samples: at least 2 samples are required"));
        }
        if self.workers == 0 {
            return Err(CliError::config("workers: must be at least 1"));
        }
        if self.c0.is_some_and(|c| !(c.is_finite() && c >= 0.0)) {
            return Err(CliError::config("c0: must be finite and non-negative"));
        }
        if let Some(sw) = &self.sweep {
            if self.circuit.active_mask.is_some() && (sw.n.is_some() || sw.l.is_some() || sw.s.is_some()) {
                return Err(CliError::config("circuit.active_mask: cannot be combined with a sweep over n, l or s"));
            }
            if self.observable.is_some() && sw.support.is_some() {
                return Err(CliError::config("observable: cannot be combined with sweep.support"));
            }
        }
        self.resolve_points()?;
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let sw = self.sweep.clone().unwrap_or_default();
        let c = &self.circuit;
        let ns = axis("n", &sw.n, c.n)?;
        let ls = axis("l", &sw.l, c.layers)?;
        let ss = axis("s", &sw.s, c.block_width)?;
        let fs = axis("prune_fraction", &sw.prune_fraction, 0.0)?;
        let ms: Vec<Option<usize>> = match &sw.support {
            Some(v) if v.is_empty() => return Err(CliError::config("sweep.support: axis is empty")),
            Some(v) => v.iter().map(|&m| Some(m)).collect(),
            None => vec![None],
        };
        if let Some(f) = fs.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(CliError::config(format!("sweep.prune_fraction: {f} is outside [0, 1]")));
        }
        let mut out = Vec::new();
        for &n in &ns {
            for &l in &ls {
                for &s in &ss {
                    for &prune_fraction in &fs {
                        for &support in &ms {
                            let index = out.len();
                            out.push(SweepPoint { index, n, l, s, prune_fraction, support });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn resolve(&self, p: &SweepPoint) -> Result<ResolvedPoint> {
        let at = format!("(n={}, l={}, s={})", p.n, p.l, p.s);
        let c = &self.circuit;
        if p.s == 0 || p.n % p.s != 0 {
            return Err(CliError::config(format!("circuit.block_width: {} must divide n = {} at {at}", p.s, p.n)));
        }
        let mut spec = CircuitSpec::new(p.n, p.l, p.s)
            .map_err(|e| CliError::config(format!("circuit: {e} at {at}")))?
            .with_entangler(c.entangler)
            .with_init(c.init_kind)
            .with_policy(c.generator_policy)
            .map_err(|e| CliError::config(format!("circuit.generator_policy: {e} at {at}")))?;
        spec.theta_dist = c.theta_dist;
        if let Some(mask) = &c.active_mask {
            spec.active_mask = mask.clone();
            spec.validate().map_err(|e| CliError::config(format!("circuit.active_mask: {e}")))?;
        }
        if p.prune_fraction > 0.0 {
            spec = prune(&spec, p.prune_fraction, &mut RandomStream::pruning(self.master_seed, p.index as u64));
        }
        let observable = match (&self.observable, p.support) {
            (_, Some(m)) => PauliString::z_prefix(p.n, m)
                .map_err(|e| CliError::config(format!("sweep.support: {e} at {at}")))?,
            (Some(text), None) => {
                let o: PauliString =
                    text.parse().map_err(|e| CliError::config(format!("observable: {e}")))?;
                if o.n_sites() != p.n {
                    return Err(CliError::config(format!(
                        "observable: {} letters but the circuit has {} qubits",
                        o.n_sites(),
                        p.n
                    )));
                }
                o
            }
            (None, None) => PauliString::z_prefix(p.n, p.n)?,
        };
        if let KMode::FixedSlot(k) = self.k_mode {
            if k >= spec.parameter_count() {
                return Err(CliError::config(format!(
                    "k_mode: slot {k} is out of range for {} slots at {at}",
                    spec.parameter_count()
                )));
            }
        }
        Ok(ResolvedPoint { point: *p, spec, observable })
    }

    pub fn resolve_points(&self) -> Result<Vec<ResolvedPoint>> {
        self.points()?.iter().map(|p| self.resolve(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "circuit": {"n": 4},
            "n_samples": 100,
            "master_seed": 7
        })
    }

    fn parse(v: serde_json::Value) -> Result<ExperimentConfig> {
        let c: ExperimentConfig = serde_json::from_value(v).map_err(|e| CliError::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    fn message(v: serde_json::Value) -> String {
        parse(v).unwrap_err().to_string()
    }

    #[test]
    fn defaults() {
        let c = parse(base()).unwrap();
        assert_eq!(c.circuit.layers, 1);
        assert_eq!(c.k_mode, KMode::RandomEffective);
        assert_eq!(c.tag, "sample");
        let pts = c.resolve_points().unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].observable.to_string(), "ZZZZ");
        assert_eq!(c.setting_id(), "full_minus_identity/cz_brick/zeros");
    }

    #[test]
    fn sweep_is_a_product_in_field_order() {
        let mut v = base();
        v["sweep"] = serde_json::json!({"l": [1, 2], "support": [1, 2, 3]});
        let pts = parse(v).unwrap().points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[3].l, pts[3].support), (2, Some(1)));
    }

    #[test]
    fn errors_name_the_field() {
        let mut v = base();
        v["schema"] = 2.into();
        assert!(message(v).contains("schema"));
        let mut v = base();
        v["n_samples"] = 1.into();
        assert!(message(v).contains("n_samples"));
        let mut v = base();
        v["sweep"] = serde_json::json!({"n": []});
        assert!(message(v).contains("sweep.n"));
        let mut v = base();
        v["observable"] = "ZZ".into();
        assert!(message(v).contains("observable"));
        let mut v = base();
        v["circuit"]["block_width"] = 3.into();
        assert!(message(v).contains("circuit"));
        let mut v = base();
        v["sweep"] = serde_json::json!({"prune_fraction": [1.5]});
        assert!(message(v).contains("sweep.prune_fraction"));
        let mut v = base();
        v["k_mode"] = "fixed_slot(9)".into();
        assert!(message(v).contains("k_mode"));
        let mut v = base();
        v["bogus"] = 1.into();
        assert!(message(v).contains("bogus"));
        let mut v = base();
        v["sweep"] = serde_json::json!({"support": [5]});
        assert!(message(v).contains("sweep.support"));
    }

    #[test]
    fn hash_ignores_workers() {
        let a = parse(base()).unwrap();
        let mut b = a.clone();
        b.workers = 4;
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.master_seed = 8;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn pruning_is_reproducible() {
        let mut v = base();
        v["circuit"]["layers"] = 3.into();
        v["sweep"] = serde_json::json!({"prune_fraction": [0.5]});
        let c = parse(v).unwrap();
        let a = c.resolve_points().unwrap();
        let b = c.resolve_points().unwrap();
        assert_eq!(a[0].spec, b[0].spec);
        assert_eq!(a[0].spec.n_active(), 6);
    }
}
