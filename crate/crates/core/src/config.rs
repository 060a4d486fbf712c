//! Run configuration shared by the command-line tools.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::greens::{GreensParams, GreensVariant};
use crate::mesh::{InnerMesh, LayerFamily, MeshParams, MeshSpec};
use crate::problem::{example_by_name, BcOrder, Coefficient, ProblemSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub q_ref: usize,
    pub n_ref: usize,
    /// Directory for cached reference solutions; no caching when absent.
    pub cache_dir: Option<PathBuf>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            q_ref: crate::errors::DEFAULT_Q_REF,
            n_ref: crate::errors::DEFAULT_N_REF,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensConfig {
    pub b: f64,
    pub c: f64,
    /// Shift coefficient used for the coupling matrix.
    pub d: f64,
    pub variant: String,
}

impl Default for GreensConfig {
    fn default() -> Self {
        GreensConfig {
            b: 1.0,
            c: 1.0,
            d: 1.0,
            variant: "m1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub example: String,
    pub epsilon: f64,
    /// Overrides the example's boundary condition order.
    pub m: Option<u32>,
    pub q: Vec<usize>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub bmesh: String,
    pub imesh: String,
    /// Mesh parameter σ; `q + 1` when absent.
    pub sigma: Option<f64>,
    pub weak_exponent: Option<f64>,
    /// Replaces the shift coefficient `d` by a constant.
    pub shift: Option<f64>,
    /// ε values of sweeps (greens, decompose).
    pub epsilons: Vec<f64>,
    pub samples_per_cell: usize,
    pub reference: ReferenceConfig,
    pub greens: GreensConfig,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            example: "ex1".into(),
            epsilon: 1e-4,
            m: None,
            q: vec![2],
            n: vec![64],
            bmesh: "BS".into(),
            imesh: "BS".into(),
            sigma: None,
            weak_exponent: None,
            shift: None,
            epsilons: vec![1e-2, 1e-3, 1e-4],
            samples_per_cell: 4,
            reference: ReferenceConfig::default(),
            greens: GreensConfig::default(),
            out: None,
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(
                "json",
                format!("line {} column {}: {e}", e.line(), e.column()),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if let Some(m) = self.m {
            BcOrder::from_int(m).map_err(|e| Error::config("m", e.to_string()))?;
        }
        if self.q.is_empty() {
            return Err(Error::config("q", "list is empty"));
        }
        if let Some(&q) = self.q.iter().find(|&&q| q == 0 || q > 10) {
            return Err(Error::config("q", format!("degree {q} outside 1..=10")));
        }
        if self.n.is_empty() {
            return Err(Error::config("N", "list is empty"));
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < 8 || n % 8 != 0) {
            return Err(Error::config("N", format!("{n} is not a positive multiple of 8")));
        }
        self.bmesh
            .parse::<LayerFamily>()
            .map_err(|_| Error::config("bmesh", format!("unknown boundary family `{}`", self.bmesh)))?;
        self.imesh
            .parse::<InnerMesh>()
            .map_err(|_| Error::config("imesh", format!("unknown inner mesh `{}`", self.imesh)))?;
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::config("sigma", format!("must be positive, got {s}")));
            }
        }
        if let Some(g) = self.weak_exponent {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::config("weak_exponent", format!("must lie in (0, 1], got {g}")));
            }
        }
        if let Some(&e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::config("epsilons", format!("must be positive, got {e}")));
        }
        if self.samples_per_cell == 0 {
            return Err(Error::config("samples_per_cell", "must be at least 1"));
        }
        if self.reference.q_ref == 0 || self.reference.n_ref % 8 != 0 || self.reference.n_ref == 0 {
            return Err(Error::config(
                "reference",
                format!("q_ref = {}, n_ref = {} (need q_ref ≥ 1, n_ref a multiple of 8)", self.reference.q_ref, self.reference.n_ref),
            ));
        }
        self.greens_variant()?;
        Ok(())
    }

    /// The example with the configured ε and overrides applied.
    pub fn problem(&self) -> Result<ProblemSpec> {
        self.problem_at(self.epsilon)
    }

    pub fn problem_at(&self, epsilon: f64) -> Result<ProblemSpec> {
        let mut spec = example_by_name(&self.example, epsilon)?;
        if let Some(d) = self.shift {
            let mut coef = spec.coefficients();
            coef.d = Coefficient::Constant(d);
            spec = spec.with_coefficients(coef).map_err(|e| Error::config("shift", e.to_string()))?;
        }
        if let Some(m) = self.m {
            spec = spec.with_m(BcOrder::from_int(m)?)?;
        }
        Ok(spec)
    }

    pub fn mesh_spec(&self) -> Result<MeshSpec> {
        Ok(MeshSpec {
            boundary: self.bmesh.parse()?,
            inner: self.imesh.parse()?,
        })
    }

    /// Mesh parameters for `n` cells and degree `q`; σ defaults to `q + 1`.
    pub fn mesh_params(&self, spec: &ProblemSpec, n: usize, q: usize) -> MeshParams {
        let mut p = MeshParams::new(n, spec.epsilon, spec.beta, q);
        if let Some(s) = self.sigma {
            p = p.with_sigma(s);
        }
        if let Some(g) = self.weak_exponent {
            p = p.with_weak_exponent(Some(g));
        }
        p
    }

    pub fn greens_variant(&self) -> Result<GreensVariant> {
        self.greens
            .variant
            .parse()
            .map_err(|_| Error::config("greens.variant", format!("unknown variant `{}`", self.greens.variant)))
    }

    pub fn greens_params(&self, epsilon: f64) -> Result<GreensParams> {
        GreensParams::new(self.greens.b, self.greens.c, epsilon, self.greens_variant()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.epsilon = 1.0e-4 / 3.0;
        cfg.sigma = Some(2.5);
        cfg.weak_exponent = Some(0.5);
        cfg.out = Some("out.csv".into());
        cfg.reference.cache_dir = Some("/tmp/refs".into());
        let text = cfg.to_json();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg = RunConfig::from_json(r#"{"example": "ex2", "q": [1, 2]}"#).unwrap();
        assert_eq!(cfg.example, "ex2");
        assert_eq!(cfg.n, vec![64]);
        assert_eq!(cfg.problem().unwrap().m, BcOrder::Two);
    }

    fn field_of(text: &str) -> String {
        match RunConfig::from_json(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        assert_eq!(field_of(r#"{"N": []}"#), "N");
        assert_eq!(field_of(r#"{"N": [60]}"#), "N");
        assert_eq!(field_of(r#"{"q": [0]}"#), "q");
        assert_eq!(field_of(r#"{"epsilon": -1}"#), "epsilon");
        assert_eq!(field_of(r#"{"imesh": "nope"}"#), "imesh");
        assert_eq!(field_of(r#"{"bmesh": "weakeq"}"#), "bmesh");
        assert_eq!(field_of(r#"{"m": 3}"#), "m");
        assert_eq!(field_of(r#"{"unknown": 1}"#), "json");
    }

    #[test]
    fn json_errors_carry_position() {
        let err = RunConfig::from_json("{\n  \"q\": [1,\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn overrides() {
        let cfg = RunConfig {
            shift: Some(0.0),
            m: Some(2),
            ..RunConfig::default()
        };
        let spec = cfg.problem().unwrap();
        assert_eq!(spec.d.as_constant(), Some(0.0));
        assert_eq!(spec.m, BcOrder::Two);
        assert_eq!(cfg.mesh_spec().unwrap(), MeshSpec::BS_BS);
    }
}
