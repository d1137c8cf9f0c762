use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::NSchedule;
use crate::onep::{Dims, MassTruncation, QuadratureSettings};
use crate::sectors::TorusSubgroup;
use crate::states::LambdaGrid;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything an experiment run depends on. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Spatial dimension `s`.
    pub dims: usize,
    pub grid: LambdaGrid,
    pub quadrature: QuadratureSettings,
    /// Masses for the covariance and convergence experiments.
    pub masses: Vec<f64>,
    /// Free-factor masses for the energy indicator.
    pub energy_masses: Vec<f64>,
    /// Width of the Cauchy probe family.
    pub probe_width: f64,
    pub beta: f64,
    pub p_values: Vec<f64>,
    pub q: f64,
    /// Free-factor mass whose spectra carry the asserted boundedness claim.
    pub nuclearity_mass: f64,
    pub lutz: LutzSpec,
    /// Scale at which the Lutz decay is compared with `λ₀`.
    pub lutz_probe_lambda: f64,
    /// Scale at which undamped candidates are compared against the Lutz state.
    pub preservation_lambda: f64,
    pub truncation_eps: Vec<f64>,
    pub groups: Vec<GroupSpec>,
    pub appendix: AppendixSpec,
    pub seed: u64,
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LutzSpec {
    pub schedule: NSchedule,
    pub truncation: MassTruncation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppendixSpec {
    pub reconstruction_maps: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub tensor_pairs: usize,
    pub random_decompositions: usize,
    /// Summability exponent used for the window checks.
    pub p: f64,
}

impl Default for AppendixSpec {
    fn default() -> Self {
        Self {
            reconstruction_maps: 200,
            min_dim: 2,
            max_dim: 8,
            tensor_pairs: 50,
            random_decompositions: 100,
            p: 0.1,
        }
    }
}

/// `normal` is either a list of element names or one of `trivial`, `whole`, `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormalSpec {
    Keyword(String),
    Elements(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Finite {
        group: String,
        normal: NormalSpec,
        /// Irrep names; all nontrivial irreps when omitted.
        #[serde(default)]
        delta: Option<Vec<String>>,
        #[serde(default)]
        expect_preserved: Option<usize>,
        #[serde(default)]
        expect_non_preserved: Option<usize>,
    },
    Torus {
        rank: usize,
        subgroup: TorusSubgroup,
        delta: Vec<Vec<i64>>,
        weight_box: i64,
        #[serde(default)]
        expect_preserved: Option<Vec<Vec<i64>>>,
    },
}

impl GroupSpec {
    pub fn label(&self) -> String {
        match self {
            GroupSpec::Finite { group, normal, .. } => {
                let n = match normal {
                    NormalSpec::Keyword(k) => k.clone(),
                    NormalSpec::Elements(e) => format!("{{{}}}", e.join(",")),
                };
                format!("({group},{n})")
            }
            GroupSpec::Torus { rank, subgroup, .. } => {
                let gens: Vec<String> = subgroup
                    .cyclic
                    .iter()
                    .map(|g| g.iter().map(|(a, b)| format!("{a}/{b}")).collect::<Vec<_>>().join(" "))
                    .collect();
                format!("(T{rank},<{}>)", gens.join(";"))
            }
        }
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn default_groups() -> Vec<GroupSpec> {
    vec![
        GroupSpec::Finite {
            group: "Z4".into(),
            normal: NormalSpec::Elements(names(&["0", "2"])),
            delta: None,
            expect_preserved: Some(2),
            expect_non_preserved: Some(2),
        },
        GroupSpec::Finite {
            group: "S3".into(),
            normal: NormalSpec::Elements(names(&["012", "120", "201"])),
            delta: None,
            expect_preserved: Some(2),
            expect_non_preserved: Some(1),
        },
        GroupSpec::Finite {
            group: "Z2xZ2".into(),
            normal: NormalSpec::Elements(names(&["(0,0)", "(1,0)"])),
            delta: Some(names(&["chi_(1,0)", "chi_(0,1)"])),
            expect_preserved: Some(2),
            expect_non_preserved: Some(2),
        },
        GroupSpec::Finite {
            group: "D4".into(),
            normal: NormalSpec::Keyword("center".into()),
            delta: None,
            expect_preserved: Some(4),
            expect_non_preserved: Some(1),
        },
        GroupSpec::Finite {
            group: "Q8".into(),
            normal: NormalSpec::Keyword("center".into()),
            delta: None,
            expect_preserved: Some(4),
            expect_non_preserved: Some(1),
        },
        GroupSpec::Finite {
            group: "S3".into(),
            normal: NormalSpec::Keyword("trivial".into()),
            delta: None,
            expect_preserved: Some(3),
            expect_non_preserved: Some(0),
        },
        GroupSpec::Torus {
            rank: 1,
            subgroup: TorusSubgroup::roots_of_unity(3),
            delta: vec![vec![1], vec![-1]],
            weight_box: 4,
            expect_preserved: Some(vec![vec![-3], vec![0], vec![3]]),
        },
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dims: 3,
            grid: LambdaGrid::default(),
            quadrature: QuadratureSettings::default(),
            masses: vec![0.5, 1.0, 2.0],
            energy_masses: vec![0.0, 0.5, 1.0, 2.0],
            probe_width: 1.0,
            beta: 1.0,
            p_values: vec![0.5, 1.0],
            q: 0.5,
            nuclearity_mass: 0.5,
            lutz: LutzSpec {
                schedule: NSchedule::default(),
                truncation: MassTruncation::Adaptive,
            },
            lutz_probe_lambda: 1e-2,
            preservation_lambda: 1e-3,
            truncation_eps: vec![1e-1, 1e-2, 1e-3],
            groups: default_groups(),
            appendix: AppendixSpec::default(),
            seed: 1729,
            output_dir: None,
        }
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn validate_quadrature(q: &QuadratureSettings) -> Result<()> {
    for (name, v) in [
        ("radial_panels", q.radial_panels),
        ("nodes_per_panel", q.nodes_per_panel),
        ("angular_nodes", q.angular_nodes),
        ("mass_panels", q.mass_panels),
        ("mass_nodes_per_panel", q.mass_nodes_per_panel),
    ] {
        if v == 0 {
            return Err(field_err(&format!("quadrature.{name}"), "must be at least 1"));
        }
    }
    for (name, v) in [("momentum_tol", q.momentum_tol), ("mass_tail_tol", q.mass_tail_tol)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(field_err(&format!("quadrature.{name}"), format!("must lie in (0, 1), got {v}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field_err(if path.is_empty() { "<root>" } else { &path }, e.inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.dims).map_err(|e| field_err("dims", e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        self.dims()?;
        self.grid.validate().map_err(|e| field_err("grid", e))?;
        if self.grid.points().len() < 2 {
            return Err(field_err("grid", "the λ grid is empty"));
        }
        if self.grid.decades() < 2.0 - 1e-9 {
            return Err(field_err("grid", "the λ grid must span at least two decades"));
        }
        validate_quadrature(&self.quadrature)?;
        let nonneg = |name: &str, v: &[f64], positive: bool| -> Result<()> {
            if v.is_empty() {
                return Err(field_err(name, "must not be empty"));
            }
            for (i, &m) in v.iter().enumerate() {
                if !m.is_finite() || m < 0.0 || (positive && m == 0.0) {
                    return Err(field_err(&format!("{name}[{i}]"), format!("invalid value {m}")));
                }
            }
            Ok(())
        };
        nonneg("masses", &self.masses, true)?;
        nonneg("energy_masses", &self.energy_masses, false)?;
        nonneg("truncation_eps", &self.truncation_eps, true)?;
        for (name, v) in [
            ("probe_width", self.probe_width),
            ("beta", self.beta),
            ("q", self.q),
            ("lutz_probe_lambda", self.lutz_probe_lambda),
            ("preservation_lambda", self.preservation_lambda),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field_err(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.nuclearity_mass >= 0.0 && self.nuclearity_mass.is_finite()) {
            return Err(field_err("nuclearity_mass", "must be finite and nonnegative"));
        }
        for (i, &p) in self.p_values.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(field_err(&format!("p_values[{i}]"), format!("{p} outside (0, 1]")));
            }
        }
        if let MassTruncation::Fixed(m) = self.lutz.truncation {
            if !(m > 0.0 && m.is_finite()) {
                return Err(field_err("lutz.truncation", "fixed truncation must be positive"));
            }
        }
        let a = &self.appendix;
        if a.min_dim < 1 || a.min_dim > a.max_dim {
            return Err(field_err("appendix.min_dim", "need 1 <= min_dim <= max_dim"));
        }
        if !(a.p > 0.0 && a.p < 1.0) {
            return Err(field_err("appendix.p", "must lie in (0, 1)"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if let GroupSpec::Torus { rank, weight_box, .. } = g {
                if *rank == 0 || *weight_box < 0 {
                    return Err(field_err(&format!("groups[{i}]"), "torus needs rank >= 1 and weight_box >= 0"));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding (output directory excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
