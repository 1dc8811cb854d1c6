//! JSON model description files.
//!
//! A file is one object tagged by `kind`:
//!
//! ```json
//! { "kind": "double-well", "omega": 1.0, "d": [1.0, 0.0, 0.0],
//!   "initial": { "type": "populations", "p_l": 0.5, "gamma_re": 0.4, "gamma_im": 0.0 } }
//! { "kind": "chain", "n": 4, "hop": 1.0, "spacing": 1.0 }
//! { "kind": "classical-ctmc", "sites": [[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]],
//!   "rates": [[0.0, 1.0], [1.0, 0.0]], "initial_dist": [0.5, 0.5], "seed": 7 }
//! { "kind": "custom", "sites": [...], "hamiltonian": { "re": [[...]], "im": [[...]] },
//!   "initial": { "type": "vector", "re": [...] } }
//! ```
//!
//! `doublewell` is accepted as an alias of `double-well`. Optional fields that
//! are absent stay absent when the file is written back, so parsing and
//! serializing an example file reproduces it. Unknown fields are rejected.
//!
//! Initial states are `populations` (`p_l`, `gamma_re`, `gamma_im`, two sites
//! only), `site` (a localized particle), `matrix` (density matrix) or
//! `vector` (normalized pure state). `im` parts default to zero.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classical::ClassicalModel;
use crate::error::{Result, TdiError};
use crate::model::{build_chain, build_double_well, InitialState, SiteLattice, TargetModel};
use crate::operator::{Complex, Operator};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_operator(&self) -> Result<Operator> {
        let n = self.re.len();
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().zip(&self.re).any(|(a, b)| a.len() != b.len()) {
                return Err(TdiError::InvalidParameter("matrix re and im parts differ in shape".into()));
            }
        }
        let rows: Vec<Vec<Complex>> = self
            .re
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| Complex::new(x, self.im.as_ref().map_or(0.0, |im| im[i][j])))
                    .collect()
            })
            .collect();
        Operator::from_rows(&rows)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Populations {
        p_l: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma_re: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma_im: Option<f64>,
    },
    Site {
        site: usize,
    },
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    Vector {
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
}

impl InitialSpec {
    pub fn to_initial(&self, dim: usize) -> Result<InitialState> {
        match self {
            Self::Populations { p_l, gamma_re, gamma_im } => {
                if dim != 2 {
                    return Err(TdiError::InvalidParameter(format!(
                        "populations initial state needs 2 sites, model has {dim}"
                    )));
                }
                let g = Complex::new(gamma_re.unwrap_or(0.0), gamma_im.unwrap_or(0.0));
                Ok(InitialState::Density(Operator::from_rows(&[
                    vec![Complex::new(*p_l, 0.0), g],
                    vec![g.conj(), Complex::new(1.0 - p_l, 0.0)],
                ])?))
            }
            Self::Site { site } => {
                if *site >= dim {
                    return Err(TdiError::InvalidParameter(format!(
                        "initial site {site} out of range for {dim} sites"
                    )));
                }
                let mut psi = DVector::zeros(dim);
                psi[*site] = Complex::new(1.0, 0.0);
                Ok(InitialState::Pure(psi))
            }
            Self::Matrix { re, im } => {
                Ok(InitialState::Density(MatrixSpec { re: re.clone(), im: im.clone() }.to_operator()?))
            }
            Self::Vector { re, im } => {
                if let Some(im) = im {
                    if im.len() != re.len() {
                        return Err(TdiError::InvalidParameter("vector re and im parts differ in length".into()));
                    }
                }
                let psi = DVector::from_iterator(
                    re.len(),
                    re.iter().enumerate().map(|(k, &x)| Complex::new(x, im.as_ref().map_or(0.0, |im| im[k]))),
                );
                Ok(InitialState::Pure(psi))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(alias = "doublewell")]
    DoubleWell {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        omega: f64,
        d: Vec3,
        initial: InitialSpec,
    },
    Chain {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        n: usize,
        hop: f64,
        spacing: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial: Option<InitialSpec>,
    },
    ClassicalCtmc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        sites: Vec<Vec3>,
        rates: Vec<Vec<f64>>,
        initial_dist: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        sites: Vec<Vec3>,
        hamiltonian: MatrixSpec,
        /// Site-density operators; single-particle projectors when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        site_ops: Option<Vec<MatrixSpec>>,
        initial: InitialSpec,
        /// Vector `d` for scalar `p.d` inputs.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<Vec3>,
    },
}

/// A model ready for evaluation.
#[derive(Clone, Debug)]
pub enum LoadedModel {
    Quantum(TargetModel),
    Classical(ClassicalModel),
}

impl LoadedModel {
    pub fn id(&self) -> &str {
        match self {
            Self::Quantum(m) => m.id(),
            Self::Classical(_) => "classical-ctmc",
        }
    }
}

impl ModelSpec {
    /// Built-in models: `doublewell`, `chain`, `classical-ctmc`.
    pub fn builtin(name: &str) -> Option<Self> {
        let spec = match name {
            "doublewell" | "double-well" => Self::DoubleWell {
                id: None,
                omega: 1.0,
                d: [1.0, 0.0, 0.0],
                initial: InitialSpec::Populations { p_l: 0.5, gamma_re: Some(0.4), gamma_im: Some(0.0) },
            },
            "chain" => {
                Self::Chain { id: None, n: 4, hop: 1.0, spacing: 1.0, initial: Some(InitialSpec::Site { site: 0 }) }
            }
            "classical-ctmc" => Self::ClassicalCtmc {
                id: None,
                sites: vec![[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]],
                rates: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                initial_dist: vec![0.5, 0.5],
                seed: None,
            },
            _ => return None,
        };
        Some(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::DoubleWell { .. } => "double-well",
            Self::Chain { .. } => "chain",
            Self::ClassicalCtmc { .. } => "classical-ctmc",
            Self::Custom { .. } => "custom",
        }
    }

    /// Overrides one parameter. `key` names a top-level field or a field of
    /// the initial-state spec; `value` is parsed as JSON, falling back to a
    /// string. The result is re-validated against the schema.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<()> {
        let parsed: Value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        let mut doc = serde_json::to_value(&*self)?;
        let obj = doc.as_object_mut().expect("model spec serializes to an object");
        if key == "kind" {
            return Err(TdiError::InvalidParameter("model kind cannot be overridden".into()));
        }
        let initial_field = matches!(key, "p_l" | "gamma_re" | "gamma_im" | "site");
        let in_initial = !obj.contains_key(key) && initial_field && obj.get("initial").is_some_and(Value::is_object);
        if in_initial {
            obj.get_mut("initial").and_then(Value::as_object_mut).expect("checked").insert(key.to_string(), parsed);
        } else {
            obj.insert(key.to_string(), parsed);
        }
        *self = serde_json::from_value(doc)
            .map_err(|e| TdiError::InvalidParameter(format!("--param {key}={value}: {e}")))?;
        Ok(())
    }

    /// Builds the model. `seed` overrides the seed of a classical model.
    pub fn to_model(&self, seed: Option<u64>) -> Result<LoadedModel> {
        let with_id = |m: TargetModel, id: &Option<String>| match id {
            Some(id) => m.with_id(id.clone()),
            None => m,
        };
        match self {
            Self::DoubleWell { id, omega, d, initial } => {
                let m = match initial {
                    InitialSpec::Populations { p_l, gamma_re, gamma_im } => {
                        let g = Complex::new(gamma_re.unwrap_or(0.0), gamma_im.unwrap_or(0.0));
                        build_double_well(*omega, *d, *p_l, g)?
                    }
                    other => build_double_well(*omega, *d, 1.0, Complex::new(0.0, 0.0))?
                        .with_initial(other.to_initial(2)?)?,
                };
                Ok(LoadedModel::Quantum(with_id(m, id)))
            }
            Self::Chain { id, n, hop, spacing, initial } => {
                let mut m = build_chain(*n, *hop, *spacing)?;
                if let Some(init) = initial {
                    m = m.with_initial(init.to_initial(*n)?)?;
                }
                Ok(LoadedModel::Quantum(with_id(m, id)))
            }
            Self::ClassicalCtmc { id: _, sites, rates, initial_dist, seed: file_seed } => {
                let s = seed.or(*file_seed).unwrap_or(0);
                Ok(LoadedModel::Classical(ClassicalModel::new(sites.clone(), rates.clone(), initial_dist.clone(), s)?))
            }
            Self::Custom { id, sites, hamiltonian, site_ops, initial, reference } => {
                let lattice = match site_ops {
                    Some(ops) => SiteLattice::new(
                        sites.clone(),
                        ops.iter().map(MatrixSpec::to_operator).collect::<Result<_>>()?,
                    )?,
                    None => SiteLattice::single_particle(sites.clone())?,
                };
                let dim = lattice.dim();
                let mut m = TargetModel::new(lattice, hamiltonian.to_operator()?, initial.to_initial(dim)?)?;
                if let Some(d) = reference {
                    m = m.with_reference(*d);
                }
                Ok(LoadedModel::Quantum(m.with_id(id.clone().unwrap_or_else(|| "custom".into()))))
            }
        }
    }
}
