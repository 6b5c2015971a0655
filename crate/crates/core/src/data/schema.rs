//! Column-role schema and scale definitions, deserialized from the JSON
//! pipeline config.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateSchema {
    pub name: String,
    pub kind: CovariateKind,
    /// Reference level for dummy coding; mandatory for categorical columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Questionnaire {
    First,
    Second,
}

/// A named group of Likert item columns; the unit of psychometric analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleDefinition {
    pub name: String,
    pub items: Vec<String>,
    /// Per-item reverse-coding flags; empty means all false.
    #[serde(default)]
    pub reverse: Vec<bool>,
    pub questionnaire: Questionnaire,
}

impl ScaleDefinition {
    pub fn validate(&self) -> Result<()> {
        if self.items.len() < 2 {
            return Err(Error::schema(format!(
                "scale '{}' needs at least 2 items, has {}",
                self.name,
                self.items.len()
            )));
        }
        if !self.reverse.is_empty() && self.reverse.len() != self.items.len() {
            return Err(Error::schema(format!(
                "scale '{}': reverse flags ({}) do not match items ({})",
                self.name,
                self.reverse.len(),
                self.items.len()
            )));
        }
        let unique: BTreeSet<&String> = self.items.iter().collect();
        if unique.len() != self.items.len() {
            return Err(Error::schema(format!("scale '{}' repeats an item column", self.name)));
        }
        Ok(())
    }

    pub fn is_reversed(&self, index: usize) -> bool {
        self.reverse.get(index).copied().unwrap_or(false)
    }
}

/// Column-role map for one dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub id: String,
    pub treatment: String,
    #[serde(default)]
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<CovariateSchema>,
    #[serde(default)]
    pub scales: Vec<ScaleDefinition>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        for scale in &self.scales {
            scale.validate()?;
        }
        // Item columns must be disjoint across scales.
        let mut seen: BTreeSet<&String> = BTreeSet::new();
        for scale in &self.scales {
            for item in &scale.items {
                if !seen.insert(item) {
                    return Err(Error::schema(format!(
                        "item column '{item}' appears in more than one scale"
                    )));
                }
            }
        }
        for cov in &self.covariates {
            if cov.kind == CovariateKind::Categorical && cov.reference.is_none() {
                return Err(Error::schema(format!(
                    "categorical covariate '{}' needs a reference level",
                    cov.name
                )));
            }
        }
        Ok(())
    }

    pub fn item_columns(&self) -> Vec<String> {
        self.scales.iter().flat_map(|s| s.items.iter().cloned()).collect()
    }

    pub fn scale(&self, name: &str) -> Option<&ScaleDefinition> {
        self.scales.iter().find(|s| s.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale(name: &str, items: &[&str]) -> ScaleDefinition {
        ScaleDefinition {
            name: name.into(),
            items: items.iter().map(|s| s.to_string()).collect(),
            reverse: vec![],
            questionnaire: Questionnaire::First,
        }
    }

    #[test]
    fn single_item_scale_is_rejected() {
        assert!(scale("s", &["a"]).validate().is_err());
        assert!(scale("s", &["a", "b"]).validate().is_ok());
    }

    #[test]
    fn overlapping_scales_are_rejected() {
        let schema = DatasetSchema {
            id: "id".into(),
            treatment: "d".into(),
            outcomes: vec![],
            covariates: vec![],
            scales: vec![scale("s1", &["a", "b"]), scale("s2", &["b", "c"])],
        };
        assert!(schema.validate().is_err());
    }

    #[test]
    fn categorical_without_reference_is_rejected() {
        let schema = DatasetSchema {
            id: "id".into(),
            treatment: "d".into(),
            outcomes: vec![],
            covariates: vec![CovariateSchema {
                name: "sex".into(),
                kind: CovariateKind::Categorical,
                reference: None,
            }],
            scales: vec![],
        };
        assert!(schema.validate().is_err());
    }
}
