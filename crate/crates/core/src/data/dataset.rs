//! Validated observation tables.
//!
//! A `Dataset` is immutable after construction: treatment is binary with both
//! arms present, Likert items lie in {−3..3} with reverse-coded items already
//! sign-flipped, and student ids are unique. Outcomes and items may be missing
//! per row; covariates must be complete.

use super::schema::{CovariateKind, DatasetSchema, ScaleDefinition};
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::path::Path;

pub const LIKERT_MIN: i8 = -3;
pub const LIKERT_MAX: i8 = 3;

#[derive(Debug, Clone)]
pub enum CovariateColumn {
    Numeric { name: String, values: Vec<f64> },
    Categorical { name: String, reference: String, values: Vec<String> },
}

impl CovariateColumn {
    pub fn name(&self) -> &str {
        match self {
            CovariateColumn::Numeric { name, .. } => name,
            CovariateColumn::Categorical { name, .. } => name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            CovariateColumn::Numeric { values, .. } => values.len(),
            CovariateColumn::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn filtered(&self, keep: &[bool]) -> CovariateColumn {
        match self {
            CovariateColumn::Numeric { name, values } => CovariateColumn::Numeric {
                name: name.clone(),
                values: values
                    .iter()
                    .zip(keep)
                    .filter_map(|(v, &k)| k.then_some(*v))
                    .collect(),
            },
            CovariateColumn::Categorical { name, reference, values } => {
                CovariateColumn::Categorical {
                    name: name.clone(),
                    reference: reference.clone(),
                    values: values
                        .iter()
                        .zip(keep)
                        .filter_map(|(v, &k)| k.then_some(v.clone()))
                        .collect(),
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    ids: Vec<String>,
    treatment: Vec<u8>,
    outcomes: Vec<(String, Vec<Option<f64>>)>,
    covariates: Vec<CovariateColumn>,
    items: Vec<(String, Vec<Option<i8>>)>,
    scales: Vec<ScaleDefinition>,
}

impl Dataset {
    /// Assemble a dataset from columns, enforcing every invariant.
    ///
    /// Item values must already be polarity-aligned; `load_dataset` performs
    /// the reverse-coding flip for data read from disk.
    pub fn from_columns(
        ids: Vec<String>,
        treatment: Vec<u8>,
        outcomes: Vec<(String, Vec<Option<f64>>)>,
        covariates: Vec<CovariateColumn>,
        items: Vec<(String, Vec<Option<i8>>)>,
        scales: Vec<ScaleDefinition>,
    ) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::validation("dataset has no rows"));
        }
        if treatment.len() != n {
            return Err(Error::validation("treatment column length mismatch"));
        }
        let mut seen = BTreeSet::new();
        for (row, id) in ids.iter().enumerate() {
            if !seen.insert(id.clone()) {
                return Err(Error::validation(format!("duplicate student id '{id}' at row {row}")));
            }
        }
        let mut treated = 0usize;
        for (row, &d) in treatment.iter().enumerate() {
            if d > 1 {
                return Err(Error::validation(format!(
                    "treatment value {d} at row {row} is not binary"
                )));
            }
            treated += d as usize;
        }
        if treated == 0 || treated == n {
            return Err(Error::validation("treatment column must contain both 0 and 1"));
        }
        for (name, values) in &outcomes {
            if values.len() != n {
                return Err(Error::validation(format!("outcome '{name}' length mismatch")));
            }
        }
        for col in &covariates {
            if col.len() != n {
                return Err(Error::validation(format!("covariate '{}' length mismatch", col.name())));
            }
        }
        for (name, values) in &items {
            if values.len() != n {
                return Err(Error::validation(format!("item '{name}' length mismatch")));
            }
            for (row, v) in values.iter().enumerate() {
                if let Some(v) = v {
                    if *v < LIKERT_MIN || *v > LIKERT_MAX {
                        return Err(Error::validation(format!(
                            "item '{name}' row {row}: value {v} outside Likert range -3..3"
                        )));
                    }
                }
            }
        }
        for scale in &scales {
            scale.validate()?;
            for item in &scale.items {
                if !items.iter().any(|(name, _)| name == item) {
                    return Err(Error::schema(format!(
                        "scale '{}' references missing item column '{item}'",
                        scale.name
                    )));
                }
            }
        }
        Ok(Self { ids, treatment, outcomes, covariates, items, scales })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    /// (control, treated) counts.
    pub fn cohort_counts(&self) -> (usize, usize) {
        let treated = self.treatment.iter().map(|&d| d as usize).sum::<usize>();
        (self.n() - treated, treated)
    }

    pub fn outcome(&self, name: &str) -> Result<&[Option<f64>]> {
        self.outcomes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::schema(format!("unknown outcome column '{name}'")))
    }

    /// Outcome values with missing entries rejected.
    pub fn outcome_complete(&self, name: &str) -> Result<Vec<f64>> {
        let values = self.outcome(name)?;
        values
            .iter()
            .enumerate()
            .map(|(row, v)| {
                v.ok_or_else(|| {
                    Error::validation(format!(
                        "outcome '{name}' missing at row {row}; select a sample requiring it first"
                    ))
                })
            })
            .collect()
    }

    pub fn outcome_names(&self) -> Vec<&str> {
        self.outcomes.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn covariate(&self, name: &str) -> Option<&CovariateColumn> {
        self.covariates.iter().find(|c| c.name() == name)
    }

    pub fn covariates(&self) -> &[CovariateColumn] {
        &self.covariates
    }

    pub fn item(&self, name: &str) -> Option<&[Option<i8>]> {
        self.items.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn item_names(&self) -> Vec<&str> {
        self.items.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn scales(&self) -> &[ScaleDefinition] {
        &self.scales
    }

    pub fn scale(&self, name: &str) -> Result<&ScaleDefinition> {
        self.scales
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::schema(format!("unknown scale '{name}'")))
    }

    /// Rows where every item of `scale` is present.
    pub fn complete_rows_for_scale(&self, scale: &ScaleDefinition) -> Vec<usize> {
        (0..self.n())
            .filter(|&row| {
                scale.items.iter().all(|item| {
                    self.item(item).map(|v| v[row].is_some()).unwrap_or(false)
                })
            })
            .collect()
    }

    /// Keep the rows flagged true; used by sample selection.
    pub(crate) fn filtered(&self, keep: &[bool]) -> Result<Dataset> {
        let ids: Vec<String> =
            self.ids.iter().zip(keep).filter_map(|(v, &k)| k.then(|| v.clone())).collect();
        if ids.is_empty() {
            return Err(Error::validation("sample selection removed every row"));
        }
        let treatment: Vec<u8> =
            self.treatment.iter().zip(keep).filter_map(|(v, &k)| k.then_some(*v)).collect();
        let outcomes = self
            .outcomes
            .iter()
            .map(|(n, v)| {
                (n.clone(), v.iter().zip(keep).filter_map(|(x, &k)| k.then_some(*x)).collect())
            })
            .collect();
        let covariates = self.covariates.iter().map(|c| c.filtered(keep)).collect();
        let items = self
            .items
            .iter()
            .map(|(n, v)| {
                (n.clone(), v.iter().zip(keep).filter_map(|(x, &k)| k.then_some(*x)).collect())
            })
            .collect();
        Dataset::from_columns(ids, treatment, outcomes, covariates, items, self.scales.clone())
    }
}

/// Load and validate a CSV observation table against a schema.
///
/// The file must be UTF-8 and comma-separated with a header row. Empty cells
/// are missing values, allowed only in outcome and item columns. Reverse-coded
/// items are sign-flipped here so that every stored item points in its
/// construct's direction.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(format!("missing column '{name}' in {}", path.display())))
    };

    let id_idx = col_index(&schema.id)?;
    let d_idx = col_index(&schema.treatment)?;
    let outcome_idx: Vec<(String, usize)> = schema
        .outcomes
        .iter()
        .map(|n| col_index(n).map(|i| (n.clone(), i)))
        .collect::<Result<_>>()?;
    let covariate_idx: Vec<(usize, &super::schema::CovariateSchema)> = schema
        .covariates
        .iter()
        .map(|c| col_index(&c.name).map(|i| (i, c)))
        .collect::<Result<_>>()?;
    // Item columns with their scale's reverse flag.
    let mut item_idx: Vec<(String, usize, bool)> = Vec::new();
    for scale in &schema.scales {
        for (k, item) in scale.items.iter().enumerate() {
            item_idx.push((item.clone(), col_index(item)?, scale.is_reversed(k)));
        }
    }

    let mut ids = Vec::new();
    let mut treatment: Vec<u8> = Vec::new();
    let mut outcomes: Vec<(String, Vec<Option<f64>>)> =
        outcome_idx.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
    let mut covariates: Vec<CovariateColumn> = covariate_idx
        .iter()
        .map(|(_, c)| match c.kind {
            CovariateKind::Numeric => {
                CovariateColumn::Numeric { name: c.name.clone(), values: Vec::new() }
            }
            CovariateKind::Categorical => CovariateColumn::Categorical {
                name: c.name.clone(),
                reference: c.reference.clone().unwrap_or_default(),
                values: Vec::new(),
            },
        })
        .collect();
    let mut items: Vec<(String, Vec<Option<i8>>)> =
        item_idx.iter().map(|(n, _, _)| (n.clone(), Vec::new())).collect();

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        ids.push(record.get(id_idx).unwrap_or("").trim().to_string());

        let d_raw = record.get(d_idx).unwrap_or("").trim();
        let d: u8 = d_raw.parse().map_err(|_| {
            Error::validation(format!("row {row}: treatment value '{d_raw}' is not 0/1"))
        })?;
        treatment.push(d);

        for ((_, idx), (_, store)) in outcome_idx.iter().zip(outcomes.iter_mut()) {
            let raw = record.get(*idx).unwrap_or("").trim();
            if raw.is_empty() {
                store.push(None);
            } else {
                let v: f64 = raw.parse().map_err(|_| {
                    Error::validation(format!("row {row}: outcome value '{raw}' is not numeric"))
                })?;
                store.push(Some(v));
            }
        }

        for ((idx, spec), store) in covariate_idx.iter().zip(covariates.iter_mut()) {
            let raw = record.get(*idx).unwrap_or("").trim();
            if raw.is_empty() {
                return Err(Error::validation(format!(
                    "row {row}: covariate '{}' is missing (covariates must be complete)",
                    spec.name
                )));
            }
            match store {
                CovariateColumn::Numeric { values, .. } => {
                    let v: f64 = raw.parse().map_err(|_| {
                        Error::validation(format!(
                            "row {row}: covariate '{}' value '{raw}' is not numeric",
                            spec.name
                        ))
                    })?;
                    values.push(v);
                }
                CovariateColumn::Categorical { values, .. } => values.push(raw.to_string()),
            }
        }

        for ((name, idx, reversed), (_, store)) in item_idx.iter().zip(items.iter_mut()) {
            let raw = record.get(*idx).unwrap_or("").trim();
            if raw.is_empty() {
                store.push(None);
                continue;
            }
            let v: i8 = raw.parse().map_err(|_| {
                Error::validation(format!("row {row}: item '{name}' value '{raw}' is not an integer"))
            })?;
            if !(LIKERT_MIN..=LIKERT_MAX).contains(&v) {
                return Err(Error::validation(format!(
                    "row {row}: item '{name}' value {v} outside Likert range -3..3"
                )));
            }
            store.push(Some(if *reversed { -v } else { v }));
        }
    }

    Dataset::from_columns(ids, treatment, outcomes, covariates, items, schema.scales.clone())
}

#[cfg(test)]
mod tests {
    use super::super::schema::Questionnaire;
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn basic_schema() -> DatasetSchema {
        DatasetSchema {
            id: "sid".into(),
            treatment: "d".into(),
            outcomes: vec!["y".into()],
            covariates: vec![],
            scales: vec![ScaleDefinition {
                name: "s".into(),
                items: vec!["i1".into(), "i2".into()],
                reverse: vec![false, true],
                questionnaire: Questionnaire::First,
            }],
        }
    }

    #[test]
    fn three_row_fixture_parses() {
        let f = write_csv("sid,d,y,i1,i2\na,0,1.5,2,1\nb,1,2.0,-1,0\nc,1,,3,-3\n");
        let ds = load_dataset(f.path(), &basic_schema()).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.cohort_counts(), (1, 2));
        // Reverse-coded i2 is flipped at load.
        assert_eq!(ds.item("i2").unwrap()[0], Some(-1));
        assert_eq!(ds.outcome("y").unwrap()[2], None);
    }

    #[test]
    fn out_of_range_likert_names_the_row() {
        let f = write_csv("sid,d,y,i1,i2\na,0,1,2,1\nb,1,2,5,0\n");
        let err = load_dataset(f.path(), &basic_schema()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
        assert!(err.to_string().contains("5"), "{err}");
    }

    #[test]
    fn non_binary_treatment_is_rejected() {
        let f = write_csv("sid,d,y,i1,i2\na,0,1,2,1\nb,2,2,1,0\n");
        assert!(load_dataset(f.path(), &basic_schema()).is_err());
    }

    #[test]
    fn one_armed_treatment_is_rejected() {
        let f = write_csv("sid,d,y,i1,i2\na,1,1,2,1\nb,1,2,1,0\n");
        assert!(load_dataset(f.path(), &basic_schema()).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let f = write_csv("sid,d,y,i1,i2\na,0,1,2,1\na,1,2,1,0\n");
        let err = load_dataset(f.path(), &basic_schema()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let f = write_csv("sid,d,y,i1\na,0,1,2\nb,1,2,1\n");
        let err = load_dataset(f.path(), &basic_schema()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn cohort_sized_fixture_reports_counts() {
        // Mirror of the target geometry: 202 control, 218 treated.
        let mut csv = String::from("sid,d,y,i1,i2\n");
        for i in 0..420 {
            let d = if i < 202 { 0 } else { 1 };
            csv.push_str(&format!("s{i},{d},1.0,0,0\n"));
        }
        let f = write_csv(&csv);
        let ds = load_dataset(f.path(), &basic_schema()).unwrap();
        assert_eq!(ds.n(), 420);
        assert_eq!(ds.cohort_counts(), (202, 218));
    }
}
