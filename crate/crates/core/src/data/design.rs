//! Numeric design matrices with documented dummy coding.
//!
//! Column order is deterministic: requested variables in input order, with
//! each categorical expanding into its non-reference levels in lexicographic
//! order. The encoding map retains enough information to reconstruct the
//! original categorical value of any row.

use super::dataset::{CovariateColumn, Dataset};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct CategoricalEncoding {
    pub variable: String,
    pub reference: String,
    /// Non-reference levels, one dummy column each, in column order.
    pub levels: Vec<String>,
    /// Index of the first dummy column in the design matrix.
    pub first_column: usize,
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    labels: Vec<String>,
    encodings: Vec<CategoricalEncoding>,
    standardized: bool,
    source_variables: Vec<String>,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn encodings(&self) -> &[CategoricalEncoding] {
        &self.encodings
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }

    /// Variables requested before dummy expansion.
    pub fn source_variables(&self) -> &[String] {
        &self.source_variables
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Reconstruct the categorical level of `variable` at `row` from the
    /// dummy block (inverse of the encoding).
    pub fn decode_categorical(&self, variable: &str, row: usize) -> Result<String> {
        let enc = self
            .encodings
            .iter()
            .find(|e| e.variable == variable)
            .ok_or_else(|| Error::schema(format!("'{variable}' is not an encoded categorical")))?;
        if self.standardized {
            return Err(Error::validation(
                "cannot decode categorical values from a standardized design",
            ));
        }
        for (k, level) in enc.levels.iter().enumerate() {
            if (self.matrix[(row, enc.first_column + k)] - 1.0).abs() < 1e-12 {
                return Ok(level.clone());
            }
        }
        Ok(enc.reference.clone())
    }
}

/// Expand the requested dataset variables into a numeric matrix.
///
/// `variables` may name numeric covariates, categorical covariates, or item
/// columns. Item columns must be complete in `ds`.
pub fn build_design_matrix(
    ds: &Dataset,
    variables: &[String],
    standardize: bool,
) -> Result<DesignMatrix> {
    let n = ds.n();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    let mut encodings: Vec<CategoricalEncoding> = Vec::new();

    for var in variables {
        if let Some(col) = ds.covariate(var) {
            match col {
                CovariateColumn::Numeric { values, .. } => {
                    columns.push((var.clone(), values.clone()));
                }
                CovariateColumn::Categorical { reference, values, .. } => {
                    let mut levels: BTreeSet<String> = values.iter().cloned().collect();
                    levels.remove(reference);
                    let levels: Vec<String> = levels.into_iter().collect();
                    let first_column = columns.len();
                    for level in &levels {
                        let dummy: Vec<f64> = values
                            .iter()
                            .map(|v| if v == level { 1.0 } else { 0.0 })
                            .collect();
                        columns.push((format!("{var}={level}"), dummy));
                    }
                    encodings.push(CategoricalEncoding {
                        variable: var.clone(),
                        reference: reference.clone(),
                        levels,
                        first_column,
                    });
                }
            }
        } else if let Some(values) = ds.item(var) {
            let complete: Vec<f64> = values
                .iter()
                .enumerate()
                .map(|(row, v)| {
                    v.map(|x| x as f64).ok_or_else(|| {
                        Error::validation(format!(
                            "item '{var}' missing at row {row}; select a complete sample first"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            columns.push((var.clone(), complete));
        } else {
            return Err(Error::schema(format!("unknown design variable '{var}'")));
        }
    }

    let p = columns.len();
    let mut matrix = DMatrix::zeros(n, p);
    for (j, (_, values)) in columns.iter().enumerate() {
        for i in 0..n {
            matrix[(i, j)] = values[i];
        }
    }

    if standardize {
        for j in 0..p {
            let col = matrix.column(j);
            let mean = col.sum() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let sd = (ss / (n as f64 - 1.0)).sqrt();
            if sd <= 1e-12 {
                return Err(Error::validation(format!(
                    "column '{}' is constant and cannot be standardized",
                    columns[j].0
                )));
            }
            for i in 0..n {
                matrix[(i, j)] = (matrix[(i, j)] - mean) / sd;
            }
        }
    }

    Ok(DesignMatrix {
        matrix,
        labels: columns.into_iter().map(|(l, _)| l).collect(),
        encodings,
        standardized: standardize,
        source_variables: variables.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::schema::Questionnaire;
    use super::super::schema::ScaleDefinition;
    use super::*;

    fn dataset_with_categorical() -> Dataset {
        Dataset::from_columns(
            (0..6).map(|i| format!("s{i}")).collect(),
            vec![0, 1, 0, 1, 0, 1],
            vec![("y".into(), vec![Some(1.0); 6])],
            vec![
                CovariateColumn::Categorical {
                    name: "state".into(),
                    reference: "other".into(),
                    values: vec![
                        "nrw".into(),
                        "other".into(),
                        "bavaria".into(),
                        "nrw".into(),
                        "bavaria".into(),
                        "other".into(),
                    ],
                },
                CovariateColumn::Numeric {
                    name: "grade".into(),
                    values: vec![1.0, 2.0, 3.0, 2.5, 1.5, 2.0],
                },
            ],
            vec![
                ("i1".into(), vec![Some(1), Some(0), Some(-1), Some(2), Some(0), Some(1)]),
                ("i2".into(), vec![Some(0), Some(1), Some(-2), Some(1), Some(0), Some(2)]),
            ],
            vec![ScaleDefinition {
                name: "s".into(),
                items: vec!["i1".into(), "i2".into()],
                reverse: vec![],
                questionnaire: Questionnaire::First,
            }],
        )
        .unwrap()
    }

    #[test]
    fn three_level_categorical_yields_two_dummies() {
        let ds = dataset_with_categorical();
        let design =
            build_design_matrix(&ds, &["state".into(), "grade".into()], false).unwrap();
        assert_eq!(design.p(), 3);
        assert_eq!(design.labels(), &["state=bavaria", "state=nrw", "grade"]);
        // Row 0 is "nrw": dummy pattern (0, 1).
        assert_eq!(design.matrix()[(0, 0)], 0.0);
        assert_eq!(design.matrix()[(0, 1)], 1.0);
    }

    #[test]
    fn encoding_reconstructs_original_levels() {
        let ds = dataset_with_categorical();
        let design = build_design_matrix(&ds, &["state".into()], false).unwrap();
        let expected = ["nrw", "other", "bavaria", "nrw", "bavaria", "other"];
        for (row, want) in expected.iter().enumerate() {
            assert_eq!(design.decode_categorical("state", row).unwrap(), *want);
        }
    }

    #[test]
    fn standardization_centers_and_scales() {
        let ds = dataset_with_categorical();
        let design =
            build_design_matrix(&ds, &["grade".into(), "i1".into()], true).unwrap();
        for j in 0..design.p() {
            let col = design.matrix().column(j);
            let mean = col.sum() / col.len() as f64;
            let var: f64 =
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0);
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_under_standardization_errors_with_name() {
        let ds = Dataset::from_columns(
            vec!["a".into(), "b".into()],
            vec![0, 1],
            vec![],
            vec![CovariateColumn::Numeric { name: "flat".into(), values: vec![2.0, 2.0] }],
            vec![],
            vec![],
        )
        .unwrap();
        let err = build_design_matrix(&ds, &["flat".into()], true).unwrap_err();
        assert!(err.to_string().contains("flat"), "{err}");
    }

    #[test]
    fn determinism_identical_inputs_identical_matrices() {
        let ds = dataset_with_categorical();
        let a = build_design_matrix(&ds, &["state".into(), "grade".into(), "i1".into()], true)
            .unwrap();
        let b = build_design_matrix(&ds, &["state".into(), "grade".into(), "i1".into()], true)
            .unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.labels(), b.labels());
    }
}
