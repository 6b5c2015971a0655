//! Item blocks: the unit of psychometric analysis.

use crate::data::{Dataset, ScaleDefinition, LIKERT_MAX, LIKERT_MIN};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// An n × q matrix of polarity-aligned Likert responses for one scale.
#[derive(Debug, Clone)]
pub struct ItemBlock {
    scale: String,
    items: Vec<String>,
    data: DMatrix<f64>,
}

impl ItemBlock {
    /// Build from integer Likert responses (rows = observations).
    pub fn from_likert(scale: &str, items: Vec<String>, rows: &[Vec<i8>]) -> Result<Self> {
        let q = items.len();
        if q < 2 {
            return Err(Error::validation("item block needs at least 2 items"));
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::validation("item block has no rows"));
        }
        let mut data = DMatrix::zeros(n, q);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::validation(format!("row {i} has {} items, expected {q}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(LIKERT_MIN..=LIKERT_MAX).contains(&v) {
                    return Err(Error::validation(format!(
                        "item '{}' row {i}: value {v} outside Likert range",
                        items[j]
                    )));
                }
                data[(i, j)] = v as f64;
            }
        }
        Ok(Self { scale: scale.to_string(), items, data })
    }

    /// Extract the block for `scale` from a dataset, keeping only rows where
    /// every item of the scale is present.
    pub fn from_dataset(ds: &Dataset, scale: &ScaleDefinition) -> Result<Self> {
        let rows = ds.complete_rows_for_scale(scale);
        if rows.is_empty() {
            return Err(Error::validation(format!(
                "no complete responses for scale '{}'",
                scale.name
            )));
        }
        let q = scale.items.len();
        let mut data = DMatrix::zeros(rows.len(), q);
        for (jj, item) in scale.items.iter().enumerate() {
            let values = ds
                .item(item)
                .ok_or_else(|| Error::schema(format!("missing item column '{item}'")))?;
            for (ii, &row) in rows.iter().enumerate() {
                data[(ii, jj)] = values[row].expect("complete row") as f64;
            }
        }
        Ok(Self { scale: scale.name.clone(), items: scale.items.clone(), data })
    }

    /// Wrap already-numeric responses (simulated continuous data is allowed;
    /// dataset-derived blocks always hold integers).
    pub fn from_matrix(scale: &str, items: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if items.len() != data.ncols() {
            return Err(Error::validation("item name count does not match columns"));
        }
        if data.ncols() < 2 {
            return Err(Error::validation("item block needs at least 2 items"));
        }
        if data.nrows() == 0 {
            return Err(Error::validation("item block has no rows"));
        }
        Ok(Self { scale: scale.to_string(), items, data })
    }

    pub fn scale_name(&self) -> &str {
        &self.scale
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn q(&self) -> usize {
        self.data.ncols()
    }

    /// Block without column `j`.
    pub fn without_item(&self, j: usize) -> Result<ItemBlock> {
        if self.q() <= 2 {
            return Err(Error::validation("cannot drop below 2 items"));
        }
        let keep: Vec<usize> = (0..self.q()).filter(|&k| k != j).collect();
        let data = self.data.select_columns(keep.as_slice());
        let items =
            keep.iter().map(|&k| self.items[k].clone()).collect::<Vec<_>>();
        Ok(ItemBlock { scale: self.scale.clone(), items, data })
    }
}

/// Per-row arithmetic mean of a polarity-aligned block.
pub fn score_scale_means(block: &ItemBlock) -> Result<Vec<f64>> {
    if block.q() == 0 || block.n() == 0 {
        return Err(Error::validation("empty item block"));
    }
    let q = block.q() as f64;
    Ok((0..block.n()).map(|i| block.matrix().row(i).sum() / q).collect())
}
