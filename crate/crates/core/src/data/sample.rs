//! Analysis-sample selection by outcome completeness.

use super::dataset::Dataset;
use crate::error::Result;
use serde::{Deserialize, Serialize};

/// A named analysis sample defined by the outcomes it requires.
///
/// A required entry is either a plain outcome column name or `mean:<scale>`,
/// which requires every item of that scale to be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSpec {
    pub name: String,
    pub required_outcomes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCounts {
    pub control: usize,
    pub treated: usize,
}

impl SampleCounts {
    pub fn total(&self) -> usize {
        self.control + self.treated
    }
}

/// Keep exactly the rows where every required outcome is present.
pub fn select_sample(ds: &Dataset, spec: &SampleSpec) -> Result<(Dataset, SampleCounts)> {
    let mut keep = vec![true; ds.n()];
    for requirement in &spec.required_outcomes {
        if let Some(scale_name) = requirement.strip_prefix("mean:") {
            let scale = ds.scale(scale_name)?;
            let complete = ds.complete_rows_for_scale(scale);
            let mut present = vec![false; ds.n()];
            for row in complete {
                present[row] = true;
            }
            for (k, p) in keep.iter_mut().zip(present.iter()) {
                *k &= p;
            }
        } else {
            let values = ds.outcome(requirement)?;
            for (k, v) in keep.iter_mut().zip(values.iter()) {
                *k &= v.is_some();
            }
        }
    }
    let selected = ds.filtered(&keep)?;
    let (control, treated) = selected.cohort_counts();
    Ok((selected, SampleCounts { control, treated }))
}

#[cfg(test)]
mod tests {
    use super::super::dataset::Dataset;
    use super::*;

    fn dataset_with_missing() -> Dataset {
        // 10 rows; y2 missing on 3 rows, y3 missing on those plus 2 more.
        let n = 10;
        let y1: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        let y2: Vec<Option<f64>> =
            (0..n).map(|i| if i < 3 { None } else { Some(i as f64) }).collect();
        let y3: Vec<Option<f64>> =
            (0..n).map(|i| if i < 5 { None } else { Some(i as f64) }).collect();
        Dataset::from_columns(
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..n).map(|i| (i % 2) as u8).collect(),
            vec![("y1".into(), y1), ("y2".into(), y2), ("y3".into(), y3)],
            vec![],
            vec![],
            vec![],
        )
        .unwrap()
    }

    fn spec(name: &str, required: &[&str]) -> SampleSpec {
        SampleSpec {
            name: name.into(),
            required_outcomes: required.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn full_sample_is_unchanged() {
        let ds = dataset_with_missing();
        let (sel, counts) = select_sample(&ds, &spec("A", &["y1"])).unwrap();
        assert_eq!(sel.n(), 10);
        assert_eq!(counts.total(), 10);
    }

    #[test]
    fn selection_drops_exactly_the_missing_rows() {
        let ds = dataset_with_missing();
        let (sel, _) = select_sample(&ds, &spec("B", &["y1", "y2"])).unwrap();
        assert_eq!(sel.n(), 7);
        let (sel_c, counts) = select_sample(&ds, &spec("C", &["y1", "y2", "y3"])).unwrap();
        assert_eq!(sel_c.n(), 5);
        assert_eq!(counts.control + counts.treated, 5);
    }

    #[test]
    fn nested_requirements_nest_row_sets() {
        let ds = dataset_with_missing();
        let (a, _) = select_sample(&ds, &spec("A", &["y1"])).unwrap();
        let (b, _) = select_sample(&ds, &spec("B", &["y1", "y2"])).unwrap();
        let (c, _) = select_sample(&ds, &spec("C", &["y1", "y2", "y3"])).unwrap();
        let ids = |d: &Dataset| d.ids().to_vec();
        assert!(ids(&b).iter().all(|id| ids(&a).contains(id)));
        assert!(ids(&c).iter().all(|id| ids(&b).contains(id)));
    }

    #[test]
    fn empty_selection_errors() {
        let n = 4;
        let ds = Dataset::from_columns(
            (0..n).map(|i| format!("s{i}")).collect(),
            vec![0, 1, 0, 1],
            vec![("y".into(), vec![None, None, None, None])],
            vec![],
            vec![],
            vec![],
        )
        .unwrap();
        assert!(select_sample(&ds, &spec("B", &["y"])).is_err());
    }
}
