//! Distribution summaries of the usage measures by exam-performance quartile.

use super::measures::UsageRecord;
use crate::error::{Error, Result};
use crate::stats::{mean, median, quantile_type7};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub enum QuartileCutoffs {
    /// Empirical 25/50/75% quantiles of the exam points.
    FromQuantiles,
    /// Explicit boundaries (ties assigned to the lower quartile).
    Explicit([f64; 3]),
}

#[derive(Debug, Clone)]
pub struct MeasureSummary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone)]
pub struct QuartileGroup {
    pub count: usize,
    /// Summaries for VD, TV, QP, ACS in that order.
    pub measures: [MeasureSummary; 4],
}

#[derive(Debug, Clone)]
pub struct QuartileSummary {
    pub cutoffs: [f64; 3],
    pub groups: Vec<QuartileGroup>,
    /// All exam points equal: everything landed in one group.
    pub degenerate: bool,
}

fn summarize(values: &[f64]) -> MeasureSummary {
    MeasureSummary {
        mean: mean(values),
        median: median(values),
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Quartile membership for given cutoffs, ties to the lower quartile.
pub fn quartile_of(points: f64, cutoffs: &[f64; 3]) -> usize {
    if points <= cutoffs[0] {
        0
    } else if points <= cutoffs[1] {
        1
    } else if points <= cutoffs[2] {
        2
    } else {
        3
    }
}

/// Per-quartile distribution summaries of all four measures.
pub fn quartile_summary(
    records: &BTreeMap<String, UsageRecord>,
    cutoffs: QuartileCutoffs,
) -> Result<QuartileSummary> {
    let scored: Vec<(&String, &UsageRecord, f64)> = records
        .iter()
        .filter_map(|(id, r)| r.exam_points.map(|p| (id, r, p)))
        .collect();
    if scored.len() < 4 {
        return Err(Error::validation(format!(
            "quartile summary needs at least 4 students with exam points, have {}",
            scored.len()
        )));
    }

    let boundaries = match cutoffs {
        QuartileCutoffs::Explicit(c) => {
            if !(c[0] <= c[1] && c[1] <= c[2]) {
                return Err(Error::validation("explicit cutoffs must be nondecreasing"));
            }
            c
        }
        QuartileCutoffs::FromQuantiles => {
            let mut points: Vec<f64> = scored.iter().map(|(_, _, p)| *p).collect();
            points.sort_by(|a, b| a.partial_cmp(b).unwrap());
            [
                quantile_type7(&points, 0.25),
                quantile_type7(&points, 0.50),
                quantile_type7(&points, 0.75),
            ]
        }
    };

    let mut buckets: [Vec<&UsageRecord>; 4] = [vec![], vec![], vec![], vec![]];
    for (_, r, p) in &scored {
        buckets[quartile_of(*p, &boundaries)].push(r);
    }
    let degenerate = buckets.iter().filter(|b| !b.is_empty()).count() == 1;

    let groups = buckets
        .iter()
        .map(|bucket| {
            let collect = |f: fn(&UsageRecord) -> f64| -> Vec<f64> {
                bucket.iter().map(|r| f(r)).collect()
            };
            let vd = collect(|r| r.videos_due);
            let tv = collect(|r| r.total_videos);
            let qp = collect(|r| r.quiz_participation);
            let acs = collect(|r| r.active_sessions);
            QuartileGroup {
                count: bucket.len(),
                measures: [summarize(&vd), summarize(&tv), summarize(&qp), summarize(&acs)],
            }
        })
        .collect();

    Ok(QuartileSummary { cutoffs: boundaries, groups, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(vd: f64, points: f64) -> UsageRecord {
        UsageRecord {
            videos_due: vd,
            total_videos: vd,
            quiz_participation: vd,
            active_sessions: vd,
            exam_points: Some(points),
        }
    }

    #[test]
    fn explicit_cutoffs_partition_with_ties_down() {
        // Boundary values land in the lower quartile.
        let mut records = BTreeMap::new();
        for (k, points) in
            [2.0, 10.0, 19.5, 20.0, 25.0, 27.0, 27.5, 30.0, 35.5, 36.0, 50.0, 57.0]
                .iter()
                .enumerate()
        {
            records.insert(format!("s{k:02}"), record(0.5, *points));
        }
        let summary =
            quartile_summary(&records, QuartileCutoffs::Explicit([19.5, 27.0, 35.5])).unwrap();
        let counts: Vec<usize> = summary.groups.iter().map(|g| g.count).collect();
        assert_eq!(counts, vec![3, 3, 3, 3]);
        assert!(!summary.degenerate);
    }

    #[test]
    fn every_student_assigned_exactly_once() {
        let mut records = BTreeMap::new();
        for k in 0..37 {
            records.insert(format!("s{k:02}"), record(0.1, (k % 11) as f64));
        }
        let summary = quartile_summary(&records, QuartileCutoffs::FromQuantiles).unwrap();
        let total: usize = summary.groups.iter().map(|g| g.count).sum();
        assert_eq!(total, 37);
        // Sizes are near-balanced apart from tie adjustments.
        for g in &summary.groups {
            assert!(g.count > 0);
        }
    }

    #[test]
    fn all_equal_points_degenerate_with_warning() {
        let mut records = BTreeMap::new();
        for k in 0..6 {
            records.insert(format!("s{k}"), record(0.3, 10.0));
        }
        let summary = quartile_summary(&records, QuartileCutoffs::FromQuantiles).unwrap();
        assert!(summary.degenerate);
        assert_eq!(summary.groups[0].count, 6);
    }

    #[test]
    fn too_few_students_error() {
        let mut records = BTreeMap::new();
        records.insert("a".to_string(), record(0.1, 1.0));
        records.insert("b".to_string(), record(0.2, 2.0));
        assert!(quartile_summary(&records, QuartileCutoffs::FromQuantiles).is_err());
    }

    #[test]
    fn monotone_engagement_yields_increasing_quartile_means() {
        let mut records = BTreeMap::new();
        for k in 0..40 {
            let points = k as f64;
            let vd = 0.1 + 0.8 * (k as f64 / 39.0);
            records.insert(format!("s{k:02}"), record(vd, points));
        }
        let summary = quartile_summary(&records, QuartileCutoffs::FromQuantiles).unwrap();
        let means: Vec<f64> = summary.groups.iter().map(|g| g.measures[0].mean).collect();
        for w in means.windows(2) {
            assert!(w[1] > w[0], "means not increasing: {means:?}");
        }
    }
}
