//! The four [0, 1] engagement measures.
//!
//! Each measure is a product of an access share and a conditional
//! completeness share, averaged over accessed units only:
//!
//! - VD: videos accessed before the exam × mean share of unique segments
//!   watched before each video's due time,
//! - TV: same access share × mean share of unique segments watched before
//!   the exam,
//! - QP: quizzes attempted × mean share of questions answered per attempt,
//! - ACS: sessions attended × mean share of relevant clicker questions
//!   answered while attending.
//!
//! Replayed segments count once; duplicate events cannot push any measure
//! past 1.

use super::logs::{ClickerLog, QuizLog, VideoEventLog};
use crate::error::Result;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy)]
pub struct UsageRecord {
    pub videos_due: f64,
    pub total_videos: f64,
    pub quiz_participation: f64,
    pub active_sessions: f64,
    pub exam_points: Option<f64>,
}

impl UsageRecord {
    pub fn measures(&self) -> [f64; 4] {
        [self.videos_due, self.total_videos, self.quiz_participation, self.active_sessions]
    }
}

/// Per-student engagement measures. Students appearing in any log (or the
/// exam-points map) are covered; a student absent from one channel scores
/// zero on that channel.
pub fn compute_usage_measures(
    video: &VideoEventLog,
    quiz: &QuizLog,
    clicker: &ClickerLog,
    exam_points: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, UsageRecord>> {
    video.validate()?;
    quiz.validate()?;
    clicker.validate()?;

    let mut students: BTreeSet<String> = BTreeSet::new();
    students.extend(video.events.iter().map(|e| e.student_id.clone()));
    students.extend(quiz.attempts.iter().map(|a| a.student_id.clone()));
    students.extend(clicker.records.iter().map(|r| r.student_id.clone()));
    students.extend(exam_points.keys().cloned());

    let video_count = video.catalog.len();
    let segment_count: BTreeMap<&str, u32> =
        video.catalog.iter().map(|c| (c.video_id.as_str(), c.segments)).collect();
    let due: BTreeMap<&str, i64> =
        video.catalog.iter().map(|c| (c.video_id.as_str(), c.due)).collect();

    // Unique segments per (student, video), split by watched-before-due and
    // watched-before-exam.
    let mut due_segments: BTreeMap<(&str, &str), BTreeSet<u32>> = BTreeMap::new();
    let mut exam_segments: BTreeMap<(&str, &str), BTreeSet<u32>> = BTreeMap::new();
    for e in &video.events {
        if e.at > video.exam_time {
            continue;
        }
        let key = (e.student_id.as_str(), e.video_id.as_str());
        exam_segments.entry(key).or_default().insert(e.segment);
        if e.at <= due[e.video_id.as_str()] {
            due_segments.entry(key).or_default().insert(e.segment);
        }
    }

    let quiz_count = quiz.catalog.len();
    let questions: BTreeMap<&str, u32> =
        quiz.catalog.iter().map(|c| (c.quiz_id.as_str(), c.questions)).collect();
    let session_count = clicker.catalog.len();
    let relevant: BTreeMap<&str, u32> = clicker
        .catalog
        .iter()
        .map(|c| (c.session_id.as_str(), c.relevant_questions))
        .collect();

    let mut out = BTreeMap::new();
    for student in &students {
        // Video measures.
        let accessed: Vec<&str> = video
            .catalog
            .iter()
            .map(|c| c.video_id.as_str())
            .filter(|v| exam_segments.contains_key(&(student.as_str(), v)))
            .collect();
        let access_share = accessed.len() as f64 / video_count as f64;
        let (vd, tv) = if accessed.is_empty() {
            (0.0, 0.0)
        } else {
            let mut due_share = 0.0;
            let mut exam_share = 0.0;
            for v in &accessed {
                let total = segment_count[v] as f64;
                let key = (student.as_str(), *v);
                due_share +=
                    due_segments.get(&key).map(|s| s.len() as f64).unwrap_or(0.0) / total;
                exam_share += exam_segments[&key].len() as f64 / total;
            }
            let m = accessed.len() as f64;
            (access_share * due_share / m, access_share * exam_share / m)
        };

        // Quiz participation.
        let qp = if quiz_count == 0 {
            0.0
        } else {
            let attempts: Vec<&super::logs::QuizAttempt> = quiz
                .attempts
                .iter()
                .filter(|a| a.student_id == *student && a.accessed)
                .collect();
            // A student may have at most one attempt per quiz; ignore
            // duplicates beyond the first.
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut answered_share = 0.0;
            let mut attempted = 0usize;
            for a in attempts {
                if seen.insert(a.quiz_id.as_str()) {
                    attempted += 1;
                    answered_share += a.answered as f64 / questions[a.quiz_id.as_str()] as f64;
                }
            }
            if attempted == 0 {
                0.0
            } else {
                (attempted as f64 / quiz_count as f64) * (answered_share / attempted as f64)
            }
        };

        // Active classroom sessions.
        let acs = if session_count == 0 {
            0.0
        } else {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            let mut answered_share = 0.0;
            let mut attended = 0usize;
            for r in clicker.records.iter().filter(|r| r.student_id == *student && r.attended) {
                if seen.insert(r.session_id.as_str()) {
                    attended += 1;
                    answered_share += r.answered as f64 / relevant[r.session_id.as_str()] as f64;
                }
            }
            if attended == 0 {
                0.0
            } else {
                (attended as f64 / session_count as f64) * (answered_share / attended as f64)
            }
        };

        out.insert(
            student.clone(),
            UsageRecord {
                videos_due: vd,
                total_videos: tv,
                quiz_participation: qp,
                active_sessions: acs,
                exam_points: exam_points.get(student).copied(),
            },
        );
    }
    Ok(out)
}

/// Per-student access count against access-weighted watch shares, plus the
/// Pearson correlations of both series with the raw access count.
#[derive(Debug, Clone)]
pub struct AccessVsUsage {
    /// (student, videos accessed, access × mean due-share, access × mean total-share)
    pub rows: Vec<(String, f64, f64, f64)>,
    pub correlation_due: Option<f64>,
    pub correlation_total: Option<f64>,
}

pub fn access_vs_usage(video: &VideoEventLog) -> Result<AccessVsUsage> {
    video.validate()?;
    let segment_count: BTreeMap<&str, u32> =
        video.catalog.iter().map(|c| (c.video_id.as_str(), c.segments)).collect();
    let due: BTreeMap<&str, i64> =
        video.catalog.iter().map(|c| (c.video_id.as_str(), c.due)).collect();

    let mut due_segments: BTreeMap<(&str, &str), BTreeSet<u32>> = BTreeMap::new();
    let mut exam_segments: BTreeMap<(&str, &str), BTreeSet<u32>> = BTreeMap::new();
    for e in &video.events {
        if e.at > video.exam_time {
            continue;
        }
        let key = (e.student_id.as_str(), e.video_id.as_str());
        exam_segments.entry(key).or_default().insert(e.segment);
        if e.at <= due[e.video_id.as_str()] {
            due_segments.entry(key).or_default().insert(e.segment);
        }
    }

    let mut rows = Vec::new();
    for student in video.student_ids() {
        let mut access = 0.0;
        let mut due_share = 0.0;
        let mut total_share = 0.0;
        for c in &video.catalog {
            let key = (student.as_str(), c.video_id.as_str());
            if let Some(segs) = exam_segments.get(&key) {
                access += 1.0;
                total_share += segs.len() as f64 / segment_count[c.video_id.as_str()] as f64;
                due_share += due_segments
                    .get(&key)
                    .map(|s| s.len() as f64 / segment_count[c.video_id.as_str()] as f64)
                    .unwrap_or(0.0);
            }
        }
        let (d, t) = if access > 0.0 {
            (access * (due_share / access), access * (total_share / access))
        } else {
            (0.0, 0.0)
        };
        rows.push((student, access, d, t));
    }

    let counts: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let due_series: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let total_series: Vec<f64> = rows.iter().map(|r| r.3).collect();
    Ok(AccessVsUsage {
        correlation_due: crate::stats::pearson(&counts, &due_series),
        correlation_total: crate::stats::pearson(&counts, &total_series),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::logs::*;
    use super::*;

    fn catalog(videos: usize, segments: u32) -> Vec<VideoCatalogEntry> {
        (0..videos)
            .map(|k| VideoCatalogEntry {
                video_id: format!("v{k}"),
                segments,
                due: 1000 + k as i64 * 1000,
            })
            .collect()
    }

    fn empty_quiz() -> QuizLog {
        QuizLog { catalog: vec![], attempts: vec![] }
    }

    fn empty_clicker() -> ClickerLog {
        ClickerLog { catalog: vec![], records: vec![] }
    }

    #[test]
    fn vd_matches_hand_computed_fixture() {
        // 4 videos with 4 segments each; student accesses 2 of them with
        // in-time segment shares 0.5 and 1.0: VD = 0.5 × 0.75 = 0.375.
        let mut events = Vec::new();
        for segment in 0..2 {
            events.push(VideoEvent {
                student_id: "s1".into(),
                video_id: "v0".into(),
                segment,
                at: 500,
            });
        }
        for segment in 0..4 {
            events.push(VideoEvent {
                student_id: "s1".into(),
                video_id: "v1".into(),
                segment,
                at: 1500,
            });
        }
        let video = VideoEventLog { catalog: catalog(4, 4), exam_time: 100_000, events };
        let records = compute_usage_measures(
            &video,
            &empty_quiz(),
            &empty_clicker(),
            &BTreeMap::new(),
        )
        .unwrap();
        let r = records["s1"];
        assert!((r.videos_due - 0.375).abs() < 1e-12, "VD = {}", r.videos_due);
        assert!((r.total_videos - 0.375).abs() < 1e-12);
    }

    #[test]
    fn full_engagement_scores_ones() {
        let videos = catalog(2, 3);
        let mut events = Vec::new();
        for v in 0..2 {
            for segment in 0..3 {
                events.push(VideoEvent {
                    student_id: "s1".into(),
                    video_id: format!("v{v}"),
                    segment,
                    at: 900,
                });
            }
        }
        let video = VideoEventLog { catalog: videos, exam_time: 100_000, events };
        let quiz = QuizLog {
            catalog: vec![QuizCatalogEntry { quiz_id: "q0".into(), questions: 5 }],
            attempts: vec![QuizAttempt {
                student_id: "s1".into(),
                quiz_id: "q0".into(),
                accessed: true,
                submitted_at: Some(950),
                answered: 5,
                points: 5.0,
            }],
        };
        let clicker = ClickerLog {
            catalog: vec![ClickerCatalogEntry { session_id: "k0".into(), relevant_questions: 4 }],
            records: vec![ClickerRecord {
                student_id: "s1".into(),
                session_id: "k0".into(),
                attended: true,
                answered: 4,
            }],
        };
        let records =
            compute_usage_measures(&video, &quiz, &clicker, &BTreeMap::new()).unwrap();
        assert_eq!(records["s1"].measures(), [1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn absent_student_scores_zeros() {
        let video = VideoEventLog { catalog: catalog(3, 4), exam_time: 9999, events: vec![] };
        let mut exam = BTreeMap::new();
        exam.insert("ghost".to_string(), 12.0);
        let records =
            compute_usage_measures(&video, &empty_quiz(), &empty_clicker(), &exam).unwrap();
        assert_eq!(records["ghost"].measures(), [0.0, 0.0, 0.0, 0.0]);
        assert_eq!(records["ghost"].exam_points, Some(12.0));
    }

    #[test]
    fn empty_video_catalog_errors() {
        let video = VideoEventLog { catalog: vec![], exam_time: 9999, events: vec![] };
        assert!(compute_usage_measures(
            &video,
            &empty_quiz(),
            &empty_clicker(),
            &BTreeMap::new()
        )
        .is_err());
    }

    #[test]
    fn duplicate_events_do_not_inflate_measures() {
        let mut events = Vec::new();
        for _ in 0..50 {
            events.push(VideoEvent {
                student_id: "s1".into(),
                video_id: "v0".into(),
                segment: 1,
                at: 500,
            });
        }
        let video = VideoEventLog { catalog: catalog(1, 2), exam_time: 9999, events };
        let records = compute_usage_measures(
            &video,
            &empty_quiz(),
            &empty_clicker(),
            &BTreeMap::new(),
        )
        .unwrap();
        let r = records["s1"];
        assert!(r.videos_due <= 1.0 && r.total_videos <= 1.0);
        assert!((r.videos_due - 0.5).abs() < 1e-12);
    }

    #[test]
    fn late_watching_separates_tv_from_vd() {
        // Watch everything, but after the due date and before the exam.
        let mut events = Vec::new();
        for segment in 0..4 {
            events.push(VideoEvent {
                student_id: "s1".into(),
                video_id: "v0".into(),
                segment,
                at: 5000,
            });
        }
        let video = VideoEventLog { catalog: catalog(1, 4), exam_time: 9999, events };
        let records = compute_usage_measures(
            &video,
            &empty_quiz(),
            &empty_clicker(),
            &BTreeMap::new(),
        )
        .unwrap();
        let r = records["s1"];
        assert_eq!(r.videos_due, 0.0);
        assert_eq!(r.total_videos, 1.0);
    }

    #[test]
    fn access_without_watching_keeps_due_series_near_zero() {
        // One segment right at the end, after due: accessed but not timely.
        let mut events = Vec::new();
        for v in 0..5 {
            events.push(VideoEvent {
                student_id: "s1".into(),
                video_id: format!("v{v}"),
                segment: 0,
                at: 8000,
            });
        }
        let video = VideoEventLog { catalog: catalog(5, 100), exam_time: 9999, events };
        let result = access_vs_usage(&video).unwrap();
        let row = &result.rows[0];
        assert_eq!(row.1, 5.0);
        assert!(row.2 < 1e-12, "due series should be ~0, got {}", row.2);
        assert!(row.3 > 0.0);
    }

    #[test]
    fn fully_timely_watching_makes_both_series_equal_access_count() {
        let mut events = Vec::new();
        for v in 0..3 {
            for segment in 0..4 {
                events.push(VideoEvent {
                    student_id: "s1".into(),
                    video_id: format!("v{v}"),
                    segment,
                    at: 900,
                });
            }
        }
        let video = VideoEventLog { catalog: catalog(3, 4), exam_time: 9999, events };
        let result = access_vs_usage(&video).unwrap();
        let row = &result.rows[0];
        assert_eq!(row.1, 3.0);
        assert!((row.2 - 3.0).abs() < 1e-12);
        assert!((row.3 - 3.0).abs() < 1e-12);
    }
}
