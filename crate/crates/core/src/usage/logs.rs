//! Raw event logs from the flipped cohort's learning platform.
//!
//! Timestamps are ISO-8601 UTC in the CSV interfaces and epoch seconds
//! internally.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type Timestamp = i64;

/// Parse an ISO-8601 UTC timestamp (`2018-10-05T12:00:00Z`) to epoch seconds.
pub fn parse_timestamp(text: &str) -> Result<Timestamp> {
    let parsed = chrono::DateTime::parse_from_rfc3339(text.trim())
        .map_err(|e| Error::validation(format!("invalid ISO-8601 timestamp '{text}': {e}")))?;
    Ok(parsed.timestamp())
}

/// Format epoch seconds as ISO-8601 UTC.
pub fn format_timestamp(ts: Timestamp) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .expect("timestamp in range")
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoCatalogEntry {
    pub video_id: String,
    pub segments: u32,
    pub due: Timestamp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoEvent {
    pub student_id: String,
    pub video_id: String,
    pub segment: u32,
    pub at: Timestamp,
}

/// Per-student watched 5-second segments with timestamps, plus the catalog
/// and the exam timestamp.
#[derive(Debug, Clone)]
pub struct VideoEventLog {
    pub catalog: Vec<VideoCatalogEntry>,
    pub exam_time: Timestamp,
    pub events: Vec<VideoEvent>,
}

impl VideoEventLog {
    pub fn validate(&self) -> Result<()> {
        if self.catalog.is_empty() {
            return Err(Error::validation("video catalog is empty"));
        }
        let segments: BTreeMap<&str, u32> =
            self.catalog.iter().map(|c| (c.video_id.as_str(), c.segments)).collect();
        if segments.len() != self.catalog.len() {
            return Err(Error::validation("duplicate video id in catalog"));
        }
        for (k, e) in self.events.iter().enumerate() {
            match segments.get(e.video_id.as_str()) {
                None => {
                    return Err(Error::validation(format!(
                        "event {k}: unknown video '{}'",
                        e.video_id
                    )))
                }
                Some(&count) => {
                    if e.segment >= count {
                        return Err(Error::validation(format!(
                            "event {k}: segment {} out of range for video '{}' ({count} segments)",
                            e.segment, e.video_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn student_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.events.iter().map(|e| e.student_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuizCatalogEntry {
    pub quiz_id: String,
    pub questions: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuizAttempt {
    pub student_id: String,
    pub quiz_id: String,
    pub accessed: bool,
    pub submitted_at: Option<Timestamp>,
    pub answered: u32,
    pub points: f64,
}

#[derive(Debug, Clone)]
pub struct QuizLog {
    pub catalog: Vec<QuizCatalogEntry>,
    pub attempts: Vec<QuizAttempt>,
}

impl QuizLog {
    pub fn validate(&self) -> Result<()> {
        let questions: BTreeMap<&str, u32> =
            self.catalog.iter().map(|c| (c.quiz_id.as_str(), c.questions)).collect();
        for (k, a) in self.attempts.iter().enumerate() {
            let total = questions.get(a.quiz_id.as_str()).ok_or_else(|| {
                Error::validation(format!("attempt {k}: unknown quiz '{}'", a.quiz_id))
            })?;
            if a.answered > *total {
                return Err(Error::validation(format!(
                    "attempt {k}: answered {} of {total} questions",
                    a.answered
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickerCatalogEntry {
    pub session_id: String,
    pub relevant_questions: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickerRecord {
    pub student_id: String,
    pub session_id: String,
    pub attended: bool,
    pub answered: u32,
}

#[derive(Debug, Clone)]
pub struct ClickerLog {
    pub catalog: Vec<ClickerCatalogEntry>,
    pub records: Vec<ClickerRecord>,
}

impl ClickerLog {
    pub fn validate(&self) -> Result<()> {
        let relevant: BTreeMap<&str, u32> = self
            .catalog
            .iter()
            .map(|c| (c.session_id.as_str(), c.relevant_questions))
            .collect();
        for (k, r) in self.records.iter().enumerate() {
            let total = relevant.get(r.session_id.as_str()).ok_or_else(|| {
                Error::validation(format!("record {k}: unknown session '{}'", r.session_id))
            })?;
            if !r.attended && r.answered > 0 {
                return Err(Error::validation(format!(
                    "record {k}: answered clicker questions while absent"
                )));
            }
            if r.answered > *total {
                return Err(Error::validation(format!(
                    "record {k}: answered {} of {total} relevant questions",
                    r.answered
                )));
            }
        }
        Ok(())
    }
}
