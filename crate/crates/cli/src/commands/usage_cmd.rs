//! `usage`: per-student engagement measures, quartile summary, and the
//! access-vs-usage scatter series, from the three event-log CSVs.

use super::resolve_path;
use crate::config::{PipelineConfig, UsageSection};
use crate::output::{fmt, fmt_opt, OutputSink, Table};
use anyhow::{anyhow, Context};
use cohortkit::usage::{
    access_vs_usage, compute_usage_measures, parse_timestamp, quartile_summary,
    ClickerCatalogEntry, ClickerLog, ClickerRecord, QuartileCutoffs, QuizAttempt,
    QuizCatalogEntry, QuizLog, VideoCatalogEntry, VideoEvent, VideoEventLog,
};
use std::collections::BTreeMap;
use std::path::Path;

fn read_csv_records(path: &Path) -> anyhow::Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let mut records = Vec::new();
    for record in reader.records() {
        records.push(record?);
    }
    Ok((headers, records))
}

fn field<'a>(
    headers: &[String],
    record: &'a csv::StringRecord,
    name: &str,
    path: &Path,
) -> anyhow::Result<&'a str> {
    let idx = headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| anyhow!("{}: missing column '{name}'", path.display()))?;
    Ok(record.get(idx).unwrap_or("").trim())
}

pub fn load_logs(
    section: &UsageSection,
    config_dir: &Path,
) -> anyhow::Result<(VideoEventLog, QuizLog, ClickerLog, BTreeMap<String, f64>)> {
    let exam_time = parse_timestamp(&section.exam_time)?;

    let path = resolve_path(config_dir, &section.video_catalog);
    let (headers, records) = read_csv_records(&path)?;
    let mut catalog = Vec::new();
    for r in &records {
        catalog.push(VideoCatalogEntry {
            video_id: field(&headers, r, "video_id", &path)?.to_string(),
            segments: field(&headers, r, "segments", &path)?.parse()?,
            due: parse_timestamp(field(&headers, r, "due", &path)?)?,
        });
    }

    let path = resolve_path(config_dir, &section.video_events);
    let (headers, records) = read_csv_records(&path)?;
    let mut events = Vec::new();
    for r in &records {
        events.push(VideoEvent {
            student_id: field(&headers, r, "student_id", &path)?.to_string(),
            video_id: field(&headers, r, "video_id", &path)?.to_string(),
            segment: field(&headers, r, "segment", &path)?.parse()?,
            at: parse_timestamp(field(&headers, r, "at", &path)?)?,
        });
    }
    let video = VideoEventLog { catalog, exam_time, events };

    let path = resolve_path(config_dir, &section.quiz_catalog);
    let (headers, records) = read_csv_records(&path)?;
    let mut catalog = Vec::new();
    for r in &records {
        catalog.push(QuizCatalogEntry {
            quiz_id: field(&headers, r, "quiz_id", &path)?.to_string(),
            questions: field(&headers, r, "questions", &path)?.parse()?,
        });
    }
    let path = resolve_path(config_dir, &section.quiz_attempts);
    let (headers, records) = read_csv_records(&path)?;
    let mut attempts = Vec::new();
    for r in &records {
        let submitted = field(&headers, r, "submitted_at", &path)?;
        attempts.push(QuizAttempt {
            student_id: field(&headers, r, "student_id", &path)?.to_string(),
            quiz_id: field(&headers, r, "quiz_id", &path)?.to_string(),
            accessed: field(&headers, r, "accessed", &path)?.parse()?,
            submitted_at: if submitted.is_empty() {
                None
            } else {
                Some(parse_timestamp(submitted)?)
            },
            answered: field(&headers, r, "answered", &path)?.parse()?,
            points: field(&headers, r, "points", &path)?.parse()?,
        });
    }
    let quiz = QuizLog { catalog, attempts };

    let path = resolve_path(config_dir, &section.clicker_catalog);
    let (headers, records) = read_csv_records(&path)?;
    let mut catalog = Vec::new();
    for r in &records {
        catalog.push(ClickerCatalogEntry {
            session_id: field(&headers, r, "session_id", &path)?.to_string(),
            relevant_questions: field(&headers, r, "relevant_questions", &path)?.parse()?,
        });
    }
    let path = resolve_path(config_dir, &section.clicker_records);
    let (headers, records) = read_csv_records(&path)?;
    let mut clicker_records = Vec::new();
    for r in &records {
        clicker_records.push(ClickerRecord {
            student_id: field(&headers, r, "student_id", &path)?.to_string(),
            session_id: field(&headers, r, "session_id", &path)?.to_string(),
            attended: field(&headers, r, "attended", &path)?.parse()?,
            answered: field(&headers, r, "answered", &path)?.parse()?,
        });
    }
    let clicker = ClickerLog { catalog, records: clicker_records };

    let path = resolve_path(config_dir, &section.exam_points);
    let (headers, records) = read_csv_records(&path)?;
    let mut exam_points = BTreeMap::new();
    for r in &records {
        exam_points.insert(
            field(&headers, r, "student_id", &path)?.to_string(),
            field(&headers, r, "points", &path)?.parse()?,
        );
    }

    Ok((video, quiz, clicker, exam_points))
}

pub fn run(
    config: &PipelineConfig,
    config_dir: &Path,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config
        .usage
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'usage' is required"))?;
    let (video, quiz, clicker, exam_points) = load_logs(section, config_dir)?;
    let records = compute_usage_measures(&video, &quiz, &clicker, &exam_points)?;

    let mut measures_table =
        Table::new(&["student_id", "vd", "tv", "qp", "acs", "exam_points"]);
    for (student, record) in &records {
        measures_table.push(vec![
            student.clone(),
            fmt(record.videos_due),
            fmt(record.total_videos),
            fmt(record.quiz_participation),
            fmt(record.active_sessions),
            fmt_opt(record.exam_points),
        ]);
    }
    sink.write_table("usage_measures", &measures_table)?;

    let cutoffs = match section.quartile_cutoffs {
        Some(c) => QuartileCutoffs::Explicit(c),
        None => QuartileCutoffs::FromQuantiles,
    };
    let summary = quartile_summary(&records, cutoffs)?;
    let mut quartile_table = Table::new(&[
        "quartile",
        "count",
        "measure",
        "mean",
        "median",
        "min",
        "max",
        "cutoff_low",
        "cutoff_mid",
        "cutoff_high",
        "degenerate",
    ]);
    for (q, group) in summary.groups.iter().enumerate() {
        for (m, name) in ["vd", "tv", "qp", "acs"].iter().enumerate() {
            let s = &group.measures[m];
            quartile_table.push(vec![
                (q + 1).to_string(),
                group.count.to_string(),
                name.to_string(),
                fmt(s.mean),
                fmt(s.median),
                fmt(s.min),
                fmt(s.max),
                fmt(summary.cutoffs[0]),
                fmt(summary.cutoffs[1]),
                fmt(summary.cutoffs[2]),
                summary.degenerate.to_string(),
            ]);
        }
    }
    sink.write_table("usage_quartiles", &quartile_table)?;

    let access = access_vs_usage(&video)?;
    let mut access_table = Table::new(&[
        "student_id",
        "videos_accessed",
        "access_x_due_share",
        "access_x_total_share",
        "corr_access_due",
        "corr_access_total",
    ]);
    for (student, count, due_series, total_series) in &access.rows {
        access_table.push(vec![
            student.clone(),
            fmt(*count),
            fmt(*due_series),
            fmt(*total_series),
            fmt_opt(access.correlation_due),
            fmt_opt(access.correlation_total),
        ]);
    }
    sink.write_table("access_vs_usage", &access_table)?;
    Ok(())
}
