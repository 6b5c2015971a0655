//! Flipped-cohort engagement measures from raw event logs and their
//! summaries by exam-performance quartile.

pub mod logs;
pub mod measures;
pub mod quartiles;

pub use logs::{
    format_timestamp, parse_timestamp, ClickerCatalogEntry, ClickerLog, ClickerRecord,
    QuizAttempt, QuizCatalogEntry, QuizLog, Timestamp, VideoCatalogEntry, VideoEvent,
    VideoEventLog,
};
pub use measures::{access_vs_usage, compute_usage_measures, AccessVsUsage, UsageRecord};
pub use quartiles::{
    quartile_of, quartile_summary, MeasureSummary, QuartileCutoffs, QuartileGroup,
    QuartileSummary,
};
