//! `simulate` and `benchmark`.

use crate::config::{
    BalanceSection, DmlSection, EstimateRun, EstimateSection, EstimatorName, PipelineConfig,
    UsageSection,
};
use crate::output::{fmt, OutputSink, Table};
use anyhow::anyhow;
use cohortkit::data::SampleSpec;
use cohortkit::sim::{
    export_dataset_csv, export_schema, export_truth_csv, generate_cohort, oracle_ate,
    run_benchmark,
};
use cohortkit::usage::format_timestamp;

/// Generate a cohort, export it in the ingestion CSV format together with
/// its hidden truth, usage logs, and a ready-to-run pipeline config.
pub fn simulate(
    config: &PipelineConfig,
    seed: u64,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config
        .simulate
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'simulate' is required"))?;
    let mut spec = section.spec.clone();
    spec.seed = seed;
    let cohort = generate_cohort(&spec)?;
    for warning in &cohort.warnings {
        eprintln!("warning: {warning}");
    }

    export_dataset_csv(&cohort, &sink.dir.join("dataset.csv"))?;
    sink.written.push("dataset.csv".to_string());
    export_truth_csv(&cohort, &sink.dir.join("truth.csv"))?;
    sink.written.push("truth.csv".to_string());

    let mut truth_summary = Table::new(&["quantity", "value"]);
    truth_summary.push(vec!["oracle_ate".to_string(), fmt(oracle_ate(&cohort))]);
    truth_summary.push(vec!["n".to_string(), cohort.dataset.n().to_string()]);
    let (control, treated) = cohort.dataset.cohort_counts();
    truth_summary.push(vec!["n_cohort0".to_string(), control.to_string()]);
    truth_summary.push(vec!["n_cohort1".to_string(), treated.to_string()]);
    sink.write_table("truth_summary", &truth_summary)?;

    let usage_section = if let Some(bundle) = &cohort.usage {
        let mut t = Table::new(&["video_id", "segments", "due"]);
        for c in &bundle.video.catalog {
            t.push(vec![c.video_id.clone(), c.segments.to_string(), format_timestamp(c.due)]);
        }
        sink.write_table("video_catalog", &t)?;

        let mut t = Table::new(&["student_id", "video_id", "segment", "at"]);
        for e in &bundle.video.events {
            t.push(vec![
                e.student_id.clone(),
                e.video_id.clone(),
                e.segment.to_string(),
                format_timestamp(e.at),
            ]);
        }
        sink.write_table("video_events", &t)?;

        let mut t = Table::new(&["quiz_id", "questions"]);
        for c in &bundle.quiz.catalog {
            t.push(vec![c.quiz_id.clone(), c.questions.to_string()]);
        }
        sink.write_table("quiz_catalog", &t)?;

        let mut t =
            Table::new(&["student_id", "quiz_id", "accessed", "submitted_at", "answered", "points"]);
        for a in &bundle.quiz.attempts {
            t.push(vec![
                a.student_id.clone(),
                a.quiz_id.clone(),
                a.accessed.to_string(),
                a.submitted_at.map(format_timestamp).unwrap_or_default(),
                a.answered.to_string(),
                fmt(a.points),
            ]);
        }
        sink.write_table("quiz_attempts", &t)?;

        let mut t = Table::new(&["session_id", "relevant_questions"]);
        for c in &bundle.clicker.catalog {
            t.push(vec![c.session_id.clone(), c.relevant_questions.to_string()]);
        }
        sink.write_table("clicker_catalog", &t)?;

        let mut t = Table::new(&["student_id", "session_id", "attended", "answered"]);
        for r in &bundle.clicker.records {
            t.push(vec![
                r.student_id.clone(),
                r.session_id.clone(),
                r.attended.to_string(),
                r.answered.to_string(),
            ]);
        }
        sink.write_table("clicker_records", &t)?;

        let mut t = Table::new(&["student_id", "points"]);
        for (student, points) in &bundle.exam_points {
            t.push(vec![student.clone(), fmt(*points)]);
        }
        sink.write_table("exam_points", &t)?;

        Some(UsageSection {
            video_events: "video_events.csv".into(),
            video_catalog: "video_catalog.csv".into(),
            exam_time: format_timestamp(bundle.video.exam_time),
            quiz_attempts: "quiz_attempts.csv".into(),
            quiz_catalog: "quiz_catalog.csv".into(),
            clicker_records: "clicker_records.csv".into(),
            clicker_catalog: "clicker_catalog.csv".into(),
            exam_points: "exam_points.csv".into(),
            quartile_cutoffs: None,
        })
    } else {
        None
    };

    // A pipeline config pointing at the exported files, so the synthetic
    // cohort runs end-to-end through the analysis subcommands.
    let mut samples = vec![SampleSpec {
        name: "A".to_string(),
        required_outcomes: vec!["y".to_string()],
    }];
    for secondary in &spec.secondary_outcomes {
        samples.push(SampleSpec {
            name: format!("with_{}", secondary.name),
            required_outcomes: vec!["y".to_string(), secondary.name.clone()],
        });
    }
    let generated = PipelineConfig {
        seed: spec.seed,
        output_dir: "analysis".into(),
        dataset: Some("dataset.csv".into()),
        schema: Some(export_schema(&spec)),
        samples,
        estimate: Some(EstimateSection {
            runs: vec![EstimateRun { outcome: "y".to_string(), sample: "A".to_string() }],
            estimators: vec![
                EstimatorName::Ols1,
                EstimatorName::Ols2,
                EstimatorName::Ols3,
                EstimatorName::DmlInteractive,
                EstimatorName::DmlPartiallyLinear,
            ],
            dml: DmlSection::default(),
            ols: OlsSection::default(),
        }),
        balance: Some(BalanceSection { samples: vec!["A".to_string()] }),
        item_analysis: Some(Default::default()),
        pca: Some(Default::default()),
        usage: usage_section,
        simulate: None,
        benchmark: None,
    };
    let text = serde_json::to_string_pretty(&generated)?;
    sink.write_file("generated_config.json", &(text + "\n"))?;
    Ok(())
}

use crate::config::OlsSection;

/// Replicated estimator comparison against the simulator oracle.
pub fn benchmark(
    config: &PipelineConfig,
    seed: u64,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config
        .benchmark
        .as_ref()
        .ok_or_else(|| anyhow!("config field 'benchmark' is required"))?;
    let table = run_benchmark(&section.spec, &section.estimators, section.replications, seed)?;

    let mut out = Table::new(&[
        "estimator",
        "replications",
        "failures",
        "bias",
        "sd",
        "rmse",
        "coverage",
        "truth_mean",
    ]);
    for row in &table.rows {
        out.push(vec![
            row.estimator.clone(),
            row.replications.to_string(),
            row.failures.to_string(),
            fmt(row.bias),
            fmt(row.sd),
            fmt(row.rmse),
            fmt(row.coverage),
            fmt(table.truth_mean),
        ]);
    }
    sink.write_table("benchmark", &out)?;
    Ok(())
}
