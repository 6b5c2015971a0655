//! `item-analysis`, `pca-diagnostics`, and `score`.

use super::load_configured_dataset;
use crate::config::PipelineConfig;
use crate::output::{fmt, fmt_opt, OutputSink, Table};
use cohortkit::psych::{
    apply_item_selection, polychoric_matrix, retention_criteria, run_item_analysis,
    sampling_adequacy, score_scale_means, sorted_eigenvalues, FlagThresholds, ItemBlock,
    PaConfig,
};
use cohortkit::seed::derive_seed;
use std::path::Path;

/// Per-scale item analysis with the selection trace.
pub fn item_analysis(
    config: &PipelineConfig,
    config_dir: &Path,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config.item_analysis.clone().unwrap_or_default();
    let dataset = load_configured_dataset(config, config_dir)?;
    let thresholds = FlagThresholds {
        item_total: section.item_total_threshold,
        loading: section.loading_threshold,
    };

    let mut items_table = Table::new(&[
        "scale",
        "questionnaire",
        "n",
        "item",
        "alpha",
        "alpha_ci_low",
        "alpha_ci_high",
        "omega",
        "item_total_corr",
        "std_loading",
        "cfa_rmsr",
        "tau_chi_square",
        "tau_df",
        "tau_p",
        "flag_item_total",
        "flag_loading",
    ]);
    let mut selection_table = Table::new(&[
        "scale",
        "step",
        "dropped_item",
        "reason",
        "omega_after",
        "retained_items",
        "warning",
    ]);

    for scale in dataset.scales() {
        let block = ItemBlock::from_dataset(&dataset, scale)?;
        let report = run_item_analysis(&block, thresholds)?;
        let questionnaire = format!("{:?}", scale.questionnaire).to_lowercase();
        for (j, item) in report.items.iter().enumerate() {
            // Scale-level statistics repeat on each row to keep the CSV tidy.
            items_table.push(vec![
                report.scale.clone(),
                questionnaire.clone(),
                report.n.to_string(),
                item.clone(),
                fmt(report.alpha.alpha),
                fmt(report.alpha.ci.0),
                fmt(report.alpha.ci.1),
                fmt(report.omega),
                fmt_opt(report.item_total[j]),
                fmt(report.std_loadings[j]),
                fmt(report.rmsr),
                fmt(report.tau_test.chi_square),
                report.tau_test.df.to_string(),
                fmt(report.tau_test.p_value),
                report.flags[j].low_item_total.to_string(),
                report.flags[j].low_loading.to_string(),
            ]);
        }

        let overrides = section
            .wording_overrides
            .get(&scale.name)
            .cloned()
            .unwrap_or_default();
        let outcome = apply_item_selection(&block, thresholds, &overrides)?;
        if outcome.dropped.is_empty() {
            selection_table.push(vec![
                scale.name.clone(),
                "0".to_string(),
                "".to_string(),
                "none".to_string(),
                fmt_opt(outcome.omega_path.first().copied()),
                outcome.retained.join(";"),
                outcome.warning.clone().unwrap_or_default(),
            ]);
        }
        for (step, (item, reason)) in outcome.dropped.iter().enumerate() {
            selection_table.push(vec![
                scale.name.clone(),
                (step + 1).to_string(),
                item.clone(),
                format!("{reason:?}"),
                fmt_opt(outcome.omega_path.get(step + 1).copied()),
                outcome.retained.join(";"),
                outcome.warning.clone().unwrap_or_default(),
            ]);
        }
    }

    sink.write_table("item_analysis", &items_table)?;
    sink.write_table("item_selection", &selection_table)?;
    Ok(())
}

/// Polychoric correlations, adequacy diagnostics, and retention criteria per
/// scale, plus scree-plot export data.
pub fn pca_diagnostics(
    config: &PipelineConfig,
    config_dir: &Path,
    seed: u64,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let section = config.pca.clone().unwrap_or_default();
    let dataset = load_configured_dataset(config, config_dir)?;

    let mut diag_table = Table::new(&[
        "scale",
        "n",
        "items",
        "kmo",
        "bartlett_chi_square",
        "bartlett_df",
        "bartlett_p",
        "determinant",
        "singular",
        "boundary_pairs",
        "kgc",
        "ekc",
        "pa",
        "jc",
    ]);
    let mut scree_table =
        Table::new(&["scale", "component", "eigenvalue", "pa_reference", "ekc_reference"]);

    for (scale_index, scale) in dataset.scales().iter().enumerate() {
        let block = ItemBlock::from_dataset(&dataset, scale)?;
        let poly = polychoric_matrix(&block)?;
        let adequacy = sampling_adequacy(&poly.matrix, block.n())?;
        let eigenvalues = sorted_eigenvalues(&poly.matrix);
        let pa = PaConfig {
            replications: section.pa_replications,
            percentile: section.pa_percentile,
            seed: derive_seed(seed, 0x9ca, scale_index as u64),
        };
        let retention = retention_criteria(&eigenvalues, block.n(), block.q(), &pa)?;

        diag_table.push(vec![
            scale.name.clone(),
            block.n().to_string(),
            block.q().to_string(),
            fmt(adequacy.kmo),
            fmt(adequacy.bartlett_chi_square),
            adequacy.bartlett_df.to_string(),
            fmt(adequacy.bartlett_p),
            fmt(adequacy.determinant),
            adequacy.singular.to_string(),
            poly.boundary_pairs.len().to_string(),
            retention.kaiser_guttman.to_string(),
            retention.empirical_kaiser.to_string(),
            retention.parallel_analysis.to_string(),
            retention.jolliffe.to_string(),
        ]);
        for (k, &ev) in retention.eigenvalues.iter().enumerate() {
            scree_table.push(vec![
                scale.name.clone(),
                (k + 1).to_string(),
                fmt(ev),
                fmt(retention.pa_reference[k]),
                fmt(retention.ekc_reference[k]),
            ]);
        }
    }

    sink.write_table("pca_diagnostics", &diag_table)?;
    sink.write_table("scree", &scree_table)?;
    Ok(())
}

/// Per-student scale means (CTT scores); blank when a row is incomplete.
pub fn score(
    config: &PipelineConfig,
    config_dir: &Path,
    sink: &mut OutputSink,
) -> anyhow::Result<()> {
    let dataset = load_configured_dataset(config, config_dir)?;
    let mut header = vec!["student_id".to_string()];
    header.extend(dataset.scales().iter().map(|s| format!("mean:{}", s.name)));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };

    // Scores per scale over complete rows.
    let mut columns: Vec<Vec<Option<f64>>> = Vec::new();
    for scale in dataset.scales() {
        let complete = dataset.complete_rows_for_scale(scale);
        let block = ItemBlock::from_dataset(&dataset, scale)?;
        let scores = score_scale_means(&block)?;
        let mut column = vec![None; dataset.n()];
        for (pos, &row) in complete.iter().enumerate() {
            column[row] = Some(scores[pos]);
        }
        columns.push(column);
    }
    for row in 0..dataset.n() {
        let mut record = vec![dataset.ids()[row].clone()];
        for column in &columns {
            record.push(fmt_opt(column[row]));
        }
        table.push(record);
    }

    sink.write_table("scores", &table)?;
    Ok(())
}
