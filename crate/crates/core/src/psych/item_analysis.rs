//! Per-scale item analysis and the iterative item-selection procedure.
//!
//! The report assembles internal consistency (α with CI, ω), corrected
//! item-total correlations, standardized congeneric loadings, the
//! standardized RMSR, and a tau-equivalence likelihood-ratio comparison.
//! Items fall below threshold on item-total correlation (default 0.3) or
//! standardized loading (default 0.4) are flagged; selection then drops
//! flagged items whose removal improves ω, one at a time.

use super::block::ItemBlock;
use super::cfa::{fit_cfa_from_data, mcdonald_omega, tau_equivalence_test, CfaModel, TauEquivalenceTest};
use super::reliability::{cronbach_alpha, item_total_correlations, AlphaEstimate};
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct FlagThresholds {
    pub item_total: f64,
    pub loading: f64,
}

impl Default for FlagThresholds {
    fn default() -> Self {
        Self { item_total: 0.3, loading: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ItemFlags {
    pub low_item_total: bool,
    pub low_loading: bool,
    pub constant: bool,
}

impl ItemFlags {
    pub fn any(&self) -> bool {
        self.low_item_total || self.low_loading || self.constant
    }
}

#[derive(Debug, Clone)]
pub struct ItemAnalysisReport {
    pub scale: String,
    pub items: Vec<String>,
    pub n: usize,
    pub alpha: AlphaEstimate,
    pub omega: f64,
    pub item_total: Vec<Option<f64>>,
    pub std_loadings: Vec<f64>,
    pub rmsr: f64,
    pub tau_test: TauEquivalenceTest,
    pub heywood: bool,
    pub flags: Vec<ItemFlags>,
}

pub fn run_item_analysis(block: &ItemBlock, thresholds: FlagThresholds) -> Result<ItemAnalysisReport> {
    let data = block.matrix();
    let alpha = cronbach_alpha(data)?;
    let congeneric = fit_cfa_from_data(data, CfaModel::Congeneric)?;
    let omega = mcdonald_omega(&congeneric);
    let item_total = item_total_correlations(data)?;
    let tau_test = tau_equivalence_test(data)?;

    let flags = (0..block.q())
        .map(|j| ItemFlags {
            low_item_total: item_total[j].map(|r| r < thresholds.item_total).unwrap_or(false),
            low_loading: congeneric.std_loadings[j] < thresholds.loading,
            constant: item_total[j].is_none(),
        })
        .collect();

    Ok(ItemAnalysisReport {
        scale: block.scale_name().to_string(),
        items: block.items().to_vec(),
        n: block.n(),
        alpha,
        omega,
        item_total,
        std_loadings: congeneric.std_loadings.iter().copied().collect(),
        rmsr: congeneric.rmsr,
        tau_test,
        heywood: congeneric.heywood,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    /// Removal increased ω.
    OmegaImprovement,
    /// Explicit wording-based override.
    WordingOverride,
}

#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub scale: String,
    pub retained: Vec<String>,
    pub dropped: Vec<(String, DropReason)>,
    /// ω after each accepted drop, starting with the initial value.
    pub omega_path: Vec<f64>,
    pub warning: Option<String>,
}

/// Iteratively drop flagged items whose removal improves ω.
///
/// Wording overrides are dropped first unconditionally. ω-driven dropping
/// stops when no flagged item improves ω, or when removal would leave fewer
/// than 3 items (ω needs a congeneric fit).
pub fn apply_item_selection(
    block: &ItemBlock,
    thresholds: FlagThresholds,
    wording_overrides: &[String],
) -> Result<SelectionOutcome> {
    let mut current = block.clone();
    let mut dropped: Vec<(String, DropReason)> = Vec::new();
    let mut warning = None;

    for name in wording_overrides {
        if let Some(j) = current.items().iter().position(|i| i == name) {
            if current.q() <= 2 {
                warning = Some(format!(
                    "cannot drop '{name}': scale would fall below 2 items"
                ));
                break;
            }
            current = current.without_item(j)?;
            dropped.push((name.clone(), DropReason::WordingOverride));
        }
    }

    let mut omega_path = Vec::new();
    if current.q() >= 3 {
        let report = run_item_analysis(&current, thresholds)?;
        let mut omega = report.omega;
        omega_path.push(omega);

        loop {
            let report = run_item_analysis(&current, thresholds)?;
            let flagged: Vec<usize> =
                (0..current.q()).filter(|&j| report.flags[j].any()).collect();
            if flagged.is_empty() {
                break;
            }
            if current.q() <= 3 {
                warning = Some(format!(
                    "{} flagged item(s) retained: dropping below 3 items would make ω unidentified",
                    flagged.len()
                ));
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for &j in &flagged {
                let candidate = current.without_item(j)?;
                let fit = fit_cfa_from_data(candidate.matrix(), CfaModel::Congeneric)?;
                let cand_omega = mcdonald_omega(&fit);
                if cand_omega > omega && best.map(|(_, b)| cand_omega > b).unwrap_or(true) {
                    best = Some((j, cand_omega));
                }
            }
            match best {
                Some((j, new_omega)) => {
                    dropped.push((current.items()[j].clone(), DropReason::OmegaImprovement));
                    current = current.without_item(j)?;
                    omega = new_omega;
                    omega_path.push(omega);
                }
                None => break,
            }
        }
    } else {
        warning.get_or_insert_with(|| {
            "scale too small for ω-driven selection; retained as is".to_string()
        });
    }

    Ok(SelectionOutcome {
        scale: block.scale_name().to_string(),
        retained: current.items().to_vec(),
        dropped,
        omega_path,
        warning,
    })
}
