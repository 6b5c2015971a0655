//! Synthetic-cohort specifications.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One synthetic Likert scale: a single latent factor measured by `items`
/// indicators, discretized through shared thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleSimSpec {
    pub name: String,
    pub loadings: Vec<f64>,
    pub uniquenesses: Vec<f64>,
    /// Strictly increasing interior thresholds; 6 entries give 7 categories.
    pub thresholds: Vec<f64>,
}

impl ScaleSimSpec {
    pub fn uniform(name: &str, items: usize, loading: f64, uniqueness: f64) -> Self {
        Self {
            name: name.to_string(),
            loadings: vec![loading; items],
            uniquenesses: vec![uniqueness; items],
            thresholds: default_thresholds(),
        }
    }

    pub fn items(&self) -> usize {
        self.loadings.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.loadings.len() < 2 {
            return Err(Error::config(format!(
                "scale '{}': a single factor needs at least 2 items",
                self.name
            )));
        }
        if self.loadings.len() != self.uniquenesses.len() {
            return Err(Error::config(format!(
                "scale '{}': loadings and uniquenesses differ in length",
                self.name
            )));
        }
        if self.uniquenesses.iter().any(|&p| p <= 0.0) {
            return Err(Error::config(format!("scale '{}': uniquenesses must be positive", self.name)));
        }
        for w in self.thresholds.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::config(format!(
                    "scale '{}': thresholds must be strictly increasing",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

pub fn default_thresholds() -> Vec<f64> {
    vec![-1.5, -0.9, -0.3, 0.3, 0.9, 1.5]
}

/// Logistic treatment-assignment model on covariates and observed scale means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreatmentSpec {
    pub intercept: f64,
    #[serde(default)]
    pub covariate_coefs: Vec<f64>,
    #[serde(default)]
    pub scale_coefs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectSpec {
    /// Homogeneous effect τ.
    Constant { tau: f64 },
    /// τ(x) = base + slope · w_covariate.
    CovariateLinear { base: f64, slope: f64, covariate: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLink {
    Linear,
    /// Additive smooth terms plus one pairwise interaction.
    Nonlinear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub effect: EffectSpec,
    pub link: OutcomeLink,
    #[serde(default)]
    pub covariate_coefs: Vec<f64>,
    #[serde(default)]
    pub scale_coefs: Vec<f64>,
    pub noise_sd: f64,
    /// Potential outcomes become Bernoulli draws on the probability scale.
    #[serde(default)]
    pub binary: bool,
}

/// A secondary outcome column subject to differential dropout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondaryOutcomeSpec {
    pub name: String,
    /// Logit of the missingness probability: intercept + treatment_coef·d +
    /// covariate_coef·w₀.
    pub dropout_intercept: f64,
    #[serde(default)]
    pub dropout_treatment_coef: f64,
    #[serde(default)]
    pub dropout_covariate_coef: f64,
    pub noise_sd: f64,
}

/// Event-log generation for the treated (flipped) cohort.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsageSimSpec {
    pub videos: usize,
    pub segments_per_video: u32,
    pub quizzes: usize,
    pub questions_per_quiz: u32,
    pub sessions: usize,
    pub relevant_per_session: u32,
    /// Engagement slope against the within-cohort outcome rank.
    pub engagement_slope: f64,
    pub engagement_base: f64,
    pub engagement_noise_sd: f64,
    /// Share of missed segments watched late (after due, before exam).
    pub catchup: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n: usize,
    pub seed: u64,
    /// Number of plain standard-normal covariates.
    pub covariates: usize,
    #[serde(default)]
    pub scales: Vec<ScaleSimSpec>,
    pub treatment: TreatmentSpec,
    pub outcome: OutcomeSpec,
    #[serde(default)]
    pub secondary_outcomes: Vec<SecondaryOutcomeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<UsageSimSpec>,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n < 4 {
            return Err(Error::config("cohort needs at least 4 students"));
        }
        for scale in &self.scales {
            scale.validate()?;
        }
        let check = |name: &str, len: usize, expect: usize| -> Result<()> {
            if len != expect {
                return Err(Error::config(format!(
                    "{name}: expected {expect} coefficients, got {len}"
                )));
            }
            Ok(())
        };
        check("treatment.covariate_coefs", self.treatment.covariate_coefs.len(), self.covariates)?;
        check("treatment.scale_coefs", self.treatment.scale_coefs.len(), self.scales.len())?;
        check("outcome.covariate_coefs", self.outcome.covariate_coefs.len(), self.covariates)?;
        check("outcome.scale_coefs", self.outcome.scale_coefs.len(), self.scales.len())?;
        if let EffectSpec::CovariateLinear { covariate, .. } = self.outcome.effect {
            if covariate >= self.covariates {
                return Err(Error::config("effect covariate index out of range"));
            }
        }
        if self.outcome.noise_sd < 0.0 {
            return Err(Error::config("outcome noise must be nonnegative"));
        }

        // Spec-check warnings: thresholds that starve a category of mass.
        let mut warnings = Vec::new();
        for scale in &self.scales {
            for (j, (&l, &p)) in
                scale.loadings.iter().zip(scale.uniquenesses.iter()).enumerate()
            {
                let sd = (l * l + p).sqrt();
                let mut edges = vec![f64::NEG_INFINITY];
                edges.extend(scale.thresholds.iter().copied());
                edges.push(f64::INFINITY);
                for w in edges.windows(2) {
                    let lo = crate::stats::norm_cdf(w[0] / sd);
                    let hi = crate::stats::norm_cdf(w[1] / sd);
                    if hi - lo < 1e-4 {
                        warnings.push(format!(
                            "scale '{}' item {j}: a category has probability below 1e-4",
                            scale.name
                        ));
                        break;
                    }
                }
            }
        }
        Ok(warnings)
    }

    /// Total item count across scales.
    pub fn item_count(&self) -> usize {
        self.scales.iter().map(|s| s.items()).sum()
    }

    /// A spec shaped like the motivating study: 14 scales over 67 items and
    /// a 420-student cohort with confounded assignment. The shape is
    /// realistic; the parameter values are synthetic.
    pub fn paper_shaped(seed: u64) -> Self {
        let scale_geometry: [(&str, usize); 14] = [
            ("affection", 6),
            ("difficulty", 4),
            ("effort", 6),
            ("extrinsic_motivation", 4),
            ("interest", 4),
            ("self_concept", 5),
            ("value", 6),
            ("critical_thinking", 5),
            ("environment", 5),
            ("procrastination", 5),
            ("repetition", 4),
            ("peer", 3),
            ("self_regulation", 5),
            ("test_anxiety", 5),
        ];
        let scales: Vec<ScaleSimSpec> = scale_geometry
            .iter()
            .map(|(name, q)| ScaleSimSpec::uniform(name, *q, 0.7, 0.51))
            .collect();
        let mut scale_coefs = vec![0.0; scales.len()];
        scale_coefs[0] = 0.3;
        scale_coefs[9] = -0.25;
        let mut outcome_scale_coefs = vec![0.0; scales.len()];
        outcome_scale_coefs[0] = 0.6;
        outcome_scale_coefs[9] = -0.5;
        CohortSpec {
            n: 420,
            seed,
            covariates: 4,
            scales,
            treatment: TreatmentSpec {
                intercept: 0.076, // treated share near 218/420
                covariate_coefs: vec![0.25, -0.2, 0.0, 0.0],
                scale_coefs,
            },
            outcome: OutcomeSpec {
                effect: EffectSpec::Constant { tau: 0.5 },
                link: OutcomeLink::Linear,
                covariate_coefs: vec![1.0, -0.5, 0.25, 0.0],
                scale_coefs: outcome_scale_coefs,
                noise_sd: 1.0,
                binary: false,
            },
            secondary_outcomes: vec![SecondaryOutcomeSpec {
                name: "retention_points".into(),
                dropout_intercept: -1.0,
                dropout_treatment_coef: 0.3,
                dropout_covariate_coef: 0.4,
                noise_sd: 0.5,
            }],
            usage: Some(UsageSimSpec {
                videos: 12,
                segments_per_video: 170,
                quizzes: 12,
                questions_per_quiz: 6,
                sessions: 12,
                relevant_per_session: 8,
                engagement_slope: 0.6,
                engagement_base: 0.25,
                engagement_noise_sd: 0.08,
                catchup: 0.25,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_shaped_spec_validates_with_67_items() {
        let spec = CohortSpec::paper_shaped(1);
        let warnings = spec.validate().unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(spec.scales.len(), 14);
        assert_eq!(spec.item_count(), 67);
    }

    #[test]
    fn decreasing_thresholds_are_rejected() {
        let mut spec = CohortSpec::paper_shaped(1);
        spec.scales[0].thresholds = vec![0.5, 0.2];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn coefficient_length_mismatch_is_rejected() {
        let mut spec = CohortSpec::paper_shaped(1);
        spec.treatment.covariate_coefs.pop();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn starved_category_warns() {
        let mut spec = CohortSpec::paper_shaped(1);
        // Two nearly coincident thresholds leave a sliver category.
        spec.scales[0].thresholds = vec![-1.5, -0.9, -0.3, -0.2999, 0.9, 1.5];
        let warnings = spec.validate().unwrap();
        assert!(!warnings.is_empty());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = CohortSpec::paper_shaped(7);
        let text = serde_json::to_string(&spec).unwrap();
        let back: CohortSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.n, spec.n);
        assert_eq!(back.scales.len(), spec.scales.len());
        assert!(back.usage.is_some());
    }
}
