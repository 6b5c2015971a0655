//! Synthetic cohort generation with retained ground truth.
//!
//! Factors are standard normal; continuous items `λ_j f + e_j` are
//! discretized through the scale's thresholds into Likert categories.
//! Treatment is Bernoulli in a logistic index of the observed covariates and
//! scale means, so unconfoundedness holds given the observed columns.
//! Potential-outcome noise is shared between the two arms: under a constant
//! effect the realized `y₁ − y₀` equals τ for every student and the oracle
//! is exact.

use super::spec::{CohortSpec, EffectSpec, OutcomeLink, UsageSimSpec};
use crate::data::{CovariateColumn, Dataset, DatasetSchema, CovariateSchema, CovariateKind, Questionnaire, ScaleDefinition};
use crate::error::Result;
use crate::learners::sigmoid;
use crate::usage::{
    ClickerCatalogEntry, ClickerLog, ClickerRecord, QuizAttempt, QuizCatalogEntry, QuizLog,
    VideoCatalogEntry, VideoEvent, VideoEventLog,
};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;

/// Hidden generative state retained for verification.
#[derive(Debug, Clone)]
pub struct CohortTruth {
    pub propensity: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub tau: Vec<f64>,
    /// Factor scores, one column per scale.
    pub factors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct UsageBundle {
    pub video: VideoEventLog,
    pub quiz: QuizLog,
    pub clicker: ClickerLog,
    pub exam_points: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub dataset: Dataset,
    pub truth: CohortTruth,
    pub usage: Option<UsageBundle>,
    pub warnings: Vec<String>,
}

/// Sample mean of the retained potential-outcome difference.
pub fn oracle_ate(cohort: &SyntheticCohort) -> f64 {
    let n = cohort.truth.y0.len() as f64;
    cohort
        .truth
        .y1
        .iter()
        .zip(cohort.truth.y0.iter())
        .map(|(a, b)| a - b)
        .sum::<f64>()
        / n
}

fn discretize(z: f64, thresholds: &[f64]) -> i8 {
    let mut category = -(((thresholds.len() + 1) / 2) as i8);
    for &t in thresholds {
        if z > t {
            category += 1;
        }
    }
    category
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<SyntheticCohort> {
    let warnings = spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Plain covariates.
    let w = DMatrix::from_fn(n, spec.covariates, |_, _| rng.sample::<f64, _>(StandardNormal));

    // Latent factors and discretized items.
    let n_scales = spec.scales.len();
    let mut factors = DMatrix::zeros(n, n_scales);
    let mut items: Vec<(String, Vec<Option<i8>>)> = Vec::with_capacity(spec.item_count());
    let mut scale_means = DMatrix::zeros(n, n_scales);
    for (s, scale) in spec.scales.iter().enumerate() {
        for i in 0..n {
            factors[(i, s)] = rng.sample(StandardNormal);
        }
        let q = scale.items();
        let mut columns: Vec<Vec<Option<i8>>> = vec![Vec::with_capacity(n); q];
        for i in 0..n {
            for j in 0..q {
                let e: f64 = rng.sample(StandardNormal);
                let continuous =
                    scale.loadings[j] * factors[(i, s)] + scale.uniquenesses[j].sqrt() * e;
                columns[j].push(Some(discretize(continuous, &scale.thresholds)));
            }
        }
        for i in 0..n {
            let total: i32 = columns.iter().map(|c| c[i].unwrap() as i32).sum();
            scale_means[(i, s)] = total as f64 / q as f64;
        }
        for (j, col) in columns.into_iter().enumerate() {
            items.push((format!("{}_i{}", scale.name, j + 1), col));
        }
    }

    // Treatment assignment.
    let mut propensity = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let mut index = spec.treatment.intercept;
        for (j, &g) in spec.treatment.covariate_coefs.iter().enumerate() {
            index += g * w[(i, j)];
        }
        for (s, &g) in spec.treatment.scale_coefs.iter().enumerate() {
            index += g * scale_means[(i, s)];
        }
        let p = sigmoid(index);
        propensity.push(p);
        d.push(u8::from(rng.gen::<f64>() < p));
    }
    // Guarantee both arms for downstream validity (flip one draw if needed).
    if d.iter().all(|&x| x == 0) {
        d[0] = 1;
    }
    if d.iter().all(|&x| x == 1) {
        d[0] = 0;
    }

    // Outcome surface and potential outcomes with shared noise.
    let smooth = |v: f64| v.sin() + 0.5 * v * v;
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    let mut tau_vec = Vec::with_capacity(n);
    let mut y_obs: Vec<Option<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut h = 0.0;
        match spec.outcome.link {
            OutcomeLink::Linear => {
                for (j, &b) in spec.outcome.covariate_coefs.iter().enumerate() {
                    h += b * w[(i, j)];
                }
            }
            OutcomeLink::Nonlinear => {
                for (j, &b) in spec.outcome.covariate_coefs.iter().enumerate() {
                    h += b * smooth(w[(i, j)]);
                }
                if spec.covariates >= 2 {
                    let b0 = spec.outcome.covariate_coefs.first().copied().unwrap_or(0.0);
                    h += 0.7 * b0 * w[(i, 0)] * w[(i, 1)];
                }
            }
        }
        for (s, &b) in spec.outcome.scale_coefs.iter().enumerate() {
            h += b * scale_means[(i, s)];
        }
        let tau = match spec.outcome.effect {
            EffectSpec::Constant { tau } => tau,
            EffectSpec::CovariateLinear { base, slope, covariate } => {
                base + slope * w[(i, covariate)]
            }
        };
        tau_vec.push(tau);
        if spec.outcome.binary {
            let u: f64 = rng.gen();
            let p0 = sigmoid(h);
            let p1 = sigmoid(h + tau);
            let v0 = f64::from(u < p0);
            let v1 = f64::from(u < p1);
            y0.push(v0);
            y1.push(v1);
        } else {
            let eps: f64 = rng.sample::<f64, _>(StandardNormal) * spec.outcome.noise_sd;
            y0.push(h + eps);
            y1.push(h + tau + eps);
        }
        let observed = if d[i] == 1 { y1[i] } else { y0[i] };
        y_obs.push(Some(observed));
    }

    // Secondary outcomes with differential dropout.
    let mut outcomes: Vec<(String, Vec<Option<f64>>)> = vec![("y".to_string(), y_obs.clone())];
    for sec in &spec.secondary_outcomes {
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let value = 0.5 * y_obs[i].unwrap()
                + sec.noise_sd * rng.sample::<f64, _>(StandardNormal);
            let missing_logit = sec.dropout_intercept
                + sec.dropout_treatment_coef * d[i] as f64
                + sec.dropout_covariate_coef * w[(i, 0)];
            let missing = rng.gen::<f64>() < sigmoid(missing_logit);
            values.push(if missing { None } else { Some(value) });
        }
        outcomes.push((sec.name.clone(), values));
    }

    let ids: Vec<String> = (0..n).map(|i| format!("s{:05}", i + 1)).collect();
    let covariates: Vec<CovariateColumn> = (0..spec.covariates)
        .map(|j| CovariateColumn::Numeric {
            name: format!("w{j}"),
            values: (0..n).map(|i| w[(i, j)]).collect(),
        })
        .collect();
    let scale_defs: Vec<ScaleDefinition> = spec
        .scales
        .iter()
        .map(|s| ScaleDefinition {
            name: s.name.clone(),
            items: (1..=s.items()).map(|j| format!("{}_i{}", s.name, j)).collect(),
            reverse: vec![],
            questionnaire: Questionnaire::First,
        })
        .collect();

    let dataset =
        Dataset::from_columns(ids.clone(), d.clone(), outcomes, covariates, items, scale_defs)?;

    let usage = spec
        .usage
        .as_ref()
        .map(|u| generate_usage(u, &ids, &d, &y_obs, &mut rng));

    Ok(SyntheticCohort {
        dataset,
        truth: CohortTruth { propensity, y0, y1, tau: tau_vec, factors },
        usage,
        warnings,
    })
}

/// Event logs for the treated cohort: engagement follows the within-cohort
/// outcome rank, watching is timely up to `catchup`, and late segments land
/// after the due date but before the exam.
fn generate_usage(
    spec: &UsageSimSpec,
    ids: &[String],
    d: &[u8],
    y: &[Option<f64>],
    rng: &mut ChaCha8Rng,
) -> UsageBundle {
    let day = 86_400i64;
    let base = 1_538_352_000; // 2018-10-01T00:00:00Z
    let video_catalog: Vec<VideoCatalogEntry> = (0..spec.videos)
        .map(|k| VideoCatalogEntry {
            video_id: format!("v{:02}", k + 1),
            segments: spec.segments_per_video,
            due: base + (k as i64 + 1) * 7 * day,
        })
        .collect();
    let exam_time = base + (spec.videos as i64 + 2) * 7 * day;
    let quiz_catalog: Vec<QuizCatalogEntry> = (0..spec.quizzes)
        .map(|k| QuizCatalogEntry {
            quiz_id: format!("q{:02}", k + 1),
            questions: spec.questions_per_quiz,
        })
        .collect();
    let clicker_catalog: Vec<ClickerCatalogEntry> = (0..spec.sessions)
        .map(|k| ClickerCatalogEntry {
            session_id: format!("k{:02}", k + 1),
            relevant_questions: spec.relevant_per_session,
        })
        .collect();

    // Rank treated students by observed outcome.
    let treated: Vec<usize> = (0..ids.len()).filter(|&i| d[i] == 1).collect();
    let mut order: Vec<usize> = treated.clone();
    order.sort_by(|&a, &b| y[a].unwrap().partial_cmp(&y[b].unwrap()).unwrap());
    let mut rank: BTreeMap<usize, f64> = BTreeMap::new();
    for (pos, &i) in order.iter().enumerate() {
        rank.insert(i, pos as f64 / (order.len().max(2) - 1) as f64);
    }

    let mut events = Vec::new();
    let mut attempts = Vec::new();
    let mut records = Vec::new();
    let mut exam_points = BTreeMap::new();
    for &i in &treated {
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.engagement_noise_sd;
        let engagement =
            (spec.engagement_base + spec.engagement_slope * rank[&i] + noise).clamp(0.0, 1.0);
        exam_points.insert(ids[i].clone(), y[i].unwrap());

        let accessed = (engagement * spec.videos as f64).round() as usize;
        for (k, video) in video_catalog.iter().take(accessed).enumerate() {
            let timely = (engagement * spec.segments_per_video as f64).round() as u32;
            for segment in 0..timely.min(spec.segments_per_video) {
                events.push(VideoEvent {
                    student_id: ids[i].clone(),
                    video_id: video.video_id.clone(),
                    segment,
                    at: video.due - 3600 - (k as i64),
                });
            }
            let missed = spec.segments_per_video - timely.min(spec.segments_per_video);
            let late = (spec.catchup * missed as f64).round() as u32;
            for segment in timely..(timely + late).min(spec.segments_per_video) {
                events.push(VideoEvent {
                    student_id: ids[i].clone(),
                    video_id: video.video_id.clone(),
                    segment,
                    at: (video.due + 2 * day).min(exam_time - 3600),
                });
            }
        }

        let attempted = (engagement * spec.quizzes as f64).round() as usize;
        for quiz in quiz_catalog.iter().take(attempted) {
            let answered = (engagement * spec.questions_per_quiz as f64).ceil() as u32;
            attempts.push(QuizAttempt {
                student_id: ids[i].clone(),
                quiz_id: quiz.quiz_id.clone(),
                accessed: true,
                submitted_at: Some(base + day),
                answered: answered.min(spec.questions_per_quiz),
                points: answered as f64,
            });
        }

        let attended = (engagement * spec.sessions as f64).round() as usize;
        for session in clicker_catalog.iter().take(attended) {
            let answered = (engagement * spec.relevant_per_session as f64).ceil() as u32;
            records.push(ClickerRecord {
                student_id: ids[i].clone(),
                session_id: session.session_id.clone(),
                attended: true,
                answered: answered.min(spec.relevant_per_session),
            });
        }
    }

    UsageBundle {
        video: VideoEventLog { catalog: video_catalog, exam_time, events },
        quiz: QuizLog { catalog: quiz_catalog, attempts },
        clicker: ClickerLog { catalog: clicker_catalog, records },
        exam_points,
    }
}

/// Dataset schema matching the generator's column layout, for consumers that
/// re-ingest the exported CSV.
pub fn export_schema(spec: &CohortSpec) -> DatasetSchema {
    DatasetSchema {
        id: "student_id".into(),
        treatment: "cohort".into(),
        outcomes: std::iter::once("y".to_string())
            .chain(spec.secondary_outcomes.iter().map(|s| s.name.clone()))
            .collect(),
        covariates: (0..spec.covariates)
            .map(|j| CovariateSchema {
                name: format!("w{j}"),
                kind: CovariateKind::Numeric,
                reference: None,
            })
            .collect(),
        scales: spec
            .scales
            .iter()
            .map(|s| ScaleDefinition {
                name: s.name.clone(),
                items: (1..=s.items()).map(|j| format!("{}_i{}", s.name, j)).collect(),
                reverse: vec![],
                questionnaire: Questionnaire::First,
            })
            .collect(),
    }
}

/// Write the observable table to CSV in the ingestion format.
pub fn export_dataset_csv(cohort: &SyntheticCohort, path: &std::path::Path) -> Result<()> {
    let ds = &cohort.dataset;
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["student_id".to_string(), "cohort".to_string()];
    header.extend(ds.outcome_names().iter().map(|s| s.to_string()));
    for c in ds.covariates() {
        header.push(c.name().to_string());
    }
    header.extend(ds.item_names().iter().map(|s| s.to_string()));
    writer.write_record(&header)?;
    for i in 0..ds.n() {
        let mut row = vec![ds.ids()[i].clone(), ds.treatment()[i].to_string()];
        for name in ds.outcome_names() {
            let v = ds.outcome(name).expect("known outcome")[i];
            row.push(v.map(|x| format!("{x}")).unwrap_or_default());
        }
        for c in ds.covariates() {
            match c {
                CovariateColumn::Numeric { values, .. } => row.push(format!("{}", values[i])),
                CovariateColumn::Categorical { values, .. } => row.push(values[i].clone()),
            }
        }
        for name in ds.item_names() {
            let v = ds.item(name).expect("known item")[i];
            row.push(v.map(|x| x.to_string()).unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the hidden truth columns next to the observables.
pub fn export_truth_csv(cohort: &SyntheticCohort, path: &std::path::Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["student_id", "propensity", "y0", "y1", "tau"])?;
    let ds = &cohort.dataset;
    for i in 0..ds.n() {
        writer.write_record(&[
            ds.ids()[i].clone(),
            format!("{}", cohort.truth.propensity[i]),
            format!("{}", cohort.truth.y0[i]),
            format!("{}", cohort.truth.y1[i]),
            format!("{}", cohort.truth.tau[i]),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
