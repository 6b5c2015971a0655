//! OLS regression adjustment with heteroskedasticity-robust standard errors.
//!
//! The treatment coefficient is estimated from `y = θd + Xβ + u` with the
//! sandwich covariance `(ZᵀZ)⁻¹ Zᵀ Ω Z (ZᵀZ)⁻¹`, `Z = [1, d, X]` and Ω the
//! HC-weighted squared residuals. Three covariate constructions are
//! supported: the full item-level set, per-scale means, and per-scale first
//! principal components, with configurable scales kept at raw item level.

use crate::data::{DesignMatrix, ScaleDefinition};
use crate::error::{Error, Result};
use crate::learners::first_pc_scores;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sandwich weight variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HcVariant {
    /// ω_i = e_i²
    Hc0,
    /// ω_i = e_i² · n/(n−k)
    #[default]
    Hc1,
    /// ω_i = e_i² / (1 − h_ii)²
    Hc3,
}

/// Covariate construction for the regression adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OlsVariant {
    /// All covariate columns as provided (item level).
    Full,
    /// Replace each reducible scale's items with the scale mean.
    ScaleMeans,
    /// Replace each reducible scale's items with its first principal component.
    ScalePcs,
}

#[derive(Debug, Clone)]
pub struct OlsOptions {
    pub variant: OlsVariant,
    pub hc: HcVariant,
    /// Scale names kept at raw item level under ScaleMeans/ScalePcs.
    pub reduce_exclude: Vec<String>,
}

impl Default for OlsOptions {
    fn default() -> Self {
        Self { variant: OlsVariant::Full, hc: HcVariant::Hc1, reduce_exclude: vec![] }
    }
}

#[derive(Debug, Clone)]
pub struct OlsResult {
    pub theta: f64,
    pub theta_se: f64,
    pub theta_p: f64,
    /// Coefficient table including intercept and treatment, in design order.
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub robust_se: Vec<f64>,
    pub p_values: Vec<f64>,
    pub residuals: DVector<f64>,
    pub n: usize,
    /// Number of regression columns including intercept and treatment.
    pub k: usize,
}

/// Build the variant covariate matrix from a full (item-level) design.
fn variant_columns(
    design: &DesignMatrix,
    scales: &[ScaleDefinition],
    options: &OlsOptions,
) -> Result<(Vec<String>, DMatrix<f64>)> {
    let x = design.matrix();
    let n = design.n();
    if options.variant == OlsVariant::Full {
        return Ok((design.labels().to_vec(), x.clone()));
    }

    // Columns belonging to reducible scales are replaced; everything else is
    // passed through in design order.
    let mut replaced: Vec<usize> = Vec::new();
    let mut derived: Vec<(String, DVector<f64>)> = Vec::new();
    for scale in scales {
        if options.reduce_exclude.iter().any(|s| s == &scale.name) {
            continue;
        }
        let mut idx = Vec::with_capacity(scale.items.len());
        for item in &scale.items {
            let j = design.column_index(item).ok_or_else(|| {
                Error::schema(format!(
                    "scale '{}' item '{item}' is not a design column",
                    scale.name
                ))
            })?;
            idx.push(j);
        }
        let block = x.select_columns(idx.as_slice());
        match options.variant {
            OlsVariant::ScaleMeans => {
                let mean = DVector::from_fn(n, |i, _| block.row(i).sum() / idx.len() as f64);
                derived.push((format!("mean:{}", scale.name), mean));
            }
            OlsVariant::ScalePcs => {
                let (scores, _) = first_pc_scores(&block)?;
                derived.push((format!("pc1:{}", scale.name), scores));
            }
            OlsVariant::Full => unreachable!(),
        }
        replaced.extend(idx);
    }

    let mut names = Vec::new();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for j in 0..design.p() {
        if !replaced.contains(&j) {
            names.push(design.labels()[j].clone());
            cols.push(x.column(j).into_owned());
        }
    }
    for (name, col) in derived {
        names.push(name);
        cols.push(col);
    }
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, col) in cols.iter().enumerate() {
        out.set_column(j, col);
    }
    Ok((names, out))
}

/// Regression adjustment for the treatment effect with robust inference.
pub fn fit_ols_robust(
    design: &DesignMatrix,
    d: &[u8],
    y: &[f64],
    scales: &[ScaleDefinition],
    options: &OlsOptions,
) -> Result<OlsResult> {
    let n = design.n();
    if d.len() != n || y.len() != n {
        return Err(Error::validation("treatment/outcome length mismatch with design"));
    }
    let (cov_names, xv) = variant_columns(design, scales, options)?;
    let k = xv.ncols() + 2;
    if k >= n {
        return Err(Error::estimation(format!(
            "{k} regression columns with only {n} observations; use the double machine learning path"
        )));
    }

    let mut z = DMatrix::zeros(n, k);
    for i in 0..n {
        z[(i, 0)] = 1.0;
        z[(i, 1)] = d[i] as f64;
    }
    for j in 0..xv.ncols() {
        for i in 0..n {
            z[(i, j + 2)] = xv[(i, j)];
        }
    }

    let ztz = z.transpose() * &z;
    let zty = z.transpose() * DVector::from_column_slice(y);
    let ztz_inv = ztz
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::estimation("singular regression design (collinear columns)"))?;
    let beta = &ztz_inv * zty;
    let fitted = &z * &beta;
    let residuals = DVector::from_column_slice(y) - fitted;

    // HC weights.
    let weights: Vec<f64> = match options.hc {
        HcVariant::Hc0 => residuals.iter().map(|e| e * e).collect(),
        HcVariant::Hc1 => {
            let c = n as f64 / (n - k) as f64;
            residuals.iter().map(|e| c * e * e).collect()
        }
        HcVariant::Hc3 => {
            // h_ii = z_iᵀ (ZᵀZ)⁻¹ z_i
            (0..n)
                .map(|i| {
                    let zi = z.row(i).transpose();
                    let h = (zi.transpose() * &ztz_inv * &zi)[(0, 0)];
                    let denom = (1.0 - h).max(1e-10);
                    (residuals[i] / denom).powi(2)
                })
                .collect()
        }
    };

    // Meat = Zᵀ diag(ω) Z.
    let mut zw = z.clone();
    for i in 0..n {
        let w = weights[i];
        for j in 0..k {
            zw[(i, j)] *= w;
        }
    }
    let meat = z.transpose() * zw;
    let vcov = &ztz_inv * meat * &ztz_inv;

    let t_dist = StudentsT::new(0.0, 1.0, (n - k) as f64)
        .map_err(|e| Error::estimation(format!("t distribution: {e}")))?;
    let mut names = vec!["(intercept)".to_string(), "treatment".to_string()];
    names.extend(cov_names);
    let mut estimates = Vec::with_capacity(k);
    let mut robust_se = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let se = vcov[(j, j)].max(0.0).sqrt();
        let t = if se > 0.0 { beta[j] / se } else { f64::INFINITY };
        estimates.push(beta[j]);
        robust_se.push(se);
        p_values.push(2.0 * (1.0 - t_dist.cdf(t.abs())));
    }

    Ok(OlsResult {
        theta: estimates[1],
        theta_se: robust_se[1],
        theta_p: p_values[1],
        names,
        estimates,
        robust_se,
        p_values,
        residuals,
        n,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_design_matrix, CovariateColumn, Dataset, Questionnaire};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn toy_dataset(n: usize, seed: u64) -> (Dataset, Vec<u8>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
        let x1: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                2.0 * d[i] as f64 + 0.7 * x1[i] - 0.3 * x2[i]
                    + 0.5 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let ds = Dataset::from_columns(
            (0..n).map(|i| format!("s{i}")).collect(),
            d.clone(),
            vec![("y".into(), y.iter().map(|&v| Some(v)).collect())],
            vec![
                CovariateColumn::Numeric { name: "x1".into(), values: x1 },
                CovariateColumn::Numeric { name: "x2".into(), values: x2 },
            ],
            vec![],
            vec![],
        )
        .unwrap();
        (ds, d, y)
    }

    #[test]
    fn exact_treatment_signal_recovers_theta() {
        let n = 40;
        let (ds, d, _) = toy_dataset(n, 1);
        let y: Vec<f64> = d.iter().map(|&di| 2.0 * di as f64).collect();
        let design = build_design_matrix(&ds, &["x1".into(), "x2".into()], false).unwrap();
        let res = fit_ols_robust(&design, &d, &y, &[], &OlsOptions::default()).unwrap();
        assert_abs_diff_eq!(res.theta, 2.0, epsilon = 1e-10);
        assert!(res.residuals.abs().max() < 1e-10);
    }

    #[test]
    fn matches_matrix_algebra_oracle() {
        let n = 60;
        let (ds, d, y) = toy_dataset(n, 2);
        let design = build_design_matrix(&ds, &["x1".into(), "x2".into()], false).unwrap();
        let res = fit_ols_robust(&design, &d, &y, &[], &OlsOptions::default()).unwrap();

        // Brute-force oracle: explicit (ZᵀZ)⁻¹ sandwich with HC1 weights.
        let k = 4;
        let mut z = DMatrix::zeros(n, k);
        for i in 0..n {
            z[(i, 0)] = 1.0;
            z[(i, 1)] = d[i] as f64;
            z[(i, 2)] = design.matrix()[(i, 0)];
            z[(i, 3)] = design.matrix()[(i, 1)];
        }
        let yv = DVector::from_column_slice(&y);
        let ztz_inv = (z.transpose() * &z).try_inverse().unwrap();
        let beta = &ztz_inv * z.transpose() * &yv;
        let resid = &yv - &z * &beta;
        let c = n as f64 / (n - k) as f64;
        let mut meat = DMatrix::zeros(k, k);
        for i in 0..n {
            let zi = z.row(i).transpose();
            meat += &zi * zi.transpose() * (c * resid[i] * resid[i]);
        }
        let vcov = &ztz_inv * meat * &ztz_inv;

        assert_abs_diff_eq!(res.theta, beta[1], epsilon = 1e-8);
        assert_abs_diff_eq!(res.theta_se, vcov[(1, 1)].sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn residuals_are_orthogonal_to_design() {
        let n = 80;
        let (ds, d, y) = toy_dataset(n, 3);
        let design = build_design_matrix(&ds, &["x1".into(), "x2".into()], false).unwrap();
        let res = fit_ols_robust(&design, &d, &y, &[], &OlsOptions::default()).unwrap();
        for j in 0..design.p() {
            let dot: f64 = (0..n).map(|i| design.matrix()[(i, j)] * res.residuals[i]).sum();
            assert!(dot.abs() < 1e-8, "column {j} not orthogonal: {dot}");
        }
    }

    #[test]
    fn too_many_columns_directs_to_dml() {
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let covs: Vec<CovariateColumn> = (0..12)
            .map(|j| CovariateColumn::Numeric {
                name: format!("x{j}"),
                values: (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            })
            .collect();
        let ds = Dataset::from_columns(
            (0..n).map(|i| format!("s{i}")).collect(),
            d.clone(),
            vec![],
            covs,
            vec![],
            vec![],
        )
        .unwrap();
        let names: Vec<String> = (0..12).map(|j| format!("x{j}")).collect();
        let design = build_design_matrix(&ds, &names, false).unwrap();
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let err = fit_ols_robust(&design, &d, &y, &[], &OlsOptions::default()).unwrap_err();
        assert!(err.to_string().contains("machine learning"), "{err}");
    }

    fn scaled_dataset() -> (Dataset, Vec<ScaleDefinition>) {
        // 14 scales: 13 reducible with varying item counts summing to 63,
        // plus a 4-item scale kept raw.
        let n = 140;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let counts = [6usize, 4, 6, 4, 4, 5, 6, 5, 5, 5, 3, 5, 5]; // 63 items
        let mut scales = Vec::new();
        let mut items: Vec<(String, Vec<Option<i8>>)> = Vec::new();
        for (s, &q) in counts.iter().enumerate() {
            let mut item_names = Vec::new();
            for k in 0..q {
                let name = format!("s{s}_i{k}");
                let values: Vec<Option<i8>> =
                    (0..n).map(|_| Some(rng.gen_range(-3..=3))).collect();
                items.push((name.clone(), values));
                item_names.push(name);
            }
            scales.push(ScaleDefinition {
                name: format!("scale{s}"),
                items: item_names,
                reverse: vec![],
                questionnaire: Questionnaire::First,
            });
        }
        let rep_items: Vec<String> = (0..4).map(|k| format!("rep_i{k}")).collect();
        for name in &rep_items {
            items.push((name.clone(), (0..n).map(|_| Some(rng.gen_range(-3..=3))).collect()));
        }
        scales.push(ScaleDefinition {
            name: "repetition".into(),
            items: rep_items,
            reverse: vec![],
            questionnaire: Questionnaire::First,
        });
        let d: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let ds = Dataset::from_columns(
            (0..n).map(|i| format!("s{i}")).collect(),
            d,
            vec![],
            vec![],
            items,
            scales.clone(),
        )
        .unwrap();
        (ds, scales)
    }

    #[test]
    fn scale_means_variant_replaces_63_items_with_17_columns() {
        let (ds, scales) = scaled_dataset();
        let all_items: Vec<String> = ds.item_names().iter().map(|s| s.to_string()).collect();
        assert_eq!(all_items.len(), 67);
        let design = build_design_matrix(&ds, &all_items, false).unwrap();
        let options = OlsOptions {
            variant: OlsVariant::ScaleMeans,
            hc: HcVariant::Hc1,
            reduce_exclude: vec!["repetition".into()],
        };
        let (names, xv) = variant_columns(&design, &scales, &options).unwrap();
        // 13 scale means + 4 raw repetition items.
        assert_eq!(xv.ncols(), 17);
        assert_eq!(names.iter().filter(|n| n.starts_with("mean:")).count(), 13);
        assert_eq!(names.iter().filter(|n| n.starts_with("rep_")).count(), 4);
    }

    #[test]
    fn pc_variant_builds_one_component_per_scale() {
        let (ds, scales) = scaled_dataset();
        let all_items: Vec<String> = ds.item_names().iter().map(|s| s.to_string()).collect();
        let design = build_design_matrix(&ds, &all_items, false).unwrap();
        let options = OlsOptions {
            variant: OlsVariant::ScalePcs,
            hc: HcVariant::Hc1,
            reduce_exclude: vec!["repetition".into()],
        };
        let (names, xv) = variant_columns(&design, &scales, &options).unwrap();
        assert_eq!(xv.ncols(), 17);
        assert_eq!(names.iter().filter(|n| n.starts_with("pc1:")).count(), 13);
    }

    #[test]
    fn theta_invariant_to_dummy_reference_change() {
        // Equivalent designs: a dummy column vs its complement span the same
        // space with the intercept, so θ̂ must agree.
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_bool(0.4) as u64 as f64).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.5 * d[i] as f64 + 0.8 * g[i] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let make = |values: Vec<f64>| {
            let ds = Dataset::from_columns(
                (0..n).map(|i| format!("s{i}")).collect(),
                d.clone(),
                vec![],
                vec![CovariateColumn::Numeric { name: "g".into(), values }],
                vec![],
                vec![],
            )
            .unwrap();
            build_design_matrix(&ds, &["g".into()], false).unwrap()
        };
        let design_a = make(g.clone());
        let design_b = make(g.iter().map(|v| 1.0 - v).collect());
        let res_a = fit_ols_robust(&design_a, &d, &y, &[], &OlsOptions::default()).unwrap();
        let res_b = fit_ols_robust(&design_b, &d, &y, &[], &OlsOptions::default()).unwrap();
        assert_abs_diff_eq!(res_a.theta, res_b.theta, epsilon = 1e-10);
        assert_abs_diff_eq!(res_a.theta_se, res_b.theta_se, epsilon = 1e-10);
    }
}
