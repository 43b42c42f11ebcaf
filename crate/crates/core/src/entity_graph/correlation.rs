//! Correlation coefficients, their significance tests, and automatic
//! method selection.

use serde::{Deserialize, Serialize};

use super::{EntityGraphError, FeatureSeries};
use crate::numerics::special::{normal_two_sided, student_t_two_sided};
use crate::{Mat, Real};

/// Coefficients this close to +/-1 are treated as exactly +/-1, so that
/// perfectly related inputs get a zero p-value instead of an ulp artifact.
const UNITY_SNAP: Real = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
    Kendall,
}

impl CorrelationMethod {
    /// Candidate methods in tie-break priority order.
    pub const ALL: [CorrelationMethod; 3] = [
        CorrelationMethod::Pearson,
        CorrelationMethod::Spearman,
        CorrelationMethod::Kendall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Spearman => "spearman",
            CorrelationMethod::Kendall => "kendall",
        }
    }
}

impl std::fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn validate_pair(x: &[Real], y: &[Real]) -> Result<usize, EntityGraphError> {
    if x.len() != y.len() {
        return Err(EntityGraphError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 4 {
        return Err(EntityGraphError::SeriesTooShort { len: x.len() });
    }
    Ok(x.len())
}

fn snap_unit(r: Real) -> Real {
    if r.abs() > 1.0 - UNITY_SNAP {
        r.signum()
    } else {
        r
    }
}

/// Correlation coefficient between two equal-length series.
pub fn correlation(
    method: CorrelationMethod,
    x: &[Real],
    y: &[Real],
) -> Result<Real, EntityGraphError> {
    validate_pair(x, y)?;
    match method {
        CorrelationMethod::Pearson => pearson(x, y),
        CorrelationMethod::Spearman => {
            let rx = average_ranks(x);
            let ry = average_ranks(y);
            pearson(&rx, &ry)
        }
        CorrelationMethod::Kendall => kendall_tau_b(x, y),
    }
}

fn pearson(x: &[Real], y: &[Real]) -> Result<Real, EntityGraphError> {
    let n = x.len() as Real;
    let mean_x = x.iter().sum::<Real>() / n;
    let mean_y = y.iter().sum::<Real>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EntityGraphError::DegenerateInput);
    }
    Ok(snap_unit((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Ranks with ties assigned their average rank (1-based).
pub(crate) fn average_ranks(values: &[Real]) -> Vec<Real> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as Real / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn sign3(v: Real) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall tau-b (tie-corrected), O(n^2) enumeration.
fn kendall_tau_b(x: &[Real], y: &[Real]) -> Result<Real, EntityGraphError> {
    let n = x.len();
    let mut concordant_minus_discordant: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            concordant_minus_discordant += sign3(x[j] - x[i]) * sign3(y[j] - y[i]);
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let tie_pairs = |v: &[Real]| -> i64 {
        let mut sorted: Vec<Real> = v.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let mut pairs = 0i64;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as i64;
            pairs += t * (t - 1) / 2;
            i = j + 1;
        }
        pairs
    };
    let n1 = tie_pairs(x);
    let n2 = tie_pairs(y);
    if n0 == n1 || n0 == n2 {
        return Err(EntityGraphError::DegenerateInput);
    }
    let denom = (((n0 - n1) as Real) * ((n0 - n2) as Real)).sqrt();
    Ok(snap_unit(
        (concordant_minus_discordant as Real / denom).clamp(-1.0, 1.0),
    ))
}

/// Two-sided p-value for an observed coefficient at sample size `n`.
///
/// Pearson and Spearman use the exact t statistic r*sqrt((n-2)/(1-r^2))
/// against Student-t(n-2); Kendall uses the classic normal approximation
/// z = 3*tau*sqrt(n(n-1)) / sqrt(2(2n+5)).
pub fn significance(method: CorrelationMethod, coeff: Real, n: usize) -> Real {
    assert!(n >= 4, "significance needs n >= 4");
    assert!(coeff.abs() <= 1.0, "coefficient out of range");
    if coeff.abs() >= 1.0 {
        return 0.0;
    }
    match method {
        CorrelationMethod::Pearson | CorrelationMethod::Spearman => {
            let dof = (n - 2) as Real;
            let t = coeff * (dof / (1.0 - coeff * coeff)).sqrt();
            student_t_two_sided(t, dof)
        }
        CorrelationMethod::Kendall => {
            let nf = n as Real;
            let z = 3.0 * coeff * (nf * (nf - 1.0)).sqrt() / (2.0 * (2.0 * nf + 5.0)).sqrt();
            normal_two_sided(z)
        }
    }
}

/// Per-method correlation summary over all unordered feature pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodReport {
    /// Symmetric coefficient matrix, unit diagonal; 0 for degenerate pairs.
    pub coefficients: Mat,
    /// Symmetric p-value matrix, zero diagonal; 1 for degenerate pairs.
    pub p_values: Mat,
    /// Mean over unordered pairs of (1 - p).
    pub mean_confidence: Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pearson: MethodReport,
    pub spearman: MethodReport,
    pub kendall: MethodReport,
}

impl CorrelationReport {
    pub fn method(&self, m: CorrelationMethod) -> &MethodReport {
        match m {
            CorrelationMethod::Pearson => &self.pearson,
            CorrelationMethod::Spearman => &self.spearman,
            CorrelationMethod::Kendall => &self.kendall,
        }
    }
}

/// Runs every candidate method over all feature pairs and picks the one with
/// the highest mean confidence. Ties break pearson > spearman > kendall.
///
/// A pair with a constant series has no defined coefficient; it contributes
/// confidence 0 (coefficient 0, p 1) instead of failing the entity.
pub fn select_method(
    series: &[FeatureSeries],
) -> Result<(CorrelationMethod, CorrelationReport), EntityGraphError> {
    if series.len() < 2 {
        return Err(EntityGraphError::TooFewFeatures {
            count: series.len(),
        });
    }
    let n_features = series.len();
    let len = series[0].values.len();
    for s in series {
        if s.values.len() != len {
            return Err(EntityGraphError::LengthMismatch {
                left: len,
                right: s.values.len(),
            });
        }
    }

    let mut reports = Vec::with_capacity(3);
    for method in CorrelationMethod::ALL {
        let mut coeffs = Mat::identity(n_features);
        let mut p_values = Mat::zeros(n_features, n_features);
        let mut confidence_sum = 0.0;
        let mut pair_count = 0usize;
        for i in 0..n_features {
            for j in i + 1..n_features {
                pair_count += 1;
                let (r, p) = match correlation(method, &series[i].values, &series[j].values) {
                    Ok(r) => (r, significance(method, r, len)),
                    Err(EntityGraphError::DegenerateInput) => (0.0, 1.0),
                    Err(e) => return Err(e),
                };
                coeffs.set(i, j, r);
                coeffs.set(j, i, r);
                p_values.set(i, j, p);
                p_values.set(j, i, p);
                confidence_sum += 1.0 - p;
            }
        }
        reports.push(MethodReport {
            coefficients: coeffs,
            p_values,
            mean_confidence: confidence_sum / pair_count as Real,
        });
    }

    let report = CorrelationReport {
        pearson: reports[0].clone(),
        spearman: reports[1].clone(),
        kendall: reports[2].clone(),
    };
    let mut best = CorrelationMethod::Pearson;
    for method in CorrelationMethod::ALL {
        if report.method(method).mean_confidence > report.method(best).mean_confidence {
            best = method;
        }
    }
    Ok((best, report))
}
