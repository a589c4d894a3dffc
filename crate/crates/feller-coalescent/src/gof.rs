//! Goodness-of-fit harness for comparing Monte Carlo samples against the
//! analytic laws: chi-square for discrete tables, Kolmogorov-Smirnov for
//! continuous ones.
//!
//! Analytic tables may legitimately carry less than unit mass (the stated
//! ancestor pmf of the reversed process sums to `1 - e^{-x/β(τ)}`); the
//! unmodeled remainder is assigned to a catch-all bin holding every
//! observation outside the tabulated support and is surfaced as
//! `deficit_mass` instead of being renormalized away.

use crate::coalescent::DiscretePmf;
use crate::error::{domain, Result};
use crate::special;

/// Kind of test statistic carried by a [`GofReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    ChiSquare,
    KolmogorovSmirnov,
}

/// One pooled cell of a chi-square comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BinRow {
    pub label: String,
    pub observed: u64,
    pub expected: f64,
}

/// Outcome of a Monte Carlo vs analytic comparison.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GofReport {
    pub statistic_kind: StatKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: u64,
    /// Pooled cells (chi-square only; empty for KS).
    pub bins: Vec<BinRow>,
    /// Analytic mass not modeled by the tabulated pmf.
    pub deficit_mass: f64,
}

/// Minimum expected count per pooled chi-square cell.
const MIN_EXPECTED: f64 = 5.0;

/// Chi-square comparison of integer samples against a tabulated law.
///
/// Cells outside the tabulated support (including any deficit mass) share a
/// single catch-all bin; adjacent cells are pooled until every expected
/// count reaches 5.  A table that degenerates to a single cell falls back to
/// an exact-match check.
pub fn gof_chi_square(analytic: &DiscretePmf, samples: &[u64]) -> Result<GofReport> {
    let n = samples.len() as u64;
    if n < 1000 {
        return Err(domain("chi-square comparison requires at least 10^3 samples"));
    }
    let len = analytic.probabilities.len();
    let start = analytic.support_start;
    let mut observed = vec![0u64; len];
    let mut outside = 0u64;
    for &v in samples {
        if v >= start && v < start + len as u64 {
            observed[(v - start) as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let tabulated: f64 = analytic.probabilities.iter().sum();
    let outside_mass = (1.0 - tabulated).max(0.0);

    // Raw cells in support order, catch-all last.
    let mut raw: Vec<(String, u64, f64)> = analytic
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, p)| {
            (
                (start + i as u64).to_string(),
                observed[i],
                p * n as f64,
            )
        })
        .collect();
    raw.push(("other".to_string(), outside, outside_mass * n as f64));

    // Greedy left-to-right pooling to expected >= 5; a short final pool is
    // merged into the previous cell.
    let mut bins: Vec<BinRow> = Vec::new();
    let mut pool_label_start: Option<String> = None;
    let mut pool_obs = 0u64;
    let mut pool_exp = 0.0;
    for (label, obs, exp) in raw {
        if pool_label_start.is_none() {
            pool_label_start = Some(label.clone());
        }
        pool_obs += obs;
        pool_exp += exp;
        if pool_exp >= MIN_EXPECTED {
            let first = pool_label_start.take().unwrap();
            let tag = if first == label {
                first
            } else {
                format!("{first}..{label}")
            };
            bins.push(BinRow {
                label: tag,
                observed: pool_obs,
                expected: pool_exp,
            });
            pool_obs = 0;
            pool_exp = 0.0;
        }
    }
    if pool_label_start.is_some() {
        if let Some(last) = bins.last_mut() {
            last.observed += pool_obs;
            last.expected += pool_exp;
            last.label = format!("{}+", last.label);
        } else {
            bins.push(BinRow {
                label: "all".to_string(),
                observed: pool_obs,
                expected: pool_exp,
            });
        }
    }

    if bins.len() < 2 {
        // Degenerate single atom: exact-match check.
        let ok = bins
            .first()
            .map(|b| b.observed == n)
            .unwrap_or(false);
        return Ok(GofReport {
            statistic_kind: StatKind::ChiSquare,
            statistic: 0.0,
            p_value: if ok { 1.0 } else { 0.0 },
            n_samples: n,
            bins,
            deficit_mass: 1.0 - analytic.total_mass,
        });
    }

    let statistic: f64 = bins
        .iter()
        .map(|b| {
            let d = b.observed as f64 - b.expected;
            d * d / b.expected
        })
        .sum();
    let df = (bins.len() - 1) as f64;
    let p_value = special::gamma_q(df / 2.0, statistic / 2.0);
    Ok(GofReport {
        statistic_kind: StatKind::ChiSquare,
        statistic,
        p_value,
        n_samples: n,
        bins,
        deficit_mass: 1.0 - analytic.total_mass,
    })
}

/// Kolmogorov-Smirnov distance `sup |F_emp - F|` of samples against a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(cdf: F, samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(domain("KS distance requires samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// One-sample KS test against a fully specified CDF, with the asymptotic
/// Kolmogorov p-value (Stephens' small-sample correction).
pub fn gof_ks<F: Fn(f64) -> f64>(cdf: F, samples: &[f64]) -> Result<GofReport> {
    let d = ks_distance(&cdf, samples)?;
    let n = samples.len() as f64;
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(GofReport {
        statistic_kind: StatKind::KolmogorovSmirnov,
        statistic: d,
        p_value: kolmogorov_q(lambda),
        n_samples: samples.len() as u64,
        bins: Vec::new(),
        deficit_mass: 0.0,
    })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(λ) = 2 Σ_{k>=1} (-1)^{k-1} e^{-2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut prev_term = 0.0_f64;
    for k in 1..=100 {
        let term = (a2 * (k * k) as f64).exp();
        sum += sign * term;
        if term <= 1e-12 * sum.abs() || (term <= 1e-9 && term <= prev_term) {
            return (2.0 * sum).clamp(0.0, 1.0);
        }
        prev_term = term;
        sign = -sign;
    }
    1.0
}
