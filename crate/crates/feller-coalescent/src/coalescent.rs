//! Ancestor-count and coalescent-time distributions.
//!
//! The population ancestor count `A_∞(s; t)` of a Feller diffusion is
//! Pólya-Aeppli with `ν = x0 μ(t; α)` and `p = p(s, t; α)`; a sample of `n`
//! taken from the population subsamples it through a Dirichlet-multinomial
//! composition law.  For a subcritical diffusion the `t -> ∞` limit
//! conditioned on survival gives the quasi-stationary coalescent: a shifted
//! geometric ancestor count, exponential coalescence times `T_k`, Kingman-like
//! mean waiting times `E[W_k] = 1/(|α| k(k-1))`, and closed single-integral
//! sample laws.

use crate::error::{domain, Error, Result};
use crate::model::{self, ModelParams, TimeWindow};
use crate::quad::{integrate, QuadratureSpec};
use crate::special;

/// Tail mass at which infinite ancestor-count sums are truncated.
const SERIES_TAIL: f64 = 1e-12;

/// Hard cap on truncation scans.
const SERIES_CAP: u64 = 1_000_000;

/// Parameters `(ν, p)` of the Pólya-Aeppli ancestor-count law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PolyaAeppliParams {
    /// Poisson founder intensity, `ν = x0 μ(t; α) > 0`.
    pub nu: f64,
    /// Geometric thinning parameter `p = p(s, t; α) ∈ [0, 1)`.
    pub p: f64,
}

/// A finite (possibly truncated) probability table over consecutive integers.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiscretePmf {
    /// Value represented by `probabilities[0]`.
    pub support_start: u64,
    pub probabilities: Vec<f64>,
    /// Mass the full law carries over its entire support (1 for proper laws).
    pub total_mass: f64,
    /// Upper bound on `total_mass - Σ probabilities`.
    pub truncation_tail_bound: f64,
}

impl DiscretePmf {
    /// Sum of the tabulated probabilities.
    pub fn tabulated_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Probability at `k`, zero outside the table.
    pub fn prob(&self, k: u64) -> f64 {
        if k < self.support_start {
            return 0.0;
        }
        self.probabilities
            .get((k - self.support_start) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Mean over the tabulated support.
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| (self.support_start + i as u64) as f64 * p)
            .sum()
    }
}

/// Pólya-Aeppli parameters of `A_∞(s; t)` for the given window and model.
pub fn ancestor_params(window: &TimeWindow, params: &ModelParams) -> Result<PolyaAeppliParams> {
    if !(params.x0 > 0.0) {
        return Err(domain("ancestor counts require x0 > 0"));
    }
    Ok(PolyaAeppliParams {
        nu: params.x0 * model::mu(window.t(), params.alpha)?,
        p: model::geom_p(window.s(), window.t(), params.alpha)?,
    })
}

/// `P(A_∞(s;t) = k)`, optionally conditioned on survival of the population
/// at time `t` (equivalently on `A_∞ > 0`).
pub fn population_ancestors_pmf(
    k: u64,
    window: &TimeWindow,
    params: &ModelParams,
    conditioned_on_survival: bool,
) -> Result<f64> {
    let pa = ancestor_params(window, params)?;
    if conditioned_on_survival {
        conditioned_pa_pmf(k, pa.nu, pa.p)
    } else {
        unconditioned_pa_pmf(k, pa.nu, pa.p)
    }
}

fn unconditioned_pa_pmf(k: u64, nu: f64, p: f64) -> Result<f64> {
    if nu == 0.0 {
        // ν underflows for extreme subcritical horizons; the law degenerates
        // to certain extinction.
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    special::polya_aeppli_pmf(k, nu, p)
}

/// Survival-conditioned Pólya-Aeppli pmf, computed in a form that stays
/// finite as `ν -> 0` (the ratio `ν/(1-e^{-ν})` is factored out explicitly,
/// so the quasi-stationary geometric limit is reached without 0/0).
fn conditioned_pa_pmf(k: u64, nu: f64, p: f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    if nu == 0.0 {
        // Limit law: shifted geometric (Poisson conditioned >=1 when p = 0).
        return Ok(if p == 0.0 {
            if k == 1 {
                1.0
            } else {
                0.0
            }
        } else {
            (1.0 - p) * p.powi(k as i32 - 1)
        });
    }
    if p == 0.0 {
        // Poisson conditioned on being positive.
        let ln_pois = k as f64 * nu.ln() - nu - special::ln_factorial(k);
        return Ok(ln_pois.exp() / -(-nu).exp_m1());
    }
    let ratio = nu / -(-nu).exp_m1(); // -> 1 as ν -> 0
    let ln_np = (nu * (1.0 - p)).ln();
    let ln_p = p.ln();
    let mut sum = 0.0;
    for j in 1..=k {
        let ln_term = special::ln_binomial(k - 1, j - 1)
            + (j - 1) as f64 * ln_np
            + (k - j) as f64 * ln_p
            - special::ln_factorial(j);
        sum += ln_term.exp();
    }
    Ok((-nu).exp() * ratio * (1.0 - p) * sum)
}

/// Tabulate the population ancestor-count law up to the `SERIES_TAIL`
/// quantile.
pub fn population_ancestors_table(
    window: &TimeWindow,
    params: &ModelParams,
    conditioned_on_survival: bool,
) -> Result<DiscretePmf> {
    let pa = ancestor_params(window, params)?;
    let start = u64::from(conditioned_on_survival);
    let mut probabilities = Vec::new();
    let mut cum = 0.0;
    let mut k = start;
    while cum < 1.0 - SERIES_TAIL {
        if k - start >= SERIES_CAP {
            return Err(Error::Numeric {
                message: "ancestor pmf truncation scan exceeded cap".into(),
                estimate: cum,
                bound: 1.0 - cum,
            });
        }
        let f = if conditioned_on_survival {
            conditioned_pa_pmf(k, pa.nu, pa.p)?
        } else {
            unconditioned_pa_pmf(k, pa.nu, pa.p)?
        };
        probabilities.push(f);
        cum += f;
        k += 1;
    }
    Ok(DiscretePmf {
        support_start: start,
        probabilities,
        total_mass: 1.0,
        truncation_tail_bound: (1.0 - cum).max(0.0),
    })
}

/// `P(A_n(s;t) = j | A_∞(s;t) = k) = C(k,j) (n!/k_(n)) C(n-1, j-1)` for
/// `1 <= j <= min(n, k)`.
///
/// `j > k` (with `j <= n`) is an impossible configuration and returns 0;
/// `j > n` or `j = 0` is a domain error.
pub fn sample_given_population_pmf(j: u64, n: u64, k: u64) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(domain("sample_given_population_pmf requires n >= 1, k >= 1"));
    }
    if j == 0 || j > n {
        return Err(domain("sample_given_population_pmf requires 1 <= j <= n"));
    }
    if j > k {
        return Ok(0.0);
    }
    let ln = special::ln_binomial(k, j) + special::ln_factorial(n)
        - special::log_rising_factorial(k, n)?
        + special::ln_binomial(n - 1, j - 1);
    Ok(ln.exp())
}

/// `P(A_n(s;t) = j)`: the sample ancestor-count law of Theorem-style mixing,
/// summing the composition law against the survival-conditioned population
/// law, truncated where the conditioned tail drops below `1e-12`.
pub fn sample_ancestors_pmf(
    j: u64,
    n: u64,
    window: &TimeWindow,
    params: &ModelParams,
) -> Result<f64> {
    if n == 0 || j == 0 || j > n {
        return Err(domain("sample_ancestors_pmf requires 1 <= j <= n"));
    }
    let table = sample_ancestors_table(n, window, params)?;
    Ok(table.prob(j))
}

/// Full sample ancestor-count table `j = 1..n`.
///
/// Each summand satisfies `P(A_n=j, A_∞=k) <= P(A_∞=k | survival)`, so the
/// reported truncation bound is the neglected conditioned tail mass.
pub fn sample_ancestors_table(
    n: u64,
    window: &TimeWindow,
    params: &ModelParams,
) -> Result<DiscretePmf> {
    if n == 0 {
        return Err(domain("sample_ancestors_table requires n >= 1"));
    }
    let pa = ancestor_params(window, params)?;
    let mut probs = vec![0.0_f64; n as usize];
    let mut cum = 0.0;
    let mut k = 1u64;
    while cum < 1.0 - SERIES_TAIL {
        if k > SERIES_CAP {
            return Err(Error::Numeric {
                message: "sample ancestor sum exceeded truncation cap".into(),
                estimate: cum,
                bound: 1.0 - cum,
            });
        }
        let w = conditioned_pa_pmf(k, pa.nu, pa.p)?;
        if w > 0.0 {
            for j in 1..=n.min(k) {
                probs[(j - 1) as usize] += w * sample_given_population_pmf(j, n, k)?;
            }
        }
        cum += w;
        k += 1;
    }
    Ok(DiscretePmf {
        support_start: 1,
        probabilities: probs,
        total_mass: 1.0,
        truncation_tail_bound: (1.0 - cum).max(0.0),
    })
}

fn require_subcritical(alpha: f64, what: &str) -> Result<f64> {
    if !(alpha < 0.0) {
        return Err(domain(format!(
            "{what} requires a subcritical diffusion (alpha < 0)"
        )));
    }
    Ok(-alpha)
}

/// Quasi-stationary population ancestor count: shifted geometric,
/// `P(A_∞(s;∞) = k | survival) = (1 - e^{-|α|s}) e^{-|α|(k-1)s}`, `k >= 1`.
pub fn qs_population_ancestors_pmf(k: u64, s: f64, alpha: f64) -> Result<f64> {
    let abs_a = require_subcritical(alpha, "qs_population_ancestors_pmf")?;
    if !(s > 0.0) {
        return Err(domain("qs_population_ancestors_pmf requires s > 0"));
    }
    if k == 0 {
        return Err(domain("qs ancestor count starts at k = 1"));
    }
    let q = (-abs_a * s).exp();
    Ok((1.0 - q) * (-abs_a * (k - 1) as f64 * s).exp())
}

/// `P(T_k > s) = e^{-|α|(k-1)s}`: the quasi-stationary time back to `k-1`
/// ancestors is exponential with rate `|α|(k-1)`.
pub fn qs_tk_survival(k: u64, s: f64, alpha: f64) -> Result<f64> {
    let abs_a = require_subcritical(alpha, "qs_tk_survival")?;
    if k < 2 {
        return Err(domain("qs_tk_survival requires k >= 2"));
    }
    if !(s >= 0.0) {
        return Err(domain("qs_tk_survival requires s >= 0"));
    }
    Ok((-abs_a * (k - 1) as f64 * s).exp())
}

/// Quasi-stationary mean inter-coalescent time `E[W_k] = 1/(|α| k(k-1))`,
/// the Kingman coalescent means up to scale.
pub fn qs_mean_wk(k: u64, alpha: f64) -> Result<f64> {
    let abs_a = require_subcritical(alpha, "qs_mean_wk")?;
    if k < 2 {
        return Err(domain("qs_mean_wk requires k >= 2"));
    }
    Ok(1.0 / (abs_a * (k * (k - 1)) as f64))
}

/// Quasi-stationary sample ancestor count
/// `P(A_n(s; ∞) = j) = n C(n-1,j-1) (1-e^{-|α|s}) e^{-(j-1)|α|s}
///  ∫_0^1 u^{j-1}(1-u)^{n-1}/(1 - u e^{-|α|s})^{j+1} du`.
pub fn qs_sample_ancestors_pmf(j: u64, n: u64, s: f64, alpha: f64) -> Result<f64> {
    let abs_a = require_subcritical(alpha, "qs_sample_ancestors_pmf")?;
    if n == 0 || j == 0 || j > n {
        return Err(domain("qs_sample_ancestors_pmf requires 1 <= j <= n"));
    }
    if !(s > 0.0) {
        return Err(domain("qs_sample_ancestors_pmf requires s > 0"));
    }
    let one_minus_q = -(-abs_a * s).exp_m1();
    let q = (-abs_a * s).exp();
    let jf = j as f64;
    let nf = n as f64;
    let spec = QuadratureSpec::with_tols(1e-13, 1e-11);
    let integral = integrate(
        |u| {
            // 1 - u q computed as (1-u) + u(1-q) to stay accurate near u = 1.
            let denom = (1.0 - u) + u * one_minus_q;
            u.powf(jf - 1.0) * (1.0 - u).powf(nf - 1.0) / denom.powi(j as i32 + 1)
        },
        0.0,
        1.0,
        &spec,
    )?;
    let prefactor = (special::ln_binomial(n - 1, j - 1) + nf.ln()).exp();
    Ok(prefactor * one_minus_q * q.powi(j as i32 - 1) * integral)
}

/// Quasi-stationary survival function of the inter-coalescent time `W_k`:
/// `P(W_k > w) = k (1-e^{-|α|w}) e^{-|α|(k-1)w}
///  ∫_0^1 u^{k-1}(1-u)^{k-1}/(1 - u e^{-|α|w})^{k+1} du`.
///
/// At `w = 0` the displayed integral diverges against the vanishing
/// prefactor; the survival-function limit there is 1.
pub fn qs_wk_survival(w: f64, k: u64, alpha: f64) -> Result<f64> {
    let abs_a = require_subcritical(alpha, "qs_wk_survival")?;
    if k < 2 {
        return Err(domain("qs_wk_survival requires k >= 2"));
    }
    if !(w >= 0.0) {
        return Err(domain("qs_wk_survival requires w >= 0"));
    }
    if w == 0.0 {
        return Ok(1.0);
    }
    let one_minus_q = -(-abs_a * w).exp_m1();
    let q = (-abs_a * w).exp();
    let kf = k as f64;
    // The integrand peaks within O(|α|w) of u = 1 for small w; the flagged
    // endpoint triggers a geometric panel cascade that resolves it.
    let spec = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_subdivisions: 8000,
        singular_endpoints: (false, true),
    };
    let integral = integrate(
        |u| {
            let denom = (1.0 - u) + u * one_minus_q;
            u.powf(kf - 1.0) * (1.0 - u).powf(kf - 1.0) / denom.powi(k as i32 + 1)
        },
        0.0,
        1.0,
        &spec,
    )?;
    Ok((kf * one_minus_q * q.powi(k as i32 - 1) * integral).min(1.0))
}

/// Density of the mutant relative frequency when the population has `k`
/// ancestors: Beta(1, k-1), i.e. `(k-1)(1-u)^{k-2}` on `(0, 1)`.
pub fn mutant_frequency_density(u: f64, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(domain("mutant_frequency_density requires k >= 2"));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("mutant_frequency_density requires 0 < u < 1"));
    }
    Ok((k - 1) as f64 * (1.0 - u).powi(k as i32 - 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, TimeWindow};

    fn window(t: f64, s: f64) -> TimeWindow {
        TimeWindow::new(t, s).unwrap()
    }

    fn params(alpha: f64, x0: f64) -> ModelParams {
        ModelParams::new(alpha, x0).unwrap()
    }

    #[test]
    fn ancestor_params_examples() {
        // s = t at the critical point: ν = x0 μ(1;0) = 2, p = 0.
        let pa = ancestor_params(&window(1.0, 1.0), &params(0.0, 1.0)).unwrap();
        assert!((pa.nu - 2.0).abs() < 1e-12);
        assert_eq!(pa.p, 0.0);
        // Critical limit of p.
        let pa = ancestor_params(&window(1.0, 0.25), &params(0.0, 1.0)).unwrap();
        assert!((pa.p - 0.75).abs() < 1e-12);
        // s = t gives p = 0 regardless of α.
        for a in [-2.0, 0.3, 1.7] {
            assert_eq!(
                ancestor_params(&window(2.0, 2.0), &params(a, 1.0)).unwrap().p,
                0.0
            );
        }
        assert!(ancestor_params(&window(1.0, 0.5), &params(0.5, 0.0)).is_err());
    }

    #[test]
    fn population_pmf_atom_and_conditioning() {
        let w = window(1.0, 0.5);
        let p = params(0.8, 1.2);
        let pa = ancestor_params(&w, &p).unwrap();
        // Unconditioned mass at zero is the extinction atom exp(-x0 μ).
        let p0 = population_ancestors_pmf(0, &w, &p, false).unwrap();
        assert!((p0 - (-pa.nu).exp()).abs() < 1e-15);
        // Conditioned law puts no mass at zero.
        assert_eq!(population_ancestors_pmf(0, &w, &p, true).unwrap(), 0.0);
        // Conditioning just rescales by the survival probability.
        for k in 1..=20u64 {
            let unc = population_ancestors_pmf(k, &w, &p, false).unwrap();
            let con = population_ancestors_pmf(k, &w, &p, true).unwrap();
            assert!((con - unc / (1.0 - (-pa.nu).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn population_pmf_poisson_degeneracy_at_s_equal_t() {
        // Theorem consistency: s = t means p = 0 and the law is Poisson(ν).
        let w = window(1.0, 1.0);
        for (a, x0) in [(0.0, 1.0), (-0.7, 2.0), (1.3, 0.5)] {
            let p = params(a, x0);
            let nu = ancestor_params(&w, &p).unwrap().nu;
            let mut pois = (-nu).exp();
            for k in 0..=25u64 {
                if k > 0 {
                    pois *= nu / k as f64;
                }
                let got = population_ancestors_pmf(k, &w, &p, false).unwrap();
                assert!((got - pois).abs() < 1e-12, "k={k} a={a}");
            }
        }
    }

    #[test]
    fn population_mean_identity() {
        // Σ k pmf = ν/(1-p) = x0 e^{α(t-s)} μ(s; α).
        for (t, s, a, x0) in [(1.0, 0.5, 0.8, 1.2), (2.0, 0.3, -1.1, 0.7), (1.5, 1.5, 0.0, 1.0)]
        {
            let w = window(t, s);
            let p = params(a, x0);
            let table = population_ancestors_table(&w, &p, false).unwrap();
            let expect = x0 * (a * (t - s)).exp() * crate::model::mu(s, a).unwrap();
            assert!(
                (table.mean() - expect).abs() < 1e-8 * expect.max(1.0),
                "mean identity at ({t},{s},{a},{x0})"
            );
            assert!((table.tabulated_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lemma_small_cases() {
        // A single sampled lineage always has one ancestor.
        for k in 1..10u64 {
            assert!((sample_given_population_pmf(1, 1, k).unwrap() - 1.0).abs() < 1e-14);
        }
        // n = k = 2: three uniform lattice points, one of which separates.
        assert!((sample_given_population_pmf(1, 2, 2).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        assert!((sample_given_population_pmf(2, 2, 2).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        // Degenerate j > k is probability zero, not an error.
        assert_eq!(sample_given_population_pmf(3, 4, 2).unwrap(), 0.0);
        assert!(sample_given_population_pmf(5, 4, 9).is_err());
        assert!(sample_given_population_pmf(0, 4, 9).is_err());
    }

    #[test]
    fn lemma_normalization() {
        for n in 1..=20u64 {
            for k in 1..=20u64 {
                let sum: f64 = (1..=n.min(k))
                    .map(|j| sample_given_population_pmf(j, n, k).unwrap())
                    .sum();
                assert!((sum - 1.0).abs() < 1e-12, "n={n} k={k}: {sum}");
            }
        }
    }

    #[test]
    fn sample_ancestors_single_lineage_and_mass() {
        let w = window(1.0, 0.3);
        let p = params(-0.5, 2.0);
        assert!((sample_ancestors_pmf(1, 1, &w, &p).unwrap() - 1.0).abs() < 1e-10);
        let table = sample_ancestors_table(6, &w, &p).unwrap();
        assert!((table.tabulated_mass() - 1.0).abs() < 1e-10);
        assert!(table.truncation_tail_bound < 1e-11);
    }

    #[test]
    fn sample_ancestors_degenerates_to_population_law_for_large_n() {
        // As n grows the sample sees every ancestor: A_n -> A_∞ | survival.
        let w = window(1.0, 0.6);
        let p = params(0.4, 1.0);
        let sample = sample_ancestors_table(200, &w, &p).unwrap();
        for k in 1..=10u64 {
            let pop = population_ancestors_pmf(k, &w, &p, true).unwrap();
            assert!(
                (sample.prob(k) - pop).abs() < 1e-3,
                "k={k}: {} vs {pop}",
                sample.prob(k)
            );
        }
    }

    #[test]
    fn qs_pmf_values_and_mass() {
        // |α|s = log 2 puts mass 1/2 on k = 1.
        let s = 2.0_f64.ln();
        assert!((qs_population_ancestors_pmf(1, s, -1.0).unwrap() - 0.5).abs() < 1e-14);
        let mass: f64 = (1..200u64)
            .map(|k| qs_population_ancestors_pmf(k, 0.7, -1.3).unwrap())
            .sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(qs_population_ancestors_pmf(1, 0.5, 0.1).is_err());
        assert!(qs_population_ancestors_pmf(0, 0.5, -0.1).is_err());
    }

    #[test]
    fn qs_pmf_is_large_t_limit_of_conditioned_law() {
        let p = params(-1.0, 1.0);
        for t in [20.0, 1e3] {
            let w = window(t, 0.5);
            for k in 1..=12u64 {
                let finite_t = population_ancestors_pmf(k, &w, &p, true).unwrap();
                let qs = qs_population_ancestors_pmf(k, 0.5, -1.0).unwrap();
                assert!(
                    (finite_t - qs).abs() < 1e-6,
                    "t={t} k={k}: {finite_t} vs {qs}"
                );
            }
        }
    }

    #[test]
    fn qs_tk_exponential() {
        assert_eq!(qs_tk_survival(2, 0.0, -1.0).unwrap(), 1.0);
        assert!((qs_tk_survival(2, 1.0, -1.0).unwrap() - (-1.0_f64).exp()).abs() < 1e-14);
        // Matches the tail of the geometric ancestor law.
        for k in 2..=8u64 {
            let tail: f64 = (k..500)
                .map(|j| qs_population_ancestors_pmf(j, 0.4, -0.9).unwrap())
                .sum();
            let surv = qs_tk_survival(k, 0.4, -0.9).unwrap();
            assert!((tail - surv).abs() < 1e-12, "k={k}");
        }
        assert!(qs_tk_survival(1, 0.5, -1.0).is_err());
    }

    #[test]
    fn qs_mean_wk_values_and_quadrature() {
        assert!((qs_mean_wk(2, -1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((qs_mean_wk(3, -2.0).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        // E[W_k] = ∫ (P(T_k > s) - P(T_{k+1} > s)) ds.
        let spec = QuadratureSpec::with_tols(1e-12, 1e-10);
        for k in 2..=5u64 {
            let alpha = -1.4;
            let integral = integrate(
                |s| {
                    qs_tk_survival(k, s, alpha).unwrap() - qs_tk_survival(k + 1, s, alpha).unwrap()
                },
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap();
            let mean = qs_mean_wk(k, alpha).unwrap();
            assert!((integral - mean).abs() < 1e-8, "k={k}");
        }
        assert!(qs_mean_wk(1, -1.0).is_err());
        assert!(qs_mean_wk(2, 0.0).is_err());
    }

    #[test]
    fn qs_sample_pmf_mass() {
        // n = 1 reduces to the geometric series total.
        assert!((qs_sample_ancestors_pmf(1, 1, 0.6, -0.8).unwrap() - 1.0).abs() < 1e-8);
        // Normalization at n = 5.
        let sum: f64 = (1..=5u64)
            .map(|j| qs_sample_ancestors_pmf(j, 5, 0.7, -1.0).unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-8, "sum {sum}");
    }

    #[test]
    fn qs_sample_pmf_matches_series_route() {
        // Substituting the geometric law into the sample mixture sum must
        // reproduce the single-integral form.
        for (j, n, s, alpha) in [(1u64, 3u64, 0.5, -1.0), (2, 5, 0.7, -0.6), (4, 7, 0.3, -1.5)] {
            let integral_form = qs_sample_ancestors_pmf(j, n, s, alpha).unwrap();
            let mut series = 0.0;
            let mut cum = 0.0;
            let mut k = 1u64;
            while cum < 1.0 - 1e-12 {
                let w = qs_population_ancestors_pmf(k, s, alpha).unwrap();
                if k >= j {
                    series += w * sample_given_population_pmf(j, n, k).unwrap();
                }
                cum += w;
                k += 1;
            }
            assert!(
                (integral_form - series).abs() < 1e-8,
                "({j},{n}): {integral_form} vs {series}"
            );
        }
    }

    #[test]
    fn qs_wk_survival_shape() {
        // Survival limits.
        assert_eq!(qs_wk_survival(0.0, 2, -1.0).unwrap(), 1.0);
        assert!(qs_wk_survival(1e-6, 2, -1.0).unwrap() >= 0.99);
        assert!(qs_wk_survival(50.0, 2, -1.0).unwrap() < 1e-6);
        // Monotone nonincreasing in w.
        for k in [2u64, 4] {
            let mut last = 1.0;
            for i in 1..=30 {
                let w = 0.15 * i as f64;
                let v = qs_wk_survival(w, k, -1.0).unwrap();
                assert!(v <= last + 1e-9, "k={k} w={w}");
                last = v;
            }
        }
        assert!(qs_wk_survival(-0.1, 2, -1.0).is_err());
        assert!(qs_wk_survival(1.0, 2, 1.0).is_err());
    }

    #[test]
    fn mutant_frequency_density_beta() {
        // k = 2 is uniform.
        assert!((mutant_frequency_density(0.3, 2).unwrap() - 1.0).abs() < 1e-14);
        // Mass 1 for k = 5 and mean 1/k for k = 4.
        let spec = QuadratureSpec::default();
        let mass = integrate(|u| mutant_frequency_density(u, 5).unwrap(), 0.0, 1.0, &spec).unwrap();
        assert!((mass - 1.0).abs() < 1e-10);
        let mean =
            integrate(|u| u * mutant_frequency_density(u, 4).unwrap(), 0.0, 1.0, &spec).unwrap();
        assert!((mean - 0.25).abs() < 1e-10);
        assert!(mutant_frequency_density(0.0, 3).is_err());
        assert!(mutant_frequency_density(0.5, 1).is_err());
    }
}
