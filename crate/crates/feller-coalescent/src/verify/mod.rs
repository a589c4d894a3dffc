//! Cross-validation suite: every analytic law in the crate is checked
//! against an independent route (oracle, simulation, or a second closed
//! form) at a pinned tolerance.
//!
//! The checks are deterministic given a seed and are exposed both to the
//! `verify` CLI command and to the acceptance test target.

pub mod oracles;

use crate::coalescent::{
    population_ancestors_pmf, population_ancestors_table, qs_mean_wk,
    qs_population_ancestors_pmf, qs_sample_ancestors_pmf, qs_wk_survival, sample_ancestors_table,
    sample_given_population_pmf, DiscretePmf,
};
use crate::gof::{gof_chi_square, ks_distance};
use crate::model::{self, BgwScale, ModelParams, TimeWindow};
use crate::quad::{integrate, QuadratureSpec};
use crate::rrp::{
    bd_rates, coalescent_rate, intensity_z, lambda_coal, lambda_eff,
    mean_inter_coalescent_sample, mean_inter_coalescent_sample_by_tau, mu_eff, rho_of_tau,
    sample_pmf_at_z, tau_of_rho, SamplePmfForm,
};
use crate::sim::{
    sample_coalescent_times_nhpp, sample_feller_transition, sample_population_ancestors,
    sample_subsample_ancestors, simulate_bd, simulate_bgw, OffspringLaw, SeededSource, SimRng,
};
use crate::special;
use rand::Rng;

/// Pass direction of a check's statistic against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Pass iff `statistic > tolerance` (p-value style).
    Above,
    /// Pass iff `statistic <= tolerance` (error style).
    Below,
}

/// Outcome of one verification check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub id: String,
    pub description: String,
    pub statistic: f64,
    pub tolerance: f64,
    pub direction: Direction,
    pub passed: bool,
}

fn report(id: &str, description: &str, statistic: f64, tolerance: f64, dir: Direction) -> CheckReport {
    let passed = match dir {
        Direction::Above => statistic > tolerance,
        Direction::Below => statistic <= tolerance,
    };
    CheckReport {
        id: id.to_string(),
        description: description.to_string(),
        statistic,
        tolerance,
        direction: dir,
        passed,
    }
}

/// Run every check.
pub fn run_all(seed: u64) -> Vec<CheckReport> {
    run_matching(seed, None)
}

/// Run the checks whose id contains `only` (all of them when `None`).
pub fn run_matching(seed: u64, only: Option<&str>) -> Vec<CheckReport> {
    let wanted = |id: &str| only.map_or(true, |f| id.contains(f));
    let mut out = Vec::new();
    let table: &[(&str, fn(u64) -> CheckReport)] = &[
        ("theorem3.1-two-step", check_theorem31_two_step),
        ("polya-aeppli-pgf-inversion", check_pa_pgf_inversion),
        ("lemma3.1-enumeration", check_lemma_enumeration),
        ("theorem3.2-composed-mc", check_theorem32_mc),
        ("theorem3.2-normalization", check_theorem32_normalization),
        ("qs-large-t-limit", check_qs_large_t_limit),
        ("qs-wk-survival-mean", check_qs_wk_survival_mean),
        ("qs-sample-waiting-mean", check_qs_sample_waiting_mean),
        ("rate-s-independence", check_rate_s_independence),
        ("rho-tau-round-trip", check_rho_tau_round_trip),
        ("mu-eff-derivative", check_mu_eff_derivative),
        ("nhpp-count-chisq", check_nhpp_count),
        ("nhpp-cumulative-intensity", check_nhpp_cumulative_intensity),
        ("corollary6.1-series-vs-integral", check_series_vs_integral),
        ("corollary6.1-mean-routes", check_mean_routes),
        ("corollary6.1-mean-mc", check_mean_mc),
        ("bd-limit-moments", check_bd_limit),
        ("bgw-limit", check_bgw_limit),
        ("yaglom-critical", check_yaglom),
        ("conditional-bd-geometric", check_conditional_bd),
    ];
    for (id, f) in table {
        if wanted(id) {
            out.push(f(seed));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Theorem 3.1: Pólya-Aeppli ancestor counts vs the two-step sampler.

fn check_theorem31_two_step(seed: u64) -> CheckReport {
    let mut min_p = f64::INFINITY;
    for (i, alpha) in [-1.0, 0.0, 0.8].into_iter().enumerate() {
        let params = ModelParams::new(alpha, 1.2).unwrap();
        let window = TimeWindow::new(1.0, 0.5).unwrap();
        let table = population_ancestors_table(&window, &params, false).unwrap();
        let mut rng = SeededSource::new(seed, 100 + i as u64).rng();
        let samples: Vec<u64> = (0..100_000)
            .map(|_| sample_population_ancestors(&window, &params, &mut rng).unwrap())
            .collect();
        let rep = gof_chi_square(&table, &samples).unwrap();
        min_p = min_p.min(rep.p_value);
    }
    report(
        "theorem3.1-two-step",
        "ancestor-count pmf vs two-step sampler at (t=1, s=0.5, x0=1.2), \
         alpha in {-1, 0, 0.8}, 1e5 draws each; min chi-square p",
        min_p,
        1e-3,
        Direction::Above,
    )
}

// ---------------------------------------------------------------------------
// Pólya-Aeppli closed form vs pgf inversion.

fn check_pa_pgf_inversion(_seed: u64) -> CheckReport {
    let mut max_err = 0.0_f64;
    for (nu, p) in [(0.5, 0.1), (2.0, 0.5), (5.0, 0.9)] {
        let oracle = oracles::pa_pmf_by_pgf_inversion(nu, p, 50);
        for (k, o) in oracle.iter().enumerate() {
            let f = special::polya_aeppli_pmf(k as u64, nu, p).unwrap();
            max_err = max_err.max((o - f).abs());
        }
    }
    report(
        "polya-aeppli-pgf-inversion",
        "closed-form pmf vs pgf Fourier inversion, k <= 50, \
         (nu,p) in {(0.5,0.1),(2,0.5),(5,0.9)}; max abs error",
        max_err,
        1e-10,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// Lemma: composition law vs exhaustive enumeration.

fn check_lemma_enumeration(_seed: u64) -> CheckReport {
    let mut max_err = 0.0_f64;
    for n in 1..=12u64 {
        for k in 1..=12u64 {
            let tally = oracles::lemma_composition_tally(n, k);
            let total: u128 = tally.iter().map(|&t| t as u128).sum();
            if total != oracles::binomial_u128(n + k - 1, n) {
                max_err = f64::INFINITY;
                continue;
            }
            for j in 1..=n.min(k) {
                // Exact rational agreement: the count identity is the pmf in
                // lowest common denominator over the uniform lattice.
                let expect = oracles::binomial_u128(k, j) * oracles::binomial_u128(n - 1, j - 1);
                if tally[j as usize] as u128 != expect {
                    max_err = f64::INFINITY;
                    continue;
                }
                let exact = expect as f64 / total as f64;
                let f = sample_given_population_pmf(j, n, k).unwrap();
                max_err = max_err.max((f - exact).abs() / exact);
            }
        }
    }
    report(
        "lemma3.1-enumeration",
        "composition law vs exhaustive lattice enumeration for all n,k <= 12: \
         exact integer counts, plus float pmf relative error",
        max_err,
        1e-12,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// Theorem 3.2: sample ancestor law vs composed Monte Carlo.

fn check_theorem32_mc(seed: u64) -> CheckReport {
    let params = ModelParams::new(0.6, 1.0).unwrap();
    let window = TimeWindow::new(1.0, 0.4).unwrap();
    let mut min_p = f64::INFINITY;
    for (i, n) in [2u64, 3, 6].into_iter().enumerate() {
        let table = sample_ancestors_table(n, &window, &params).unwrap();
        let mut rng = SeededSource::new(seed, 200 + i as u64).rng();
        let samples: Vec<u64> = (0..100_000)
            .map(|_| {
                // A_inf conditioned on survival by rejection, then the
                // composition subsampler.
                let k = loop {
                    let a = sample_population_ancestors(&window, &params, &mut rng).unwrap();
                    if a > 0 {
                        break a;
                    }
                };
                sample_subsample_ancestors(n, k, &mut rng).unwrap()
            })
            .collect();
        let rep = gof_chi_square(&table, &samples).unwrap();
        min_p = min_p.min(rep.p_value);
    }
    report(
        "theorem3.2-composed-mc",
        "sample ancestor pmf vs (A_inf | survival) + composition sampler at \
         (t=1, s=0.4, alpha=0.6, x0=1), n in {2,3,6}, 1e5 draws; min chi-square p",
        min_p,
        1e-3,
        Direction::Above,
    )
}

fn check_theorem32_normalization(_seed: u64) -> CheckReport {
    let params = ModelParams::new(0.6, 1.0).unwrap();
    let window = TimeWindow::new(1.0, 0.4).unwrap();
    let mut max_err = 0.0_f64;
    for n in [2u64, 3, 6, 11] {
        let table = sample_ancestors_table(n, &window, &params).unwrap();
        max_err = max_err.max((table.tabulated_mass() - 1.0).abs());
    }
    report(
        "theorem3.2-normalization",
        "sample ancestor pmf sums to 1 (truncation tail included); max |mass - 1|",
        max_err,
        1e-10,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// Quasi-stationary suite.

fn check_qs_large_t_limit(_seed: u64) -> CheckReport {
    let params = ModelParams::new(-1.0, 1.0).unwrap();
    let window = TimeWindow::new(1e3, 0.5).unwrap();
    let mut max_err = 0.0_f64;
    for k in 1..=20u64 {
        let finite_t = population_ancestors_pmf(k, &window, &params, true).unwrap();
        let qs = qs_population_ancestors_pmf(k, 0.5, -1.0).unwrap();
        max_err = max_err.max((finite_t - qs).abs());
    }
    report(
        "qs-large-t-limit",
        "survival-conditioned ancestor pmf at t=1e3 vs quasi-stationary \
         geometric law (alpha=-1, s=0.5); max abs error over k <= 20",
        max_err,
        1e-6,
        Direction::Below,
    )
}

fn check_qs_wk_survival_mean(_seed: u64) -> CheckReport {
    let alpha = -1.0;
    let spec = QuadratureSpec {
        abs_tol: 1e-10,
        rel_tol: 1e-6,
        max_subdivisions: 2000,
        singular_endpoints: (false, false),
    };
    let mut max_rel = 0.0_f64;
    for k in [2u64, 3, 4] {
        let integral = integrate(
            |w| qs_wk_survival(w, k, alpha).unwrap(),
            0.0,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        let mean = qs_mean_wk(k, alpha).unwrap();
        max_rel = max_rel.max((integral - mean).abs() / mean);
    }
    report(
        "qs-wk-survival-mean",
        "integral of the W_k survival function vs 1/(|alpha| k(k-1)) for \
         k in {2,3,4}; max relative error",
        max_rel,
        1e-4,
        Direction::Below,
    )
}

fn check_qs_sample_waiting_mean(_seed: u64) -> CheckReport {
    let alpha = -1.0;
    let spec = QuadratureSpec {
        abs_tol: 1e-10,
        rel_tol: 1e-6,
        max_subdivisions: 2000,
        singular_endpoints: (false, false),
    };
    let mut max_rel = 0.0_f64;
    for (j, n) in [(2u64, 2u64), (2, 5), (4, 7)] {
        let integral = integrate(
            |s| qs_sample_ancestors_pmf(j, n, s, alpha).unwrap(),
            0.0,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        let mean = qs_mean_wk(j, alpha).unwrap();
        max_rel = max_rel.max((integral - mean).abs() / mean);
    }
    report(
        "qs-sample-waiting-mean",
        "integral over s of the quasi-stationary sample pmf vs the Kingman \
         means 1/(|alpha| j(j-1)) for (j,n) in {(2,2),(2,5),(4,7)}; max relative error",
        max_rel,
        1e-4,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// Rate identities of the reconstructed process.

fn check_rate_s_independence(_seed: u64) -> CheckReport {
    let t = 2.0;
    let mut max_rel = 0.0_f64;
    for alpha in [-1.5, -0.3, 0.0, 0.4, 2.0] {
        for u in [0.0, 0.7, 1.9] {
            let reference = lambda_coal(u, t, alpha).unwrap();
            for s in [1e-4, 1e-2, 0.3, 1.0, 1.9] {
                if u >= t - s {
                    continue;
                }
                let rates = bd_rates(s, alpha).unwrap();
                let eff = lambda_eff(&rates, t - s, u).unwrap();
                max_rel = max_rel.max((eff - reference).abs() / reference.abs().max(1.0));
            }
        }
    }
    report(
        "rate-s-independence",
        "reconstructed-process birth rate is independent of the scale s; \
         max relative deviation from the coalescent rate over an (alpha,u,s) grid",
        max_rel,
        1e-12,
        Direction::Below,
    )
}

fn check_rho_tau_round_trip(_seed: u64) -> CheckReport {
    let mut max_rel = 0.0_f64;
    for (s, alpha) in [(0.01, 1.0), (0.3, 0.7), (0.001, 2.5)] {
        for factor in [1.0, 2.0, 10.0, 500.0] {
            let tau = s * factor;
            let rho = rho_of_tau(tau, s, alpha).unwrap();
            let back = tau_of_rho(rho, s, alpha).unwrap();
            max_rel = max_rel.max((back - tau).abs() / tau);
        }
    }
    report(
        "rho-tau-round-trip",
        "time change to the rate-1 death clock and back; max relative round-trip error",
        max_rel,
        1e-12,
        Direction::Below,
    )
}

fn check_mu_eff_derivative(_seed: u64) -> CheckReport {
    let (s, alpha) = (0.01, 1.0);
    let mut max_rel = 0.0_f64;
    for tau in [0.05f64, 0.4, 2.0, 8.0] {
        let h = 1e-6 * tau.max(1.0);
        let d = (rho_of_tau(tau + h, s, alpha).unwrap() - rho_of_tau(tau - h, s, alpha).unwrap())
            / (2.0 * h);
        let m = mu_eff(tau, alpha).unwrap();
        max_rel = max_rel.max((d - m).abs() / m);
    }
    report(
        "mu-eff-derivative",
        "d(rho)/d(tau) equals the effective death rate by central finite \
         difference; max relative error",
        max_rel,
        1e-6,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// NHPP coalescence times.

/// Paper-form ancestor table at lookback tau: support j >= 1 with total mass
/// `1 - e^{-z}`; the deficit rides in the catch-all bin, which collects the
/// simulated outcome "every coalescence is more recent than tau" (count 0).
fn nhpp_paper_table(z: f64) -> DiscretePmf {
    let mut probs = Vec::new();
    let mut term = z * (-z).exp();
    let mut cum = 0.0;
    let mut j = 1u64;
    while cum < 1.0 - (-z).exp() - 1e-12 {
        if j > 1 {
            term *= z / j as f64;
        }
        probs.push(term);
        cum += term;
        j += 1;
    }
    DiscretePmf {
        support_start: 1,
        probabilities: probs,
        total_mass: 1.0 - (-z).exp(),
        truncation_tail_bound: 1e-12,
    }
}

fn check_nhpp_count(seed: u64) -> CheckReport {
    let (x, alpha) = (1.0, 1.0);
    let mut min_p = f64::INFINITY;
    for (i, tau) in [0.3, 1.0].into_iter().enumerate() {
        let z = intensity_z(tau, x, alpha).unwrap();
        let table = nhpp_paper_table(z);
        let mut rng = SeededSource::new(seed, 300 + i as u64).rng();
        let samples: Vec<u64> = (0..100_000)
            .map(|_| {
                sample_coalescent_times_nhpp(x, alpha, tau, &mut rng)
                    .unwrap()
                    .len() as u64
            })
            .collect();
        let rep = gof_chi_square(&table, &samples).unwrap();
        min_p = min_p.min(rep.p_value);
    }
    report(
        "nhpp-count-chisq",
        "coalescence count in (tau, inf) from the NHPP sampler vs the stated \
         ancestor pmf (deficit mass in the catch-all bin) at (x=1, alpha=1), \
         tau in {0.3, 1}; min chi-square p over 1e5 runs",
        min_p,
        1e-3,
        Direction::Above,
    )
}

fn check_nhpp_cumulative_intensity(_seed: u64) -> CheckReport {
    let (x, alpha) = (1.0, 1.0);
    let spec = QuadratureSpec::with_tols(1e-12, 1e-10);
    let mut max_err = 0.0_f64;
    for tau in [0.3, 0.9, 2.0] {
        let q = integrate(
            |xi| coalescent_rate(xi, x, alpha).unwrap(),
            tau,
            f64::INFINITY,
            &spec,
        )
        .unwrap();
        let z = intensity_z(tau, x, alpha).unwrap();
        max_err = max_err.max((q - z).abs());
    }
    report(
        "nhpp-cumulative-intensity",
        "quadrature of the coalescence rate over (tau, inf) vs x/beta(tau); max abs error",
        max_err,
        1e-8,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// Sample formulas of the reversed process.

fn check_series_vs_integral(_seed: u64) -> CheckReport {
    let mut max_err = 0.0_f64;
    for j in [1u64, 2, 4] {
        for n in [4u64, 6, 9] {
            for z in [0.4, 1.7, 5.0] {
                let a = sample_pmf_at_z(j, n, z, SamplePmfForm::Series).unwrap();
                let b = sample_pmf_at_z(j, n, z, SamplePmfForm::Integral).unwrap();
                max_err = max_err.max((a - b).abs());
            }
        }
    }
    report(
        "corollary6.1-series-vs-integral",
        "Kummer-series form vs Beta-integral form of the sample ancestor pmf \
         on a 3x3x3 grid of (j, n, x/beta); max abs difference",
        max_err,
        1e-8,
        Direction::Below,
    )
}

fn check_mean_routes(_seed: u64) -> CheckReport {
    let mut max_rel = 0.0_f64;
    for (j, n) in [(2u64, 3u64), (3, 6)] {
        let a = mean_inter_coalescent_sample(j, n, 1.0, 1.0).unwrap();
        let b = mean_inter_coalescent_sample_by_tau(j, n, 1.0, 1.0).unwrap();
        max_rel = max_rel.max((a - b).abs() / a);
    }
    report(
        "corollary6.1-mean-routes",
        "mean inter-coalescent time: closed double integral vs the defining \
         integral of the pmf over tau; max relative difference",
        max_rel,
        1e-5,
        Direction::Below,
    )
}

/// Monte Carlo mean of the sample inter-coalescent time `W_target` in a
/// sample of `n`: NHPP coalescence times, composition-law initialization at
/// `tau_min`, then the pair-merge chain backwards through the events.
fn mc_sample_waiting_time(
    target: u64,
    n: u64,
    x: f64,
    alpha: f64,
    tau_min: f64,
    reps: usize,
    rng: &mut SimRng,
) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..reps {
        let times = sample_coalescent_times_nhpp(x, alpha, tau_min, rng).unwrap();
        let k0 = times.len() as u64;
        let mut w = 0.0;
        if k0 > 0 {
            let mut j = sample_subsample_ancestors(n, k0, rng).unwrap();
            if j >= target {
                let mut enter_target = if j == target { Some(tau_min) } else { None };
                // times[i-1] is the i-th largest: the merge i -> i-1.
                for i in (2..=k0).rev() {
                    let tau = times[(i - 1) as usize];
                    let drop_p = (j * (j - 1)) as f64 / (i * (i - 1)) as f64;
                    if rng.random::<f64>() < drop_p {
                        j -= 1;
                        if j == target {
                            enter_target = Some(tau);
                        } else if j + 1 == target {
                            w = tau - enter_target.expect("chain passes through target");
                            break;
                        }
                    }
                }
            }
        }
        sum += w;
        sumsq += w * w;
    }
    let nf = reps as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}

fn check_mean_mc(seed: u64) -> CheckReport {
    let (target, n, x, alpha) = (2u64, 4u64, 1.0, 1.0);
    let analytic = mean_inter_coalescent_sample(target, n, x, alpha).unwrap();
    let mut rng = SeededSource::new(seed, 400).rng();
    let (mc, se) = mc_sample_waiting_time(target, n, x, alpha, 0.01, 100_000, &mut rng);
    report(
        "corollary6.1-mean-mc",
        "mean W_2 in a sample of 4 at (x=1, alpha=1): closed form vs NHPP + \
         composition subsampling Monte Carlo, 1e5 runs; |diff| in standard errors",
        (mc - analytic).abs() / se,
        3.0,
        Direction::Below,
    )
}

// ---------------------------------------------------------------------------
// Limit consistency.

fn check_bd_limit(seed: u64) -> CheckReport {
    // Scaled BD at s = 1e-3 vs the exact Feller transition sampler.
    let (s, alpha, x0, t) = (1e-3f64, 0.5, 0.25, 0.5);
    let m0 = (2.0 * x0 / s).round() as u64;
    let rates = bd_rates(s, alpha).unwrap();
    let params = ModelParams::new(alpha, x0).unwrap();

    let mut rng = SeededSource::new(seed, 500).rng();
    let bd_reps = 600usize;
    let mut bd = Vec::with_capacity(bd_reps);
    for _ in 0..bd_reps {
        let path = simulate_bd(m0, &rates, t - s, &mut rng).unwrap();
        bd.push(0.5 * s * path.final_count() as f64);
    }

    let mut rng2 = SeededSource::new(seed, 501).rng();
    let feller_reps = 100_000usize;
    let mut feller = Vec::with_capacity(feller_reps);
    for _ in 0..feller_reps {
        feller.push(sample_feller_transition(t, &params, &mut rng2).unwrap());
    }

    let (m1, v1, sem1, sev1) = moments(&bd);
    let (m2, v2, sem2, sev2) = moments(&feller);
    let z_mean = (m1 - m2).abs() / (sem1 * sem1 + sem2 * sem2).sqrt();
    let z_var = (v1 - v2).abs() / (sev1 * sev1 + sev2 * sev2).sqrt();
    report(
        "bd-limit-moments",
        "half-s-scaled BD population at horizon t-s vs exact Feller sampler \
         (s=1e-3, alpha=0.5, x0=0.25, t=0.5): max z-score of mean and variance",
        z_mean.max(z_var),
        3.0,
        Direction::Below,
    )
}

/// Mean, variance, and their standard errors (variance SE via the fourth
/// central moment).
fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    let se_mean = (m2 / n).sqrt();
    let se_var = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    (mean, m2, se_mean, se_var)
}

fn check_bgw_limit(seed: u64) -> CheckReport {
    // Near-critical subcritical BGW at y0 = 2000 vs the diffusion limit.
    let y0 = 2000u64;
    let target_alpha = -0.5;
    // Poisson offspring: sigma^2 = lambda; solve the fixed point once.
    let mut lambda = (target_alpha / y0 as f64).exp();
    for _ in 0..20 {
        lambda = (target_alpha * lambda / y0 as f64).exp();
    }
    let scale = BgwScale::new(y0, lambda, lambda, y0).unwrap();
    let params = scale.to_model_params();
    let generations = scale.generations_for(1.0);
    let t_actual = scale.scaled_time(generations);

    let reps = 4000usize;
    let mut rng = SeededSource::new(seed, 600).rng();
    let mut extinct = 0u64;
    let mut xs = Vec::with_capacity(reps);
    for _ in 0..reps {
        let path = simulate_bgw(&scale, OffspringLaw::Poisson, generations, u64::MAX, &mut rng)
            .unwrap();
        let last = *path.last().unwrap();
        if last == 0 {
            extinct += 1;
        }
        xs.push(last as f64 / y0 as f64);
    }

    let atom = (-params.x0 * model::mu(t_actual, params.alpha).unwrap()).exp();
    let frac = extinct as f64 / reps as f64;
    let se_frac = (frac * (1.0 - frac) / reps as f64).sqrt();
    let allowance = 10.0 / y0 as f64;
    let ratio_ext = (frac - atom).abs() / (3.0 * se_frac + allowance);

    let (mean, _, se_mean, _) = moments(&xs);
    let expect_mean = params.x0 * (params.alpha * t_actual).exp();
    let ratio_mean = (mean - expect_mean).abs() / (3.0 * se_mean + allowance);
    report(
        "bgw-limit",
        "BGW at y0=2000 (Poisson offspring, alpha=-0.5, t=1): extinction \
         fraction vs analytic atom and scaled mean vs x0 e^{alpha t}, \
         each within 3 SE + 10/y0; max ratio",
        ratio_ext.max(ratio_mean),
        1.0,
        Direction::Below,
    )
}

fn check_yaglom(seed: u64) -> CheckReport {
    // Critical diffusion at large t: X(t)/t conditioned on survival is
    // approximately Exp(2).
    let t = 200.0;
    let params = ModelParams::new(0.0, 1.0).unwrap();
    let mut rng = SeededSource::new(seed, 700).rng();
    let want = 100_000usize;
    let mut kept = Vec::with_capacity(want);
    let mut guard = 0u64;
    while kept.len() < want {
        guard += 1;
        if guard > 200_000_000 {
            break;
        }
        let x = sample_feller_transition(t, &params, &mut rng).unwrap();
        if x > 0.0 {
            kept.push(x / t);
        }
    }
    let d = ks_distance(|w| -(-2.0 * w).exp_m1(), &kept).unwrap();
    report(
        "yaglom-critical",
        "critical X(t)/t conditioned on survival vs Exp(2) at t=200, \
         1e5 conditioned draws; KS distance",
        d,
        0.02,
        Direction::Below,
    )
}

fn check_conditional_bd(seed: u64) -> CheckReport {
    // (M(u) | M(u) > 0) ~ ShiftedGeom(lambda_hat * B(u)) for a single
    // founder.
    let (s, alpha, u) = (0.5, 1.0, 1.0);
    let rates = bd_rates(s, alpha).unwrap();
    let diff = rates.lambda_hat - rates.mu_hat;
    let e = (diff * u).exp();
    let b_u = (1.0 - e) / (rates.mu_hat - rates.lambda_hat * e);
    let q = rates.lambda_hat * b_u;

    // Geometric table on {1, 2, ...} truncated at a 1e-12 tail.
    let len = ((1e-12_f64).ln() / q.ln()).ceil() as usize;
    let probs: Vec<f64> = (0..len).map(|m| (1.0 - q) * q.powi(m as i32)).collect();
    let table = DiscretePmf {
        support_start: 1,
        probabilities: probs,
        total_mass: 1.0,
        truncation_tail_bound: q.powi(len as i32),
    };

    let mut rng = SeededSource::new(seed, 800).rng();
    let mut survivors = Vec::new();
    for _ in 0..100_000 {
        let m = simulate_bd(1, &rates, u, &mut rng).unwrap().final_count();
        if m > 0 {
            survivors.push(m);
        }
    }
    let rep = gof_chi_square(&table, &survivors).unwrap();
    report(
        "conditional-bd-geometric",
        "single-founder BD conditioned on survival vs ShiftedGeom(lambda_hat \
         B(u)) at (s=0.5, alpha=1, u=1), 1e5 runs; chi-square p",
        rep.p_value,
        1e-3,
        Direction::Above,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filtering_selects_by_substring() {
        let ids: Vec<String> = run_matching(1, Some("rho-tau"))
            .into_iter()
            .map(|r| r.id)
            .collect();
        assert_eq!(ids, vec!["rho-tau-round-trip".to_string()]);
    }

    #[test]
    fn deterministic_reports() {
        let a = run_matching(7, Some("rate-s-independence"));
        let b = run_matching(7, Some("rate-s-independence"));
        assert_eq!(a[0].statistic, b[0].statistic);
        assert_eq!(a[0].passed, b[0].passed);
    }
}
