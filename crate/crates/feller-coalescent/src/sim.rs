//! Exact stochastic simulators for every generative object in the model:
//! the linear birth-death process (event-driven), the discrete branching
//! process, the Feller transition, the two-step ancestor-count sampler, the
//! Dirichlet-multinomial subsampler, and the coalescence-time NHPP.
//!
//! Every sampler is a deterministic function of its inputs and a
//! [`SeededSource`]; parallel Monte Carlo should hand each worker a distinct
//! `stream_id`.

use crate::coalescent::DiscretePmf;
use crate::error::{domain, Error, Result};
use crate::model::{self, BgwScale, ModelParams, TimeWindow};
use crate::rrp::BdRates;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};

/// Concrete RNG used by all samplers; counter-based, so seeding is cheap and
/// streams are independent.
pub type SimRng = ChaCha8Rng;

/// Reproducible randomness: identical `(seed, stream_id)` pairs yield
/// identical draw sequences on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SeededSource {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Same seed, different stream; used to fan out parallel replicates.
    pub fn stream(&self, stream_id: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id,
        }
    }
}

/// Trajectory of an event-driven birth-death simulation.
#[derive(Debug, Clone)]
pub struct BdPath {
    /// Event times, starting at 0.
    pub times: Vec<f64>,
    /// Population just after the matching event time.
    pub counts: Vec<u64>,
}

impl BdPath {
    /// Population at time `u` (last event not later than `u`).
    pub fn count_at(&self, u: f64) -> u64 {
        match self.times.partition_point(|&t| t <= u) {
            0 => self.counts[0],
            idx => self.counts[idx - 1],
        }
    }

    pub fn final_count(&self) -> u64 {
        *self.counts.last().unwrap()
    }
}

/// Exact Gillespie simulation of a linear birth-death process from `m0`
/// individuals: in state `n` wait Exp(n(λ̂+μ̂)), then a birth with probability
/// `λ̂/(λ̂+μ̂)`, else a death; absorbed at zero.
pub fn simulate_bd(m0: u64, rates: &BdRates, horizon: f64, rng: &mut SimRng) -> Result<BdPath> {
    if m0 == 0 {
        return Err(domain("simulate_bd requires m0 >= 1"));
    }
    if !(horizon > 0.0) {
        return Err(domain("simulate_bd requires a positive horizon"));
    }
    if !(rates.lambda_hat >= 0.0) || !(rates.mu_hat >= 0.0) {
        return Err(domain("simulate_bd requires nonnegative rates"));
    }
    let total_rate = rates.lambda_hat + rates.mu_hat;
    let mut times = vec![0.0];
    let mut counts = vec![m0];
    let mut t = 0.0_f64;
    let mut n = m0;
    if total_rate == 0.0 {
        return Ok(BdPath { times, counts });
    }
    let birth_prob = rates.lambda_hat / total_rate;
    loop {
        if n == 0 {
            break;
        }
        t += Exp::new(n as f64 * total_rate).unwrap().sample(rng);
        if t > horizon {
            break;
        }
        if rng.random::<f64>() < birth_prob {
            n += 1;
        } else {
            n -= 1;
        }
        times.push(t);
        counts.push(n);
    }
    Ok(BdPath { times, counts })
}

/// Offspring law of the discrete branching process; the mean is taken from
/// the [`BgwScale`], the variance follows from the family
/// (Poisson: `σ² = λ`; geometric on {0,1,...}: `σ² = λ(1+λ)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffspringLaw {
    Poisson,
    Geometric,
}

/// Simulate the tracked subpopulation of a branching process for the given
/// number of generations, returning `M(0..=generations)`.
///
/// Each generation draws the exact law of the offspring sum
/// `Σ_{k<=M(i)} S_k` in one step: Poisson(λ M) for Poisson offspring, and a
/// Gamma-Poisson (negative binomial) mixture for geometric offspring.
/// Exceeding `cap` aborts with a numeric error identifying supercritical
/// blow-up.
pub fn simulate_bgw(
    scale: &BgwScale,
    offspring: OffspringLaw,
    generations: u64,
    cap: u64,
    rng: &mut SimRng,
) -> Result<Vec<u64>> {
    if generations == 0 {
        return Err(domain("simulate_bgw requires generations >= 1"));
    }
    let lambda = scale.lambda_offspring();
    let mut path = Vec::with_capacity(generations as usize + 1);
    let mut m = scale.m0();
    path.push(m);
    for _ in 0..generations {
        if m == 0 {
            path.push(0);
            continue;
        }
        let mf = m as f64;
        let next = match offspring {
            OffspringLaw::Poisson => {
                Poisson::new(lambda * mf).unwrap().sample(rng) as u64
            }
            OffspringLaw::Geometric => {
                // Sum of m geometrics(q) with mean λ = q/(1-q) is negative
                // binomial; draw it as Poisson(Gamma(m, λ)).
                let intensity = Gamma::new(mf, lambda).unwrap().sample(rng);
                if intensity == 0.0 {
                    0
                } else {
                    Poisson::new(intensity).unwrap().sample(rng) as u64
                }
            }
        };
        if next > cap {
            return Err(Error::Numeric {
                message: format!(
                    "BGW population {next} exceeded cap {cap}: supercritical blow-up"
                ),
                estimate: next as f64,
                bound: f64::INFINITY,
            });
        }
        m = next;
        path.push(m);
    }
    Ok(path)
}

/// Exact draw from the Feller transition law at time `t`: a Poisson
/// `L ~ Pois(x0 μ(t; α))` number of founder families, each of independent
/// exponential size with mean `β(t; α)`; zero when `L = 0`.
pub fn sample_feller_transition(t: f64, params: &ModelParams, rng: &mut SimRng) -> Result<f64> {
    let m = params.x0 * model::mu(t, params.alpha)?;
    let b = model::beta(t, params.alpha)?;
    if m == 0.0 {
        return Ok(0.0);
    }
    let founders = Poisson::new(m).unwrap().sample(rng) as u64;
    if founders == 0 {
        return Ok(0.0);
    }
    // Few founders: sum the exponentials directly; otherwise one Gamma draw.
    if founders <= 16 {
        let exp = Exp::new(1.0 / b).unwrap();
        Ok((0..founders).map(|_| exp.sample(rng)).sum())
    } else {
        Ok(Gamma::new(founders as f64, b).unwrap().sample(rng))
    }
}

/// Two-step draw of the population ancestor count `A_∞(s; t)`: sample
/// `X(t-s)` from the Feller transition, then a Poisson number of surviving
/// founder families with mean `X μ(s; α)`.
pub fn sample_population_ancestors(
    window: &TimeWindow,
    params: &ModelParams,
    rng: &mut SimRng,
) -> Result<u64> {
    let dt = window.t() - window.s();
    let x = if dt > 0.0 {
        sample_feller_transition(dt, params, rng)?
    } else {
        params.x0
    };
    if x == 0.0 {
        return Ok(0);
    }
    let mean = x * model::mu(window.s(), params.alpha)?;
    Ok(Poisson::new(mean).unwrap().sample(rng) as u64)
}

/// Number of distinct ancestors of a sample of `n` drawn from a population
/// with `k` ancestral families: a uniform composition of `n` into `k`
/// nonnegative parts (Dirichlet-multinomial with unit weights), counting the
/// nonzero parts.
pub fn sample_subsample_ancestors(n: u64, k: u64, rng: &mut SimRng) -> Result<u64> {
    if n == 0 || k == 0 {
        return Err(domain("sample_subsample_ancestors requires n, k >= 1"));
    }
    if k == 1 {
        return Ok(1);
    }
    // Stars and bars: a uniform (k-1)-subset of {1,..,n+k-1} cuts n stars
    // into k parts; a part is nonzero iff the gap between cuts exceeds 1.
    let slots = n + k - 1;
    let mut pool: Vec<u64> = (1..=slots).collect();
    let need = (k - 1) as usize;
    for i in 0..need {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut bars = pool[..need].to_vec();
    bars.sort_unstable();
    let mut nonzero = 0u64;
    let mut prev = 0u64;
    for &b in &bars {
        if b - prev > 1 {
            nonzero += 1;
        }
        prev = b;
    }
    if slots - prev > 0 {
        nonzero += 1;
    }
    Ok(nonzero)
}

/// Coalescence times of the supercritical reversed tree: an NHPP back in
/// time with cumulative intensity `Λ(τ) = x/β(τ)`, sampled exactly by
/// inversion of a unit-rate Poisson sequence, `τ_i = Λ^{-1}(E_i)`.
///
/// The process has infinitely many points near `τ = 0`, so generation stops
/// at the caller's `tau_min > 0`; times are returned in decreasing order.
pub fn sample_coalescent_times_nhpp(
    x: f64,
    alpha: f64,
    tau_min: f64,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    if !(x > 0.0) || !(alpha > 0.0) {
        return Err(domain("sample_coalescent_times_nhpp requires x > 0, alpha > 0"));
    }
    if !(tau_min > 0.0) {
        return Err(domain(
            "tau_min must be positive: the NHPP has infinitely many points near 0",
        ));
    }
    let exp1 = Exp::new(1.0).unwrap();
    let mut times = Vec::new();
    let mut e = 0.0_f64;
    loop {
        e += exp1.sample(rng);
        // Λ^{-1}(e) = (1/α) log(1 + 2αx/e)
        let tau = (2.0 * alpha * x / e).ln_1p() / alpha;
        if tau <= tau_min {
            break;
        }
        times.push(tau);
    }
    Ok(times)
}

/// Inverse-CDF draw from a tabulated pmf; any truncated tail mass collapses
/// onto the last tabulated value.
pub fn sample_from_pmf(pmf: &DiscretePmf, rng: &mut SimRng) -> u64 {
    let u: f64 = rng.random::<f64>() * pmf.total_mass;
    let mut cum = 0.0;
    for (i, p) in pmf.probabilities.iter().enumerate() {
        cum += p;
        if u < cum {
            return pmf.support_start + i as u64;
        }
    }
    pmf.support_start + pmf.probabilities.len().saturating_sub(1) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent;
    use crate::rrp;

    #[test]
    fn determinism_per_source() {
        let src = SeededSource::new(42, 3);
        let params = ModelParams::new(0.5, 1.0).unwrap();
        let a: Vec<f64> = (0..5)
            .map(|_| sample_feller_transition(1.0, &params, &mut src.rng()).unwrap())
            .collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        // Different stream, different draws.
        let b = sample_feller_transition(1.0, &params, &mut src.stream(4).rng()).unwrap();
        assert_ne!(a[0], b);
    }

    #[test]
    fn bd_zero_rates_constant_path() {
        let rates = BdRates {
            lambda_hat: 0.0,
            mu_hat: 0.0,
            s: 1.0,
        };
        let src = SeededSource::new(1, 0);
        let path = simulate_bd(5, &rates, 10.0, &mut src.rng()).unwrap();
        assert_eq!(path.times, vec![0.0]);
        assert_eq!(path.counts, vec![5]);
        assert_eq!(path.count_at(7.0), 5);
    }

    #[test]
    fn bd_mean_growth() {
        // E[M(u)] = m0 e^{αu}; α = 0.5 via rates with λ̂-μ̂ = α.
        let rates = rrp::bd_rates(0.05, 0.5).unwrap();
        let src = SeededSource::new(11, 0);
        let mut rng = src.rng();
        let reps = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let m = simulate_bd(1, &rates, 1.0, &mut rng).unwrap().final_count() as f64;
            sum += m;
            sumsq += m * m;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let se = (var / reps as f64).sqrt();
        let expect = 0.5_f64.exp();
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean} vs {expect} (se {se})"
        );
    }

    #[test]
    fn bgw_martingale_mean_and_overflow_cap() {
        let scale = BgwScale::new(500, 1.0, 1.0, 200).unwrap();
        let src = SeededSource::new(5, 0);
        let mut rng = src.rng();
        let reps = 4000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let path = simulate_bgw(&scale, OffspringLaw::Poisson, 1, u64::MAX, &mut rng).unwrap();
            let m = path[1] as f64;
            sum += m;
            sumsq += m * m;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        let se = (var / reps as f64).sqrt();
        assert!((mean - 200.0).abs() < 3.0 * se, "mean {mean} (se {se})");
        // Cap trips on blow-up.
        let hot = BgwScale::new(10, 3.0, 3.0, 10).unwrap();
        let res = simulate_bgw(&hot, OffspringLaw::Poisson, 50, 10_000, &mut rng);
        assert!(matches!(res, Err(Error::Numeric { .. })));
    }

    #[test]
    fn bgw_geometric_offspring_mean() {
        let scale = BgwScale::new(1000, 1.5, 1.5 * 2.5, 300).unwrap();
        let src = SeededSource::new(6, 0);
        let mut rng = src.rng();
        let reps = 4000;
        let mut sum = 0.0;
        for _ in 0..reps {
            let path =
                simulate_bgw(&scale, OffspringLaw::Geometric, 1, u64::MAX, &mut rng).unwrap();
            sum += path[1] as f64;
        }
        let mean = sum / reps as f64;
        // Var of the sum is m0 λ(1+λ); allow 4 SE.
        let se = (300.0 * 1.5 * 2.5 / reps as f64).sqrt();
        assert!((mean - 450.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn feller_transition_zero_start_and_moments() {
        let src = SeededSource::new(9, 0);
        let zero = ModelParams::new(0.5, 0.0).unwrap();
        assert_eq!(
            sample_feller_transition(1.0, &zero, &mut src.rng()).unwrap(),
            0.0
        );
        // Mean x0 e^{αt}, variance 2 x0 e^{αt} β(t; α) from the Laplace
        // transform derivatives.
        let params = ModelParams::new(0.5, 1.0).unwrap();
        let mut rng = src.rng();
        let reps = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            let x = sample_feller_transition(1.0, &params, &mut rng).unwrap();
            sum += x;
            sumsq += x * x;
        }
        let n = reps as f64;
        let mean = sum / n;
        let var = sumsq / n - mean * mean;
        let expect_mean = 0.5_f64.exp();
        let expect_var = 2.0 * expect_mean * model::beta(1.0, 0.5).unwrap();
        let se_mean = (var / n).sqrt();
        assert!((mean - expect_mean).abs() < 3.0 * se_mean, "mean {mean}");
        // SE of the variance via the fourth moment would need more passes;
        // 5 relative percent is ~5 SE here.
        assert!(
            (var - expect_var).abs() < 0.05 * expect_var,
            "var {var} vs {expect_var}"
        );
    }

    #[test]
    fn population_ancestors_zero_when_extinct_start() {
        let src = SeededSource::new(2, 0);
        let params = ModelParams::new(0.3, 0.0).unwrap();
        let w = TimeWindow::new(1.0, 0.5).unwrap();
        assert_eq!(
            sample_population_ancestors(&w, &params, &mut src.rng()).unwrap(),
            0
        );
    }

    #[test]
    fn subsample_single_and_pair() {
        let src = SeededSource::new(13, 0);
        let mut rng = src.rng();
        for _ in 0..50 {
            assert_eq!(sample_subsample_ancestors(1, 7, &mut rng).unwrap(), 1);
            assert_eq!(sample_subsample_ancestors(4, 1, &mut rng).unwrap(), 1);
        }
        // (n=2, k=2): P(j=1) = 2/3.
        let reps = 60_000;
        let mut ones = 0u64;
        for _ in 0..reps {
            if sample_subsample_ancestors(2, 2, &mut rng).unwrap() == 1 {
                ones += 1;
            }
        }
        let frac = ones as f64 / reps as f64;
        let se = (2.0 / 3.0 * (1.0 / 3.0) / reps as f64).sqrt();
        assert!((frac - 2.0 / 3.0).abs() < 3.0 * se, "frac {frac}");
    }

    #[test]
    fn subsample_matches_lemma_law() {
        let (n, k) = (5u64, 3u64);
        let src = SeededSource::new(17, 0);
        let mut rng = src.rng();
        let reps = 50_000usize;
        let mut counts = vec![0u64; (n + 1) as usize];
        for _ in 0..reps {
            counts[sample_subsample_ancestors(n, k, &mut rng).unwrap() as usize] += 1;
        }
        for j in 1..=3u64 {
            let expect = coalescent::sample_given_population_pmf(j, n, k).unwrap();
            let frac = counts[j as usize] as f64 / reps as f64;
            let se = (expect * (1.0 - expect) / reps as f64).sqrt();
            assert!(
                (frac - expect).abs() < 4.0 * se,
                "j={j}: {frac} vs {expect}"
            );
        }
    }

    #[test]
    fn nhpp_inversion_round_trip() {
        let (x, alpha) = (1.0, 1.0);
        let src = SeededSource::new(23, 0);
        let times = sample_coalescent_times_nhpp(x, alpha, 0.05, &mut src.rng()).unwrap();
        assert!(times.windows(2).all(|w| w[0] > w[1]));
        // Λ(τ_i) recovers an increasing unit-rate Poisson sequence; check the
        // mapping formula Λ(Λ^{-1}(e)) = e by re-applying Λ.
        for w in times.windows(2) {
            let e0 = x * model::inv_beta(w[0], alpha).unwrap();
            let e1 = x * model::inv_beta(w[1], alpha).unwrap();
            assert!(e1 > e0);
        }
        let redraw = sample_coalescent_times_nhpp(x, alpha, 0.05, &mut src.rng()).unwrap();
        assert_eq!(times, redraw);
        assert!(sample_coalescent_times_nhpp(1.0, 1.0, 0.0, &mut src.rng()).is_err());
    }

    #[test]
    fn nhpp_lambda_round_trip_exact() {
        // Generate the unit-rate sequence manually and invert: Λ(τ_i) = E_i.
        let (x, alpha) = (1.5, 0.8);
        let src = SeededSource::new(29, 0);
        let mut rng = src.rng();
        let exp1 = Exp::new(1.0).unwrap();
        let mut e = 0.0;
        for _ in 0..200 {
            e += exp1.sample(&mut rng);
            let tau = (2.0 * alpha * x / e).ln_1p() / alpha;
            let back = x * model::inv_beta(tau, alpha).unwrap();
            assert!((back - e).abs() <= 1e-12 * e, "{back} vs {e}");
        }
    }

    #[test]
    fn pmf_sampler_hits_support() {
        let pmf = DiscretePmf {
            support_start: 2,
            probabilities: vec![0.25, 0.5, 0.25],
            total_mass: 1.0,
            truncation_tail_bound: 0.0,
        };
        let src = SeededSource::new(31, 0);
        let mut rng = src.rng();
        let mut seen = [0u64; 6];
        for _ in 0..10_000 {
            let v = sample_from_pmf(&pmf, &mut rng);
            assert!((2..=4).contains(&v));
            seen[v as usize] += 1;
        }
        assert!(seen[3] > seen[2] && seen[3] > seen[4]);
    }
}
