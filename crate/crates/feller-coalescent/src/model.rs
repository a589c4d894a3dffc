//! Parameters and elementary functions of the Feller diffusion.
//!
//! The diffusion has generator `½ x d²/dx² + α x d/dx` and initial condition
//! `X(0) = x0`.  Everything in this module is a closed form: the transition
//! density (a Poisson-Gamma mixture with an extinction atom), its Laplace
//! transform, the elementary rate functions `μ(t; α)` and `β(t; α)`, the
//! geometric parameter `p(s, t; α)` of the ancestor-count law, and the scale
//! maps connecting the diffusion to a discrete branching process.
//!
//! Every formula with a removable singularity at `α = 0` gets an explicit
//! series branch used when `|α t| < 1e-6`, so the functions are continuous
//! (to double precision) across criticality.

use crate::error::{domain, Result};
use crate::special;

/// Threshold on `|α t|` below which the second-order series branches are used.
pub(crate) const ALPHA_T_SMALL: f64 = 1e-6;

/// Tail mass threshold for truncating the Poisson mixture of the transition
/// density.
const DENSITY_TAIL: f64 = 1e-14;

/// Drift parameter and initial condition of a Feller diffusion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    /// Drift per unit scaled time; any sign.
    pub alpha: f64,
    /// Initial scaled population, `x0 >= 0`.
    pub x0: f64,
}

/// Criticality class of the diffusion, decided by the sign of `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl ModelParams {
    pub fn new(alpha: f64, x0: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(domain("alpha must be finite"));
        }
        if !(x0 >= 0.0) || !x0.is_finite() {
            return Err(domain("x0 must be finite and nonnegative"));
        }
        Ok(Self { alpha, x0 })
    }

    pub fn criticality(&self) -> Criticality {
        if self.alpha < 0.0 {
            Criticality::Subcritical
        } else if self.alpha > 0.0 {
            Criticality::Supercritical
        } else {
            Criticality::Critical
        }
    }
}

/// Observation time `t` and lookback `s`, with `0 < s <= t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    t: f64,
    s: f64,
}

impl TimeWindow {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain("t must be positive and finite"));
        }
        if !(s > 0.0) || !(s <= t) {
            return Err(domain("lookback s must satisfy 0 < s <= t"));
        }
        Ok(Self { t, s })
    }

    /// Time since initiation of the process.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Lookback from `t`; ancestors are counted at time `t - s`.
    pub fn s(&self) -> f64 {
        self.s
    }
}

/// Scale data of a discrete branching process underlying the diffusion:
/// initial total population `y0`, mean `λ` and variance `σ²` of the offspring
/// number per parent per generation, and the tracked subpopulation `m0`.
///
/// The diffusion limit identifies `t = σ² i / y0`, `X(t) = M(i)/y0`, and
/// keeps `α = y0 log λ / σ²` and `x0 = m0/y0` fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgwScale {
    y0: u64,
    lambda_offspring: f64,
    sigma2: f64,
    m0: u64,
}

impl BgwScale {
    pub fn new(y0: u64, lambda_offspring: f64, sigma2: f64, m0: u64) -> Result<Self> {
        if y0 == 0 {
            return Err(domain("y0 must be a positive integer"));
        }
        if !(lambda_offspring > 0.0) || !lambda_offspring.is_finite() {
            return Err(domain("offspring mean must be positive and finite"));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(domain("offspring variance must be positive and finite"));
        }
        if m0 == 0 || m0 > y0 {
            return Err(domain("m0 must satisfy 1 <= m0 <= y0"));
        }
        Ok(Self {
            y0,
            lambda_offspring,
            sigma2,
            m0,
        })
    }

    pub fn y0(&self) -> u64 {
        self.y0
    }

    pub fn lambda_offspring(&self) -> f64 {
        self.lambda_offspring
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn m0(&self) -> u64 {
        self.m0
    }

    /// Diffusion parameters `α = y0 log λ / σ²`, `x0 = m0/y0`.
    pub fn to_model_params(&self) -> ModelParams {
        ModelParams {
            alpha: self.y0 as f64 * self.lambda_offspring.ln() / self.sigma2,
            x0: self.m0 as f64 / self.y0 as f64,
        }
    }

    /// Inverse of [`BgwScale::to_model_params`] at a given `(y0, σ²)`:
    /// `λ = exp(α σ²/y0)` and `m0 = round(x0 y0)`.
    pub fn from_model_params(params: &ModelParams, y0: u64, sigma2: f64) -> Result<Self> {
        if y0 == 0 {
            return Err(domain("y0 must be a positive integer"));
        }
        if !(sigma2 > 0.0) {
            return Err(domain("offspring variance must be positive"));
        }
        let lambda = (params.alpha * sigma2 / y0 as f64).exp();
        let m0 = (params.x0 * y0 as f64).round();
        if m0 < 1.0 || m0 > y0 as f64 {
            return Err(domain("x0 * y0 must land in 1..=y0"));
        }
        Self::new(y0, lambda, sigma2, m0 as u64)
    }

    /// Scale `s` of the matching birth-death construction, `½ s = 1/y0`
    /// (equivalently `½ s = log λ / (α σ²)` when `α != 0`).
    pub fn rrp_scale_s(&self) -> f64 {
        2.0 / self.y0 as f64
    }

    /// Number of discrete generations closest to scaled time `t`.
    pub fn generations_for(&self, t: f64) -> u64 {
        (t * self.y0 as f64 / self.sigma2).round() as u64
    }

    /// Scaled time of generation `i`, `t = σ² i / y0`.
    pub fn scaled_time(&self, generation: u64) -> f64 {
        self.sigma2 * generation as f64 / self.y0 as f64
    }
}

/// Scaled population `x = ½ s y` observed from a physical count `y`.
pub fn scaled_from_physical(y: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain("scale s must be positive"));
    }
    Ok(0.5 * s * y)
}

/// Physical population `y = 2x/s` matching a scaled observation `x`.
pub fn physical_from_scaled(x: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain("scale s must be positive"));
    }
    Ok(2.0 * x / s)
}

/// `μ(t; α) = 2α e^{αt}/(e^{αt} - 1)`, with `μ(t; 0) = 2/t`.
///
/// Strictly positive for every real `α` and `t > 0`.
pub fn mu(t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("mu requires t > 0"));
    }
    let u = alpha * t;
    if u.abs() < ALPHA_T_SMALL {
        // 2/t * u/(1 - e^{-u}) = 2/t (1 + u/2 + u²/12 + O(u⁴))
        Ok(2.0 / t * (1.0 + 0.5 * u + u * u / 12.0))
    } else {
        // 2α e^{u}/(e^{u}-1) = 2α + 2α/(e^{u}-1); robust for |u| large, and
        // underflows to +0 (not -0) deep in the subcritical regime.
        Ok(2.0 * alpha + 2.0 * alpha / u.exp_m1())
    }
}

/// `β(t; α) = (e^{αt} - 1)/(2α)`, with `β(t; 0) = t/2`.
///
/// Satisfies `μ(t,α) β(t,α) = e^{αt}`.
pub fn beta(t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("beta requires t > 0"));
    }
    let u = alpha * t;
    if u.abs() < ALPHA_T_SMALL {
        // t/2 * (e^u - 1)/u = t/2 (1 + u/2 + u²/6 + O(u³))
        Ok(0.5 * t * (1.0 + 0.5 * u + u * u / 6.0))
    } else {
        Ok(u.exp_m1() / (2.0 * alpha))
    }
}

/// `1/β(t; α) = 2α/(e^{αt} - 1)`; avoids overflow of `β` for large `αt`.
pub fn inv_beta(t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("inv_beta requires t > 0"));
    }
    let u = alpha * t;
    if u.abs() < ALPHA_T_SMALL {
        // 2/t * u/(e^u - 1) = 2/t (1 - u/2 + u²/12 + O(u⁴))
        Ok(2.0 / t * (1.0 - 0.5 * u + u * u / 12.0))
    } else {
        Ok(2.0 * alpha / u.exp_m1())
    }
}

/// Geometric parameter `p(s, t; α) = (e^{αs} - e^{αt})/(1 - e^{αt})` of the
/// ancestor-count law; `(t - s)/t` in the critical limit.
///
/// Lies in `[0, 1)`, vanishes at `s = t`, and decreases in `s` at fixed `t`.
pub fn geom_p(s: f64, t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("geom_p requires t > 0"));
    }
    if !(s > 0.0) || !(s <= t) {
        return Err(domain("geom_p requires 0 < s <= t"));
    }
    if s == t {
        return Ok(0.0);
    }
    let a = alpha * s;
    let b = alpha * t;
    if b.abs() < ALPHA_T_SMALL {
        // ((t-s)/t)(1 + a/2 + a²/6 - ab/12 + O(u³))
        Ok((t - s) / t * (1.0 + 0.5 * a + a * a / 6.0 - a * b / 12.0))
    } else {
        // 1 - (e^{αs}-1)/(e^{αt}-1), robust against overflow via log form.
        Ok(1.0 - expm1_ratio(a, b))
    }
}

/// `expm1(a)/expm1(b)` for `a`, `b` of the same sign, robust when both
/// overflow `expm1`.
fn expm1_ratio(a: f64, b: f64) -> f64 {
    if a > 700.0 || b > 700.0 {
        (special::ln_expm1(a) - special::ln_expm1(b)).exp()
    } else {
        a.exp_m1() / b.exp_m1()
    }
}

/// Transition density of `X(t)` given `X(0) = x0`, returned as the pair
/// (extinction atom at zero, continuous density at `x`).
///
/// The continuous part is the Poisson-Gamma mixture
/// `Σ_{l>=1} P(l; x0 μ) x^{l-1} e^{-x/β} / (β^l (l-1)!)`, truncated where the
/// Poisson tail drops below `1e-14` (which bounds the neglected density by
/// `1e-14/β`).
pub fn population_density(x: f64, t: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(domain("population_density requires x >= 0"));
    }
    let m = params.x0 * mu(t, params.alpha)?;
    let b = beta(t, params.alpha)?;
    let atom = (-m).exp();
    if params.x0 == 0.0 {
        return Ok((1.0, 0.0));
    }
    if x == 0.0 {
        // Only the l = 1 term is nonzero at x = 0.
        return Ok((atom, m * atom / b));
    }
    // Poisson truncation point: smallest L with P(Pois(m) > L) < DENSITY_TAIL.
    let mut l_max = 1u64;
    {
        let mut pmf = atom;
        let mut cum = pmf;
        while 1.0 - cum >= DENSITY_TAIL && l_max < 100_000 {
            pmf *= m / l_max as f64;
            cum += pmf;
            l_max += 1;
        }
    }
    let ln_m = m.ln();
    let ln_x = x.ln();
    let ln_b = b.ln();
    let mut density = 0.0;
    for l in 1..=l_max {
        let lf = l as f64;
        // log of P(l; m) * Gamma_{l, β} density at x
        let ln_term = -m + lf * ln_m - special::ln_gamma(lf + 1.0)
            + (lf - 1.0) * ln_x
            - x / b
            - lf * ln_b
            - special::ln_gamma(lf);
        density += ln_term.exp();
    }
    Ok((atom, density))
}

/// Laplace transform `E[e^{-φ X(t)}] = exp{-φ x0 μ β/(1 + φ β)}`.
///
/// Equals 1 at `φ = 0`, decreases in `φ`, and tends to the extinction atom
/// `exp(-x0 μ)` as `φ -> ∞`.
pub fn laplace_transform(phi: f64, t: f64, params: &ModelParams) -> Result<f64> {
    if !(phi >= 0.0) {
        return Err(domain("laplace_transform requires phi >= 0"));
    }
    // φ μ β/(1+φβ) = φ μ / (1/β + φ); 1/β avoids overflow of β.
    let m = mu(t, params.alpha)?;
    let ib = inv_beta(t, params.alpha)?;
    Ok((-params.x0 * phi * m / (ib + phi)).exp())
}

/// Probability that the diffusion eventually dies out: `e^{-2αx0}` when
/// `α > 0`, and 1 in the critical and subcritical cases.
pub fn eventual_extinction_prob(params: &ModelParams) -> f64 {
    if params.alpha > 0.0 {
        (-2.0 * params.alpha * params.x0).exp()
    } else {
        1.0
    }
}
