//! Reconstructed-process machinery for the supercritical diffusion.
//!
//! The coalescent tree of the diffusion observed at time `t` is an
//! inhomogeneous pure-birth process with rate `α/(1 - e^{-α(t-u)})`, the
//! `s -> 0` limit of reconstructed linear birth-death processes whose rates
//! `λ̂(s), μ̂(s)` blow up while their difference stays `α`.  Running the
//! supercritical tree backwards under a uniform prior on the initiation time
//! gives a reversed reconstructed process: coalescence times form a
//! non-homogeneous Poisson process with cumulative intensity `x/β(τ)`, and a
//! rate-1 pure-death process in the rescaled time `ρ_s(τ)` generates whole
//! trees.
//!
//! Conventions: the paper-form ancestor pmf at lookback `τ` sums to
//! `1 - exp(-x/β(τ))` over `j >= 1`.  The deficit corresponds to "every
//! coalescence is more recent than `τ`" and is reported, never silently
//! renormalized; tree ancestor counts are `1 + #{coalescence times > τ}`.

use crate::error::{domain, Result};
use crate::model;
use crate::quad::{integrate, QuadratureSpec};
use crate::sim::SimRng;
use crate::special;
use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Birth and death rates of the linear BD process whose reconstructed
/// process generates the diffusion ancestry at scale `s`:
/// `λ̂(s) = α/(1 - e^{-αs})`, `μ̂(s) = λ̂(s) - α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdRates {
    pub lambda_hat: f64,
    pub mu_hat: f64,
    /// Scale parameter the rates were built from.
    pub s: f64,
}

/// `α/(1 - e^{-αΔ})`, the recurring rate shape, with its `α = 0` limit `1/Δ`.
fn rate_kernel(delta: f64, alpha: f64) -> f64 {
    let u = alpha * delta;
    if u.abs() < model::ALPHA_T_SMALL {
        (1.0 + 0.5 * u + u * u / 12.0) / delta
    } else {
        alpha / -(-u).exp_m1()
    }
}

/// Rates matched so that the BD process conditioned on survival reproduces
/// the geometric family-size law of the diffusion at lookback `s`.
pub fn bd_rates(s: f64, alpha: f64) -> Result<BdRates> {
    if !(s > 0.0) {
        return Err(domain("bd_rates requires s > 0"));
    }
    let lambda_hat = rate_kernel(s, alpha);
    Ok(BdRates {
        lambda_hat,
        mu_hat: lambda_hat - alpha,
        s,
    })
}

/// Inhomogeneous birth rate of the reconstructed process of a BD process
/// stopped at `horizon`, evaluated at time `u` since initiation:
/// `λ̂ (λ̂-μ̂) / (λ̂ - μ̂ e^{-(λ̂-μ̂)(horizon-u)})`.
pub fn lambda_eff(rates: &BdRates, horizon: f64, u: f64) -> Result<f64> {
    if !(u >= 0.0) || !(u < horizon) {
        return Err(domain("lambda_eff requires 0 <= u < horizon"));
    }
    let diff = rates.lambda_hat - rates.mu_hat;
    if diff == 0.0 {
        // Critical limit of the expression below.
        return Ok(rates.lambda_hat / (1.0 + rates.lambda_hat * (horizon - u)));
    }
    Ok(diff / (1.0 - rates.mu_hat / rates.lambda_hat * (-diff * (horizon - u)).exp()))
}

/// Birth rate of the coalescent tree of the diffusion at time `u` since
/// initiation: `α/(1 - e^{-α(t-u)})`, diverging as `u -> t`.
pub fn lambda_coal(u: f64, t: f64, alpha: f64) -> Result<f64> {
    if !(t > 0.0) || !(u >= 0.0) || !(u < t) {
        return Err(domain("lambda_coal requires 0 <= u < t"));
    }
    Ok(rate_kernel(t - u, alpha))
}

/// Effective death rate of the reversed reconstructed process at lookback
/// `τ`: `α/(1 - e^{-ατ})`.  Only defined for a supercritical diffusion.
pub fn mu_eff(tau: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(domain("mu_eff requires alpha > 0 (supercritical)"));
    }
    if !(tau > 0.0) {
        return Err(domain("mu_eff requires tau > 0"));
    }
    Ok(rate_kernel(tau, alpha))
}

/// Time change onto the rate-1 pure-death clock:
/// `ρ_s(τ) = log[(e^{ατ} - 1)/(e^{αs} - 1)]`, with `ρ_s(s) = 0`.
pub fn rho_of_tau(tau: f64, s: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(domain("rho_of_tau requires alpha > 0"));
    }
    if !(s > 0.0) || !(tau >= s) {
        return Err(domain("rho_of_tau requires tau >= s > 0"));
    }
    Ok(special::ln_expm1(alpha * tau) - special::ln_expm1(alpha * s))
}

/// Inverse time change: `ατ = log(1 + (e^{αs} - 1) e^{ρ})`.
pub fn tau_of_rho(rho: f64, s: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(domain("tau_of_rho requires alpha > 0"));
    }
    if !(s > 0.0) {
        return Err(domain("tau_of_rho requires s > 0"));
    }
    if !(rho >= 0.0) {
        return Err(domain("tau_of_rho requires rho >= 0"));
    }
    Ok(special::ln_1p_exp(special::ln_expm1(alpha * s) + rho) / alpha)
}

/// Paper-form law of the number of ancestors `N(τ)` of the whole population:
/// `P(N(τ) = j) = (x/β(τ))^j exp(-x/β(τ)) / j!` for `j >= 1`.
///
/// Summed over `j >= 1` this leaves the deficit `exp(-x/β(τ))`; see the
/// module docs for the convention used when comparing against simulation.
pub fn ancestors_at_tau_pmf(j: u64, tau: f64, x: f64, alpha: f64) -> Result<f64> {
    if j == 0 {
        return Err(domain("ancestors_at_tau_pmf is stated for j >= 1"));
    }
    let z = intensity_z(tau, x, alpha)?;
    Ok((j as f64 * z.ln() - z - special::ln_factorial(j)).exp())
}

/// Cumulative NHPP intensity `x/β(τ)` of coalescences in `(τ, ∞)`.
pub fn intensity_z(tau: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(domain("supercritical RRP laws require alpha > 0"));
    }
    if !(x > 0.0) {
        return Err(domain("current scaled population x must be positive"));
    }
    if !(tau > 0.0) {
        return Err(domain("lookback tau must be positive"));
    }
    Ok(x * model::inv_beta(tau, alpha)?)
}

/// Rate of the coalescence-time NHPP at lookback `τ`:
/// `d/dτ{-x/β(τ)} = 2xα² e^{ατ}/(e^{ατ} - 1)²`.
pub fn coalescent_rate(tau: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(x > 0.0) || !(tau > 0.0) {
        return Err(domain("coalescent_rate requires tau, x, alpha > 0"));
    }
    let u = alpha * tau;
    if u < model::ALPHA_T_SMALL {
        // 2x/τ² (1 - u²/12 + O(u⁴))
        Ok(2.0 * x / (tau * tau) * (1.0 - u * u / 12.0))
    } else if u > 350.0 {
        let e = (-u).exp();
        Ok(2.0 * x * alpha * alpha * e / ((1.0 - e) * (1.0 - e)))
    } else {
        let em = u.exp_m1();
        Ok(2.0 * x * alpha * alpha * (em + 1.0) / (em * em))
    }
}

/// Which of the two equivalent forms of the sample ancestor pmf to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplePmfForm {
    /// Kummer-M series form.
    Series,
    /// Beta-integral form, evaluated by adaptive quadrature.
    Integral,
}

/// Sample version of the ancestor law: for a sample of `n` from a population
/// of scaled size `x`,
/// `P(N_n(τ) = j) = (n_[j]/(n_(j) j!)) z^j e^{-z} M(j, j+n, z)` with
/// `z = x/β(τ)`, equivalently the Beta-integral on the second line of the
/// same display.
pub fn sample_ancestors_at_tau_pmf(
    j: u64,
    n: u64,
    tau: f64,
    x: f64,
    alpha: f64,
    form: SamplePmfForm,
) -> Result<f64> {
    let z = intensity_z(tau, x, alpha)?;
    sample_pmf_at_z(j, n, z, form)
}

pub(crate) fn sample_pmf_at_z(j: u64, n: u64, z: f64, form: SamplePmfForm) -> Result<f64> {
    if n == 0 || j == 0 || j > n {
        return Err(domain("sample ancestor pmf requires 1 <= j <= n"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let jf = j as f64;
    let nf = n as f64;
    match form {
        SamplePmfForm::Series => {
            let ln = special::log_falling_factorial(n, j)?
                - special::log_rising_factorial(n, j)?
                - special::ln_factorial(j)
                + jf * z.ln()
                - z
                + special::ln_kummer_m(jf, jf + nf, z)?;
            Ok(ln.exp())
        }
        SamplePmfForm::Integral => {
            let spec = QuadratureSpec::with_tols(1e-14, 1e-11).singular_at(false, true);
            let integral = integrate(
                |v| (-(1.0 - v) * z).exp() * v.powf(jf - 1.0) * (1.0 - v).powf(nf - 1.0),
                0.0,
                1.0,
                &spec,
            )?;
            let coef =
                (special::ln_binomial(n, j) - special::ln_gamma(jf) + jf * z.ln()).exp();
            Ok(coef * integral)
        }
    }
}

/// Mean inter-coalescent time `E[W_j]` in a sample of `n`, `2 <= j <= n`,
/// by the closed double integral
/// `2(2α)^{j-1} x^j/(j-1)! C(n,j) ∫_0^1 v^{j-1}(1-v)^{n-1}
///  ∫_0^∞ u^{j-1}/(1+u) e^{-2αx(1-v)u} du dv`.
///
/// The inner integral is evaluated after the substitution `u = y/c`
/// (`c = 2αx(1-v)`), which folds the `c -> 0` blow-up at `v -> 1` into the
/// `(1-v)` powers analytically and leaves smooth quadrature everywhere.
pub fn mean_inter_coalescent_sample(j: u64, n: u64, x: f64, alpha: f64) -> Result<f64> {
    if j < 2 || j > n {
        return Err(domain("mean_inter_coalescent_sample requires 2 <= j <= n"));
    }
    if !(x > 0.0) || !(alpha > 0.0) {
        return Err(domain("mean_inter_coalescent_sample requires x > 0, alpha > 0"));
    }
    let jf = j as f64;
    let nf = n as f64;
    let two_ax = 2.0 * alpha * x;
    let inner_spec = QuadratureSpec::with_tols(1e-12, 1e-9).singular_at(true, false);
    let outer_spec = QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-8,
        max_subdivisions: 2000,
        singular_endpoints: (false, true),
    };
    let outer = integrate(
        |v| {
            let c = two_ax * (1.0 - v);
            let inner = integrate(
                |y| y.powf(jf - 1.0) * (-y).exp() / (y + c),
                0.0,
                f64::INFINITY,
                &inner_spec,
            )
            .unwrap_or(f64::NAN);
            v.powf(jf - 1.0) * (1.0 - v).powf(nf - jf) * inner
        },
        0.0,
        1.0,
        &outer_spec,
    )?;
    let coef = (2.0 * x) * (special::ln_binomial(n, j) - special::ln_gamma(jf)).exp();
    Ok(coef * outer)
}

/// The same mean via the defining route `E[W_j] = ∫_0^∞ P(N_n(τ) = j) dτ`,
/// using the series form of the pmf.
pub fn mean_inter_coalescent_sample_by_tau(j: u64, n: u64, x: f64, alpha: f64) -> Result<f64> {
    if j < 2 || j > n {
        return Err(domain("mean_inter_coalescent_sample_by_tau requires 2 <= j <= n"));
    }
    if !(x > 0.0) || !(alpha > 0.0) {
        return Err(domain(
            "mean_inter_coalescent_sample_by_tau requires x > 0, alpha > 0",
        ));
    }
    let spec = QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-8,
        max_subdivisions: 4000,
        singular_endpoints: (true, false),
    };
    integrate(
        |tau| {
            let z = x * model::inv_beta(tau, alpha).unwrap();
            sample_pmf_at_z(j, n, z, SamplePmfForm::Series).unwrap_or(f64::NAN)
        },
        0.0,
        f64::INFINITY,
        &spec,
    )
}

/// One node of a coalescent tree; leaves have no children and height 0,
/// internal nodes carry the lookback time of their coalescence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub height: f64,
    pub children: Option<(usize, usize)>,
}

/// Ultrametric rooted binary tree with coalescence times measured back from
/// the present.  Nodes `0..leaf_count` are the leaves (labels `L1..Ln`);
/// internal nodes follow in merge order, the root last.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentTree {
    pub leaf_count: usize,
    /// Strictly increasing, length `leaf_count - 1`.
    pub coalescence_times: Vec<f64>,
    pub topology: Vec<TreeNode>,
}

impl CoalescentTree {
    pub fn root(&self) -> usize {
        self.topology.len() - 1
    }

    /// Newick serialization: coalescence times become branch lengths, leaves
    /// sit at depth 0, terminating semicolon included.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_newick(self.root(), &mut out);
        out.push(';');
        out
    }

    fn write_newick(&self, node: usize, out: &mut String) {
        match self.topology[node].children {
            None => {
                out.push('L');
                out.push_str(&(node + 1).to_string());
            }
            Some((a, b)) => {
                let h = self.topology[node].height;
                out.push('(');
                self.write_newick(a, out);
                out.push(':');
                out.push_str(&format!("{}", h - self.topology[a].height));
                out.push(',');
                self.write_newick(b, out);
                out.push(':');
                out.push_str(&format!("{}", h - self.topology[b].height));
                out.push(')');
            }
        }
    }

    /// Flat CSV of the merge events: `event_index,j_before,tau`.
    pub fn times_csv(&self) -> String {
        let mut out = String::from("event_index,j_before,tau\n");
        for (i, tau) in self.coalescence_times.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.16e}\n",
                i + 1,
                self.leaf_count - i,
                tau
            ));
        }
        out
    }
}

/// Simulate the reversed reconstructed tree: a rate-1 pure-death process in
/// `ρ`-time from `n_leaves` lineages down to one (holding time Exp(j) while
/// `j` lineages remain, each merge joining a uniformly chosen pair), with
/// event times mapped back through [`tau_of_rho`].
pub fn generate_rrp_tree(
    n_leaves: usize,
    s: f64,
    alpha: f64,
    rng: &mut SimRng,
) -> Result<CoalescentTree> {
    if n_leaves == 0 {
        return Err(domain("generate_rrp_tree requires at least one leaf"));
    }
    if !(s > 0.0) || !(alpha > 0.0) {
        return Err(domain("generate_rrp_tree requires s > 0 and alpha > 0"));
    }
    let mut topology: Vec<TreeNode> = (0..n_leaves)
        .map(|_| TreeNode {
            height: 0.0,
            children: None,
        })
        .collect();
    let mut active: Vec<usize> = (0..n_leaves).collect();
    let mut coalescence_times = Vec::with_capacity(n_leaves.saturating_sub(1));
    let mut rho = 0.0_f64;
    for j in (2..=n_leaves).rev() {
        rho += Exp::new(j as f64).unwrap().sample(rng);
        let tau = tau_of_rho(rho, s, alpha)?;
        let a = active.swap_remove(rng.random_range(0..active.len()));
        let b = active.swap_remove(rng.random_range(0..active.len()));
        topology.push(TreeNode {
            height: tau,
            children: Some((a, b)),
        });
        active.push(topology.len() - 1);
        coalescence_times.push(tau);
    }
    debug_assert!(coalescence_times.windows(2).all(|w| w[0] < w[1]));
    Ok(CoalescentTree {
        leaf_count: n_leaves,
        coalescence_times,
        topology,
    })
}
