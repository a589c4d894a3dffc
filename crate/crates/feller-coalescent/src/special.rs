//! Special functions shared by the analytic modules: log-Gamma combinatorics,
//! Kummer's confluent hypergeometric `M`, the Pólya-Aeppli probability mass
//! function, and the regularized incomplete gamma function.
//!
//! All discrete probabilities are assembled in log space; every sum here has
//! positive terms, so there is no cancellation.

use crate::error::{domain, Error, Result};

/// Series iteration cap for Kummer's M.
const KUMMER_MAX_TERMS: usize = 100_000;

/// Lanczos coefficients, g = 7, n = 9.
const LANCZOS: [f64; 8] = [
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_74;

/// Natural log of the Gamma function for `x > 0` (Lanczos approximation,
/// ~15 significant digits).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires x > 0");
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln()
            - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, c) in LANCZOS.iter().enumerate() {
        acc += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    LN_SQRT_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else if n <= 20 {
        let mut p: u64 = 1;
        for i in 2..=n {
            p *= i;
        }
        (p as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)`; zero-probability cases (`k > n`) return `-inf`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Log of the rising factorial `k_(n) = k(k+1)···(k+n-1)`.
///
/// Small arguments use the exact integer product; large ones log-Gamma
/// differences.
pub fn log_rising_factorial(k: u64, n: u64) -> Result<f64> {
    if k == 0 {
        return Err(domain("rising factorial requires k >= 1"));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if k + n <= 21 {
        let mut p: u128 = 1;
        for i in 0..n {
            p *= (k + i) as u128;
        }
        Ok((p as f64).ln())
    } else {
        Ok(ln_gamma((k + n) as f64) - ln_gamma(k as f64))
    }
}

/// Log of the falling factorial `n_[j] = n(n-1)···(n-j+1)` for `j <= n`.
pub fn log_falling_factorial(n: u64, j: u64) -> Result<f64> {
    if j > n {
        return Err(domain("falling factorial requires j <= n"));
    }
    Ok(ln_factorial(n) - ln_factorial(n - j))
}

/// `ln(e^x - 1)` for `x > 0`, robust against overflow of `e^x`.
pub fn ln_expm1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x > 36.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `ln(1 + e^x)` for any real `x` (softplus), overflow-safe.
pub fn ln_1p_exp(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Kummer's confluent hypergeometric function
/// `M(a, b, z) = Σ_k (a)_k/(b)_k · z^k/k!` for `a, b > 0`, `z >= 0`.
///
/// Direct series; all terms are positive here so the sum is stable.  Relative
/// accuracy 1e-12 or better, capped at 10^5 terms.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    ln_kummer_m(a, b, z).map(f64::exp)
}

/// `ln M(a, b, z)`; avoids overflow of `M` itself for large `z`.
pub fn ln_kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(domain("kummer_m requires a > 0 and b > 0"));
    }
    if !(z >= 0.0) {
        return Err(domain("kummer_m requires z >= 0"));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut ln_scale = 0.0_f64;
    for k in 0..KUMMER_MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        if sum > 1e280 {
            // Rescale to dodge overflow; the result is carried in log space.
            sum *= 1e-280;
            term *= 1e-280;
            ln_scale += 280.0 * std::f64::consts::LN_10;
        }
        // Terms decay at least geometrically once k > z, so a 1e-16 relative
        // cutoff leaves a tail far below the stated 1e-12 tolerance.
        if kf + 1.0 > z && term <= sum * 1e-16 {
            return Ok(sum.ln() + ln_scale);
        }
    }
    Err(Error::Numeric {
        message: format!("kummer_m series did not converge for a={a}, b={b}, z={z}"),
        estimate: sum.ln() + ln_scale,
        bound: term / sum,
    })
}

/// Pólya-Aeppli probability mass function at `k`, parameters `ν > 0` and
/// `p ∈ [0, 1)`: the law of a Poisson(ν) sum of shifted-geometric(p)
/// variables.
///
/// `P(Q=0) = e^{-ν}` and, for `k >= 1`,
/// `P(Q=k) = e^{-ν} Σ_{j=1}^{k} C(k-1, j-1) (ν(1-p))^j p^{k-j} / j!`.
pub fn polya_aeppli_pmf(k: u64, nu: f64, p: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(domain("polya_aeppli_pmf requires nu > 0"));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(domain("polya_aeppli_pmf requires p in [0, 1)"));
    }
    if k == 0 {
        return Ok((-nu).exp());
    }
    if p == 0.0 {
        // Shifted geometric degenerates to the constant 1; Q is Poisson(ν).
        return Ok((-nu + k as f64 * nu.ln() - ln_factorial(k)).exp());
    }
    let ln_np = (nu * (1.0 - p)).ln();
    let ln_p = p.ln();
    let mut sum = 0.0;
    for j in 1..=k {
        let ln_term = ln_binomial(k - 1, j - 1) + j as f64 * ln_np + (k - j) as f64 * ln_p
            - ln_factorial(j);
        sum += ln_term.exp();
    }
    Ok((-nu).exp() * sum)
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..1000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // Modified Lentz continued fraction.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-13);
        // Against exact factorials.
        let mut f = 1.0_f64;
        for n in 2..=20u64 {
            f *= n as f64;
            assert!(
                (ln_gamma(n as f64 + 1.0) - f.ln()).abs() < 1e-12 * f.ln().max(1.0),
                "ln_gamma off at {n}"
            );
        }
    }

    #[test]
    fn rising_factorial_small_and_large() {
        // Empty product.
        assert_eq!(log_rising_factorial(3, 0).unwrap(), 0.0);
        // 2_(3) = 2*3*4 = 24, direct product oracle.
        assert!((log_rising_factorial(2, 3).unwrap() - 24.0_f64.ln()).abs() < 1e-14);
        // k=50, n=100 against a sum-of-logs product oracle.
        let oracle: f64 = (0..100u64).map(|i| ((50 + i) as f64).ln()).sum();
        let val = log_rising_factorial(50, 100).unwrap();
        assert!((val - oracle).abs() / oracle < 1e-12);
        assert!(log_rising_factorial(0, 3).is_err());
    }

    #[test]
    fn falling_factorial_values() {
        // 5_[2] = 20
        assert!((log_falling_factorial(5, 2).unwrap() - 20.0_f64.ln()).abs() < 1e-13);
        assert_eq!(log_falling_factorial(5, 0).unwrap(), 0.0);
        assert!(log_falling_factorial(3, 4).is_err());
    }

    #[test]
    fn kummer_at_zero_is_one() {
        for (a, b) in [(1.0, 2.0), (3.0, 7.0), (0.5, 0.7)] {
            assert_eq!(kummer_m(a, b, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn kummer_m_1_2_closed_form() {
        // M(1, 2, z) = (e^z - 1)/z.
        for z in [0.1, 1.0, 5.0] {
            let expect = z.exp_m1() / z;
            let got = kummer_m(1.0, 2.0, z).unwrap();
            assert!((got - expect).abs() / expect < 1e-12, "z={z}");
        }
    }

    #[test]
    fn kummer_matches_brute_force_series() {
        // Independent high-precision summation, 200 terms.
        let (a, b, z) = (2.0, 5.0, 3.0);
        let mut term = 1.0_f64;
        let mut oracle = 1.0_f64;
        for k in 0..200 {
            let kf = k as f64;
            term *= (a + kf) / (b + kf) * z / (kf + 1.0);
            oracle += term;
        }
        let got = kummer_m(a, b, z).unwrap();
        assert!((got - oracle).abs() / oracle < 1e-13);
    }

    #[test]
    fn kummer_increasing_in_z() {
        let mut last = 1.0;
        for i in 1..=30 {
            let v = kummer_m(2.0, 6.0, 0.3 * i as f64).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn kummer_derivative_contiguous_property() {
        // d/dz M(a,b,z) = (a/b) M(a+1,b+1,z), by central finite difference.
        for (a, b, z) in [(1.0, 3.0, 0.8), (2.0, 7.0, 2.5), (3.0, 4.0, 1.2)] {
            let h = 1e-5;
            let d = (kummer_m(a, b, z + h).unwrap() - kummer_m(a, b, z - h).unwrap()) / (2.0 * h);
            let rhs = a / b * kummer_m(a + 1.0, b + 1.0, z).unwrap();
            assert!((d - rhs).abs() < 1e-6 * rhs.max(1.0), "a={a} b={b} z={z}");
        }
    }

    #[test]
    fn kummer_large_z_log_form() {
        // M(a,b,z) ~ Γ(b)/Γ(a) e^z z^{a-b} for large z.
        let (a, b, z) = (2.0, 6.0, 800.0);
        let ln_m = ln_kummer_m(a, b, z).unwrap();
        let asymptotic = ln_gamma(b) - ln_gamma(a) + z + (a - b) * z.ln();
        assert!((ln_m - asymptotic).abs() < 0.05 * asymptotic.abs());
    }

    #[test]
    fn polya_aeppli_basics() {
        // P(Q=0) = e^{-ν}.
        assert!((polya_aeppli_pmf(0, 1.5, 0.4).unwrap() - (-1.5_f64).exp()).abs() < 1e-15);
        // p = 0 degenerates to Poisson.
        for k in 0..10u64 {
            let pois = (-2.0 + k as f64 * 2.0_f64.ln() - ln_factorial(k)).exp();
            assert!((polya_aeppli_pmf(k, 2.0, 0.0).unwrap() - pois).abs() < 1e-14);
        }
        assert!(polya_aeppli_pmf(1, 1.0, 1.0).is_err());
        assert!(polya_aeppli_pmf(1, 1.0, -0.1).is_err());
        assert!(polya_aeppli_pmf(1, 0.0, 0.5).is_err());
    }

    #[test]
    fn polya_aeppli_mass_and_mean() {
        // Σ pmf = 1 and Σ k pmf = ν/(1-p) over a 1e-12 quantile cutoff.
        for (nu, p) in [(0.5, 0.1), (2.0, 0.5), (1.5, 0.4), (5.0, 0.9)] {
            let mut mass = 0.0;
            let mut mean = 0.0;
            let mut k = 0u64;
            while mass < 1.0 - 1e-12 {
                let f = polya_aeppli_pmf(k, nu, p).unwrap();
                mass += f;
                mean += k as f64 * f;
                k += 1;
                assert!(k < 100_000);
            }
            assert!((mass - 1.0).abs() < 1e-10, "mass {mass} at ({nu},{p})");
            let expect = nu / (1.0 - p);
            assert!(
                (mean - expect).abs() < 1e-8 * expect,
                "mean {mean} vs {expect} at ({nu},{p})"
            );
        }
    }

    #[test]
    fn gamma_q_integer_poisson_tail() {
        // Q(n, x) = P(Pois(x) <= n-1).
        for (n, x) in [(1u64, 0.5), (3, 2.0), (10, 7.5), (40, 30.0)] {
            let mut cum = 0.0;
            let mut pmf = (-x).exp();
            for j in 0..n {
                if j > 0 {
                    pmf *= x / j as f64;
                }
                cum += pmf;
            }
            let q = gamma_q(n as f64, x);
            assert!((q - cum).abs() < 1e-12, "n={n} x={x}: {q} vs {cum}");
        }
        // Q(1, x) = e^{-x}.
        assert!((gamma_q(1.0, 3.0) - (-3.0_f64).exp()).abs() < 1e-14);
        assert!((gamma_p(2.0, 1.0) + gamma_q(2.0, 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ln_expm1_crossover() {
        for x in [1e-3, 1.0, 30.0, 40.0, 700.0, 710.0] {
            let direct = if x < 700.0 {
                x.exp_m1().ln()
            } else {
                x // e^x - 1 ~ e^x
            };
            assert!((ln_expm1(x) - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }
}
