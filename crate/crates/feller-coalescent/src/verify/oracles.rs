//! Independent oracles backing the verification suite.
//!
//! Each oracle reaches its answer by a route disjoint from the library
//! implementation it is checked against: generating-function inversion on
//! the unit circle, exhaustive lattice enumeration, and exact integer
//! combinatorics.

use num_complex::Complex64;

/// Pólya-Aeppli pmf for `k = 0..=k_max` recovered by inverting the pgf
/// `G(z) = exp(-ν(1-z)/(1-pz))` with a discrete Fourier transform over the
/// unit circle.
///
/// The aliasing error is the tail mass beyond `n_points - k_max`, which is
/// astronomically small for the grid size used here.
pub fn pa_pmf_by_pgf_inversion(nu: f64, p: f64, k_max: usize) -> Vec<f64> {
    let n_points = 4096usize;
    assert!(k_max < n_points / 2);
    let g: Vec<Complex64> = (0..n_points)
        .map(|m| {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / n_points as f64;
            let z = Complex64::new(theta.cos(), theta.sin());
            let one = Complex64::new(1.0, 0.0);
            (-nu * (one - z) / (one - p * z)).exp()
        })
        .collect();
    (0..=k_max)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, gm) in g.iter().enumerate() {
                let theta = -2.0 * std::f64::consts::PI * (k * m % n_points) as f64
                    / n_points as f64;
                acc += gm * Complex64::new(theta.cos(), theta.sin());
            }
            acc.re / n_points as f64
        })
        .collect()
}

/// Exact binomial coefficient.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // Numerator grows stepwise so each division is exact.
        c = c * (n - k + i) as u128 / i as u128;
    }
    c
}

/// Exhaustively enumerate all compositions of `n` into `k` nonnegative parts
/// and tally them by their number of nonzero parts.
///
/// `tally[j]` is the number of lattice points with exactly `j` nonzero
/// coordinates; the total is `C(n+k-1, k-1)`.
pub fn lemma_composition_tally(n: u64, k: u64) -> Vec<u64> {
    let mut tally = vec![0u64; k as usize + 1];
    fn walk(remaining: u64, parts_left: u64, nonzero: u64, tally: &mut [u64]) {
        if parts_left == 1 {
            tally[(nonzero + u64::from(remaining > 0)) as usize] += 1;
            return;
        }
        for v in 0..=remaining {
            walk(remaining - v, parts_left - 1, nonzero + u64::from(v > 0), tally);
        }
    }
    walk(n, k, 0, &mut tally);
    tally
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::polya_aeppli_pmf;

    #[test]
    fn pgf_inversion_matches_poisson_at_p_zero() {
        let nu = 2.0;
        let oracle = pa_pmf_by_pgf_inversion(nu, 0.0, 20);
        let mut pois = (-nu).exp();
        for (k, o) in oracle.iter().enumerate() {
            if k > 0 {
                pois *= nu / k as f64;
            }
            assert!((o - pois).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn pgf_inversion_agrees_with_closed_form_spot() {
        let (nu, p) = (1.5, 0.4);
        let oracle = pa_pmf_by_pgf_inversion(nu, p, 40);
        for (k, o) in oracle.iter().enumerate() {
            let f = polya_aeppli_pmf(k as u64, nu, p).unwrap();
            assert!((o - f).abs() < 1e-10, "k={k}: {o} vs {f}");
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial_u128(23, 11), 1_352_078);
        assert_eq!(binomial_u128(5, 0), 1);
        assert_eq!(binomial_u128(4, 5), 0);
        assert_eq!(binomial_u128(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn composition_tally_small_case() {
        // n=2, k=2: points (2,0),(0,2) have one nonzero, (1,1) has two.
        let tally = lemma_composition_tally(2, 2);
        assert_eq!(tally, vec![0, 2, 1]);
        // Totals match stars and bars.
        let t = lemma_composition_tally(4, 3);
        assert_eq!(t.iter().sum::<u64>() as u128, binomial_u128(6, 2));
    }
}
