//! Sum rules: zeros of the mask symbol at the points M^{−T}d*, d* ≠ 0.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::mask::Mask;
use crate::lattice::{canonical_digits, DilationMatrix};
use crate::linalg::exact;
use crate::trigpoly::multi_indices;

/// Highest order examined before giving up.
pub const MAX_SUM_RULE_ORDER: usize = 100;
/// Relative tolerance for a moment to count as zero.
pub const SUM_RULE_TOLERANCE: f64 = 1e-9;

/// Phases (k, M^{−T}d*) mod 1 for every support point, one vector per nonzero d*.
fn phases(mask: &Mask, m: &DilationMatrix) -> Vec<Vec<f64>> {
    let dstar = canonical_digits(m, true).expect("canonical digits of a valid matrix");
    let inv_t = m.inverse_exact().transpose();
    let n = m.dim();
    dstar
        .nonzero()
        .map(|d| {
            let v: Vec<BigRational> = (0..n)
                .map(|i| (0..n).map(|j| inv_t.get(i, j) * exact::rat(d[j])).sum())
                .collect();
            mask.iter()
                .map(|(k, _)| {
                    let s: BigRational = k.iter().zip(&v).map(|(&a, b)| b * BigInt::from(a)).sum();
                    let r = s.numer().mod_floor(s.denom());
                    BigRational::new(r, s.denom().clone()).to_f64().unwrap_or(0.0)
                })
                .collect()
        })
        .collect()
}

/// Largest ℓ such that every moment Σ ĉ_k k^β e^{−2πi(k, M^{−T}d*)}, |β| ≤ ℓ, d* ≠ 0 vanishes;
/// −1 when even the order-0 rule fails.
pub fn sum_rules_order(mask: &Mask, m: &DilationMatrix) -> i64 {
    let total = mask.total().to_f64();
    let coeffs: Vec<(Vec<f64>, f64)> = mask
        .iter()
        .map(|(k, c)| (k.iter().map(|&x| x as f64).collect(), c.to_f64() / total))
        .collect();
    let phase = phases(mask, m);
    let n = m.dim();
    let mut order: i64 = -1;
    for l in 0..=MAX_SUM_RULE_ORDER {
        let betas: Vec<Vec<usize>> = multi_indices(n, l).into_iter().filter(|b| b.iter().sum::<usize>() == l).collect();
        let ok = phase.iter().all(|ph| {
            betas.iter().all(|beta| {
                let (mut re, mut im, mut bound) = (0.0, 0.0, 0.0);
                for ((k, c), &t) in coeffs.iter().zip(ph) {
                    let mono: f64 = beta.iter().zip(k).map(|(&b, &x)| x.powi(b as i32)).product();
                    let (s, co) = (2.0 * PI * t).sin_cos();
                    re += c * mono * co;
                    im -= c * mono * s;
                    let norm = k.iter().map(|x| x * x).sum::<f64>().sqrt();
                    bound += c.abs() * norm.powi(l as i32);
                }
                (re * re + im * im).sqrt() <= SUM_RULE_TOLERANCE * bound
            })
        });
        if !ok {
            break;
        }
        order = l as i64;
    }
    let cosets_ok = coset_sums(mask, m).iter().all(|s| (s - 1.0).abs() <= 1e-9);
    if cosets_ok != (order >= 0) {
        log::warn!("order-0 sum rule and coset sums disagree");
    }
    order
}

/// Sum of c_k over each coset d + Mℤⁿ, in canonical digit order.
pub fn coset_sums(mask: &Mask, m: &DilationMatrix) -> Vec<f64> {
    let digits = canonical_digits(m, false).expect("canonical digits of a valid matrix");
    digits
        .digits()
        .iter()
        .map(|d| {
            mask.iter()
                .filter(|(k, _)| {
                    let diff: Vec<i64> = k.iter().zip(d).map(|(a, b)| a - b).collect();
                    m.in_image(&diff)
                })
                .map(|(_, c)| c.to_f64())
                .sum()
        })
        .collect()
}

/// Exact order-0 check: every coset sum equals 1.
pub fn satisfies_order_zero_exact(mask: &Mask, m: &DilationMatrix) -> Option<bool> {
    if !mask.is_exact() {
        return None;
    }
    let digits = canonical_digits(m, false).ok()?;
    Some(digits.digits().iter().all(|d| {
        let mut s = BigRational::zero();
        for (k, c) in mask.iter() {
            let diff: Vec<i64> = k.iter().zip(d).map(|(a, b)| a - b).collect();
            if m.in_image(&diff) {
                if let super::mask::Coefficient::Exact(r) = c {
                    s += r;
                }
            }
        }
        s == exact::rat(1)
    }))
}
