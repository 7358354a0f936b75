//! Two-digit masks with the fewest nonzero coefficients for a given order of
//! sum rules, and an exhaustive check that fewer coefficients never suffice.
//!
//! For m = 2 there is a single nonzero dual digit d*, and with v = M^{−T}d*
//! the phase e^{−2πi(k,v)} equals (−1)^{(2v,k)}. Placing the support on a line
//! k_i = s_i·e with (2v, e) = 1 turns the sum rules of order ℓ into the
//! moment system Σ_i (−1)^{s_i} q_i s_i^r = 0, r = 0..ℓ.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{box_points, canonical_digits, DilationMatrix};
use crate::linalg::exact::{rank_i128, rat};
use crate::transition::mask::{Coefficient, Mask};
use crate::transition::sum_rules::sum_rules_order;
use crate::trigpoly::multi_indices;

/// Largest order accepted by [`brute_force_minimality`].
pub const MAX_BRUTE_FORCE_ORDER: usize = 3;
/// Largest box side (hi − lo) accepted by [`brute_force_minimality`].
pub const MAX_BRUTE_FORCE_SIDE: i64 = 6;

/// The data of the moment system for one design.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSystem {
    /// 2v = 2M^{−T}d*, an integer vector.
    pub two_v: Vec<i64>,
    /// Direction e with (2v, e) = 1; support points are s_i·e.
    pub direction: Vec<i64>,
    pub nodes: Vec<i64>,
    /// Normalized solution, Σ q_i = 1.
    pub weights: Vec<BigRational>,
    pub order: usize,
}

fn require_two_digits(m: &DilationMatrix) -> Result<()> {
    if m.m() != 2 {
        return Err(Error::Precondition(format!("|det M| must be 2, got {}", m.m())));
    }
    Ok(())
}

/// 2M^{−T}d* for the nonzero canonical digit d* of Mᵀ.
fn two_v(m: &DilationMatrix) -> Result<Vec<i64>> {
    let dual = canonical_digits(m, true)?;
    let d = dual
        .nonzero()
        .next()
        .ok_or_else(|| Error::Precondition("Mᵀ has no nonzero digit".into()))?;
    let inv_t = m.inverse_exact().transpose();
    let n = m.dim();
    (0..n)
        .map(|i| {
            let s: BigRational = (0..n).map(|j| inv_t.get(i, j) * rat(d[j])).sum::<BigRational>() * rat(2);
            if !s.is_integer() {
                return Err(Error::Precondition("2M^{−T}d* is not integral".into()));
            }
            s.to_integer().to_i64().ok_or(Error::Overflow("2M^{−T}d*"))
        })
        .collect()
}

/// Smallest-norm integer e with (w, e) = 1 in the box of half-width `radius`
/// (ties broken lexicographically).
fn unit_direction(w: &[i64], radius: i64) -> Result<Vec<i64>> {
    let lo = vec![-radius; w.len()];
    let hi = vec![radius; w.len()];
    box_points(&lo, &hi)
        .into_iter()
        .filter(|e| e.iter().zip(w).map(|(a, b)| a * b).sum::<i64>() == 1)
        .min_by(|a, b| {
            let na: i64 = a.iter().map(|x| x * x).sum();
            let nb: i64 = b.iter().map(|x| x * x).sum();
            na.cmp(&nb).then_with(|| a.cmp(b))
        })
        .ok_or(Error::NoDiophantineSolution { target: 1 })
}

/// Solve the moment system for the given nodes.
pub fn moment_system(m: &DilationMatrix, order: usize, nodes: Option<&[i64]>) -> Result<MomentSystem> {
    require_two_digits(m)?;
    let nodes: Vec<i64> = match nodes {
        Some(s) => s.to_vec(),
        None => (0..order as i64 + 2).collect(),
    };
    if nodes.len() != order + 2 {
        return Err(Error::Precondition(format!(
            "order {order} needs {} nodes, got {}",
            order + 2,
            nodes.len()
        )));
    }
    let mut sorted = nodes.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != nodes.len() {
        return Err(Error::Precondition("nodes must be distinct".into()));
    }
    let w = two_v(m)?;
    let direction = unit_direction(&w, 3 * (order as i64 + 2))?;
    // q_i ∝ (−1)^{s_i} / Π_{j≠i} (s_i − s_j): divided-difference weights annihilate s^r for r ≤ ℓ
    let raw: Vec<BigRational> = nodes
        .iter()
        .map(|&s| {
            let den = nodes
                .iter()
                .filter(|&&t| t != s)
                .fold(BigInt::one(), |acc, &t| acc * BigInt::from(s - t));
            let sign = if s.rem_euclid(2) == 0 { 1 } else { -1 };
            BigRational::new(BigInt::from(sign), den)
        })
        .collect();
    let total: BigRational = raw.iter().sum();
    if total.is_zero() {
        return Err(Error::ParityDegenerate);
    }
    let weights = raw.into_iter().map(|q| q / &total).collect();
    Ok(MomentSystem {
        two_v: w,
        direction,
        nodes,
        weights,
        order,
    })
}

/// Mask with exactly ℓ+2 nonzero coefficients satisfying sum rules of order ℓ.
pub fn design_minimal_mask(m: &DilationMatrix, order: usize, nodes: Option<&[i64]>) -> Result<Mask> {
    let sys = moment_system(m, order, nodes)?;
    let entries = sys.nodes.iter().zip(&sys.weights).map(|(&s, q)| {
        let k: Vec<i64> = sys.direction.iter().map(|e| e * s).collect();
        (k, Coefficient::Exact(q * rat(2)))
    });
    let mask = Mask::new(m.dim(), entries)?;
    if mask.len() != order + 2 {
        return Err(Error::ParityDegenerate);
    }
    debug_assert!(sum_rules_order(&mask, m) >= order as i64);
    Ok(mask)
}

/// At least ℓ+2 nonzero coefficients for a two-digit mask with sum rules of order ℓ.
pub fn verify_lower_bound(mask: &Mask, m: &DilationMatrix, order: usize) -> Result<bool> {
    require_two_digits(m)?;
    let have = sum_rules_order(mask, m);
    if have < order as i64 {
        return Err(Error::Precondition(format!(
            "mask satisfies sum rules of order {have} only, below {order}"
        )));
    }
    Ok(mask.len() >= order + 2)
}

/// Exhaustive check on the box [lo, hi]: no support of at most ℓ+1 points
/// carries a mask with Σc = 2 and sum rules of order ℓ.
///
/// A solvable support extends to a solvable support of exactly ℓ+1 points (pad
/// with zero coefficients), so only those are enumerated. Returns false as soon
/// as one is solvable.
pub fn brute_force_minimality(m: &DilationMatrix, order: usize, lo: &[i64], hi: &[i64]) -> Result<bool> {
    require_two_digits(m)?;
    if lo.len() != m.dim() || hi.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: lo.len().min(hi.len()),
        });
    }
    let side = lo.iter().zip(hi).map(|(a, b)| b - a).max().unwrap_or(0);
    if order > MAX_BRUTE_FORCE_ORDER || side > MAX_BRUTE_FORCE_SIDE {
        return Err(Error::BoxTooLarge { order, side });
    }
    let w = two_v(m)?;
    let points = box_points(lo, hi);
    let betas = multi_indices(m.dim(), order);
    // one column per point: the sum-rule rows followed by the Σc row
    let columns: Vec<Vec<i128>> = points
        .iter()
        .map(|k| {
            let sign: i128 = if k.iter().zip(&w).map(|(a, b)| a * b).sum::<i64>().rem_euclid(2) == 0 {
                1
            } else {
                -1
            };
            let mut col: Vec<i128> = betas
                .iter()
                .map(|b| sign * b.iter().zip(k).map(|(&e, &x)| (x as i128).pow(e as u32)).product::<i128>())
                .collect();
            col.push(1);
            col
        })
        .collect();
    let size = (order + 1).min(points.len());
    let rhs_row = betas.len();
    let subsets = combinations(points.len(), size);
    let solvable = subsets.par_iter().map(|subset| -> Result<bool> {
        let rows = columns[0].len();
        let a: Vec<Vec<i128>> = (0..rows).map(|r| subset.iter().map(|&j| columns[j][r]).collect()).collect();
        let ab: Vec<Vec<i128>> = a
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut v = row.clone();
                v.push(if r == rhs_row { 2 } else { 0 });
                v
            })
            .collect();
        Ok(rank_i128(&a)? == rank_i128(&ab)?)
    });
    let found = solvable.collect::<Result<Vec<bool>>>()?;
    Ok(!found.into_iter().any(|x| x))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Σ q_i as a sanity quantity for node choices; zero means the choice is degenerate.
pub fn parity_balance(nodes: &[i64]) -> BigRational {
    nodes
        .iter()
        .map(|&s| {
            let den = nodes
                .iter()
                .filter(|&&t| t != s)
                .fold(BigInt::one(), |acc, &t| acc * BigInt::from(s - t));
            let sign = if s.rem_euclid(2) == 0 { 1 } else { -1 };
            BigRational::new(BigInt::from(sign), den)
        })
        .sum::<BigRational>()
        .abs()
}
