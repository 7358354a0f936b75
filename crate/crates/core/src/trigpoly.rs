//! Real even trigonometric polynomials on a support set, zero constraints
//! and the subspaces (faces) they cut out.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::attractor::SupportSet;
use crate::error::{Error, Result};
use crate::linalg::exact::QMat;

/// Default relative singular-value threshold for deciding the rank of a constraint system.
pub const DEFAULT_NULLITY_TOLERANCE: f64 = 1e-10;

/// The folded coordinate system of P_Ω: p_0 followed by one coefficient per pair ±k.
#[derive(Clone, Debug)]
pub struct PolySpace {
    dim: usize,
    support: SupportSet,
    half: Vec<Vec<i64>>,
    fold: HashMap<Vec<i64>, usize>,
}

fn is_canonical(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

fn negate(k: &[i64]) -> Vec<i64> {
    k.iter().map(|x| -x).collect()
}

impl PolySpace {
    pub fn new(support: &SupportSet) -> Result<Arc<Self>> {
        if !support.is_symmetric() {
            return Err(Error::Precondition("support set is not symmetric".into()));
        }
        let n = support.dim();
        let zero = vec![0i64; n];
        if !support.contains(&zero) {
            return Err(Error::Precondition("support set does not contain 0".into()));
        }
        let mut half = vec![zero.clone()];
        half.extend(support.points().iter().filter(|k| is_canonical(k)).cloned());
        let mut fold = HashMap::with_capacity(support.len());
        for (i, k) in half.iter().enumerate() {
            fold.insert(k.clone(), i);
            fold.insert(negate(k), i);
        }
        Ok(Arc::new(PolySpace {
            dim: n,
            support: support.clone(),
            half,
            fold,
        }))
    }

    /// Number of folded coordinates, (1 + |Ω|)/2.
    pub fn len(&self) -> usize {
        self.half.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half.is_empty()
    }

    /// Lattice dimension n.
    pub fn lattice_dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// Representatives: 0 first, then each canonical k (first nonzero coordinate positive).
    pub fn representatives(&self) -> &[Vec<i64>] {
        &self.half
    }

    /// Folded coordinate of k or −k.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        self.fold.get(k).copied()
    }

    /// p(ξ) = p_0 + Σ 2 p_k cos 2π(k, ξ).
    pub fn evaluate(&self, coeffs: &DVector<f64>, xi: &[f64]) -> f64 {
        let mut s = coeffs[0];
        for (k, c) in self.half.iter().zip(coeffs.iter()).skip(1) {
            let dot: f64 = k.iter().zip(xi).map(|(&a, b)| a as f64 * b).sum();
            s += 2.0 * c * (2.0 * PI * dot).cos();
        }
        s
    }

    /// Fold a full coefficient map (p_k for k and −k, assumed equal).
    pub fn fold_coefficients(&self, full: &BTreeMap<Vec<i64>, f64>) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(self.len());
        for (k, &c) in full {
            let i = self.index_of(k).ok_or_else(|| Error::SupportEscape { index: k.clone() })?;
            v[i] = c;
        }
        Ok(v)
    }

    /// Real symmetric trigonometric polynomial in this space.
    pub fn polynomial(self: &Arc<Self>, coeffs: DVector<f64>) -> TrigPolynomial {
        assert_eq!(coeffs.len(), self.len());
        TrigPolynomial {
            space: Arc::clone(self),
            coeffs,
        }
    }
}

/// An element of P_Ω in folded coordinates.
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    pub space: Arc<PolySpace>,
    pub coeffs: DVector<f64>,
}

impl TrigPolynomial {
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        self.space.evaluate(&self.coeffs, xi)
    }
}

pub fn evaluate(p: &TrigPolynomial, xi: &[f64]) -> f64 {
    p.evaluate(xi)
}

/// Where a polynomial is required to vanish.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeroSet {
    Point {
        #[serde(serialize_with = "ser_rvec")]
        z: Vec<Rational64>,
    },
    Subspace {
        #[serde(serialize_with = "ser_rvec")]
        base: Vec<Rational64>,
        #[serde(serialize_with = "ser_rmat")]
        directions: Vec<Vec<Rational64>>,
    },
}

fn ser_rvec<S: serde::Serializer>(v: &[Rational64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&[*r.numer(), *r.denom()])?;
    }
    seq.end()
}

fn ser_rmat<S: serde::Serializer>(v: &[Vec<Rational64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[i64; 2]>> = v
        .iter()
        .map(|r| r.iter().map(|x| [*x.numer(), *x.denom()]).collect())
        .collect();
    serde::Serialize::serialize(&rows, s)
}

/// A zero of order `order` on a rational point or affine subspace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroConstraint {
    #[serde(flatten)]
    pub set: ZeroSet,
    pub order: usize,
}

impl ZeroConstraint {
    pub fn point(z: Vec<Rational64>, order: usize) -> Result<Self> {
        let c = ZeroConstraint {
            set: ZeroSet::Point { z },
            order,
        };
        c.check()?;
        Ok(c)
    }

    pub fn subspace(base: Vec<Rational64>, directions: Vec<Vec<Rational64>>, order: usize) -> Result<Self> {
        let c = ZeroConstraint {
            set: ZeroSet::Subspace { base, directions },
            order,
        };
        c.check()?;
        Ok(c)
    }

    /// Zero of order 2(k+1) at the origin, defining P⁽ᵏ⁾.
    pub fn origin(n: usize, k: usize) -> Self {
        ZeroConstraint {
            set: ZeroSet::Point {
                z: vec![Rational64::zero(); n],
            },
            order: 2 * (k + 1),
        }
    }

    /// Same zero set with the order replaced by 2(k+1).
    pub fn with_level(&self, k: usize) -> Self {
        ZeroConstraint {
            set: self.set.clone(),
            order: 2 * (k + 1),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.set {
            ZeroSet::Point { z } => z.len(),
            ZeroSet::Subspace { base, .. } => base.len(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(Error::InvalidConstraint(format!(
                "order must be a positive even integer, got {}",
                self.order
            )));
        }
        if let ZeroSet::Subspace { base, directions } = &self.set {
            if directions.is_empty() {
                return Err(Error::InvalidConstraint("subspace needs at least one direction".into()));
            }
            if let Some(d) = directions.iter().find(|d| d.len() != base.len()) {
                return Err(Error::DimensionMismatch {
                    expected: base.len(),
                    found: d.len(),
                });
            }
            let q = QMat {
                rows: directions.len(),
                cols: base.len(),
                data: directions.iter().flatten().map(to_big).collect(),
            };
            if q.rank() < directions.len() {
                return Err(Error::InvalidConstraint("directions are linearly dependent".into()));
            }
        }
        Ok(())
    }
}

fn to_big(r: &Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact rational for a float that is (to rounding) a fraction with small denominator.
pub fn rational_from_f64(x: f64) -> Result<Rational64> {
    if !x.is_finite() {
        return Err(Error::IrrationalConstraint(format!("{x}")));
    }
    // continued-fraction convergents
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1).and_then(|v| v.checked_add(h0));
        let k2 = a.checked_mul(k1).and_then(|v| v.checked_add(k0));
        let (Some(h2), Some(k2)) = (h2, k2) else { break };
        if k2 > 1_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64 / k1 as f64) - x).abs() <= 1e-15 * x.abs().max(1.0) {
            return Ok(Rational64::new(h1, k1));
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    Err(Error::IrrationalConstraint(format!("{x} is not a fraction with denominator ≤ 10⁶")))
}

fn chebyshev(deg: usize, x: f64) -> f64 {
    match deg {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for _ in 1..deg {
                (a, b) = (b, 2.0 * x * b - a);
            }
            b
        }
    }
}

/// Multi-indices in n variables of total degree ≤ d.
pub fn multi_indices(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=left {
            cur.push(b);
            rec(n, left - b, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

/// Fractional part of (k, z) in [0, 1), exactly.
fn frac_dot(k: &[i64], z: &[Rational64]) -> f64 {
    let mut s = BigRational::zero();
    for (a, b) in k.iter().zip(z) {
        s += to_big(b) * BigInt::from(*a);
    }
    let num = s.numer().mod_floor(s.denom());
    BigRational::new(num, s.denom().clone()).to_f64().unwrap_or(0.0)
}

fn rational_dot(k: &[i64], u: &[Rational64]) -> Rational64 {
    k.iter()
        .zip(u)
        .fold(Rational64::zero(), |acc, (a, b)| acc + b * Rational64::from_integer(*a))
}

/// Real rows (in folded coordinates) enforcing the zero constraint.
///
/// Each row is one complex functional Σ_k g(k) e^{2πi(k,z)} p_k split into real
/// and imaginary parts; g runs over a scaled Chebyshev basis of polynomials of
/// total degree below the order. Rows that vanish identically are dropped and
/// the rest are normalized.
pub fn constraint_rows(space: &PolySpace, c: &ZeroConstraint) -> Result<Vec<DVector<f64>>> {
    let n = space.lattice_dim();
    if c.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c.dim(),
        });
    }
    let support = space.support().points();
    let scale = space.support().max_abs().max(1) as f64;
    let degrees = multi_indices(n, c.order - 1);
    let groups: Vec<(Vec<usize>, Vec<f64>)> = match &c.set {
        ZeroSet::Point { z } => {
            let idx: Vec<usize> = (0..support.len()).collect();
            let phase = support.iter().map(|k| frac_dot(k, z)).collect();
            vec![(idx, phase)]
        }
        ZeroSet::Subspace { base, directions } => {
            let mut by_freq: BTreeMap<Vec<Rational64>, Vec<usize>> = BTreeMap::new();
            for (i, k) in support.iter().enumerate() {
                let key: Vec<Rational64> = directions.iter().map(|u| rational_dot(k, u)).collect();
                by_freq.entry(key).or_default().push(i);
            }
            by_freq
                .into_values()
                .map(|idx| {
                    let phase = idx.iter().map(|&i| frac_dot(&support[i], base)).collect();
                    (idx, phase)
                })
                .collect()
        }
    };
    let mut rows = Vec::new();
    for (idx, phase) in &groups {
        for beta in &degrees {
            let mut re = DVector::<f64>::zeros(space.len());
            let mut im = DVector::<f64>::zeros(space.len());
            let mut raw = 0.0f64;
            for (&i, &ph) in idx.iter().zip(phase) {
                let k = &support[i];
                let g: f64 = beta
                    .iter()
                    .zip(k)
                    .map(|(&b, &x)| chebyshev(b, x as f64 / scale))
                    .product();
                let slot = space.index_of(k).expect("support point has a folded index");
                let (s, co) = (2.0 * PI * ph).sin_cos();
                re[slot] += g * co;
                im[slot] += g * s;
                raw += g * g;
            }
            let raw = raw.sqrt();
            for row in [re, im] {
                let norm = row.norm();
                if norm > 1e-12 * raw && norm > 0.0 {
                    rows.push(row / norm);
                }
            }
        }
    }
    Ok(rows)
}

/// Orthonormal basis of the subspace of P_Ω satisfying a list of zero constraints.
#[derive(Clone, Debug)]
pub struct FaceBasis {
    /// Columns are orthonormal coefficient vectors in folded coordinates.
    pub basis: DMatrix<f64>,
    pub constraints: Vec<ZeroConstraint>,
    pub dim: usize,
    /// Numerical rank of the assembled constraint system.
    pub rank: usize,
}

pub fn face_basis(space: &PolySpace, constraints: &[ZeroConstraint]) -> Result<FaceBasis> {
    face_basis_with_tolerance(space, constraints, DEFAULT_NULLITY_TOLERANCE)
}

pub fn face_basis_with_tolerance(
    space: &PolySpace,
    constraints: &[ZeroConstraint],
    tolerance: f64,
) -> Result<FaceBasis> {
    let total = space.len();
    let n = space.lattice_dim();
    let mut origin_order = 0;
    let mut rows = Vec::new();
    for c in constraints {
        if c.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.dim(),
            });
        }
        match &c.set {
            ZeroSet::Point { z } if z.iter().all(|x| x.is_integer()) => origin_order = origin_order.max(c.order),
            _ => rows.extend(constraint_rows(space, c)?),
        }
    }
    let mut row_space = if origin_order > 0 {
        origin_row_space(space, origin_order)
    } else {
        DMatrix::zeros(total, 0)
    };
    if !rows.is_empty() {
        let mut c = DMatrix::from_fn(rows.len(), total, |i, j| rows[i][j]);
        if row_space.ncols() > 0 {
            // c ← c (I − Q Qᵀ)
            let proj = &c * &row_space;
            c -= proj * row_space.transpose();
        }
        let svd = c.svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tolerance)
            .collect();
        let extra = DMatrix::from_fn(total, keep.len(), |i, j| vt[(keep[j], i)]);
        row_space = DMatrix::from_fn(total, row_space.ncols() + keep.len(), |i, j| {
            if j < row_space.ncols() {
                row_space[(i, j)]
            } else {
                extra[(i, j - row_space.ncols())]
            }
        });
    }
    let rank = row_space.ncols();
    let basis = if rank == 0 {
        DMatrix::identity(total, total)
    } else {
        orthogonal_complement(&row_space)
    };
    Ok(FaceBasis {
        dim: basis.ncols(),
        basis,
        constraints: constraints.to_vec(),
        rank,
    })
}

const RANK_PRIMES: [u64; 2] = [2_305_843_009_213_693_951, 4_294_967_291];

fn mod_pow_point(k: &[i64], beta: &[usize], p: u64) -> u64 {
    let mut acc: u128 = 1;
    for (&x, &b) in k.iter().zip(beta) {
        let base = x.rem_euclid(p as i64) as u128;
        for _ in 0..b {
            acc = acc * base % p as u128;
        }
    }
    acc as u64
}

fn mod_inv(a: u64, p: u64) -> u64 {
    let (mut r, mut e, mut base) = (1u128, p - 2, a as u128);
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % p as u128;
        }
        base = base * base % p as u128;
        e >>= 1;
    }
    r as u64
}

/// Incremental row echelon form over ℤ/p.
struct ModEchelon {
    p: u64,
    rows: Vec<(usize, Vec<u64>)>,
}

impl ModEchelon {
    /// Reduce `v` and keep it when it is independent of the rows seen so far.
    fn insert(&mut self, mut v: Vec<u64>) -> bool {
        let p = self.p as u128;
        for (pivot, row) in &self.rows {
            let f = v[*pivot] as u128;
            if f == 0 {
                continue;
            }
            for (a, &b) in v.iter_mut().zip(row) {
                *a = ((*a as u128 + p - f * b as u128 % p) % p) as u64;
            }
        }
        match v.iter().position(|&x| x != 0) {
            None => false,
            Some(pivot) => {
                let inv = mod_inv(v[pivot], self.p) as u128;
                for a in v.iter_mut() {
                    *a = (*a as u128 * inv % p) as u64;
                }
                self.rows.push((pivot, v));
                true
            }
        }
    }
}

/// Orthonormal basis of the rows for a zero of order `order` at the origin.
///
/// In folded coordinates these rows span {w_k k^β : |β| even, |β| < order} with
/// w_0 = 1 and w_k = 2 otherwise. Monomials that are independent on the support
/// are picked exactly (modular elimination in graded-lex order); each is then
/// generated as x_a x_b times the orthonormal vector of a smaller monomial and
/// re-orthogonalized twice, so no numerical rank decision is needed.
fn origin_row_space(space: &PolySpace, order: usize) -> DMatrix<f64> {
    let n = space.lattice_dim();
    let reps = space.representatives();
    let len = reps.len();
    let mut monomials: Vec<Vec<usize>> = multi_indices(n, order - 1)
        .into_iter()
        .filter(|b| b.iter().sum::<usize>() % 2 == 0)
        .collect();
    monomials.sort_by(|a, b| a.iter().sum::<usize>().cmp(&b.iter().sum::<usize>()).then_with(|| b.cmp(a)));
    let mut echelons: Vec<ModEchelon> = RANK_PRIMES.iter().map(|&p| ModEchelon { p, rows: Vec::new() }).collect();
    let mut standard: HashMap<Vec<usize>, usize> = HashMap::new();
    let scale = space.support().max_abs().max(1) as f64;
    let weight = DVector::from_fn(len, |i, _| if i == 0 { 1.0 } else { 2.0 });
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for beta in monomials {
        let mut independent = false;
        for e in echelons.iter_mut() {
            let v = reps.iter().map(|k| mod_pow_point(k, &beta, e.p)).collect();
            independent |= e.insert(v);
        }
        if !independent {
            continue;
        }
        let parent = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).find_map(|(a, b)| {
            let mut q = beta.clone();
            if q[a] == 0 {
                return None;
            }
            q[a] -= 1;
            if q[b] == 0 {
                return None;
            }
            q[b] -= 1;
            standard.get(&q).map(|&j| (j, a, b))
        });
        let mut v = match parent {
            Some((j, a, b)) => DVector::from_fn(len, |i, _| {
                cols[j][i] * reps[i][a] as f64 * reps[i][b] as f64 / (scale * scale)
            }),
            None => DVector::from_fn(len, |i, _| {
                weight[i] * beta.iter().zip(&reps[i]).map(|(&e, &x)| (x as f64 / scale).powi(e as i32)).product::<f64>()
            }),
        };
        for _ in 0..2 {
            for q in &cols {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm == 0.0 {
            log::warn!("monomial {beta:?} collapsed during orthogonalization");
            continue;
        }
        standard.insert(beta, cols.len());
        cols.push(v / norm);
    }
    DMatrix::from_columns(&cols)
}

/// Orthonormal basis of the complement of span(columns of `a`), via Householder QR.
pub fn orthogonal_complement(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (nrows, r) = a.shape();
    let mut work = a.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(r);
    for j in 0..r {
        let mut v = DVector::zeros(nrows);
        let mut x2 = 0.0;
        for i in j..nrows {
            v[i] = work[(i, j)];
            x2 += v[i] * v[i];
        }
        let alpha = if v[j] > 0.0 { -x2.sqrt() } else { x2.sqrt() };
        v[j] -= alpha;
        let vn = v.norm();
        if vn == 0.0 {
            reflectors.push(v);
            continue;
        }
        v /= vn;
        // work ← (I − 2vvᵀ) work on the remaining columns
        for col in j..r {
            let d: f64 = (j..nrows).map(|i| v[i] * work[(i, col)]).sum();
            for i in j..nrows {
                work[(i, col)] -= 2.0 * d * v[i];
            }
        }
        reflectors.push(v);
    }
    let mut q = DMatrix::zeros(nrows, nrows - r);
    for j in 0..nrows - r {
        q[(r + j, j)] = 1.0;
    }
    for v in reflectors.iter().rev() {
        if v.norm() == 0.0 {
            continue;
        }
        let w = q.tr_mul(v);
        q.ger(-2.0, v, &w, 1.0);
    }
    q
}
