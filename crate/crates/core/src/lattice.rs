//! Integer dilation matrices, digit sets and spectral structure.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::exact::{self, QMat};
use crate::linalg::poly::{self, QPoly};

/// Relative slack used when testing |λ| > 1.
pub const EXPANSION_TOLERANCE: f64 = 1e-9;
/// Default relative gap below which eigenvalue moduli are merged.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;

/// An integer expanding matrix M together with its exact spectral data.
#[derive(Clone, Debug)]
pub struct DilationMatrix {
    n: usize,
    entries: Vec<i64>,
    det: i64,
    adjugate: Vec<i64>,
    char_poly: Vec<i128>,
    roots: Vec<(Complex64, usize)>,
}

impl PartialEq for DilationMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries == other.entries
    }
}

impl fmt::Display for DilationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("{r:?}"))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// Validate a square integer matrix as a dilation matrix.
pub fn validate_dilation(rows: &[Vec<i64>]) -> Result<DilationMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                expected: n,
                row: i,
                found: r.len(),
            });
        }
    }
    let entries: Vec<i64> = rows.iter().flatten().copied().collect();
    let char_poly = exact::char_poly(&entries, n)?;
    let det_signed = if n.is_multiple_of(2) { char_poly[0] } else { -char_poly[0] };
    if det_signed == 0 {
        return Err(Error::SingularMatrix);
    }
    let det = i64::try_from(det_signed).map_err(|_| Error::Overflow("computing the determinant"))?;
    let roots = poly::roots_with_multiplicity(&QPoly::from_i128(&char_poly))?;
    if let Some(small) = roots
        .iter()
        .map(|(z, _)| z.norm())
        .find(|r| *r <= 1.0 + EXPANSION_TOLERANCE)
    {
        return Err(Error::NotExpanding { modulus: small });
    }
    let q = QMat::from_i64(n, n, &entries);
    let inv = q.inverse().ok_or(Error::SingularMatrix)?;
    let d = exact::rat(det);
    let adjugate = inv
        .data
        .iter()
        .map(|x| (x * &d).to_integer().to_i64())
        .collect::<Option<Vec<i64>>>()
        .ok_or(Error::Overflow("computing the adjugate"))?;
    Ok(DilationMatrix {
        n,
        entries,
        det,
        adjugate,
        char_poly,
        roots,
    })
}

impl DilationMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// m = |det M|.
    pub fn m(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Characteristic polynomial coefficients, low to high.
    pub fn char_poly(&self) -> &[i128] {
        &self.char_poly
    }

    /// Eigenvalues repeated according to algebraic multiplicity.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|(z, k)| std::iter::repeat_n(*z, *k))
            .collect()
    }

    pub fn transpose(&self) -> DilationMatrix {
        let n = self.n;
        let t = |v: &[i64]| -> Vec<i64> {
            (0..n * n).map(|idx| v[(idx % n) * n + idx / n]).collect()
        };
        DilationMatrix {
            n,
            entries: t(&self.entries),
            det: self.det,
            adjugate: t(&self.adjugate),
            char_poly: self.char_poly.clone(),
            roots: self.roots.clone(),
        }
    }

    /// M k.
    pub fn apply(&self, k: &[i64]) -> Vec<i64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[i * n + j] * k[j]).sum())
            .collect()
    }

    /// adj(M) k, so that M⁻¹k = adj(M) k / det.
    pub fn apply_adjugate(&self, k: &[i64]) -> Vec<i64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.adjugate[i * n + j] * k[j]).sum())
            .collect()
    }

    /// M⁻¹k when it is an integer vector.
    pub fn solve_integer(&self, k: &[i64]) -> Option<Vec<i64>> {
        let a = self.apply_adjugate(k);
        if a.iter().all(|x| x % self.det == 0) {
            Some(a.iter().map(|x| x / self.det).collect())
        } else {
            None
        }
    }

    /// True when k ∈ M ℤⁿ.
    pub fn in_image(&self, k: &[i64]) -> bool {
        self.solve_integer(k).is_some()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j) as f64)
    }

    pub fn inverse_f64(&self) -> DMatrix<f64> {
        let d = self.det as f64;
        DMatrix::from_fn(self.n, self.n, |i, j| self.adjugate[i * self.n + j] as f64 / d)
    }

    /// M⁻¹ as an exact rational matrix.
    pub fn inverse_exact(&self) -> QMat {
        let d = exact::rat(self.det);
        QMat {
            rows: self.n,
            cols: self.n,
            data: self.adjugate.iter().map(|&a| exact::rat(a) / &d).collect(),
        }
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        self.roots.iter().map(|(z, _)| z.norm()).fold(0.0, f64::max)
    }
}

/// Which matrix a digit set represents cosets for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitTarget {
    Matrix,
    Transpose,
}

/// m representatives of ℤⁿ / Mℤⁿ (or of ℤⁿ / Mᵀℤⁿ), including 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DigitSet {
    digits: Vec<Vec<i64>>,
    target: DigitTarget,
}

impl DigitSet {
    /// Check coset distinctness, count and presence of the zero digit.
    pub fn new(m: &DilationMatrix, digits: Vec<Vec<i64>>, target: DigitTarget) -> Result<Self> {
        if let Some(d) = digits.iter().find(|d| d.len() != m.dim()) {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                found: d.len(),
            });
        }
        if digits.len() != m.m() {
            return Err(Error::InvalidDigits(format!(
                "{} digits given but |det M| = {}",
                digits.len(),
                m.m()
            )));
        }
        if !digits.iter().any(|d| d.iter().all(|&x| x == 0)) {
            return Err(Error::InvalidDigits("the zero vector must be a digit".into()));
        }
        let mat = match target {
            DigitTarget::Matrix => m.clone(),
            DigitTarget::Transpose => m.transpose(),
        };
        if !distinct_cosets(&mat, &digits) {
            return Err(Error::InvalidDigits(
                "two digits lie in the same coset".into(),
            ));
        }
        Ok(DigitSet { digits, target })
    }

    pub fn digits(&self) -> &[Vec<i64>] {
        &self.digits
    }

    pub fn target(&self) -> DigitTarget {
        self.target
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Digits other than zero.
    pub fn nonzero(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.digits.iter().filter(|d| d.iter().any(|&x| x != 0))
    }
}

fn distinct_cosets(m: &DilationMatrix, digits: &[Vec<i64>]) -> bool {
    for i in 0..digits.len() {
        for j in i + 1..digits.len() {
            let diff: Vec<i64> = digits[i].iter().zip(&digits[j]).map(|(a, b)| a - b).collect();
            if m.in_image(&diff) {
                return false;
            }
        }
    }
    true
}

/// True iff |D| = m and no two digits are congruent modulo Mℤⁿ.
pub fn digits_valid(m: &DilationMatrix, digits: &[Vec<i64>]) -> bool {
    digits.len() == m.m() && digits.iter().all(|d| d.len() == m.dim()) && distinct_cosets(m, digits)
}

/// The integer points of M[0,1)ⁿ (or Mᵀ[0,1)ⁿ), zero first then lexicographic.
pub fn canonical_digits(m: &DilationMatrix, transpose: bool) -> Result<DigitSet> {
    let mat = if transpose { m.transpose() } else { m.clone() };
    let n = mat.dim();
    let lo: Vec<i64> = (0..n)
        .map(|i| (0..n).map(|j| mat.entry(i, j).min(0)).sum())
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|i| (0..n).map(|j| mat.entry(i, j).max(0)).sum())
        .collect();
    let det = mat.det();
    let s = det.signum();
    let ad = det.abs();
    let mut found = Vec::new();
    for k in box_points(&lo, &hi) {
        let a = mat.apply_adjugate(&k);
        if a.iter().all(|&x| {
            let y = s * x;
            (0..ad).contains(&y)
        }) {
            found.push(k);
        }
    }
    if found.len() != mat.m() {
        return Err(Error::InternalCountMismatch {
            expected: mat.m(),
            found: found.len(),
        });
    }
    found.sort_by_key(|k| (k.iter().any(|&x| x != 0), k.clone()));
    Ok(DigitSet {
        digits: found,
        target: if transpose {
            DigitTarget::Transpose
        } else {
            DigitTarget::Matrix
        },
    })
}

/// All integer points of the box lo ≤ k ≤ hi, lexicographic.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let n = lo.len();
    let mut out = Vec::new();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return out;
    }
    let mut cur = lo.to_vec();
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < hi[i] {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1).zip(lo.iter().skip(i + 1)) {
                    *c.0 = *c.1;
                }
                break;
            }
        }
    }
}

/// Distinct eigenvalue moduli r_1 > … > r_q with algebraic multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralStructure {
    pub moduli: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub clustering_tolerance: f64,
}

impl SpectralStructure {
    pub fn q(&self) -> usize {
        self.moduli.len()
    }

    /// Smallest modulus r_q, the rate used by the generic regularity formula.
    pub fn smallest(&self) -> f64 {
        *self.moduli.last().expect("at least one modulus")
    }
}

/// Cluster the eigenvalue moduli with the default relative tolerance.
///
/// Fails when two moduli are neither clearly equal nor clearly separated.
pub fn spectral_moduli(m: &DilationMatrix) -> Result<SpectralStructure> {
    cluster(m, CLUSTER_TOLERANCE, true)
}

/// Cluster with an explicit tolerance and no ambiguity check.
pub fn spectral_moduli_with_tolerance(m: &DilationMatrix, tolerance: f64) -> Result<SpectralStructure> {
    cluster(m, tolerance, false)
}

fn cluster(m: &DilationMatrix, tol: f64, strict: bool) -> Result<SpectralStructure> {
    let mut mods: Vec<(f64, usize)> = m.roots.iter().map(|(z, k)| (z.norm(), *k)).collect();
    mods.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut moduli: Vec<f64> = Vec::new();
    let mut mults: Vec<usize> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for (r, k) in mods {
        if let Some(&last) = moduli.last() {
            let gap = (last - r).abs() / last.max(r);
            if strict && gap > EXPANSION_TOLERANCE && gap <= tol {
                return Err(Error::AmbiguousClustering { a: last, b: r });
            }
            if gap <= tol {
                let i = moduli.len() - 1;
                mults[i] += k;
                sums[i] += r * k as f64;
                moduli[i] = sums[i] / mults[i] as f64;
                continue;
            }
        }
        moduli.push(r);
        mults.push(k);
        sums.push(r * k as f64);
    }
    Ok(SpectralStructure {
        moduli,
        multiplicities: mults,
        clustering_tolerance: tol,
    })
}

/// Outcome of the search for a proper rational M-invariant subspace.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum InvariantVerdict {
    /// The characteristic polynomial is irreducible over ℚ.
    GenericGuaranteed,
    /// Unimodular P (row major) such that P⁻¹MP is block upper triangular,
    /// the leading block having size `block`.
    BlockTriangularizable { basis: Vec<Vec<i64>>, block: usize },
    Unknown { note: String },
}

/// Largest dimension handled by the factorization search.
pub const MAX_FACTOR_DIM: usize = 4;

pub fn rational_invariant_check(m: &DilationMatrix) -> InvariantVerdict {
    let n = m.dim();
    if n > MAX_FACTOR_DIM {
        return InvariantVerdict::Unknown {
            note: format!("dimension {n} exceeds {MAX_FACTOR_DIM}; factorization search skipped"),
        };
    }
    let factors = rational_factors(&m.char_poly);
    if factors.is_empty() {
        return InvariantVerdict::GenericGuaranteed;
    }
    let lead = |g: &Vec<i128>| -> f64 {
        poly::simple_roots(&QPoly::from_i128(g))
            .map(|r| r.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .unwrap_or(0.0)
    };
    let mut factors = factors;
    factors.sort_by(|a, b| lead(b).partial_cmp(&lead(a)).unwrap());
    for g in &factors {
        if let Some((basis, block)) = invariant_basis(m, g) {
            return InvariantVerdict::BlockTriangularizable { basis, block };
        }
    }
    InvariantVerdict::Unknown {
        note: "characteristic polynomial is reducible but no integer block basis was found".into(),
    }
}

fn divisors(c: i128) -> Vec<i128> {
    let a = c.unsigned_abs();
    let mut out = Vec::new();
    let mut d = 1u128;
    while d * d <= a {
        if a.is_multiple_of(d) {
            out.push(d as i128);
            out.push((a / d) as i128);
        }
        d += 1;
    }
    let mut all: Vec<i128> = out.iter().flat_map(|&d| [d, -d]).collect();
    all.sort();
    all.dedup();
    all
}

fn eval_i128(p: &[i128], x: i128) -> Option<i128> {
    let mut v: i128 = 0;
    for &c in p.iter().rev() {
        v = v.checked_mul(x)?.checked_add(c)?;
    }
    Some(v)
}

fn isqrt(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let mut r = (v as f64).sqrt() as i128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    (r * r == v).then_some(r)
}

/// Proper monic integer factors of a monic integer polynomial of degree ≤ 4:
/// linear factors from integer roots, and quadratic factors of quartics.
pub fn rational_factors(p: &[i128]) -> Vec<Vec<i128>> {
    let deg = p.len() - 1;
    let mut out = Vec::new();
    if deg <= 1 {
        return out;
    }
    for r in divisors(p[0]) {
        if eval_i128(p, r) == Some(0) {
            out.push(vec![-r, 1]);
        }
    }
    if deg == 4 {
        let (a0, a1, a2, a3) = (p[0], p[1], p[2], p[3]);
        for c in divisors(a0) {
            let e = a0 / c;
            // b + d = a3, b d = a2 − c − e
            let disc = a3 * a3 - 4 * (a2 - c - e);
            if let Some(s) = isqrt(disc) {
                if (a3 + s) % 2 != 0 {
                    continue;
                }
                let b = (a3 + s) / 2;
                let d = a3 - b;
                for (b, d) in [(b, d), (d, b)] {
                    if b * e + c * d == a1 {
                        let f = vec![c, b, 1];
                        if !out.contains(&f) {
                            out.push(f);
                        }
                    }
                }
            }
        }
    }
    out
}

fn poly_of_matrix(m: &DilationMatrix, g: &[i128]) -> QMat {
    let n = m.dim();
    let a = QMat::from_i64(n, n, m.entries());
    let mut acc = QMat::zeros(n, n);
    for &c in g.iter().rev() {
        acc = acc.mul(&a);
        for i in 0..n {
            let v = acc.get(i, i) + BigRational::from_integer(BigInt::from(c));
            acc.set(i, i, v);
        }
    }
    acc
}

fn krylov_span(m: &DilationMatrix, start: usize) -> Vec<Vec<BigRational>> {
    let n = m.dim();
    let mut basis: Vec<Vec<i64>> = Vec::new();
    let mut v: Vec<i64> = (0..n).map(|i| i64::from(i == start)).collect();
    loop {
        let mut trial = basis.clone();
        trial.push(v.clone());
        let rows: Vec<i64> = trial.iter().flatten().copied().collect();
        if QMat::from_i64(trial.len(), n, &rows).rank() < trial.len() {
            break;
        }
        basis = trial;
        v = m.apply(&v);
    }
    basis
        .iter()
        .map(|r| r.iter().map(|&x| exact::rat(x)).collect())
        .collect()
}

fn invariant_basis(m: &DilationMatrix, g: &[i128]) -> Option<(Vec<Vec<i64>>, usize)> {
    let n = m.dim();
    let mut span = poly_of_matrix(m, g).kernel();
    if span.is_empty() {
        return None;
    }
    if span.len() == n {
        span = (0..n).map(|i| krylov_span(m, i)).find(|s| s.len() < n)?;
    }
    let rows: Vec<Vec<BigInt>> = span.iter().map(|v| exact::primitive_integer(v)).collect();
    let d = rows.len();
    let p = exact::unimodular_completion(&rows, n).ok()?;
    let pq = QMat::from_i64(n, n, &p);
    let conj = pq.inverse()?.mul(&QMat::from_i64(n, n, m.entries())).mul(&pq);
    let triangular = (d..n).all(|i| (0..d).all(|j| conj.get(i, j).is_zero()));
    if !triangular {
        return None;
    }
    Some((p.chunks(n).map(|r| r.to_vec()).collect(), d))
}
