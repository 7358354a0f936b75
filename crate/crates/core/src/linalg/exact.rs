//! Exact integer and rational matrix arithmetic for small matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Characteristic polynomial det(λI − A), coefficients low to high, monic.
///
/// Faddeev–LeVerrier; every division is exact over the integers.
pub fn char_poly(a: &[i64], n: usize) -> Result<Vec<i128>> {
    let a: Vec<i128> = a.iter().map(|&x| x as i128).collect();
    let mut coeffs = vec![0i128; n + 1];
    coeffs[n] = 1;
    let mut mk = vec![0i128; n * n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s: i128 = 0;
                for l in 0..n {
                    s = a[i * n + l]
                        .checked_mul(mk[l * n + j])
                        .and_then(|p| s.checked_add(p))
                        .ok_or(Error::Overflow("computing the characteristic polynomial"))?;
                }
                next[i * n + j] = s;
            }
            next[i * n + i] += coeffs[n - k + 1];
        }
        mk = next;
        let mut tr: i128 = 0;
        for i in 0..n {
            for l in 0..n {
                tr = a[i * n + l]
                    .checked_mul(mk[l * n + i])
                    .and_then(|p| tr.checked_add(p))
                    .ok_or(Error::Overflow("computing the characteristic polynomial"))?;
            }
        }
        coeffs[n - k] = -tr / k as i128;
    }
    Ok(coeffs)
}

/// Dense rational matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigRational::one();
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, v: &[i64]) -> Self {
        QMat {
            rows,
            cols,
            data: v.iter().map(|&x| rat(x)).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = &out.data[i * other.cols + j] + a * other.get(l, j);
                    out.data[i * other.cols + j] = v;
                }
            }
        }
        out
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = self.get(r, c).recip();
            for j in 0..self.cols {
                let v = self.get(r, j) * &inv;
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let f = self.get(i, c).clone();
                for j in 0..self.cols {
                    let v = self.get(i, j) - &f * self.get(r, j);
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space {x : A x = 0}.
    pub fn kernel(&self) -> Vec<Vec<BigRational>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![BigRational::zero(); self.cols];
                x[f] = BigRational::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    x[pc] = -m.get(r, f).clone();
                }
                x
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = QMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, BigRational::one());
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = QMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j).clone());
            }
        }
        Some(inv)
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Entries as machine integers, if all are integral and fit.
    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.data
            .iter()
            .map(|x| if x.is_integer() { x.to_integer().to_i64() } else { None })
            .collect()
    }
}

/// Scale a rational vector to a primitive integer vector with the same direction.
pub fn primitive_integer(v: &[BigRational]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &l).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn rank_i128(rows: &[Vec<i128>]) -> Result<usize> {
    let mut a: Vec<Vec<i128>> = rows.to_vec();
    let nr = a.len();
    if nr == 0 {
        return Ok(0);
    }
    let nc = a[0].len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for c in 0..nc {
        if rank == nr {
            break;
        }
        let Some(p) = (rank..nr).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(p, rank);
        for i in rank + 1..nr {
            for j in c + 1..nc {
                let v = a[rank][c]
                    .checked_mul(a[i][j])
                    .and_then(|x| a[i][c].checked_mul(a[rank][j]).and_then(|y| x.checked_sub(y)))
                    .ok_or(Error::Overflow("integer elimination"))?;
                a[i][j] = v / prev;
            }
            a[i][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
    }
    Ok(rank)
}

/// Extended gcd: returns (g, x, y) with a x + b y = g ≥ 0.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Unimodular integer matrix whose first `d` columns span the saturated lattice
/// generated over ℚ by the given independent integer rows.
pub fn unimodular_completion(rows: &[Vec<BigInt>], n: usize) -> Result<Vec<i64>> {
    let d = rows.len();
    let overflow = || Error::Overflow("completing a lattice basis");
    let mut b: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x.to_i128().ok_or_else(overflow)).collect())
        .collect::<Result<_>>()?;
    let mut u: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();
    // column operations B ← B·E, U ← U·E until B = [H 0]
    for i in 0..d {
        loop {
            let nz: Vec<usize> = (i..n).filter(|&j| b[i][j] != 0).collect();
            if nz.is_empty() {
                return Err(Error::Precondition("rows are linearly dependent".into()));
            }
            if nz.len() == 1 {
                let j = nz[0];
                if j != i {
                    for row in b.iter_mut().chain(u.iter_mut()) {
                        row.swap(i, j);
                    }
                }
                break;
            }
            let (j1, j2) = (nz[0], nz[1]);
            let (p, q) = (b[i][j1], b[i][j2]);
            let (g, x, y) = ext_gcd(p, q);
            let (pg, qg) = (p / g, q / g);
            // [col j1, col j2] ← [x c1 + y c2, −qg c1 + pg c2], determinant 1
            for row in b.iter_mut().chain(u.iter_mut()) {
                let (c1, c2) = (row[j1], row[j2]);
                let n1 = x
                    .checked_mul(c1)
                    .and_then(|a| y.checked_mul(c2).and_then(|b| a.checked_add(b)))
                    .ok_or_else(overflow)?;
                let n2 = pg
                    .checked_mul(c2)
                    .and_then(|a| qg.checked_mul(c1).and_then(|b| a.checked_sub(b)))
                    .ok_or_else(overflow)?;
                row[j1] = n1;
                row[j2] = n2;
            }
        }
    }
    let uq = QMat {
        rows: n,
        cols: n,
        data: u
            .iter()
            .flatten()
            .map(|&x| BigRational::from_integer(BigInt::from(x)))
            .collect(),
    };
    let uinv = uq.inverse().ok_or(Error::Precondition("singular transform".into()))?;
    // P = (U⁻¹)ᵀ: columns are the rows of U⁻¹
    uinv.transpose().to_i64().ok_or_else(overflow)
}

pub fn bigint_abs_max(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}
