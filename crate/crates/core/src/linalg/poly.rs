//! Univariate polynomials over ℚ: square-free decomposition and complex roots.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::eigen;
use crate::error::Result;

/// Coefficients from low to high degree, without trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoly(pub Vec<BigRational>);

impl QPoly {
    pub fn from_i128(c: &[i128]) -> Self {
        let mut p = QPoly(c.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect());
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|x| x.is_zero()) {
            self.0.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn derivative(&self) -> Self {
        let mut p = QPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        );
        p.trim();
        p
    }

    pub fn monic(&self) -> Self {
        match self.0.last() {
            None => self.clone(),
            Some(lead) => QPoly(self.0.iter().map(|c| c / lead).collect()),
        }
    }

    pub fn div_rem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero());
        let mut r = self.0.clone();
        let dd = d.degree();
        let lead = d.0.last().unwrap().clone();
        if r.len() < d.0.len() {
            return (QPoly(vec![]), self.clone());
        }
        let mut q = vec![BigRational::zero(); r.len() - dd];
        for i in (0..q.len()).rev() {
            let f = &r[i + dd] / &lead;
            if !f.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    r[i + j] = &r[i + j] - &f * dc;
                }
            }
            q[i] = f;
        }
        let mut q = QPoly(q);
        let mut r = QPoly(r);
        q.trim();
        r.trim();
        (q, r)
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        let n = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        let mut p = QPoly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) - o.0.get(i).unwrap_or(&z))
                .collect(),
        );
        p.trim();
        p
    }

    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Yun's algorithm: factors a_i (square-free, pairwise coprime) with p = c·Π a_iⁱ.
pub fn square_free_decomposition(p: &QPoly) -> Vec<(QPoly, usize)> {
    let mut out = Vec::new();
    if p.degree() == 0 {
        return out;
    }
    let dp = p.derivative();
    let a0 = p.gcd(&dp);
    let mut b = p.div_rem(&a0).0;
    let c = dp.div_rem(&a0).0;
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    while b.degree() > 0 {
        let a = b.gcd(&d);
        let nb = b.div_rem(&a).0;
        let nc = d.div_rem(&a).0;
        d = nc.sub(&nb.derivative());
        if a.degree() > 0 {
            out.push((a.monic(), i));
        }
        b = nb;
        i += 1;
    }
    out
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::zero();
    let mut dv = Complex64::zero();
    for &a in c.iter().rev() {
        dv = dv * z + v;
        v = v * z + a;
    }
    (v, dv)
}

/// Roots of a square-free polynomial: companion-matrix eigenvalues refined by Newton.
pub fn simple_roots(p: &QPoly) -> Result<Vec<Complex64>> {
    let p = p.monic();
    let n = p.degree();
    if n == 0 {
        return Ok(vec![]);
    }
    let c = p.to_f64();
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i];
    }
    let mut roots = eigen::eigenvalues(&comp)?;
    for z in roots.iter_mut() {
        for _ in 0..8 {
            let (v, dv) = horner(&c, *z);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            *z -= step;
            if step.norm() <= 1e-16 * z.norm().max(1.0) {
                break;
            }
        }
    }
    Ok(roots)
}

/// All roots of p with exact multiplicities.
pub fn roots_with_multiplicity(p: &QPoly) -> Result<Vec<(Complex64, usize)>> {
    let mut out = Vec::new();
    for (f, mult) in square_free_decomposition(p) {
        for r in simple_roots(&f)? {
            out.push((r, mult));
        }
    }
    Ok(out)
}

pub fn is_one(p: &QPoly) -> bool {
    p.0.len() == 1 && p.0[0].is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yun_separates_multiplicities() {
        // (x-2)^2 (x+1) = x³ - 3x² + 0x + 4
        let p = QPoly::from_i128(&[4, 0, -3, 1]);
        let f = square_free_decomposition(&p);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0], (QPoly::from_i128(&[1, 1]), 1));
        assert_eq!(f[1], (QPoly::from_i128(&[-2, 1]), 2));
    }

    #[test]
    fn roots_of_bear_polynomial() {
        let p = QPoly::from_i128(&[2, -1, 1]);
        let r = roots_with_multiplicity(&p).unwrap();
        assert_eq!(r.len(), 2);
        for (z, m) in r {
            assert_eq!(m, 1);
            assert!((z.norm() - 2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn repeated_roots_are_exact() {
        // (x-2)^4
        let p = QPoly::from_i128(&[16, -32, 24, -8, 1]);
        let r = roots_with_multiplicity(&p).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].1, 4);
        assert!((r[0].0 - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }
}
