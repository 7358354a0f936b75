//! Refinement masks, exact-or-float coefficients and mask autocorrelation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A mask coefficient: exact rational when possible, otherwise floating point.
#[derive(Clone, Debug)]
pub enum Coefficient {
    Exact(BigRational),
    Float(f64),
}

impl Coefficient {
    pub fn ratio(num: i64, den: i64) -> Self {
        Coefficient::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn integer(v: i64) -> Self {
        Coefficient::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coefficient::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Coefficient::Float(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Exact(r) => r.is_zero(),
            Coefficient::Float(x) => *x == 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coefficient::Exact(_))
    }

    pub fn add(&self, o: &Coefficient) -> Coefficient {
        match (self, o) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a + b),
            _ => Coefficient::Float(self.to_f64() + o.to_f64()),
        }
    }

    pub fn mul(&self, o: &Coefficient) -> Coefficient {
        match (self, o) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a * b),
            _ => Coefficient::Float(self.to_f64() * o.to_f64()),
        }
    }

    pub fn abs(&self) -> Coefficient {
        match self {
            Coefficient::Exact(a) => Coefficient::Exact(a.abs()),
            Coefficient::Float(x) => Coefficient::Float(x.abs()),
        }
    }
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Exact(r) => write!(f, "{r}"),
            Coefficient::Float(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawCoefficient {
    Fraction([i64; 2]),
    Integer(i64),
    Float(f64),
}

impl Serialize for Coefficient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coefficient::Exact(r) => match (r.numer().to_i64(), r.denom().to_i64()) {
                (Some(n), Some(d)) => RawCoefficient::Fraction([n, d]).serialize(s),
                _ => RawCoefficient::Float(self.to_f64()).serialize(s),
            },
            Coefficient::Float(x) => RawCoefficient::Float(*x).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawCoefficient::deserialize(d)? {
            RawCoefficient::Fraction([n, den]) => {
                if den == 0 {
                    Err(serde::de::Error::custom("zero denominator"))
                } else {
                    Ok(Coefficient::ratio(n, den))
                }
            }
            RawCoefficient::Integer(v) => Ok(Coefficient::integer(v)),
            RawCoefficient::Float(x) => Ok(Coefficient::Float(x)),
        }
    }
}

/// Finitely supported coefficients c_k of a refinement equation.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, Coefficient>,
}

#[derive(Serialize, Deserialize)]
struct MaskEntry {
    index: Vec<i64>,
    value: Coefficient,
}

impl Mask {
    /// Build a mask; repeated indices are summed and zero coefficients dropped.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, Coefficient)>) -> Result<Self> {
        let mut coeffs: BTreeMap<Vec<i64>, Coefficient> = BTreeMap::new();
        for (k, c) in entries {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.len(),
                });
            }
            if !c.to_f64().is_finite() {
                return Err(Error::InvalidMask(format!("non-finite coefficient at {k:?}")));
            }
            let v = match coeffs.remove(&k) {
                Some(old) => old.add(&c),
                None => c,
            };
            coeffs.insert(k, v);
        }
        coeffs.retain(|_, c| !c.is_zero());
        if coeffs.is_empty() {
            return Err(Error::InvalidMask("mask has no nonzero coefficients".into()));
        }
        Ok(Mask { dim, coeffs })
    }

    pub fn from_f64(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        Mask::new(dim, entries.into_iter().map(|(k, v)| (k, Coefficient::Float(v))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nonzero coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> Vec<Vec<i64>> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Coefficient)> {
        self.coeffs.iter()
    }

    pub fn get(&self, k: &[i64]) -> Option<&Coefficient> {
        self.coeffs.get(k)
    }

    pub fn get_f64(&self, k: &[i64]) -> f64 {
        self.coeffs.get(k).map_or(0.0, Coefficient::to_f64)
    }

    pub fn is_exact(&self) -> bool {
        self.coeffs.values().all(Coefficient::is_exact)
    }

    /// Σ c_k.
    pub fn total(&self) -> Coefficient {
        self.coeffs
            .values()
            .fold(Coefficient::integer(0), |acc, c| acc.add(c))
    }

    /// Require Σ c_k = m to 1e-9 relative.
    pub fn check_sum(&self, m: usize) -> Result<()> {
        let s = self.total().to_f64();
        if (s - m as f64).abs() > 1e-9 * m as f64 {
            return Err(Error::InvalidMask(format!(
                "coefficients sum to {s}, expected |det M| = {m}"
            )));
        }
        Ok(())
    }

    /// Plain coefficient convolution (no rescaling).
    pub fn convolve_raw(&self, other: &Mask) -> Mask {
        assert_eq!(self.dim, other.dim);
        let mut out: BTreeMap<Vec<i64>, Coefficient> = BTreeMap::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let k: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let p = ca.mul(cb);
                let v = match out.remove(&k) {
                    Some(old) => old.add(&p),
                    None => p,
                };
                out.insert(k, v);
            }
        }
        out.retain(|_, c| !c.is_zero());
        Mask {
            dim: self.dim,
            coeffs: out,
        }
    }

    /// Multiply every coefficient by `s`.
    pub fn scaled(&self, s: &Coefficient) -> Mask {
        Mask {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(k, c)| (k.clone(), c.mul(s))).collect(),
        }
    }

    /// Mask symbol c(ξ) = Σ c_k e^{−2πi(k,ξ)} as (re, im).
    pub fn symbol(&self, xi: &[f64]) -> (f64, f64) {
        self.coeffs.iter().fold((0.0, 0.0), |(re, im), (k, c)| {
            let t: f64 = k.iter().zip(xi).map(|(&a, b)| a as f64 * b).sum();
            let (s, co) = (2.0 * PI * t).sin_cos();
            let v = c.to_f64();
            (re + v * co, im - v * s)
        })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("mask serializes")
    }
}

impl Serialize for Mask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<MaskEntry> = self
            .coeffs
            .iter()
            .map(|(k, c)| MaskEntry {
                index: k.clone(),
                value: c.clone(),
            })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<MaskEntry>::deserialize(d)?;
        let dim = entries
            .first()
            .map(|e| e.index.len())
            .ok_or_else(|| serde::de::Error::custom("empty mask"))?;
        Mask::new(dim, entries.into_iter().map(|e| (e.index, e.value))).map_err(serde::de::Error::custom)
    }
}

/// Normalized autocorrelation a_n = Σ_j ĉ_{j+n} ĉ_j with ĉ = c / Σc.
#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation {
    coeffs: BTreeMap<Vec<i64>, f64>,
}

impl Autocorrelation {
    pub fn coefficients(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.coeffs
    }

    pub fn get(&self, n: &[i64]) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.coeffs.values().sum()
    }

    /// a(ξ) = |ĉ(ξ)|², real and even.
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, a)| {
                let t: f64 = k.iter().zip(xi).map(|(&x, y)| x as f64 * y).sum();
                a * (2.0 * PI * t).cos()
            })
            .sum()
    }
}

pub fn autocorrelation(mask: &Mask) -> Autocorrelation {
    let total = mask.total();
    let entries: Vec<(&Vec<i64>, &Coefficient)> = mask.iter().collect();
    let mut acc: BTreeMap<Vec<i64>, Coefficient> = BTreeMap::new();
    for (a, ca) in &entries {
        for (b, cb) in &entries {
            let n: Vec<i64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
            let p = ca.mul(cb);
            let v = match acc.remove(&n) {
                Some(old) => old.add(&p),
                None => p,
            };
            acc.insert(n, v);
        }
    }
    let norm = total.mul(&total);
    let coeffs = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| {
            let v = match (&c, &norm) {
                (Coefficient::Exact(a), Coefficient::Exact(b)) => (a / b).to_f64().unwrap_or(f64::NAN),
                _ => c.to_f64() / norm.to_f64(),
            };
            (k, v)
        })
        .collect();
    Autocorrelation { coeffs }
}
