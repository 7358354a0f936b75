//! Subdivision: [Sa](α) = Σ_k c_{α−Mk} a(k), iterated to sample refinable
//! functions on M-adic grids.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::DilationMatrix;
use crate::transition::mask::Mask;

/// Default bound on the number of grid values.
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

/// Finitely supported data on ℤⁿ at refinement level j (point k sits at M^{−j}k).
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    pub matrix: DilationMatrix,
    pub level: usize,
    pub values: BTreeMap<Vec<i64>, f64>,
}

impl GridData {
    pub fn new(matrix: &DilationMatrix, level: usize, values: BTreeMap<Vec<i64>, f64>) -> Result<Self> {
        if let Some(k) = values.keys().find(|k| k.len() != matrix.dim()) {
            return Err(Error::DimensionMismatch {
                expected: matrix.dim(),
                found: k.len(),
            });
        }
        Ok(GridData {
            matrix: matrix.clone(),
            level,
            values,
        })
    }

    /// δ₀ at level 0.
    pub fn delta(matrix: &DilationMatrix) -> Self {
        let mut values = BTreeMap::new();
        values.insert(vec![0; matrix.dim()], 1.0);
        GridData {
            matrix: matrix.clone(),
            level: 0,
            values,
        }
    }

    pub fn get(&self, k: &[i64]) -> f64 {
        self.values.get(k).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    /// M^{−j}k.
    pub fn coordinates(&self, k: &[i64]) -> Vec<f64> {
        let inv = self.matrix.inverse_f64();
        let mut x = nalgebra::DVector::from_iterator(k.len(), k.iter().map(|&v| v as f64));
        for _ in 0..self.level {
            x = &inv * x;
        }
        x.iter().copied().collect()
    }

    /// Columns x_1..x_n, value.
    pub fn to_csv(&self) -> String {
        let n = self.matrix.dim();
        let inv = self.matrix.inverse_f64();
        let mut out = String::new();
        let header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
        let _ = writeln!(out, "{},value", header.join(","));
        for (k, v) in &self.values {
            let mut x = nalgebra::DVector::from_iterator(n, k.iter().map(|&c| c as f64));
            for _ in 0..self.level {
                x = &inv * x;
            }
            for c in x.iter() {
                let _ = write!(out, "{c:.12e},");
            }
            let _ = writeln!(out, "{v:.12e}");
        }
        out
    }
}

/// One application of the subdivision operator.
pub fn subdivision_step(mask: &Mask, data: &GridData) -> Result<GridData> {
    let m = &data.matrix;
    if mask.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: mask.dim(),
        });
    }
    let coeffs: Vec<(&Vec<i64>, f64)> = mask.iter().map(|(k, c)| (k, c.to_f64())).collect();
    let mut out: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (k, &a) in &data.values {
        if a == 0.0 {
            continue;
        }
        let mk = m.apply(k);
        for &(n, c) in &coeffs {
            let alpha: Vec<i64> = mk.iter().zip(n).map(|(x, y)| x + y).collect();
            *out.entry(alpha).or_insert(0.0) += c * a;
        }
    }
    Ok(GridData {
        matrix: m.clone(),
        level: data.level + 1,
        values: out,
    })
}

/// S^j applied to `data`.
pub fn iterate(mask: &Mask, data: &GridData, steps: usize) -> Result<GridData> {
    iterate_with_cap(mask, data, steps, DEFAULT_SUPPORT_CAP)
}

pub fn iterate_with_cap(mask: &Mask, data: &GridData, steps: usize, cap: usize) -> Result<GridData> {
    if steps == 0 {
        return Err(Error::Precondition("at least one subdivision step is required".into()));
    }
    // the support grows roughly by a factor m per step
    let growth = (data.matrix.m() as f64).powi(steps as i32);
    let projected = growth * (data.len() + mask.len()) as f64;
    if projected > cap as f64 {
        return Err(Error::SupportCap {
            projected: projected.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    let mut cur = data.clone();
    for _ in 0..steps {
        cur = subdivision_step(mask, &cur)?;
        if cur.len() > cap {
            return Err(Error::SupportCap {
                projected: cur.len(),
                cap,
            });
        }
    }
    Ok(cur)
}

/// S^j δ₀, which approximates φ on M^{−j}ℤⁿ for convergent schemes.
pub fn sample_refinable(mask: &Mask, m: &DilationMatrix, steps: usize) -> Result<GridData> {
    iterate(mask, &GridData::delta(m), steps)
}
