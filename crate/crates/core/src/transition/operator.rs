//! The transition operator on P_Ω and its restrictions to invariant faces.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::mask::{autocorrelation, Autocorrelation, Mask};
use crate::attractor::SupportSet;
use crate::error::{Error, Result};
use crate::lattice::DilationMatrix;
use crate::linalg::eigen;
use crate::trigpoly::{FaceBasis, PolySpace};

/// Dense matrix of 𝒯 in folded coordinates.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub matrix: DMatrix<f64>,
    pub space: Arc<PolySpace>,
    pub autocorrelation: Autocorrelation,
    pub dilation: DilationMatrix,
}

impl TransitionMatrix {
    pub fn apply(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.matrix * p
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// (𝒯p)_k = m Σ_j a_{Mk−j} p_j over k, j ∈ Ω, with a the normalized autocorrelation.
pub fn build_transition(m: &DilationMatrix, mask: &Mask, omega: &SupportSet) -> Result<TransitionMatrix> {
    if mask.dim() != m.dim() || omega.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: if mask.dim() != m.dim() { mask.dim() } else { omega.dim() },
        });
    }
    mask.check_sum(m.m())?;
    let space = PolySpace::new(omega)?;
    let auto = autocorrelation(mask);
    let scale = m.m() as f64;
    let size = space.len();
    let entries: Vec<(&Vec<i64>, f64)> = auto.coefficients().iter().map(|(k, v)| (k, *v)).collect();
    let mut t = DMatrix::<f64>::zeros(size, size);
    for (row, k) in space.representatives().iter().enumerate() {
        let mk = m.apply(k);
        for (nvec, a) in &entries {
            let j: Vec<i64> = mk.iter().zip(nvec.iter()).map(|(x, y)| x - y).collect();
            if let Some(col) = space.index_of(&j) {
                t[(row, col)] += scale * a;
            }
        }
    }
    check_closure(m, omega, &auto, &space)?;
    Ok(TransitionMatrix {
        matrix: t,
        space,
        autocorrelation: auto,
        dilation: m.clone(),
    })
}

/// No image coefficient (𝒯p)_k with k ∉ Ω may be nonzero.
fn check_closure(m: &DilationMatrix, omega: &SupportSet, auto: &Autocorrelation, space: &PolySpace) -> Result<()> {
    let mut candidates: std::collections::BTreeMap<Vec<i64>, DVector<f64>> = Default::default();
    let scale = m.m() as f64;
    for j in omega.points() {
        for (nvec, a) in auto.coefficients() {
            let s: Vec<i64> = j.iter().zip(nvec).map(|(x, y)| x + y).collect();
            if let Some(k) = m.solve_integer(&s) {
                if omega.contains(&k) {
                    continue;
                }
                let col = space.index_of(j).expect("Ω point is indexed");
                let row = candidates.entry(k).or_insert_with(|| DVector::zeros(space.len()));
                row[col] += scale * a;
            }
        }
    }
    for (k, row) in candidates {
        if row.amax() > 1e-14 {
            return Err(Error::SupportEscape { index: k });
        }
    }
    Ok(())
}

/// R = Nᵀ T N together with the relative invariance residual ‖TN − NR‖ / ‖TN‖.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub matrix: DMatrix<f64>,
    pub residual: f64,
}

/// Largest relative residual accepted by [`restrict`].
pub const INVARIANCE_TOLERANCE: f64 = 1e-8;

pub fn restrict(t: &TransitionMatrix, face: &FaceBasis) -> Result<Restriction> {
    restrict_matrix(&t.matrix, &face.basis)
}

pub fn restrict_matrix(t: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<Restriction> {
    if basis.ncols() == 0 {
        return Err(Error::EmptyFace);
    }
    let tn = t * basis;
    let r = basis.tr_mul(&tn);
    let diff = &tn - basis * &r;
    let scale = tn.norm();
    let residual = if scale == 0.0 { diff.norm() } else { diff.norm() / scale };
    if residual > INVARIANCE_TOLERANCE {
        return Err(Error::NotInvariant { residual, label: None });
    }
    Ok(Restriction { matrix: r, residual })
}

/// Max |λ| over the full spectrum.
pub fn spectral_radius(r: &DMatrix<f64>) -> Result<f64> {
    eigen::spectral_radius(r)
}

pub use eigen::{spectrum, Spectrum};

/// Grid resolution used for the nonnegativity check of the leading eigenpolynomial.
pub fn default_positivity_grid(n: usize) -> usize {
    if n <= 2 {
        64
    } else {
        32
    }
}

/// Minimum and maximum of a folded polynomial on the grid {g / G : g ∈ {0..G−1}ⁿ}.
pub fn grid_extrema(space: &PolySpace, coeffs: &DVector<f64>, grid: usize) -> (f64, f64) {
    let n = space.lattice_dim();
    let g = grid as i64;
    let table: Vec<f64> = (0..grid)
        .map(|i| (2.0 * std::f64::consts::PI * i as f64 / grid as f64).cos())
        .collect();
    let reps = space.representatives();
    let total = grid.pow(n as u32);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut point = vec![0i64; n];
    for idx in 0..total {
        let mut rem = idx;
        for c in point.iter_mut().rev() {
            *c = (rem % grid) as i64;
            rem /= grid;
        }
        let mut v = coeffs[0];
        for (k, c) in reps.iter().zip(coeffs.iter()).skip(1) {
            let dot: i64 = k.iter().zip(&point).map(|(a, b)| a * b).sum();
            v += 2.0 * c * table[dot.rem_euclid(g) as usize];
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Whether the leading eigenpolynomial of a face restriction is nonnegative on a grid.
///
/// Logs a warning when it is not; the caller decides what to do with the answer.
pub fn leading_polynomial_nonnegative(
    space: &PolySpace,
    basis: &DMatrix<f64>,
    leading: &DVector<f64>,
    grid: usize,
) -> bool {
    let coeffs = basis * leading;
    let (lo, hi) = grid_extrema(space, &coeffs, grid);
    // eigenvectors carry an arbitrary sign
    let (lo, hi) = if hi.abs() >= lo.abs() { (lo, hi) } else { (-hi, -lo) };
    let ok = lo >= -1e-8 * hi.abs();
    if !ok {
        log::warn!("leading eigenpolynomial takes negative values on the grid: min {lo:e}, max {hi:e}");
    }
    ok
}
