//! Tile masks and tile B-spline masks.
//!
//! The tile B-spline of order ℓ is the (ℓ+1)-fold convolution of the tile
//! indicator; its mask is m·(c₀/m)^{ℓ+1} where c₀ is the digit indicator.

use crate::error::{Error, Result};
use crate::lattice::{DigitSet, DilationMatrix};
use crate::transition::mask::{Coefficient, Mask};

/// c_k = 1 on the digits.
pub fn tile_mask(digits: &DigitSet) -> Mask {
    let n = digits.digits()[0].len();
    Mask::new(n, digits.digits().iter().map(|d| (d.clone(), Coefficient::integer(1))))
        .expect("a digit set is nonempty")
}

/// Mask of the tile B-spline of order `order`, in exact rationals.
pub fn bspline_mask(digits: &DigitSet, order: usize) -> Mask {
    let base = tile_mask(digits);
    let m = digits.len() as i64;
    let mut out = base.clone();
    for _ in 0..order {
        out = out.convolve_raw(&base).scaled(&Coefficient::ratio(1, m));
    }
    out
}

/// Mask of φ_a * φ_b for two masks refinable with the same M: (a * b)/m.
pub fn convolve_masks(a: &Mask, b: &Mask, m: &DilationMatrix) -> Result<Mask> {
    if a.dim() != b.dim() || a.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: if a.dim() != m.dim() { a.dim() } else { b.dim() },
        });
    }
    Ok(a.convolve_raw(b).scaled(&Coefficient::ratio(1, m.m() as i64)))
}
