//! Problem files: one JSON document per invocation.

use std::path::Path;

use anyhow::Context;
use num_rational::Rational64;
use serde::Deserialize;

use refinable::bspline::bspline_mask;
use refinable::lattice::{validate_dilation, DigitSet, DigitTarget, DilationMatrix};
use refinable::transition::{FaceSpec, Mask};
use refinable::trigpoly::ZeroSet;

use crate::Invalid;

/// A rational entry: an integer or a `[num, den]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum RationalEntry {
    Integer(i64),
    Pair([i64; 2]),
}

impl RationalEntry {
    fn value(self) -> Result<Rational64, Invalid> {
        match self {
            RationalEntry::Integer(v) => Ok(Rational64::from_integer(v)),
            RationalEntry::Pair([_, 0]) => Err(Invalid("zero denominator in a constraint".into())),
            RationalEntry::Pair([n, d]) => Ok(Rational64::new(n, d)),
        }
    }
}

fn rationals(v: &[RationalEntry]) -> Result<Vec<Rational64>, Invalid> {
    v.iter().map(|x| x.value()).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintInput {
    Point {
        z: Vec<RationalEntry>,
    },
    Subspace {
        base: Vec<RationalEntry>,
        directions: Vec<Vec<RationalEntry>>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceInput {
    pub label: String,
    #[serde(alias = "r")]
    pub r_s: f64,
    #[serde(default)]
    pub constraints: Vec<ConstraintInput>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FacesInput {
    /// `"auto"`: coordinate faces of a block-diagonal matrix.
    Auto(String),
    Explicit(Vec<FaceInput>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxInput {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub matrix: Vec<Vec<i64>>,
    #[serde(default)]
    pub digits: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub mask: Option<Mask>,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub max_order: Option<usize>,
    #[serde(default)]
    pub max_k: Option<usize>,
    #[serde(default)]
    pub faces: Option<FacesInput>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub positivity_grid: Option<usize>,
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default)]
    pub sample: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub nodes: Option<Vec<i64>>,
    #[serde(default)]
    pub brute_force: Option<BoxInput>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let p: ProblemFile = serde_json::from_str(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
        if p.digits.is_some() && p.mask.is_some() {
            return Err(Invalid("give either digits or mask, not both".into()).into());
        }
        Ok(p)
    }

    pub fn dilation(&self) -> anyhow::Result<DilationMatrix> {
        Ok(validate_dilation(&self.matrix)?)
    }

    pub fn digit_set(&self, m: &DilationMatrix) -> anyhow::Result<DigitSet> {
        let digits = self.digits.clone().ok_or_else(|| Invalid("this command needs digits".into()))?;
        Ok(DigitSet::new(m, digits, DigitTarget::Matrix)?)
    }

    /// The explicit mask, or the tile B-spline mask of `order` built from the digits.
    pub fn mask_for(&self, m: &DilationMatrix, order: usize) -> anyhow::Result<Mask> {
        if let Some(mask) = &self.mask {
            if mask.dim() != m.dim() {
                return Err(refinable::Error::DimensionMismatch {
                    expected: m.dim(),
                    found: mask.dim(),
                }
                .into());
            }
            return Ok(mask.clone());
        }
        if self.digits.is_none() {
            return Err(Invalid("problem needs digits or mask".into()).into());
        }
        Ok(bspline_mask(&self.digit_set(m)?, order))
    }
}

pub fn face_specs(faces: &[FaceInput], n: usize) -> anyhow::Result<Vec<FaceSpec>> {
    faces
        .iter()
        .map(|f| {
            if !(f.r_s > 1.0) {
                return Err(Invalid(format!("face '{}': r_s must exceed 1", f.label)).into());
            }
            let zero_sets = f
                .constraints
                .iter()
                .map(|c| {
                    let set = match c {
                        ConstraintInput::Point { z } => ZeroSet::Point { z: rationals(z)? },
                        ConstraintInput::Subspace { base, directions } => ZeroSet::Subspace {
                            base: rationals(base)?,
                            directions: directions.iter().map(|d| rationals(d)).collect::<Result<_, _>>()?,
                        },
                    };
                    let dims_ok = match &set {
                        ZeroSet::Point { z } => z.len() == n,
                        ZeroSet::Subspace { base, directions } => {
                            base.len() == n && directions.iter().all(|d| d.len() == n)
                        }
                    };
                    if !dims_ok {
                        return Err(Invalid(format!("face '{}': constraint dimension differs from {n}", f.label)));
                    }
                    Ok(set)
                })
                .collect::<Result<Vec<_>, Invalid>>()?;
            Ok(FaceSpec {
                label: f.label.clone(),
                r: f.r_s,
                zero_sets,
            })
        })
        .collect()
}
