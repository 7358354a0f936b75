//! Hölder exponents in L₂ from spectral radii of restricted transition operators.

use num_rational::Rational64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::mask::Mask;
use super::operator::{
    build_transition, default_positivity_grid, leading_polynomial_nonnegative, restrict, spectrum, TransitionMatrix,
};
use super::sum_rules::sum_rules_order;
use crate::attractor::{omega, SupportSet};
use crate::error::{Error, Result};
use crate::lattice::{rational_invariant_check, spectral_moduli_with_tolerance, DilationMatrix, InvariantVerdict, CLUSTER_TOLERANCE};
use crate::trigpoly::{face_basis_with_tolerance, ZeroConstraint, ZeroSet, DEFAULT_NULLITY_TOLERANCE};

/// Slack for the strict inequality ½ log_{1/r} ρ_k > k.
pub const THRESHOLD_TOLERANCE: f64 = 1e-9;

/// ½ log_{1/r} ρ; +∞ when ρ = 0.
pub fn half_log(rho: f64, r: f64) -> f64 {
    if rho <= 0.0 {
        f64::INFINITY
    } else {
        -rho.ln() / (2.0 * r.ln())
    }
}

pub(crate) fn ser_finite<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn ser_opt_finite<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.is_finite() => s.serialize_f64(*v),
        _ => s.serialize_none(),
    }
}

/// Qualifiers attached to a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The generic formula is certified for this dilation matrix.
    GenericGuaranteed,
    /// The exponent comes from caller-supplied faces.
    FaceSupplied,
    /// The generic formula was applied without certification.
    Unverified,
    /// Some ½ log_{1/r} ρ_k lies within tolerance of k.
    BoundaryCase,
    /// No order k passes the criterion; not in L₂ by this test.
    NotInL2,
}

/// Settings shared by the generic and per-subspace analyses.
#[derive(Clone, Debug)]
pub struct RegularityOptions {
    pub max_k: Option<usize>,
    pub nullity_tolerance: f64,
    /// Grid size for the leading-eigenpolynomial sign check; 0 disables it.
    pub positivity_grid: Option<usize>,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            max_k: None,
            nullity_tolerance: DEFAULT_NULLITY_TOLERANCE,
            positivity_grid: None,
        }
    }
}

/// One row of the generic table.
#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    pub k: usize,
    pub dim: usize,
    #[serde(serialize_with = "ser_finite")]
    pub rho: f64,
    #[serde(serialize_with = "ser_finite")]
    pub alpha_candidate: f64,
    pub residual: f64,
    /// Leading eigenpolynomial nonnegative on the grid, when it was checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leading_nonnegative: Option<bool>,
}

/// A face supplied for per-subspace analysis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceSpec {
    pub label: String,
    pub r: f64,
    pub zero_sets: Vec<ZeroSet>,
}

/// One face at one order k.
#[derive(Clone, Debug, Serialize)]
pub struct SubspaceRow {
    pub label: String,
    pub r: f64,
    pub dim: usize,
    #[serde(serialize_with = "ser_finite")]
    pub rho: f64,
    #[serde(serialize_with = "ser_finite")]
    pub alpha: f64,
}

/// All faces at one order k; `alpha` is the minimum over faces.
#[derive(Clone, Debug, Serialize)]
pub struct SubspaceTable {
    pub k: usize,
    pub rows: Vec<SubspaceRow>,
    #[serde(serialize_with = "ser_finite")]
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerSubspaceReport {
    pub tables: Vec<SubspaceTable>,
    pub k_max: i64,
    #[serde(serialize_with = "ser_opt_finite")]
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub sum_rules_order: i64,
    /// r = ρ(M) used in the generic formula.
    pub r: f64,
    pub table: Vec<OrderRow>,
    pub k_max: i64,
    #[serde(serialize_with = "ser_opt_finite")]
    pub alpha: Option<f64>,
    pub flags: Vec<Flag>,
    pub per_subspace: Option<PerSubspaceReport>,
    pub notes: Vec<String>,
}

/// Largest k with value_k > k (within tolerance); −1 when none.
fn select_k(values: &[f64]) -> (i64, bool) {
    let mut k_max = -1;
    let mut boundary = false;
    for (k, &v) in values.iter().enumerate() {
        if (v - k as f64).abs() <= THRESHOLD_TOLERANCE {
            boundary = true;
        }
        if v > k as f64 + THRESHOLD_TOLERANCE {
            k_max = k as i64;
        }
    }
    (k_max, boundary)
}

/// Ω, 𝒯 and the sum-rule order for one (M, mask) pair.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub dilation: DilationMatrix,
    pub mask: Mask,
    pub sum_rules_order: i64,
    pub omega: SupportSet,
    pub transition: TransitionMatrix,
}

impl Analysis {
    pub fn new(m: &DilationMatrix, mask: &Mask) -> Result<Self> {
        if mask.dim() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                found: mask.dim(),
            });
        }
        mask.check_sum(m.m())?;
        let sum_rules_order = sum_rules_order(mask, m);
        let omega = omega(m, &mask.support())?;
        let transition = build_transition(m, mask, &omega)?;
        Ok(Analysis {
            dilation: m.clone(),
            mask: mask.clone(),
            sum_rules_order,
            omega,
            transition,
        })
    }

    fn orders(&self, max_k: Option<usize>) -> Vec<usize> {
        if self.sum_rules_order < 0 {
            return vec![];
        }
        let top = self.sum_rules_order as usize;
        (0..=max_k.map_or(top, |mk| mk.min(top))).collect()
    }

    /// ρ and dimension of the face cut out by `constraints`.
    fn face_radius(&self, constraints: &[ZeroConstraint], opts: &RegularityOptions) -> Result<(usize, f64, f64, Option<bool>)> {
        let space = &self.transition.space;
        let face = face_basis_with_tolerance(space, constraints, opts.nullity_tolerance)?;
        if face.dim == 0 {
            return Ok((0, 0.0, 0.0, None));
        }
        let r = restrict(&self.transition, &face)?;
        let s = spectrum(&r.matrix)?;
        let grid = opts
            .positivity_grid
            .unwrap_or_else(|| default_positivity_grid(space.lattice_dim()));
        let nonneg = match (&s.leading_vector, grid) {
            (Some(v), g) if g > 0 => Some(leading_polynomial_nonnegative(space, &face.basis, v, g)),
            _ => None,
        };
        Ok((face.dim, s.radius, r.residual, nonneg))
    }

    /// Generic report: faces P⁽ᵏ⁾ cut out by a zero of order 2(k+1) at the origin.
    pub fn generic(&self, opts: &RegularityOptions) -> Result<RegularityReport> {
        let n = self.dilation.dim();
        let r = self.dilation.spectral_radius();
        let rows: Vec<Result<OrderRow>> = self
            .orders(opts.max_k)
            .into_par_iter()
            .map(|k| {
                let (dim, rho, residual, nonneg) = self.face_radius(&[ZeroConstraint::origin(n, k)], opts)?;
                Ok(OrderRow {
                    k,
                    dim,
                    rho,
                    alpha_candidate: half_log(rho, r),
                    residual,
                    leading_nonnegative: nonneg,
                })
            })
            .collect();
        let table = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = table.iter().map(|row| row.alpha_candidate).collect();
        let (k_max, boundary) = select_k(&values);
        let alpha = (k_max >= 0).then(|| values[k_max as usize]);
        let mut flags = Vec::new();
        let mut notes = Vec::new();
        let moduli = spectral_moduli_with_tolerance(&self.dilation, CLUSTER_TOLERANCE)?;
        match rational_invariant_check(&self.dilation) {
            InvariantVerdict::GenericGuaranteed => flags.push(Flag::GenericGuaranteed),
            _ if moduli.q() == 1 => {
                flags.push(Flag::GenericGuaranteed);
                notes.push("all eigenvalues of M share one modulus; the generic formula applies".into());
            }
            verdict => {
                flags.push(Flag::Unverified);
                let detail = match verdict {
                    InvariantVerdict::BlockTriangularizable { block, .. } => {
                        format!("M has a rational invariant subspace of dimension {block}")
                    }
                    InvariantVerdict::Unknown { note } => note,
                    InvariantVerdict::GenericGuaranteed => unreachable!(),
                };
                notes.push(format!(
                    "{detail}; the generic value may underestimate the exponent, supply faces for a per-subspace analysis"
                ));
            }
        }
        if boundary {
            flags.push(Flag::BoundaryCase);
        }
        if k_max < 0 {
            flags.push(Flag::NotInL2);
        }
        if self.sum_rules_order < 0 {
            notes.push("mask fails the order-0 sum rules".into());
        }
        if table.iter().any(|row| row.leading_nonnegative == Some(false)) {
            notes.push("a leading eigenpolynomial is not nonnegative on the sampling grid".into());
        }
        notes.push("stability of the refinable function is assumed, not verified".into());
        Ok(RegularityReport {
            sum_rules_order: self.sum_rules_order,
            r,
            table,
            k_max,
            alpha,
            flags,
            per_subspace: None,
            notes,
        })
    }

    /// ρ_{k,s} and α_{k,s} for every face at order k; the origin zero is always added.
    pub fn per_subspace(&self, faces: &[FaceSpec], k: usize, opts: &RegularityOptions) -> Result<SubspaceTable> {
        if faces.is_empty() {
            return Err(Error::Precondition("no faces supplied".into()));
        }
        let n = self.dilation.dim();
        let rows: Vec<Result<SubspaceRow>> = faces
            .par_iter()
            .map(|face| {
                let mut constraints = vec![ZeroConstraint::origin(n, k)];
                for z in &face.zero_sets {
                    let c = ZeroConstraint {
                        set: z.clone(),
                        order: 2 * (k + 1),
                    };
                    if c.dim() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: c.dim(),
                        });
                    }
                    constraints.push(c);
                }
                let (dim, rho, _, _) = self.face_radius(&constraints, opts).map_err(|e| match e {
                    Error::NotInvariant { residual, .. } => Error::NotInvariant {
                        residual,
                        label: Some(face.label.clone()),
                    },
                    other => other,
                })?;
                Ok(SubspaceRow {
                    label: face.label.clone(),
                    r: face.r,
                    dim,
                    rho,
                    alpha: half_log(rho, face.r),
                })
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let alpha = rows.iter().map(|r| r.alpha).fold(f64::INFINITY, f64::min);
        Ok(SubspaceTable { k, rows, alpha })
    }

    /// Per-subspace tables for every admissible k and the resulting exponent.
    pub fn with_faces(&self, faces: &[FaceSpec], opts: &RegularityOptions) -> Result<PerSubspaceReport> {
        let tables = self
            .orders(opts.max_k)
            .into_iter()
            .map(|k| self.per_subspace(faces, k, opts))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = tables.iter().map(|t| t.alpha).collect();
        let (k_max, _) = select_k(&values);
        let alpha = (k_max >= 0).then(|| values[k_max as usize]);
        Ok(PerSubspaceReport { tables, k_max, alpha })
    }
}

/// Generic regularity report for (M, mask).
pub fn regularity(m: &DilationMatrix, mask: &Mask, max_k: Option<usize>) -> Result<RegularityReport> {
    Analysis::new(m, mask)?.generic(&RegularityOptions {
        max_k,
        ..Default::default()
    })
}

/// Per-subspace table at a single order k.
pub fn regularity_per_subspace(m: &DilationMatrix, mask: &Mask, faces: &[FaceSpec], k: usize) -> Result<SubspaceTable> {
    let a = Analysis::new(m, mask)?;
    if a.sum_rules_order < k as i64 {
        return Err(Error::Precondition(format!(
            "mask satisfies sum rules of order {} only, below k = {k}",
            a.sum_rules_order
        )));
    }
    a.per_subspace(faces, k, &RegularityOptions::default())
}

/// Generic report plus per-subspace analysis from the supplied faces.
pub fn regularity_with_faces(
    m: &DilationMatrix,
    mask: &Mask,
    faces: &[FaceSpec],
    opts: &RegularityOptions,
) -> Result<RegularityReport> {
    let a = Analysis::new(m, mask)?;
    let mut report = a.generic(opts)?;
    let per = a.with_faces(faces, opts)?;
    report.flags.retain(|f| *f != Flag::Unverified && *f != Flag::NotInL2);
    report.flags.push(Flag::FaceSupplied);
    for note in report.notes.iter_mut() {
        if let Some(stem) = note.strip_suffix(", supply faces for a per-subspace analysis") {
            *note = format!("{stem}; per-subspace values reported");
        }
    }
    if per.k_max < 0 {
        report.flags.push(Flag::NotInL2);
    }
    report.k_max = per.k_max;
    report.alpha = per.alpha;
    report.per_subspace = Some(per);
    Ok(report)
}

/// Faces J_s^⊥ for a block-diagonal M whose blocks each have one eigenvalue modulus.
///
/// Returns `None` when M is not of that form.
pub fn coordinate_subspace_faces(m: &DilationMatrix) -> Option<Vec<FaceSpec>> {
    let n = m.dim();
    // connected components of the coupling graph
    let mut comp = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        comp[start] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..n {
                if comp[j] == usize::MAX && (m.entry(i, j) != 0 || m.entry(j, i) != 0) {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort();
        blocks.push(members);
    }
    let mut by_modulus: Vec<(f64, Vec<usize>)> = Vec::new();
    for b in &blocks {
        let rows: Vec<Vec<i64>> = b.iter().map(|&i| b.iter().map(|&j| m.entry(i, j)).collect()).collect();
        let sub = crate::lattice::validate_dilation(&rows).ok()?;
        let s = spectral_moduli_with_tolerance(&sub, CLUSTER_TOLERANCE).ok()?;
        if s.q() != 1 {
            return None;
        }
        let r = s.moduli[0];
        match by_modulus
            .iter_mut()
            .find(|(x, _)| (x - r).abs() <= CLUSTER_TOLERANCE * r.max(*x))
        {
            Some((_, coords)) => coords.extend(b),
            None => by_modulus.push((r, b.clone())),
        }
    }
    by_modulus.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let faces = by_modulus
        .iter()
        .enumerate()
        .map(|(s, (r, coords))| {
            let others: Vec<usize> = (0..n).filter(|i| !coords.contains(i)).collect();
            let zero = vec![Rational64::zero(); n];
            let zero_sets = if others.is_empty() {
                vec![]
            } else {
                vec![ZeroSet::Subspace {
                    base: zero,
                    directions: others
                        .iter()
                        .map(|&i| (0..n).map(|j| if i == j { Rational64::one() } else { Rational64::zero() }).collect())
                        .collect(),
                }]
            };
            FaceSpec {
                label: format!("J{}", s + 1),
                r: *r,
                zero_sets,
            }
        })
        .collect();
    Some(faces)
}
