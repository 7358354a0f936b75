//! Transition operator, sum rules and regularity reports.

pub mod mask;
pub mod operator;
pub mod regularity;
pub mod sum_rules;

pub use mask::{autocorrelation, Autocorrelation, Coefficient, Mask};
pub use operator::{build_transition, restrict, restrict_matrix, spectral_radius, spectrum, Restriction, Spectrum, TransitionMatrix};
pub use regularity::{
    coordinate_subspace_faces, half_log, regularity, regularity_per_subspace, regularity_with_faces, Analysis, FaceSpec,
    Flag, OrderRow, PerSubspaceReport, RegularityOptions, RegularityReport, SubspaceRow, SubspaceTable,
};
pub use sum_rules::{coset_sums, sum_rules_order};
