//! Linear algebra building blocks.

pub mod eigen;
pub mod exact;
pub mod poly;
