//! Morphology of Euclidean sets in three representations: convex H-polytopes
//! (exact facet arithmetic), 1-D interval sets over rationals (exact), and
//! windowed binary rasters (controlled approximation).
//!
//! On top of the erosion/expansion operators the crate classifies sets by how
//! they respond to erosion — shrinking onto an inscribed ball, growing away
//! from an exscribed ball, sliding along a translation direction, or none —
//! and constructs the scale-invariant sets (spirals, discrete spirals,
//! IFS extensions) whose erosions realize the distance-increasing case.

pub mod acceptance;
pub mod convex;
pub mod generators;
pub mod geom;
pub mod interval1d;
pub mod raster;
pub mod render;
