//! Freehand 3D ultrasound volume reconstruction with incidence-angle weighting.
//!
//! A tracked 2D probe sweeps over anatomy; each frame carries a rigid pose.
//! Pixels are scattered into a voxel grid (pixel nearest-neighbor), and the
//! contribution of each beam to a voxel is weighted by how perpendicular the
//! beam is to the estimated bone surface at that voxel. The crate provides:
//!
//! - [`geometry`]: rigid poses, probe beam geometry, pixel→voxel mapping.
//! - [`volume`]: scalar and vector voxel grids.
//! - [`mapprep`]: 3D Sobel / Gaussian filters building the bone-surface
//!   probability map and its gradient map from a label volume.
//! - [`recon`]: averaging baseline, angle-weighted distribution with optional
//!   reflection-energy compensation, and nearest-neighbor hole filling.
//! - [`simulate`]: synthetic phantoms and multi-angle sweeps with
//!   angle-dependent reflection, shadowing, and speckle.
//! - [`metrics`]: surface contrast, CNR, and boundary completeness.
//!
//! The crate is `no_std` + `alloc`; all file formats and the CLI live in the
//! companion `usrecon` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod geometry;
pub mod mapprep;
mod math;
pub mod metrics;
pub mod recon;
pub mod simulate;
pub mod volume;

pub use geometry::{BeamDirectionMap, FrameGeometry, ProbeKind, RigidPose, VolumeMeta};
pub use recon::{Frame, Method, ReconConfig, ReconOutput, TrackedFrameSet};
pub use volume::{ScalarVolume, VectorVolume};
