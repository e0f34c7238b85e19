//! Command-line frontend and file formats for the reconstruction library:
//! volume and frame-bundle serialization, sweep configuration, PGM slice
//! export, and the `usrecon` CLI itself.

pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod fs_util;
pub mod slice;
pub mod volume_file;

pub use cli::run;
pub use error::{AppError, FormatError, EXIT_IO, EXIT_VALIDATION};
pub use volume_file::{load_scalar, load_vector, load_volume, save_volume, VolumePayload};
