//! Writes the twin-ridge phantom label volume used by the README
//! walkthrough: a 64³ grid, 1 mm voxels, two triangular ridges on a slab.

use std::path::PathBuf;
use std::process::ExitCode;

use usrecon::volume_file::{save_volume, VolumePayload};
use usrecon_core::simulate::{make_phantom, PhantomShape, TwinRidgeParams};
use usrecon_core::VolumeMeta;

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1).map(PathBuf::from) else {
        eprintln!("usage: twin_ridge_phantom <out.usvol>");
        return ExitCode::FAILURE;
    };
    let meta = VolumeMeta::new([64, 64, 64], [1.0; 3], [0.0; 3]).unwrap();
    let label = make_phantom(
        &PhantomShape::TwinRidge(TwinRidgeParams {
            base_depth: 44.0,
            ridge_height: 18.0,
            ridge_half_width: 7.0,
            ridge_centers: [18.0, 45.0],
        }),
        &meta,
    );
    match save_volume(&path, &VolumePayload::U8(label)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
