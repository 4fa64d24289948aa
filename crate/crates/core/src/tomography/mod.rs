//! Symplectic tomograms: forward transforms, ray lookup and inversions.

mod field;
mod forward;
mod inverse;

pub use field::{
    unit_circle_rays, DeltaSlice, GaussianTomogram, Ray, RayLookup, TomogramField, TomogramSlice,
    MIN_INTERPOLATION_ANGLES,
};
pub use forward::{
    gaussian_tomogram_eval, radon_classical, radon_gaussian, radon_phase_field, radon_point, sigma_xx,
    tomogram_quantum, tomogram_wavefunction, ClassicalTomogram, EDGE_TOL,
};
pub use inverse::{
    inverse_radon, reconstruct_density, reconstruct_density_raw, DensityReconstruction, PolarCharacteristic,
    CLIP_TOL, MIN_ANGLES,
};
