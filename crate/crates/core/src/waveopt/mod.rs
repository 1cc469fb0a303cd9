//! Scalar electron wave optics on sampled grids.

pub mod apertures;
pub mod export;
pub mod fft;
pub mod field;
pub mod lg;
pub mod propagate;

pub use apertures::{
    apply_circular_aperture, apply_half_plane_block, apply_larmor_rotation, larmor_angle, rotate,
};
pub use field::{ComplexField, Grid};
pub use lg::{lg_mode, lg_rim_radius};
pub use propagate::{
    fraunhofer, fresnel_propagate, inverse_fraunhofer, max_transfer_dz_nm, Method, PropagationPlan,
    NOMINAL_CAMERA_LENGTH_NM,
};
