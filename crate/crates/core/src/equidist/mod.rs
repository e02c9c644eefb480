//! Pullbacks of measures, Cesaro averages, moment comparison and Birkhoff
//! averages for Henon-type automorphisms.

pub mod birkhoff;
pub mod cesaro;
pub mod henon;
pub mod moments;

pub use birkhoff::{band_constancy, birkhoff_field, BirkhoffFields, BirkhoffParams, Bump, Constancy, OrbitSource};
pub use cesaro::{
    backward_green_fraction, cesaro_cloud, cesaro_study, compare_study, default_burn_in, equidist_compare,
    invariance_residual_measure, pullback_cloud, CesaroParams, CesaroRow, EquidistReport, Pullback, PullbackScheme,
    SupportStats,
};
pub use henon::{HenonForm, ShadowOrbit, ShadowParams};
pub use moments::{moment_exponents, moment_vector, MomentVector};
