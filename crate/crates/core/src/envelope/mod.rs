//! Grid oracles: obstacle envelopes in the plane, Laplacian masses on
//! slices, upper regularization and the CLN ratio in C^2.

pub mod cln;
pub mod ddc;
pub mod obstacle;
pub mod regularize;

pub use cln::{cln_ratio, ClnParams, ClnReport};
pub use ddc::{discrete_ddc_mass, DdcMass};
pub use obstacle::{relative_extremal_obstacle, ObstacleSolution, ObstacleSpec};
pub use regularize::{
    hartogs_bound_check, limsup_defect, sup_star_family, usc_regularize, DefectReport, HartogsReport,
};
