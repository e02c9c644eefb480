//! Pluri-Jensen measures from analytic disks and the probes built on them.

pub mod field;
pub mod lift;
pub mod optimize;
pub mod probes;
pub mod sets;

pub use field::{Field, FnField, InteriorIndicator, PshField};
pub use optimize::{
    disk_functional, jensen_slack, poletsky_infimum, poletsky_infimum_seeded, DiskSpace, JensenReport, OptimizerConfig,
    PoletskyResult,
};
pub use sets::{Domain, PointSet, SetDescriptor};
