//! Tabular files, bulk load and dump, partition bundles, and fixtures.

pub mod attrs;
pub mod bundle;
pub mod fixture;
pub mod load;
pub mod size;
pub mod tables;
pub mod tabular;

pub use bundle::{read_bundle, write_bundle, write_bundles, BundleHeader, PartitionBundle};
pub use fixture::generate_cube_mesh;
pub use load::{bulk_load, CheckMode, LoadError, LoadReport, RowViolation, TargetTable};
pub use size::{estimate_solution_size, SolutionSizeQuery};
pub use tabular::{FormatError, Schema};
