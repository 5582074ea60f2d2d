//! Instance generators and the measurement of the proper function `M(N)`.

pub mod constants;
pub mod free_group;
pub mod generators;
pub mod profile;

pub use constants::{measure_constants, Overrides};
pub use generators::{generate_instance, Fiber, GeneratorSpec};
pub use profile::{
    ct_profile, default_base_point, enumerate_admissible, Admissible, CTProfile, ProfileConfig, ProfileRow, RowLadder,
};
