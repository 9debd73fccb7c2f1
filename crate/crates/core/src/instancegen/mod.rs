//! Instance construction: a programmatic builder, the directive space of a
//! template, and a seeded generator of synthetic designs.

mod builder;
pub mod directives;
mod generate;

pub use builder::InstanceBuilder;
pub use directives::{gen_directive_space, ArrayInfo, PartitionKind, Skeleton, Storage};
pub use generate::{gen_instance, toy_builder, DevicePreset, GenSpec, Generated, Monotonicity};
