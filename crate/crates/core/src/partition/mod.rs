//! Labelled partitions of paths, loops, surfaces and volumes.

pub mod path;
pub mod surface;
pub mod volume;

pub use path::{
    build_loop_partition, build_path_partition, LabeledLoopPartition, LabeledPathPartition,
};
pub use surface::{
    build_surface_partition, FaceSpec, LabeledSurfacePartition, RowSpec, SurfaceDomain, SurfaceMap,
    SurfaceObject,
};
pub use volume::{build_volume_partition, Brick, LabeledVolumePartition, VolumeMap};
