pub mod axioms;
pub mod bundle;
pub mod catalog;
pub mod cech;
pub mod error;
pub mod gerbe;
pub mod numerics;
pub mod partition;
pub mod phase;
pub mod roundtrip;
pub mod types;

pub use error::{Error, Result};
pub use nalgebra::Complex;
pub use phase::Phase;
pub use types::{vector, ChartId, Loop, Orientation, Path, Vector};
