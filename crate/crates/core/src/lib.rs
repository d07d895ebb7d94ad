//! Metric placement of meshes into a single image.
//!
//! Given a pinhole camera, a 2D box and a mean visible depth per object, the
//! solver recovers a uniform scale and a translation for each mesh, and the
//! rotation search in [`pose`] fills in orientation. [`harness`] ties these
//! together into synthetic scene generation, the solve pipeline and scoring.

pub mod bbox;
pub mod camera;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod metrics;
pub mod obj;
pub mod occlusion;
pub mod pose;
pub mod raster;
pub mod solver;
pub mod transform;
pub mod voxel;

pub use bbox::BBox2D;
pub use camera::PinholeCamera;
pub use error::{Error, Result};
pub use mesh::TriangleMesh;
pub use transform::AnchoredSimilarityTransform;
