//! Minimal neural-network toolkit with explicit backward passes.
//!
//! Layers are plain structs holding [`Param`]s; callers keep whatever
//! activations a backward pass needs. Everything is generic over [`Real`]
//! so gradient code can be checked in `f64` and run in `f32`.

pub mod adam;
pub mod conv;
pub mod error;
pub mod init;
pub mod layer_norm;
pub mod linear;
pub mod ops;
pub mod param;
pub mod real;

pub use adam::Adam;
pub use conv::Conv2d;
pub use error::{NnError, Result};
pub use init::Init;
pub use layer_norm::{LayerNorm, LnCache};
pub use linear::Linear;
pub use param::{ArchiveSource, InitSource, Module, ModuleExt, Param, ParamSource, ParamSpec, ShapeSource};
pub use real::{gemm, Real};
