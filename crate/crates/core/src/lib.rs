//! Toeplitz quantization of the Manin quantum plane `θθ̄ = qθ̄θ`.
//!
//! Weighted inner products on `ℂ[θ]`, Toeplitz matrices, coherent states,
//! radial measures giving a resolution of the identity, symbol calculus and
//! the nilpotent paragrassmann case.

pub mod algebra;
pub mod coherent;
pub mod error;
pub mod export;
pub mod measure;
pub mod model;
pub mod numeric;
pub mod paragrassmann;
pub mod symbols;
pub mod toeplitz;
pub mod verification;
pub mod weights;

pub use algebra::{sesquilinear_form, ManinElement, ManinMonomial};
pub use error::{Error, ErrorClass, Result};
pub use model::{Model, QParam};
pub use weights::{WeightRegistry, WeightRule, WeightSequence, WeightSpec};
