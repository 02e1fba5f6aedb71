pub mod chain;
pub mod error;
pub mod exact;
pub mod json;
pub mod maps;
pub mod pushout;
pub mod spaces;
pub mod suite;

pub use error::{Error, Result};
pub use maps::{DistortionReport, EpsStar, LinearMap};
pub use spaces::{PolyhedralSpace, Subspace};

pub use exact::Rational;
pub type Matrix = exact::Matrix<Rational>;
pub type Vector = Vec<Rational>;
