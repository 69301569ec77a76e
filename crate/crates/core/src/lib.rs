//! Symbolic tensor calculus and flatness certification for Riemannian and
//! sub-Riemannian structures.
//!
//! The building blocks are exact: rational-function expressions with a
//! canonical form, exact rational linear algebra, and graded Lie algebras
//! with rational structure constants. Numeric sampling is used only where an
//! expression involves transcendental functions.

pub mod carnot;
pub mod flatness;
pub mod geometry;
pub mod linalg;
pub mod report;
pub mod riemann;
pub mod scalar;
pub mod subriemann;
pub mod symexpr;

pub use carnot::StratifiedAlgebra;
pub use linalg::Matrix;
pub use scalar::{Rational, Scalar};
pub use symexpr::{Chart, Expr, SampleConfig, ZeroVerdict};

/// Exact rational matrix.
pub type RationalMatrix = Matrix<Rational>;
/// Floating-point matrix.
pub type FloatMatrix = Matrix<f64>;
/// Matrix of symbolic expressions.
pub type ExprMatrix = Matrix<Expr>;
/// Stratified algebra with exact rational structure constants.
pub type CarnotAlgebra = StratifiedAlgebra<Rational>;
/// Stratified algebra with floating-point structure constants.
pub type FloatCarnotAlgebra = StratifiedAlgebra<f64>;
