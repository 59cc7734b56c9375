//! Riemann simple-wave and k-wave construction for first-order quasilinear
//! systems whose coefficients depend on both the dependent and the
//! independent variables.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: a small symbolic engine (parse, print, differentiate,
//!   evaluate, probabilistic zero test).
//! * [`system`]: quasilinear systems, the system file format,
//!   homogenization and the regular-stratum split of simple elements.
//! * [`geometry`]: wave covectors and characteristic vectors, Lie brackets,
//!   frame decompositions, the k-wave existence conditions and potentials.
//! * [`frobenius`]: rescaling a frame with pairwise-closed brackets into a
//!   commuting one.
//! * [`solver`]: characteristic integration, hodograph surfaces and the
//!   implicit Newton solve with gradient-catastrophe monitoring.
//! * [`verify`]: independent finite-difference checks of solution fields.
//! * [`pipeline`]: the end-to-end analysis driven by the `kwave` binary.

pub mod expr;
pub mod fixtures;
pub mod frobenius;
pub mod geometry;
pub mod linalg;
pub mod ode;
pub mod par;
pub mod pipeline;
pub mod solver;
pub mod system;
pub mod verify;

pub use expr::{parse, DomainBox, Expr, Point, VarSpace, ZeroTest, ZeroVerdict};
pub use par::Exec;
pub use system::QuasilinearSystem;
