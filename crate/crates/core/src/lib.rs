//! Slow and fast subspaces of linear time-invariant systems.
//!
//! Closed forms (Rosenbrock-pencil deflating subspaces, Markov parameter
//! kernels, transfer-matrix degree formulas) live next to the classical
//! fixpoint recursions in [`oracle`], which serve as an independent check.

pub mod error;
pub mod linalg;
pub mod markov;
pub mod oracle;
pub mod slowspace;
pub mod sysmodel;
pub mod transferdim;

pub use error::{GeoError, Result};
pub use linalg::{EigenRegion, PencilEigenspace, RealMatrix, SubspaceBasis, DEFAULT_TOL};
pub use markov::{ImpulsiveInputBasis, MarkovMatrix};
pub use oracle::{CheckEntry, CrossCheckReport, Verdict};
pub use slowspace::RosenbrockPencil;
pub use sysmodel::{random_system, StateSpaceSystem, DEFAULT_ENTRY_RANGE};
pub use transferdim::{PolyMatrix, Polynomial, Route, TransferDims};
