//! Linear-algebra kernels: sparse storage, direct banded solvers, dense
//! symmetric eigensolvers and restarted Krylov methods.

pub mod banded;
pub mod csr;
pub mod dense;
pub mod jacobi;
pub mod krylov;
pub mod scalar;
pub mod tridiag;

pub use banded::{BandedLu, ShiftedSolver};
pub use csr::CsrMatrix;
pub use krylov::{arnoldi, lanczos, KrylovParams, LinearOperator, RitzPairs};
pub use scalar::Scalar;
