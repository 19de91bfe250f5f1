//! ReLU networks that emulate iterative solvers for sparse symmetric positive
//! definite systems.
//!
//! The crate is `no_std` with `alloc`. Networks are stored layer by layer in
//! compressed-row form and built from a small calculus of compositions.

#![no_std]

extern crate alloc;

pub mod arith;
pub mod calculus;
pub mod error;
pub mod iter;
pub(crate) mod math;
pub mod net;
pub mod problems;
pub mod reference;
pub mod sparse;

pub use arith::{mult_net, scalar_product_net, sparse_matvec_net, square_net};
pub use calculus::{concat, concat_sparse, identity_net, parallelize, scale_add_net};
pub use error::{Error, Result};
pub use net::{Defect, Layer, NetworkStats, ReluNetwork};
pub use sparse::{SparseMatrix, SparsityPattern};
pub use iter::{
    build_cg_net, build_richardson_net, build_solver, cheb_plan, m_cg, m_richardson, rho_alpha,
    ChebyshevPlan, Exponent, Method, SolverConfig, SolverMeta, SolverNetwork, SpectralClass,
};
pub use problems::{estimate_extremal_eigs, gen_laplacian, random_rhs, random_spd, FemProblem};
pub use reference::{solve_exact, ChebyshevKind};
