//! Wedderburn decomposition of matrix *-algebras.
//!
//! Given a finite set of matrices, the *-algebra they generate decomposes as
//! a direct sum of full matrix blocks tensored with identities; a single
//! unitary change of basis exhibits the block structure simultaneously for
//! the algebra and its commutant. This crate computes that unitary with a
//! two-step numerical algorithm (eigenvalue clustering of a generic element,
//! then local basis alignment), and applies it to quantum error avoidance:
//! components with a nontrivial identity factor are decoherence-free
//! subspaces of the quantum channel whose Kraus operators generate the
//! algebra. An optimizer searches for approximate protected subspaces when
//! the channel has none exactly.

pub mod adfs;
pub mod algebra;
pub mod channels;
pub mod error;
pub mod mat;
pub mod seed;
pub mod tol;
pub mod wedderburn;

pub use adfs::{
    adfs_search, bfgs_minimize, grad_J, objective_J, warm_start_unitary, AdfsProblem, AdfsResult,
    InitKind, MemoryPolicy, OptimizerConfig, SearchOutcome, SearchPlan, SearchRow, Termination,
    UnitaryPoint, WarmStartSpec,
};
pub use algebra::{CommutantBasis, GeneratorSet, SampleDepth};
pub use channels::{
    collective_noise, decode, encode, perturbed_collective, spin_multiplicities, DensityMatrix,
    KrausChannel,
};
pub use error::{Error, Result};
pub use mat::{C64, CMat, HermEig};
pub use wedderburn::{Decomposition, Side, Tolerances, WedderburnStructure};
