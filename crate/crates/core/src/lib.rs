//! Equivalence classes of Pauli strings under Hamiltonian commutation.
//!
//! A spin-1/2 Hamiltonian written as a weighted sum of Pauli strings splits
//! the 4^L string basis into equivalence classes: two strings are equivalent
//! when one is reachable from the other (up to scalar) by iterated
//! commutation with the Hamiltonian's strings. The class of an operator A
//! spans an invariant subspace of Heisenberg evolution, so its cardinality,
//! the operator evolution dimension (OED), bounds the cost of simulating
//! A(t) exactly.
//!
//! The crate provides:
//! - [`pauli`]: phase-exact Pauli string algebra on a bit-packed symplectic
//!   representation.
//! - [`model`]: builders for XY chains, 3-edge-colored interaction graphs
//!   (Kitaev-type), and alternating XY-ZZ chains.
//! - [`closure`]: breadth-first class generation, OEDs, and full partitions.
//! - [`dimpoly`]: exact rational dimension polynomials (Vandermonde solves,
//!   value-vector recursion, degree detection).
//! - [`dynamics`]: the antisymmetric adjoint generator restricted to a class
//!   and trajectory integration (matrix exponential or RK4).
//! - [`quench`]: gate conjugation, gate-extended closure, and piecewise
//!   quenched evolution.
//! - [`oracle`]: dense exact-diagonalization ground truth for small L.
//! - [`config`]: JSON model/gate-schedule configuration shared with the CLI.

pub mod closure;
pub mod config;
pub mod dimpoly;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod oracle;
pub mod pauli;
pub mod quench;

pub use closure::{
    generate_class, generate_class_multi, oed, partition_all, EquivalenceClass, OedResult,
    Partition, DEFAULT_BUDGET,
};
pub use config::ModelConfig;
pub use dimpoly::DimensionPolynomial;
pub use dynamics::{
    evolve, heisenberg_expectation, uniform_grid, AdjointGenerator, EvolveOptions, Method, Probe,
    ProductState, Trajectory,
};
pub use error::{Error, Result};
pub use model::{
    build_kitaev, build_xy, build_xyzz, Boundary, Color, Edge, Hamiltonian, InteractionGraph,
    XYCouplings, XYZZCouplings,
};
pub use pauli::{PauliString, ScaledPauli, SiteOp};
pub use quench::{
    extended_class, quenched_evolution, ConjugationImage, QuenchGate, TimedGate,
};
