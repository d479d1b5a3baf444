//! Direct solver for variable-coefficient elliptic problems on boxes in two
//! and three dimensions, built on spectral collocation leaves.
//!
//! The domain is split into a uniform grid of leaves. Each leaf carries a
//! tensor Chebyshev collocation of the operator; interior unknowns are
//! eliminated leaf by leaf, leaving a sparse system on the shared faces which
//! is factorized once and reused for any number of right-hand sides.
//!
//! ```
//! use std::sync::Arc;
//! use hps_core::{build, build_discretization, BatchSchedule, CoefficientField, CornerMode, DomainBox, MeshConfig};
//!
//! let domain = DomainBox::unit(2).unwrap();
//! let disc = Arc::new(build_discretization(domain, MeshConfig::uniform(2, 2, 8, CornerMode::DropCorners)).unwrap());
//! let sys = build(disc.clone(), CoefficientField::laplace(2), &BatchSchedule::default()).unwrap();
//! let exact = |x: &[f64]| x[0] * x[0] - x[1] * x[1];
//! let report = sys.solve_problem(&|_| 0.0, &exact).unwrap();
//! for (i, u) in report.u.iter().enumerate() {
//!     assert!((u - exact(disc.node(i))).abs() < 1e-10);
//! }
//! ```

pub mod condensation;
pub mod dense;
pub mod error;
pub mod geometry;
pub mod local_ops;
pub mod problems;
pub mod sparse_backend;

pub use condensation::{
    build, build_with, reduce_load, solve, BatchSchedule, CachePolicy, InterfaceSystem, LoadReduction, PhaseTimes,
    SolveReport,
};
pub use error::{HpsError, Result};
pub use geometry::{build_discretization, leaf_neighbors, CornerMode, Discretization, DomainBox, MeshConfig};
pub use local_ops::{build_leaf_operator, CoefficientField, LeafFactors, LeafTemplate, PointCoefficients};
pub use sparse_backend::{
    dense_full_system_oracle, DenseBackend, FactorOptions, Factorization, MultifrontalBackend, Ordering,
    SparseBackend, SparseMatrix,
};
