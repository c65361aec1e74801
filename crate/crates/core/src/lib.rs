//! Second variation of the energy of spectral equipartitions: two-sided
//! Dirichlet-to-Neumann operators from closed forms (circle, separable
//! rectangles) and finite differences, the weighted Hessian, and a mapped-grid
//! surrogate energy for checking it along explicit deformations.

pub mod circle;
pub mod criticality;
pub mod dtn;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod partition;
pub mod report;
pub mod separable;
pub mod strip;

pub use circle::CirclePartition;
pub use criticality::{CoefficientVector, ConstrainedBasis, TraceSet, WeightRho};
pub use dtn::DtnOperator;
pub use error::{Error, Result};
pub use grid::{DiscreteEigenpair, Grid, GridAnalysis};
pub use partition::{
    read_partition, write_partition, ChiAssignment, CurveKind, Domain, Interface, InterfaceNode, NeighborGraph,
    Partition, Subdomain, SubdomainShape,
};
pub use report::{HessianOperator, IdentityReport, ModeInfo, SpectralCounts};
pub use separable::ModeIndex;
pub use strip::{Curve, HessianCheck, Profile, StripFamily};
