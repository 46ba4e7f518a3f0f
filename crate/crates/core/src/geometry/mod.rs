//! Domains, inclusions, interior envelopes and disc-chain geometry.

pub mod chain;
pub mod curve;
pub mod domain;
pub mod inclusion;
pub mod region;

pub use chain::{
    build_chain, cover_epsilon, default_xtilde, geometric_constants, k_of_rho, Chain, ChainLength,
    Cone, GeometricConstants,
};
pub use curve::BoundaryCurve;
pub use domain::{make_domain, DomainShape, DomainSpec, PlateDomain};
pub use inclusion::{check_fatness, cover_with_squares, FatnessReport, Inclusion, Square};
pub use region::{EmptyRegion, LevelSetRegion, Region, Shape};
