//! Chain domains: specification, realization, geometric constants and boundary
//! neighbourhoods.

pub mod chain;
pub mod constants;
pub mod index;
pub mod offset;
pub mod point;
pub mod spec;

pub use chain::{
    base_domain, build_chain_domain, first_self_intersection, realize_config, Corner, CornerKind, EdgeTag, RealizedDomain, RealizedNeck,
    Region,
};
pub use constants::{constants_for, estimate_geometric_constants, verify_constants, GeometricConstants, Provenance};
pub use offset::{boundary_neighborhood_area, polygon_neighborhood_area};
pub use point::Point;
pub use spec::{
    disc, rectangle, two_squares, Arc, DomainConfig, Homotopy, NeckSpec, PieceSpec, UserConstants, WidthEntry,
    WidthFamily,
};
