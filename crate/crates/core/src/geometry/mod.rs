//! Lazy percolation configurations: the trapped half-line and the fractal
//! branch construction, plus translation and structural audits.

mod audit;
mod fractal;
mod route;
mod shift;
mod trap;
mod vertex;
mod warmup;

use thiserror::Error;

pub use audit::{audit_window, AuditReport, Violation};
pub use fractal::{line_order, BranchDescriptor, FractalConfig, Location, DEFAULT_MAX_ORDER, MAX_SUPPORTED_ORDER};
pub use route::{EscapeRoute, RouteSegment};
pub use shift::{sample_shifts, ShiftedConfig};
pub use trap::{trap_edges, TrapPart, TrapSpec};
pub use vertex::{Edge, Neighbors, Vertex, Window};
pub use warmup::WarmupConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate arithmetic overflowed the 128-bit range")]
    Overflow,
    #[error("query needs a branch of order {order}, beyond the truncation order {max_order}")]
    Truncation { order: u32, max_order: u32 },
    #[error("{0} and {1} are not lattice neighbors")]
    NotAnEdge(Vertex, Vertex),
    #[error("{0} is not part of the configuration")]
    NotInConfiguration(Vertex),
    #[error("{0} is not on the main part of an order-1 branch")]
    NotOnOrderOneBranch(Vertex),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A named piece of a configuration, used by audits to check that
/// structures only meet at designated attach points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureId {
    /// The horizontal half-line of the trapped-line model.
    Line,
    /// A branch (main part plus abutment), keyed by order, line and tip.
    Branch { order: u32, y: i128, tip: i128 },
    /// A trap, keyed by its anchor.
    Trap { anchor: Vertex },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Claim {
    pub structure: StructureId,
    /// The vertex belongs to another structure and this one only attaches
    /// there (branch roots, trap anchors).
    pub attach: bool,
}

impl Claim {
    pub fn owns(structure: StructureId) -> Self {
        Claim { structure, attach: false }
    }

    pub fn attaches(structure: StructureId) -> Self {
        Claim { structure, attach: true }
    }
}

/// Read-only adjacency oracle for an infinite configuration.
pub trait Configuration: Send + Sync {
    /// Open neighbors of `v`, ordered right, left, up, down.
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError>;

    /// The trap whose anchor is `v`, if any.
    fn trap_anchored_at(&self, v: Vertex) -> Result<Option<TrapSpec>, GeometryError>;

    /// Structures containing `v`.
    fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError>;

    /// The unique self-avoiding path from `v` to infinity.
    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError>;

    /// Walks must stay strictly left of this column (truncated models).
    fn truncation_x(&self) -> Option<i128> {
        None
    }
}

impl<C: Configuration + ?Sized> Configuration for &C {
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
        (**self).neighbors(v)
    }
    fn trap_anchored_at(&self, v: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        (**self).trap_anchored_at(v)
    }
    fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError> {
        (**self).claims(v)
    }
    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
        (**self).escape_route(v)
    }
    fn truncation_x(&self) -> Option<i128> {
        (**self).truncation_x()
    }
}

impl<C: Configuration + ?Sized> Configuration for std::sync::Arc<C> {
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
        (**self).neighbors(v)
    }
    fn trap_anchored_at(&self, v: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        (**self).trap_anchored_at(v)
    }
    fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError> {
        (**self).claims(v)
    }
    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
        (**self).escape_route(v)
    }
    fn truncation_x(&self) -> Option<i128> {
        (**self).truncation_x()
    }
}

impl<C: Configuration + ?Sized> Configuration for Box<C> {
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
        (**self).neighbors(v)
    }
    fn trap_anchored_at(&self, v: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        (**self).trap_anchored_at(v)
    }
    fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError> {
        (**self).claims(v)
    }
    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
        (**self).escape_route(v)
    }
    fn truncation_x(&self) -> Option<i128> {
        (**self).truncation_x()
    }
}

/// Open edges with both endpoints in `window`, canonical and sorted.
pub fn window_edges<C: Configuration + ?Sized>(
    cfg: &C,
    window: &Window,
) -> Result<Vec<Edge>, GeometryError> {
    let mut edges = Vec::new();
    for y in window.y_min..=window.y_max {
        for x in window.x_min..=window.x_max {
            let v = Vertex::new(x, y);
            for u in cfg.neighbors(v)?.iter() {
                // Each edge is emitted from its canonical first endpoint.
                if v < *u && window.contains(*u) {
                    edges.push(Edge::new(v, *u)?);
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}
