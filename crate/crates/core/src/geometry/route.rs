use super::{GeometryError, Vertex};

/// One straight piece of an escape route, endpoints inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RouteSegment {
    Horizontal { y: i128, from_x: i128, to_x: i128 },
    Vertical { x: i128, from_y: i128, to_y: i128 },
}

impl RouteSegment {
    pub fn contains(&self, v: Vertex) -> bool {
        match *self {
            RouteSegment::Horizontal { y, from_x, to_x } => {
                v.y == y && (from_x.min(to_x)..=from_x.max(to_x)).contains(&v.x)
            }
            RouteSegment::Vertical { x, from_y, to_y } => {
                v.x == x && (from_y.min(to_y)..=from_y.max(to_y)).contains(&v.y)
            }
        }
    }

    pub fn edge_count(&self) -> u128 {
        match *self {
            RouteSegment::Horizontal { from_x, to_x, .. } => from_x.abs_diff(to_x),
            RouteSegment::Vertical { from_y, to_y, .. } => from_y.abs_diff(to_y),
        }
    }
}

/// The self-avoiding path from a vertex to infinity in a forest
/// configuration: finitely many straight segments followed by a ray going
/// right forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EscapeRoute {
    pub start: Vertex,
    pub segments: Vec<RouteSegment>,
    /// Where the final rightward ray begins.
    pub ray_start: Vertex,
}

impl EscapeRoute {
    pub fn contains(&self, v: Vertex) -> bool {
        (v.y == self.ray_start.y && v.x >= self.ray_start.x)
            || self.segments.iter().any(|s| s.contains(v))
    }

    pub fn translated(&self, dx: i128, dy: i128) -> Result<EscapeRoute, GeometryError> {
        let t = |v: Vertex| v.offset(dx, dy);
        let add = |a: i128, d: i128| a.checked_add(d).ok_or(GeometryError::Overflow);
        let segments = self
            .segments
            .iter()
            .map(|s| {
                Ok(match *s {
                    RouteSegment::Horizontal { y, from_x, to_x } => RouteSegment::Horizontal {
                        y: add(y, dy)?,
                        from_x: add(from_x, dx)?,
                        to_x: add(to_x, dx)?,
                    },
                    RouteSegment::Vertical { x, from_y, to_y } => RouteSegment::Vertical {
                        x: add(x, dx)?,
                        from_y: add(from_y, dy)?,
                        to_y: add(to_y, dy)?,
                    },
                })
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Ok(EscapeRoute { start: t(self.start)?, segments, ray_start: t(self.ray_start)? })
    }
}

/// Accumulates axis-aligned moves into route segments.
pub(crate) struct RouteBuilder {
    start: Vertex,
    cursor: Vertex,
    segments: Vec<RouteSegment>,
}

impl RouteBuilder {
    pub fn new(start: Vertex) -> Self {
        RouteBuilder { start, cursor: start, segments: Vec::new() }
    }

    pub fn cursor(&self) -> Vertex {
        self.cursor
    }

    pub fn move_to(&mut self, target: Vertex) {
        if target == self.cursor {
            return;
        }
        let seg = if target.y == self.cursor.y {
            RouteSegment::Horizontal { y: target.y, from_x: self.cursor.x, to_x: target.x }
        } else {
            debug_assert_eq!(target.x, self.cursor.x, "route moves must be axis-aligned");
            RouteSegment::Vertical { x: target.x, from_y: self.cursor.y, to_y: target.y }
        };
        self.segments.push(seg);
        self.cursor = target;
    }

    pub fn finish(self) -> EscapeRoute {
        EscapeRoute { start: self.start, segments: self.segments, ray_start: self.cursor }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_membership() {
        let mut b = RouteBuilder::new(Vertex::new(0, 3));
        b.move_to(Vertex::new(3, 3));
        b.move_to(Vertex::new(3, 6));
        let r = b.finish();
        assert!(r.contains(Vertex::new(1, 3)));
        assert!(r.contains(Vertex::new(3, 5)));
        assert!(r.contains(Vertex::new(1000, 6)));
        assert!(!r.contains(Vertex::new(2, 6)));
        assert!(!r.contains(Vertex::new(4, 3)));
        let t = r.translated(-1, 2).unwrap();
        assert!(t.contains(Vertex::new(0, 5)));
    }
}
