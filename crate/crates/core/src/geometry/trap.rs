use serde::{Deserialize, Serialize};

use super::{Edge, GeometryError, Neighbors, Vertex};

/// A dead end hanging above its anchor: one step up, `entrance_len` steps
/// left, one step up, then `core_len` steps right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrapSpec {
    pub anchor: Vertex,
    /// Horizontal extent of the entrance, in edges.
    pub entrance_len: i128,
    /// Length of the core, in edges.
    pub core_len: i128,
    /// Trap number on the half-line, or order of the owning branch.
    pub index: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrapPart {
    Anchor,
    Entrance,
    Core,
}

impl TrapSpec {
    pub fn new(
        anchor: Vertex,
        entrance_len: i128,
        core_len: i128,
        index: u32,
    ) -> Result<Self, GeometryError> {
        if entrance_len < 1 || core_len < 1 {
            return Err(GeometryError::InvalidParameter(format!(
                "trap lengths must be positive (e={entrance_len}, c={core_len})"
            )));
        }
        let spec = TrapSpec { anchor, entrance_len, core_len, index };
        spec.far_end()?;
        Ok(spec)
    }

    pub fn entrance_row(&self) -> i128 {
        self.anchor.y + 1
    }

    pub fn core_row(&self) -> i128 {
        self.anchor.y + 2
    }

    /// Column shared by the entrance's left end and the core's left end.
    pub fn left_x(&self) -> i128 {
        self.anchor.x - self.entrance_len
    }

    /// Right end of the core.
    pub fn core_right_x(&self) -> i128 {
        self.left_x() + self.core_len
    }

    /// First vertex inside the trap, directly above the anchor.
    pub fn mouth(&self) -> Vertex {
        Vertex::new(self.anchor.x, self.anchor.y + 1)
    }

    /// Left end of the core, the vertex whose hitting defines a core visit.
    pub fn core_entry(&self) -> Vertex {
        Vertex::new(self.left_x(), self.core_row())
    }

    fn far_end(&self) -> Result<Vertex, GeometryError> {
        let left = self
            .anchor
            .x
            .checked_sub(self.entrance_len)
            .ok_or(GeometryError::Overflow)?;
        let right = left.checked_add(self.core_len).ok_or(GeometryError::Overflow)?;
        let row = self.anchor.y.checked_add(2).ok_or(GeometryError::Overflow)?;
        Ok(Vertex::new(right, row))
    }

    /// Smallest and largest column touched by the trap.
    pub fn x_extent(&self) -> (i128, i128) {
        (self.left_x(), self.anchor.x.max(self.core_right_x()))
    }

    /// Where `v` sits in this trap, if anywhere.
    pub fn part_of(&self, v: Vertex) -> Option<TrapPart> {
        if v == self.anchor {
            return Some(TrapPart::Anchor);
        }
        let left = self.left_x();
        if v.y == self.entrance_row() && (left..=self.anchor.x).contains(&v.x) {
            Some(TrapPart::Entrance)
        } else if v.y == self.core_row() && (left..=self.core_right_x()).contains(&v.x) {
            Some(TrapPart::Core)
        } else {
            None
        }
    }

    /// Adds the trap's open edges at `v` to `out`.
    pub fn add_neighbors(&self, v: Vertex, out: &mut Neighbors) {
        let left = self.left_x();
        let (x, y) = (v.x, v.y);
        if v == self.anchor {
            out.insert(v, self.mouth());
        } else if y == self.entrance_row() && (left..=self.anchor.x).contains(&x) {
            if x < self.anchor.x {
                out.insert(v, Vertex::new(x + 1, y));
            }
            if x > left {
                out.insert(v, Vertex::new(x - 1, y));
            }
            if x == self.anchor.x {
                out.insert(v, self.anchor);
            }
            if x == left {
                out.insert(v, Vertex::new(x, y + 1));
            }
        } else if y == self.core_row() && (left..=self.core_right_x()).contains(&x) {
            if x < self.core_right_x() {
                out.insert(v, Vertex::new(x + 1, y));
            }
            if x > left {
                out.insert(v, Vertex::new(x - 1, y));
            }
            if x == left {
                out.insert(v, Vertex::new(x, y - 1));
            }
        }
    }
}

/// Edge path of a trap, from the anchor through the entrance to the far end
/// of the core. Everything before the core's first horizontal edge is the
/// entrance.
pub fn trap_edges(spec: &TrapSpec) -> Result<Vec<Edge>, GeometryError> {
    let far = spec.far_end()?;
    let (d, y) = (spec.anchor.x, spec.anchor.y);
    let left = spec.left_x();
    let mut edges = Vec::with_capacity((spec.entrance_len + spec.core_len + 2) as usize);
    edges.push(Edge::new(spec.anchor, spec.mouth())?);
    for x in (left..d).rev() {
        edges.push(Edge::new(Vertex::new(x + 1, y + 1), Vertex::new(x, y + 1))?);
    }
    edges.push(Edge::new(Vertex::new(left, y + 1), Vertex::new(left, y + 2))?);
    for x in left..far.x {
        edges.push(Edge::new(Vertex::new(x, y + 2), Vertex::new(x + 1, y + 2))?);
    }
    Ok(edges)
}

impl TrapSpec {
    /// Extends `route` from a vertex inside this trap down to the anchor.
    pub(crate) fn route_to_anchor(&self, route: &mut super::route::RouteBuilder) {
        let v = route.cursor();
        match self.part_of(v) {
            Some(TrapPart::Core) => {
                route.move_to(self.core_entry());
                route.move_to(Vertex::new(self.left_x(), self.entrance_row()));
                route.move_to(self.mouth());
                route.move_to(self.anchor);
            }
            Some(TrapPart::Entrance) => {
                route.move_to(self.mouth());
                route.move_to(self.anchor);
            }
            Some(TrapPart::Anchor) | None => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i128, y: i128) -> Vertex {
        Vertex::new(x, y)
    }

    #[test]
    fn smallest_trap_edges_traced_by_hand() {
        let spec = TrapSpec::new(v(8, 0), 1, 1, 1).unwrap();
        let edges = trap_edges(&spec).unwrap();
        let expected = [
            Edge::new(v(8, 0), v(8, 1)).unwrap(),
            Edge::new(v(7, 1), v(8, 1)).unwrap(),
            Edge::new(v(7, 1), v(7, 2)).unwrap(),
            Edge::new(v(7, 2), v(8, 2)).unwrap(),
        ];
        assert_eq!(edges, expected);
    }

    #[test]
    fn edge_count_is_e_plus_c_plus_two() {
        for (e, c) in [(1, 1), (3, 7), (5, 2)] {
            let spec = TrapSpec::new(v(100, 0), e, c, 1).unwrap();
            assert_eq!(trap_edges(&spec).unwrap().len() as i128, e + c + 2);
        }
    }

    #[test]
    fn trap_at_101_12() {
        let spec = TrapSpec::new(v(101, 12), 3, 3, 1).unwrap();
        assert_eq!(spec.left_x(), 98);
        assert_eq!(spec.core_right_x(), 101);
        assert_eq!(spec.core_entry(), v(98, 14));
        assert_eq!(spec.part_of(v(98, 13)), Some(TrapPart::Entrance));
        assert_eq!(spec.part_of(v(101, 13)), Some(TrapPart::Entrance));
        assert_eq!(spec.part_of(v(97, 13)), None);
        assert_eq!(spec.part_of(v(101, 14)), Some(TrapPart::Core));
        assert_eq!(spec.part_of(v(102, 14)), None);
    }

    #[test]
    fn neighbors_agree_with_edge_list() {
        let spec = TrapSpec::new(v(20, 3), 3, 5, 2).unwrap();
        let edges = trap_edges(&spec).unwrap();
        for y in 2..7 {
            for x in 10..30 {
                let p = v(x, y);
                let mut n = Neighbors::new();
                spec.add_neighbors(p, &mut n);
                for e in &edges {
                    if let Some(o) = e.other(p) {
                        assert!(n.contains(&o), "{p} missing {o}");
                    }
                }
                let degree = edges.iter().filter(|e| e.other(p).is_some()).count();
                // The anchor's line edges are not the trap's business.
                assert_eq!(n.len(), degree, "at {p}");
            }
        }
    }

    #[test]
    fn zero_lengths_rejected() {
        assert!(TrapSpec::new(v(0, 0), 0, 1, 1).is_err());
        assert!(TrapSpec::new(v(0, 0), 1, 0, 1).is_err());
    }
}
