use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// A lattice site. Coordinates are 128-bit so that doubly exponential branch
/// lengths stay representable; every offset is overflow-checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i128,
    pub y: i128,
}

impl Vertex {
    pub const fn new(x: i128, y: i128) -> Self {
        Vertex { x, y }
    }

    pub fn offset(self, dx: i128, dy: i128) -> Result<Vertex, GeometryError> {
        let x = self.x.checked_add(dx).ok_or(GeometryError::Overflow)?;
        let y = self.y.checked_add(dy).ok_or(GeometryError::Overflow)?;
        Ok(Vertex { x, y })
    }

    pub fn right(self) -> Result<Vertex, GeometryError> {
        self.offset(1, 0)
    }

    pub fn left(self) -> Result<Vertex, GeometryError> {
        self.offset(-1, 0)
    }

    pub fn up(self) -> Result<Vertex, GeometryError> {
        self.offset(0, 1)
    }

    pub fn down(self) -> Result<Vertex, GeometryError> {
        self.offset(0, -1)
    }

    /// True when `other` is one of the four lattice neighbors.
    pub fn is_adjacent(self, other: Vertex) -> bool {
        let dx = self.x.abs_diff(other.x);
        let dy = self.y.abs_diff(other.y);
        dx + dy == 1
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// An undirected unit edge, stored with the lexicographically smaller
/// endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    a: Vertex,
    b: Vertex,
}

impl Edge {
    pub fn new(u: Vertex, v: Vertex) -> Result<Edge, GeometryError> {
        if !u.is_adjacent(v) {
            return Err(GeometryError::NotAnEdge(u, v));
        }
        Ok(if u <= v { Edge { a: u, b: v } } else { Edge { a: v, b: u } })
    }

    pub fn a(&self) -> Vertex {
        self.a
    }

    pub fn b(&self) -> Vertex {
        self.b
    }

    /// Larger x-coordinate of the two endpoints; sets the edge's resistance.
    pub fn x_max(&self) -> i128 {
        self.a.x.max(self.b.x)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    pub fn other(&self, v: Vertex) -> Option<Vertex> {
        if v == self.a {
            Some(self.b)
        } else if v == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.a.x, self.a.y, self.b.x, self.b.y)
    }
}

/// Open neighbors of a vertex, kept in the fixed order right, left, up, down.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Neighbors {
    items: ArrayVec<Vertex, 4>,
}

impl Neighbors {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a neighbor set from presence flags around `v`.
    pub fn from_flags(
        v: Vertex,
        right: bool,
        left: bool,
        up: bool,
        down: bool,
    ) -> Result<Self, GeometryError> {
        let mut n = Neighbors::new();
        if right {
            n.items.push(v.right()?);
        }
        if left {
            n.items.push(v.left()?);
        }
        if up {
            n.items.push(v.up()?);
        }
        if down {
            n.items.push(v.down()?);
        }
        Ok(n)
    }

    /// Inserts `u` keeping the canonical order; duplicates are ignored.
    pub fn insert(&mut self, center: Vertex, u: Vertex) {
        if self.items.contains(&u) {
            return;
        }
        let rank = |w: &Vertex| direction_rank(center, *w);
        let pos = self
            .items
            .iter()
            .position(|w| rank(w) > rank(&u))
            .unwrap_or(self.items.len());
        self.items.insert(pos, u);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.items.contains(v)
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vertex> {
        self.items.iter()
    }
}

impl<'a> IntoIterator for &'a Neighbors {
    type Item = &'a Vertex;
    type IntoIter = std::slice::Iter<'a, Vertex>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

fn direction_rank(center: Vertex, w: Vertex) -> u8 {
    match (w.x - center.x, w.y - center.y) {
        (1, 0) => 0,
        (-1, 0) => 1,
        (0, 1) => 2,
        (0, -1) => 3,
        _ => 4,
    }
}

/// Axis-aligned inclusive rectangle of lattice sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: i128,
    pub x_max: i128,
    pub y_min: i128,
    pub y_max: i128,
}

impl Window {
    pub fn new(x_min: i128, x_max: i128, y_min: i128, y_max: i128) -> Result<Self, GeometryError> {
        if x_min > x_max || y_min > y_max {
            return Err(GeometryError::InvalidParameter(format!(
                "empty window [{x_min},{x_max}]x[{y_min},{y_max}]"
            )));
        }
        Ok(Window { x_min, x_max, y_min, y_max })
    }

    pub fn contains(&self, v: Vertex) -> bool {
        (self.x_min..=self.x_max).contains(&v.x) && (self.y_min..=self.y_max).contains(&v.y)
    }

    pub fn width(&self) -> u128 {
        self.x_max.abs_diff(self.x_min) + 1
    }

    pub fn height(&self) -> u128 {
        self.y_max.abs_diff(self.y_min) + 1
    }
}
