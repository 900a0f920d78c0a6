use std::fmt;

use super::{Claim, Configuration, Edge, GeometryError, StructureId, Vertex, Window};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Adding this edge closed a cycle.
    Cycle(Edge),
    /// `from` lists `to` as a neighbor but not the other way round.
    Asymmetric { from: Vertex, to: Vertex },
    /// Two structures own the same vertex.
    Overlap { vertex: Vertex, structures: Vec<StructureId> },
    /// A structure attaches at a vertex that nothing owns.
    DanglingAttach { vertex: Vertex, structure: StructureId },
    /// An open edge whose endpoints share no structure.
    Orphan(Edge),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle(e) => write!(f, "cycle closed by edge {e}"),
            Violation::Asymmetric { from, to } => write!(f, "{from} lists {to}, not conversely"),
            Violation::Overlap { vertex, structures } => {
                write!(f, "{vertex} owned by {} structures: {structures:?}", structures.len())
            }
            Violation::DanglingAttach { vertex, structure } => {
                write!(f, "{structure:?} attaches at unowned {vertex}")
            }
            Violation::Orphan(e) => write!(f, "edge {e} belongs to no structure"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub vertices: u64,
    pub edges: u64,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&Violation) -> bool) -> usize {
        self.violations.iter().filter(|v| pred(v)).count()
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let p = self.parent[a as usize];
            self.parent[a as usize] = self.parent[p as usize];
            a = p;
        }
        a
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

fn share_structure(a: &[Claim], b: &[Claim]) -> bool {
    a.iter().any(|ca| b.iter().any(|cb| ca.structure == cb.structure))
}

/// Checks the open subgraph inside `window` for cycles, asymmetric
/// adjacency, overlapping structures and edges outside every structure.
pub fn audit_window<C: Configuration + ?Sized>(
    cfg: &C,
    window: &Window,
) -> Result<AuditReport, GeometryError> {
    let w = window.width();
    let h = window.height();
    let n = w.checked_mul(h).filter(|&n| n < u32::MAX as u128).ok_or_else(|| {
        GeometryError::InvalidParameter("audit window too large".to_string())
    })? as usize;
    let w = w as usize;
    let index = |v: Vertex| ((v.y - window.y_min) as usize) * w + (v.x - window.x_min) as usize;

    let mut uf = UnionFind::new(n);
    let mut report = AuditReport { vertices: n as u64, ..Default::default() };
    let mut prev_claims: Vec<Vec<Claim>> = vec![Vec::new(); w];
    let mut row_claims: Vec<Vec<Claim>> = vec![Vec::new(); w];
    let mut row_nbrs = Vec::with_capacity(w);

    for y in window.y_min..=window.y_max {
        row_nbrs.clear();
        for (i, x) in (window.x_min..=window.x_max).enumerate() {
            let v = Vertex::new(x, y);
            let nb = cfg.neighbors(v)?;
            row_claims[i] = if nb.is_empty() { Vec::new() } else { cfg.claims(v)? };
            row_nbrs.push(nb);
        }
        for (i, x) in (window.x_min..=window.x_max).enumerate() {
            let v = Vertex::new(x, y);
            let claims = &row_claims[i];
            let owners: Vec<StructureId> = claims.iter().filter(|c| !c.attach).map(|c| c.structure).collect();
            if owners.len() > 1 {
                report.violations.push(Violation::Overlap { vertex: v, structures: owners.clone() });
            }
            if owners.is_empty() {
                for c in claims.iter().filter(|c| c.attach) {
                    report.violations.push(Violation::DanglingAttach { vertex: v, structure: c.structure });
                }
            }
            for &u in row_nbrs[i].iter() {
                let back = if u.y == y && window.contains(u) {
                    row_nbrs[(u.x - window.x_min) as usize].contains(&v)
                } else {
                    cfg.neighbors(u)?.contains(&v)
                };
                if !back {
                    report.violations.push(Violation::Asymmetric { from: v, to: u });
                }
                // Each edge is processed once, from its canonical first endpoint,
                // or from the only side that reports it.
                if !window.contains(u) || (back && u < v) {
                    continue;
                }
                let edge = Edge::new(v, u)?;
                report.edges += 1;
                if !uf.union(index(v) as u32, index(u) as u32) {
                    report.violations.push(Violation::Cycle(edge));
                }
                let other = if u.y == y {
                    &row_claims[(u.x - window.x_min) as usize]
                } else if u.y == y - 1 {
                    &prev_claims[(u.x - window.x_min) as usize]
                } else {
                    // The row above has not been scanned yet.
                    &cfg.claims(u)?
                };
                if !share_structure(claims, other) {
                    report.violations.push(Violation::Orphan(edge));
                }
            }
        }
        std::mem::swap(&mut prev_claims, &mut row_claims);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EscapeRoute, FractalConfig, Neighbors, TrapSpec, WarmupConfig};

    /// Path along row 0 with the edge 5 -> 6 reported only from vertex 5.
    struct OneWay;

    impl Configuration for OneWay {
        fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
            if v.y != 0 || !(0..10).contains(&v.x) {
                return Ok(Neighbors::new());
            }
            let left = v.x > 0 && v.x != 6;
            Neighbors::from_flags(v, v.x < 9, left, false, false)
        }
        fn trap_anchored_at(&self, _: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
            Ok(None)
        }
        fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError> {
            Ok(if v.y == 0 && (0..10).contains(&v.x) { vec![Claim::owns(StructureId::Line)] } else { vec![] })
        }
        fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
            Err(GeometryError::NotInConfiguration(v))
        }
    }

    #[test]
    fn single_asymmetric_edge_detected() {
        let r = audit_window(&OneWay, &Window::new(-2, 12, -1, 1).unwrap()).unwrap();
        assert_eq!(r.violations, vec![Violation::Asymmetric { from: Vertex::new(5, 0), to: Vertex::new(6, 0) }]);
        assert_eq!(r.edges, 9);
    }

    #[test]
    fn warmup_window_is_clean() {
        let cfg = WarmupConfig::new(1.0).unwrap();
        let r = audit_window(&cfg, &Window::new(0, 1000, -1, 3).unwrap()).unwrap();
        assert!(r.is_clean(), "{:?}", &r.violations[..r.violations.len().min(5)]);
        assert!(r.edges > 1000);
    }

    #[test]
    fn fractal_window_is_clean() {
        let cfg = FractalConfig::new(2.0, 8).unwrap();
        let r = audit_window(&cfg, &Window::new(0, 120, 0, 30).unwrap()).unwrap();
        assert!(r.is_clean(), "{:?}", &r.violations[..r.violations.len().min(5)]);
    }
}
