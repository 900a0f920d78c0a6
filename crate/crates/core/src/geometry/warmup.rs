use super::route::RouteBuilder;
use super::{
    Claim, Configuration, EscapeRoute, GeometryError, Neighbors, StructureId, TrapPart, TrapSpec,
    Vertex,
};

/// The half-line `{(x, 0): x >= 0}` with traps hanging above it.
#[derive(Clone, Debug)]
pub struct WarmupConfig {
    layout: Layout,
}

#[derive(Clone, Debug)]
enum Layout {
    /// Anchors at `n^3`, entrances `ceil(alpha ln n)`, cores `n`, with the
    /// small-index corrections stored in `table` (entry `n - 1` holds
    /// `(e_n, c_n)`). Indices past the table use the raw formulas.
    Cubic { alpha: f64, table: Vec<(i128, i128)> },
    /// A finite, sorted list of traps.
    Explicit(Vec<TrapSpec>),
}

impl WarmupConfig {
    pub fn new(alpha: f64) -> Result<Self, GeometryError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(GeometryError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(WarmupConfig { layout: Layout::Cubic { alpha, table: corrected_table(alpha) } })
    }

    /// The line without any traps.
    pub fn naked() -> Self {
        WarmupConfig { layout: Layout::Explicit(Vec::new()) }
    }

    /// A line carrying exactly the given traps.
    pub fn with_traps(mut traps: Vec<TrapSpec>) -> Result<Self, GeometryError> {
        traps.sort_by_key(|t| t.anchor.x);
        for t in &traps {
            if t.anchor.y != 0 || t.anchor.x < 0 {
                return Err(GeometryError::InvalidParameter(format!(
                    "trap anchor {} is not on the half-line",
                    t.anchor
                )));
            }
        }
        for w in traps.windows(2) {
            let (prev, next) = (&w[0], &w[1]);
            if next.left_x() <= prev.anchor.x || next.left_x() <= prev.core_right_x() {
                return Err(GeometryError::InvalidParameter(format!(
                    "traps anchored at {} and {} overlap",
                    prev.anchor, next.anchor
                )));
            }
        }
        Ok(WarmupConfig { layout: Layout::Explicit(traps) })
    }

    pub fn alpha(&self) -> Option<f64> {
        match &self.layout {
            Layout::Cubic { alpha, .. } => Some(*alpha),
            Layout::Explicit(_) => None,
        }
    }

    /// Anchor column of trap `n` (1-based).
    pub fn anchor_x(&self, n: u64) -> Option<i128> {
        self.trap(n).map(|t| t.anchor.x)
    }

    /// Trap number `n` (1-based), if it exists.
    pub fn trap(&self, n: u64) -> Option<TrapSpec> {
        if n == 0 {
            return None;
        }
        match &self.layout {
            Layout::Cubic { alpha, table } => {
                let d = (n as i128).checked_pow(3)?;
                let (e, c) = match table.get((n - 1) as usize) {
                    Some(&ec) => ec,
                    None => (raw_entrance(*alpha, n), n as i128),
                };
                Some(TrapSpec { anchor: Vertex::new(d, 0), entrance_len: e, core_len: c, index: n as u32 })
            }
            Layout::Explicit(traps) => traps.get((n - 1) as usize).copied(),
        }
    }

    /// Traps whose anchors lie in `[0, x]`.
    pub fn traps_up_to(&self, x: i128) -> impl Iterator<Item = TrapSpec> + '_ {
        (1u64..).map_while(move |n| self.trap(n).filter(|t| t.anchor.x <= x))
    }

    /// Whether the non-overlap constraints hold between traps `n - 1` and `n`.
    pub fn constraints_hold(&self, n: u64) -> bool {
        match (self.trap(n.wrapping_sub(1)), self.trap(n)) {
            (Some(prev), Some(cur)) => {
                let gap = cur.anchor.x - prev.anchor.x;
                cur.entrance_len < gap
                    && cur.entrance_len + prev.core_len - prev.entrance_len < gap
            }
            _ => true,
        }
    }

    /// Traps that could contain a vertex in column `x` (at most two).
    fn candidates(&self, x: i128) -> [Option<TrapSpec>; 2] {
        match &self.layout {
            Layout::Cubic { .. } => {
                let n = icbrt_ceil(x.max(1));
                [self.trap(n.saturating_sub(1)), self.trap(n)]
            }
            Layout::Explicit(traps) => {
                let idx = traps.partition_point(|t| t.anchor.x < x);
                [idx.checked_sub(1).and_then(|i| traps.get(i)).copied(), traps.get(idx).copied()]
            }
        }
    }

    fn trap_containing(&self, v: Vertex) -> Option<(TrapSpec, TrapPart)> {
        self.candidates(v.x)
            .into_iter()
            .flatten()
            .find_map(|t| t.part_of(v).map(|p| (t, p)))
    }

    fn anchored_at(&self, v: Vertex) -> Option<TrapSpec> {
        if v.y != 0 || v.x < 1 {
            return None;
        }
        self.candidates(v.x).into_iter().flatten().find(|t| t.anchor == v)
    }
}

fn raw_entrance(alpha: f64, n: u64) -> i128 {
    ((alpha * (n as f64).ln()).ceil() as i128).max(1)
}

/// Smallest `n >= 1` with `n^3 >= x`.
fn icbrt_ceil(x: i128) -> u64 {
    if x <= 1 {
        return 1;
    }
    let mut n = (x as f64).cbrt().floor().max(1.0) as u64;
    while n > 1 && (n as i128 - 1).pow(3) >= x {
        n -= 1;
    }
    while (n as i128).pow(3) < x {
        n += 1;
    }
    n
}

/// Applies the small-index corrections: whenever trap `n` would collide with
/// trap `n - 1`, shrink `c_{n-1}` first and then `e_n`, each as little as
/// possible and never below 1.
fn corrected_table(alpha: f64) -> Vec<(i128, i128)> {
    // Past `stable`, 3m^2 - 4m - 1 > alpha ln m + 1 and the gap grows faster
    // than the left side, so raw values need no correction.
    let mut stable = 2u64;
    loop {
        let m = stable as f64;
        let gap_margin = 3.0 * m * m - 4.0 * m - 1.0 - alpha * m.ln() - 1.0;
        if gap_margin > 0.0 && m * (6.0 * m - 4.0) > alpha {
            break;
        }
        stable += 1;
    }
    let len = stable + 2;
    let mut table: Vec<(i128, i128)> = (1..=len).map(|n| (raw_entrance(alpha, n), n as i128)).collect();
    for n in 2..=len as usize {
        let gap = (n as i128).pow(3) - (n as i128 - 1).pow(3);
        let (e_prev, _) = table[n - 2];
        let (mut e, c) = table[n - 1];
        // e_n < gap
        e = e.min(gap - 1).max(1);
        // e_n + c_{n-1} - e_{n-1} < gap
        let max_c_prev = gap - 1 - e + e_prev;
        if table[n - 2].1 > max_c_prev {
            table[n - 2].1 = max_c_prev.max(1);
        }
        let c_prev = table[n - 2].1;
        if e + c_prev - e_prev >= gap {
            e = (gap - 1 - c_prev + e_prev).max(1);
        }
        table[n - 1] = (e, c);
    }
    table
}

impl Configuration for WarmupConfig {
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
        match v.y {
            0 => {
                if v.x < 0 {
                    return Ok(Neighbors::new());
                }
                let up = self.anchored_at(v).is_some();
                Neighbors::from_flags(v, true, v.x > 0, up, false)
            }
            1 | 2 => {
                let mut out = Neighbors::new();
                for t in self.candidates(v.x).into_iter().flatten() {
                    t.add_neighbors(v, &mut out);
                }
                Ok(out)
            }
            _ => Ok(Neighbors::new()),
        }
    }

    fn trap_anchored_at(&self, v: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        Ok(self.anchored_at(v))
    }

    fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError> {
        let mut claims = Vec::new();
        if v.y == 0 && v.x >= 0 {
            claims.push(Claim::owns(StructureId::Line));
        }
        for t in self.candidates(v.x).into_iter().flatten() {
            match t.part_of(v) {
                Some(TrapPart::Anchor) => claims.push(Claim::attaches(StructureId::Trap { anchor: t.anchor })),
                Some(_) => claims.push(Claim::owns(StructureId::Trap { anchor: t.anchor })),
                None => {}
            }
        }
        Ok(claims)
    }

    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
        let mut route = RouteBuilder::new(v);
        if v.y == 0 && v.x >= 0 {
            return Ok(route.finish());
        }
        match self.trap_containing(v) {
            Some((t, _)) => {
                t.route_to_anchor(&mut route);
                Ok(route.finish())
            }
            None => Err(GeometryError::NotInConfiguration(v)),
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
    fn plain_line_vertex() {
        let cfg = WarmupConfig::new(1.0).unwrap();
        let n = cfg.neighbors(v(5, 0)).unwrap();
        assert_eq!(n.as_slice(), &[v(6, 0), v(4, 0)]);
    }

    #[test]
    fn anchor_has_entrance_neighbor() {
        let cfg = WarmupConfig::new(1.0).unwrap();
        for n in [2u64, 3, 10, 40] {
            let d = cfg.anchor_x(n).unwrap();
            assert_eq!(d, (n as i128).pow(3));
            let nb = cfg.neighbors(v(d, 0)).unwrap();
            assert_eq!(nb.as_slice(), &[v(d + 1, 0), v(d - 1, 0), v(d, 1)]);
        }
    }

    #[test]
    fn origin_has_only_right_neighbor() {
        let cfg = WarmupConfig::new(1.0).unwrap();
        assert_eq!(cfg.neighbors(v(0, 0)).unwrap().as_slice(), &[v(1, 0)]);
        assert!(cfg.neighbors(v(-1, 0)).unwrap().is_empty());
        assert!(cfg.neighbors(v(5, 7)).unwrap().is_empty());
    }

    #[test]
    fn default_sequences() {
        let cfg = WarmupConfig::new(1.0).unwrap();
        let t1 = cfg.trap(1).unwrap();
        assert_eq!((t1.entrance_len, t1.core_len), (1, 1));
        let t8 = cfg.trap(8).unwrap();
        assert_eq!((t8.anchor.x, t8.entrance_len, t8.core_len), (512, 3, 8));
        let t100 = cfg.trap(100).unwrap();
        assert_eq!(t100.entrance_len, 5);
    }

    #[test]
    fn constraints_hold_after_corrections() {
        for alpha in [0.5, 1.0, 3.0, 40.0, 400.0] {
            let cfg = WarmupConfig::new(alpha).unwrap();
            for n in 2..300 {
                assert!(cfg.constraints_hold(n), "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn large_alpha_is_shrunk() {
        let cfg = WarmupConfig::new(40.0).unwrap();
        let t2 = cfg.trap(2).unwrap();
        assert!(t2.entrance_len < 7);
        assert!(t2.entrance_len >= 1);
    }

    #[test]
    fn cube_root_helper() {
        assert_eq!(icbrt_ceil(1), 1);
        assert_eq!(icbrt_ceil(8), 2);
        assert_eq!(icbrt_ceil(9), 3);
        assert_eq!(icbrt_ceil(27), 3);
        assert_eq!(icbrt_ceil(1_000_000_000_001), 10_001);
    }

    #[test]
    fn explicit_traps_validated() {
        let a = TrapSpec::new(v(10, 0), 2, 5, 1).unwrap();
        let b = TrapSpec::new(v(14, 0), 1, 1, 2).unwrap();
        assert!(WarmupConfig::with_traps(vec![a, b]).is_err());
        let b = TrapSpec::new(v(30, 0), 1, 1, 2).unwrap();
        let cfg = WarmupConfig::with_traps(vec![b, a]).unwrap();
        assert_eq!(cfg.trap(1).unwrap().anchor.x, 10);
        assert_eq!(cfg.neighbors(v(8, 2)).unwrap().as_slice(), &[v(9, 2), v(8, 1)]);
    }

    #[test]
    fn escape_route_from_core() {
        let cfg = WarmupConfig::new(1.0).unwrap();
        let t = cfg.trap(3).unwrap();
        let start = v(t.core_right_x(), 2);
        let route = cfg.escape_route(start).unwrap();
        assert_eq!(route.ray_start, t.anchor);
        assert!(route.contains(t.mouth()));
        assert!(route.contains(t.core_entry()));
    }
}
