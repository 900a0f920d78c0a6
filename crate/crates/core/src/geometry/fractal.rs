use super::route::RouteBuilder;
use super::{
    Claim, Configuration, EscapeRoute, GeometryError, Neighbors, StructureId, TrapPart, TrapSpec,
    Vertex,
};

/// Largest truncation order whose branch lengths fit in `i128`.
pub const MAX_SUPPORTED_ORDER: u32 = 13;
pub const DEFAULT_MAX_ORDER: u32 = 8;

/// Order of the branch line at height `y`: the `k` with `y = 3 * 2^(k-1) * l`
/// for odd `l`. Rows that are not nonzero multiples of 3 have no order.
pub fn line_order(y: i128) -> Option<u32> {
    if y == 0 || y % 3 != 0 {
        return None;
    }
    Some((y / 3).trailing_zeros() + 1)
}

/// Metadata of one branch: a horizontal main part from `tip` to `corner` and
/// a vertical abutment from `corner` to `root`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BranchDescriptor {
    pub order: u32,
    pub tip: Vertex,
    pub corner: Vertex,
    pub root: Vertex,
    pub abutment_up: bool,
    /// Branches of the truncation order keep an infinite main part and have
    /// neither abutment nor trap; `corner` then marks the truncation column.
    pub truncated: bool,
}

impl BranchDescriptor {
    pub fn id(&self) -> StructureId {
        StructureId::Branch { order: self.order, y: self.tip.y, tip: self.tip.x }
    }

    pub fn abutment_len(&self) -> i128 {
        (self.root.y - self.corner.y).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    MainPart(BranchDescriptor),
    /// Strictly between a corner and its root.
    Abutment(BranchDescriptor),
    Trap { trap: TrapSpec, part: TrapPart, branch: BranchDescriptor },
    Absent,
}

/// The self-similar branch configuration with one trap per branch of order
/// at least two, truncated at `max_order`.
#[derive(Clone, Debug)]
pub struct FractalConfig {
    gamma: f64,
    max_order: u32,
    // All tables are indexed by order; slot 0 is unused.
    b: Vec<i128>,
    qb: Vec<i128>,
    core: Vec<i128>,
    entrance: Vec<i128>,
}

impl FractalConfig {
    pub fn new(gamma: f64, max_order: u32) -> Result<Self, GeometryError> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(GeometryError::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(1..=MAX_SUPPORTED_ORDER).contains(&max_order) {
            return Err(GeometryError::InvalidParameter(format!(
                "max_order must be in 1..={MAX_SUPPORTED_ORDER}, got {max_order}"
            )));
        }
        let len = max_order as usize + 1;
        let mut b = vec![0i128; len];
        let mut qb = vec![0i128; len];
        let mut core = vec![0i128; len];
        let mut entrance = vec![0i128; len];
        for k in 1..=max_order {
            let ku = k as usize;
            b[ku] = 4 * 3i128.pow(k * (k - 1) / 2);
            if k < max_order {
                qb[ku] = (3i128.pow(k) - 1) * b[ku];
            }
            core[ku] = 3i128.pow((k - 1) * (k.max(2) - 2) / 2);
            if k >= 2 {
                // Slack keeps exact powers of gamma from rounding up.
                let raw = ((k as f64).ln() / gamma.ln() - 1e-12).ceil();
                let raw = if raw >= core[ku] as f64 { core[ku] } else { raw as i128 };
                entrance[ku] = raw.min(core[ku]).max(1);
            }
        }
        Ok(FractalConfig { gamma, max_order, b, qb, core, entrance })
    }

    pub fn with_default_order(gamma: f64) -> Result<Self, GeometryError> {
        Self::new(gamma, DEFAULT_MAX_ORDER)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    /// Number of vertices in the main part of an order-`k` branch.
    pub fn b(&self, k: u32) -> i128 {
        self.b[k as usize]
    }

    /// Branches of order `k` attached from each side of an order-`k+1` branch.
    pub fn q(&self, k: u32) -> i128 {
        3i128.pow(k) - 1
    }

    pub fn core_len(&self, k: u32) -> i128 {
        self.core[k as usize]
    }

    pub fn entrance_len(&self, k: u32) -> i128 {
        self.entrance[k as usize]
    }

    /// First column at which a walk leaves the faithfully represented region.
    pub fn truncation_column(&self) -> i128 {
        self.b(self.max_order) - 1
    }

    fn order_of_line(&self, y: i128) -> Result<Option<u32>, GeometryError> {
        match line_order(y) {
            Some(k) if k > self.max_order => {
                Err(GeometryError::Truncation { order: k, max_order: self.max_order })
            }
            other => Ok(other),
        }
    }

    /// Tip column of the order-`k` branch whose main-part columns contain
    /// `x`. Every line of a given order carries the same branch layout, so
    /// the answer does not depend on the row.
    pub fn tip_of(&self, x: i128, k: u32) -> Option<i128> {
        if x < 0 {
            return None;
        }
        let mut tip = 0i128;
        for j in (k..self.max_order).rev() {
            let ju = j as usize;
            let off = x - tip;
            if off >= self.qb[ju] {
                // Final stretch of the parent, reserved for its trap.
                return None;
            }
            if off >= self.b[ju] {
                tip += (off / self.b[ju]) * self.b[ju];
            }
        }
        Some(tip)
    }

    pub fn descriptor(&self, k: u32, y: i128, tip: i128) -> BranchDescriptor {
        let s = abutment_len(k);
        let l = y / s;
        let up = (l + 1).rem_euclid(4) == 2;
        let corner = Vertex::new(tip + self.b(k) - 1, y);
        let root = Vertex::new(corner.x, if up { y + s } else { y - s });
        BranchDescriptor {
            order: k,
            tip: Vertex::new(tip, y),
            corner,
            root,
            abutment_up: up,
            truncated: k == self.max_order,
        }
    }

    /// The trap carried by a branch, if it has one.
    pub fn trap_of(&self, branch: &BranchDescriptor) -> Option<TrapSpec> {
        let k = branch.order;
        if k < 2 || branch.truncated {
            return None;
        }
        let anchor = Vertex::new(branch.corner.x - 2 * self.core_len(k), branch.corner.y);
        Some(TrapSpec {
            anchor,
            entrance_len: self.entrance_len(k),
            core_len: self.core_len(k),
            index: k,
        })
    }

    fn branch_on_line(&self, x: i128, y: i128) -> Result<Option<BranchDescriptor>, GeometryError> {
        match self.order_of_line(y)? {
            Some(k) => Ok(self.tip_of(x, k).map(|t| self.descriptor(k, y, t))),
            None => Ok(None),
        }
    }

    /// The trap hosted by line `host` whose columns could include `x`.
    fn trap_near(&self, x: i128, host: i128) -> Result<Option<(TrapSpec, BranchDescriptor)>, GeometryError> {
        let k = match self.order_of_line(host)? {
            Some(k) if k >= 2 && k < self.max_order => k,
            _ => return Ok(None),
        };
        Ok(self.tip_of(x, k).and_then(|t| {
            let br = self.descriptor(k, host, t);
            self.trap_of(&br).map(|trap| (trap, br))
        }))
    }

    /// Abutment of order `k` whose column is `x` and whose span contains the
    /// rows `m*s ..= (m+1)*s`, `s` the order-`k` abutment length.
    fn abutment_in_band(&self, x: i128, k: u32, m: i128) -> Option<BranchDescriptor> {
        // One end must be an order-k line (odd multiple of s), the other an
        // order-(k+1) line (multiple of s congruent to 2 mod 4).
        if !matches!(m.rem_euclid(4), 1 | 2) {
            return None;
        }
        let b = self.b(k);
        if x < 0 || (x + 1) % b != 0 {
            return None;
        }
        let tip = self.tip_of(x, k)?;
        if tip + b - 1 != x {
            return None;
        }
        let s = abutment_len(k);
        let line = if m.rem_euclid(2) == 1 { m * s } else { (m + 1) * s };
        Some(self.descriptor(k, line, tip))
    }

    fn horizontal_open(&self, x: i128, y: i128) -> Result<bool, GeometryError> {
        match y.rem_euclid(3) {
            0 => match self.order_of_line(y)? {
                None => Ok(false),
                Some(k) if k == self.max_order => Ok(x >= 0),
                Some(k) => Ok(self.tip_of(x, k).is_some_and(|t| x < t + self.b(k) - 1)),
            },
            r => Ok(match self.trap_near(x, y - r)? {
                Some((trap, _)) => {
                    let right = if r == 1 { trap.anchor.x } else { trap.core_right_x() };
                    trap.left_x() <= x && x < right
                }
                None => false,
            }),
        }
    }

    fn vertical_open(&self, x: i128, y: i128) -> Result<bool, GeometryError> {
        for k in 1..self.max_order {
            let m = y.div_euclid(abutment_len(k));
            if self.abutment_in_band(x, k, m).is_some() {
                return Ok(true);
            }
        }
        match y.rem_euclid(3) {
            0 => Ok(self.trap_near(x, y)?.is_some_and(|(t, _)| t.anchor.x == x)),
            1 => Ok(self.trap_near(x, y - 1)?.is_some_and(|(t, _)| t.left_x() == x)),
            _ => Ok(false),
        }
    }

    pub fn locate(&self, v: Vertex) -> Result<Location, GeometryError> {
        let r = v.y.rem_euclid(3);
        if r == 0 {
            if let Some(br) = self.branch_on_line(v.x, v.y)? {
                return Ok(Location::MainPart(br));
            }
        }
        for k in 1..self.max_order {
            let s = abutment_len(k);
            let m = v.y.div_euclid(s);
            if v.y - m * s != 0 {
                if let Some(br) = self.abutment_in_band(v.x, k, m) {
                    return Ok(Location::Abutment(br));
                }
            }
        }
        if r != 0 {
            if let Some((trap, branch)) = self.trap_near(v.x, v.y - r)? {
                if let Some(part) = trap.part_of(v) {
                    return Ok(Location::Trap { trap, part, branch });
                }
            }
        }
        Ok(Location::Absent)
    }

    /// Parent branch reached through the root of `br`.
    fn parent(&self, br: &BranchDescriptor) -> Result<BranchDescriptor, GeometryError> {
        let k = br.order + 1;
        let root = br.root;
        let tip = self.tip_of(root.x, k).ok_or(GeometryError::NotInConfiguration(root))?;
        Ok(self.descriptor(k, root.y, tip))
    }

    /// Abutment columns `a_k`, `k = 1..=up_to_order`, along the escape path
    /// from a vertex on the main part of an order-1 branch.
    pub fn path_to_infinity(&self, start: Vertex, up_to_order: u32) -> Result<Vec<(u32, i128)>, GeometryError> {
        Ok(self.path_branches(start, up_to_order)?.iter().map(|br| (br.order, br.corner.x)).collect())
    }

    /// The branches of orders `1..=up_to_order` crossed by the escape path
    /// from a vertex on an order-1 main part.
    pub fn path_branches(&self, start: Vertex, up_to_order: u32) -> Result<Vec<BranchDescriptor>, GeometryError> {
        if up_to_order > self.max_order {
            return Err(GeometryError::Truncation { order: up_to_order, max_order: self.max_order });
        }
        let mut br = match self.locate(start)? {
            Location::MainPart(br) if br.order == 1 => br,
            _ => return Err(GeometryError::NotOnOrderOneBranch(start)),
        };
        let mut out = Vec::with_capacity(up_to_order as usize);
        for _ in 0..up_to_order {
            out.push(br);
            if br.truncated {
                break;
            }
            br = self.parent(&br)?;
        }
        Ok(out)
    }

    fn climb(&self, mut br: BranchDescriptor, route: &mut RouteBuilder) -> Result<(), GeometryError> {
        while !br.truncated {
            route.move_to(br.corner);
            route.move_to(br.root);
            br = self.parent(&br)?;
        }
        Ok(())
    }
}

/// Vertical length of an order-`k` abutment, `3 * 2^(k-1)`.
fn abutment_len(k: u32) -> i128 {
    3i128 << (k - 1)
}

impl Configuration for FractalConfig {
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
        let (x, y) = (v.x, v.y);
        let right = self.horizontal_open(x, y)?;
        let left = self.horizontal_open(x - 1, y)?;
        let up = self.vertical_open(x, y)?;
        let down = self.vertical_open(x, y - 1)?;
        Neighbors::from_flags(v, right, left, up, down)
    }

    fn trap_anchored_at(&self, v: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        if v.y.rem_euclid(3) != 0 {
            return Ok(None);
        }
        Ok(self.trap_near(v.x, v.y)?.map(|(t, _)| t).filter(|t| t.anchor == v))
    }

    fn claims(&self, v: Vertex) -> Result<Vec<Claim>, GeometryError> {
        let mut claims = Vec::new();
        let r = v.y.rem_euclid(3);
        if r == 0 {
            if let Some(br) = self.branch_on_line(v.x, v.y)? {
                claims.push(Claim::owns(br.id()));
            }
        }
        for k in 1..self.max_order {
            let s = abutment_len(k);
            let m = v.y.div_euclid(s);
            let bands = if v.y == m * s { [Some(m), Some(m - 1)] } else { [Some(m), None] };
            for band in bands.into_iter().flatten() {
                if let Some(br) = self.abutment_in_band(v.x, k, band) {
                    if v == br.root {
                        claims.push(Claim::attaches(br.id()));
                    } else if v != br.corner {
                        claims.push(Claim::owns(br.id()));
                    }
                }
            }
        }
        if let Some((trap, _)) = self.trap_near(v.x, v.y - r)? {
            match trap.part_of(v) {
                Some(TrapPart::Anchor) => claims.push(Claim::attaches(StructureId::Trap { anchor: trap.anchor })),
                Some(_) => claims.push(Claim::owns(StructureId::Trap { anchor: trap.anchor })),
                None => {}
            }
        }
        Ok(claims)
    }

    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
        let mut route = RouteBuilder::new(v);
        match self.locate(v)? {
            Location::MainPart(br) => self.climb(br, &mut route)?,
            Location::Abutment(br) => {
                route.move_to(br.root);
                self.climb(self.parent(&br)?, &mut route)?;
            }
            Location::Trap { trap, branch, .. } => {
                trap.route_to_anchor(&mut route);
                self.climb(branch, &mut route)?;
            }
            Location::Absent => return Err(GeometryError::NotInConfiguration(v)),
        }
        Ok(route.finish())
    }

    fn truncation_x(&self) -> Option<i128> {
        Some(self.truncation_column())
    }
}
