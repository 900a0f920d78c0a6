//! Electrical-network view of the biased walk: edge `e` carries resistance
//! `beta^-x(e)`, `x(e)` the larger x-coordinate of its endpoints.
//!
//! Absolute resistances underflow quickly, so most routines work relative
//! to an origin column and only combine ratios.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_traits::Num;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Configuration, Edge, GeometryError, RouteSegment, Vertex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no path between {0} and {1} within {2} explored vertices")]
    NotConnected(Vertex, Vertex, usize),
    #[error("linear system is singular: no absorbing vertex reachable")]
    Singular,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bias {
    beta: f64,
}

impl Bias {
    pub fn new(beta: f64) -> Result<Self, NetworkError> {
        if !(beta.is_finite() && beta > 1.0) {
            return Err(NetworkError::InvalidParameter(format!("beta must exceed 1, got {beta}")));
        }
        Ok(Bias { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `beta^p` for an integer exponent.
    pub fn pow(&self, p: i128) -> f64 {
        self.beta.powf(p as f64)
    }

    /// Conductance of `e` measured in units of `beta^origin`.
    pub fn conductance_rel(&self, e: &Edge, origin: i128) -> f64 {
        self.pow(e.x_max() - origin)
    }

    /// Resistance of `e` measured in units of `beta^-origin`.
    pub fn resistance_rel(&self, e: &Edge, origin: i128) -> f64 {
        self.pow(origin - e.x_max())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResistorEdge {
    pub edge: Edge,
    pub resistance: f64,
}

impl ResistorEdge {
    pub fn new(edge: Edge, bias: &Bias) -> Self {
        ResistorEdge { edge, resistance: bias.resistance_rel(&edge, 0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, NetworkError> {
        if !(lo <= hi) {
            return Err(NetworkError::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

// Relative slack absorbing floating-point rounding in summed bounds.
const ROUNDING_SLACK: f64 = 1e-12;

/// Sum of `beta^(origin - j)` for `j` in `from..=to` (empty if `from > to`).
fn geometric_rel(bias: &Bias, origin: i128, from: i128, to: i128) -> f64 {
    if from > to {
        return 0.0;
    }
    let r = 1.0 / bias.beta();
    let count = (to - from + 1) as f64;
    bias.pow(origin - from) * (1.0 - r.powf(count)) / (1.0 - r)
}

/// Resistance of the unique tree path from `v1` to `v2`, in units of
/// `beta^-origin`.
pub fn effective_resistance_path_rel<C: Configuration + ?Sized>(
    v1: Vertex,
    v2: Vertex,
    cfg: &C,
    bias: &Bias,
    origin: i128,
    budget: usize,
) -> Result<f64, NetworkError> {
    let path = tree_path(v1, v2, cfg, budget)?;
    let mut total = 0.0;
    for w in path.windows(2) {
        total += bias.resistance_rel(&Edge::new(w[0], w[1])?, origin);
    }
    Ok(total)
}

pub const DEFAULT_PATH_BUDGET: usize = 1_000_000;

/// Sum of edge resistances along the path from `v1` to `v2`.
pub fn effective_resistance_path<C: Configuration + ?Sized>(
    v1: Vertex,
    v2: Vertex,
    cfg: &C,
    bias: &Bias,
) -> Result<f64, NetworkError> {
    effective_resistance_path_rel(v1, v2, cfg, bias, 0, DEFAULT_PATH_BUDGET)
}

/// Vertex sequence from `v1` to `v2`, found by growing breadth-first
/// searches from both ends until they meet.
pub fn tree_path<C: Configuration + ?Sized>(
    v1: Vertex,
    v2: Vertex,
    cfg: &C,
    budget: usize,
) -> Result<Vec<Vertex>, NetworkError> {
    if v1 == v2 {
        return Ok(vec![v1]);
    }
    let mut parents: [HashMap<Vertex, Vertex>; 2] = [HashMap::new(), HashMap::new()];
    let mut queues = [VecDeque::from([v1]), VecDeque::from([v2])];
    parents[0].insert(v1, v1);
    parents[1].insert(v2, v2);
    let mut side = 0;
    let meet = 'search: loop {
        if queues[0].is_empty() && queues[1].is_empty() || parents[0].len() + parents[1].len() > budget {
            return Err(NetworkError::NotConnected(v1, v2, budget));
        }
        if queues[side].is_empty() {
            side = 1 - side;
        }
        // Expand one full layer of the current side.
        for _ in 0..queues[side].len() {
            let w = queues[side].pop_front().expect("non-empty layer");
            for &u in cfg.neighbors(w)?.iter() {
                if parents[side].contains_key(&u) {
                    continue;
                }
                parents[side].insert(u, w);
                if parents[1 - side].contains_key(&u) {
                    break 'search u;
                }
                queues[side].push_back(u);
            }
        }
        side = 1 - side;
    };
    let mut left = vec![meet];
    while let Some(&p) = parents[0].get(left.last().unwrap()) {
        if p == *left.last().unwrap() {
            break;
        }
        left.push(p);
    }
    left.reverse();
    let mut cur = meet;
    while let Some(&p) = parents[1].get(&cur) {
        if p == cur {
            break;
        }
        left.push(p);
        cur = p;
    }
    Ok(left)
}

/// Bounds on the resistance from `v` to infinity along its escape route,
/// in units of `beta^-origin` with `origin` the returned column.
///
/// The lower bound keeps the edges with `x(e) <= v.x + horizon`; the upper
/// bound adds every remaining edge exactly, closing the final ray with a
/// geometric series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledResistance {
    pub origin: i128,
    pub interval: Interval,
}

pub fn resistance_to_infinity_scaled<C: Configuration + ?Sized>(
    v: Vertex,
    cfg: &C,
    bias: &Bias,
    horizon: i128,
) -> Result<ScaledResistance, NetworkError> {
    if horizon < 1 {
        return Err(NetworkError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let route = cfg.escape_route(v)?;
    let cut = v.x.saturating_add(horizon);
    // Measure everything from the leftmost edge column so no term exceeds 1.
    let mut origin = route.ray_start.x + 1;
    for seg in &route.segments {
        origin = origin.min(match *seg {
            RouteSegment::Horizontal { from_x, to_x, .. } => from_x.min(to_x) + 1,
            RouteSegment::Vertical { x, .. } => x,
        });
    }
    let (mut lo, mut hi) = (0.0, 0.0);
    for seg in &route.segments {
        match *seg {
            RouteSegment::Horizontal { from_x, to_x, .. } => {
                let (a, b) = (from_x.min(to_x) + 1, from_x.max(to_x));
                lo += geometric_rel(bias, origin, a, b.min(cut));
                hi += geometric_rel(bias, origin, a, b);
            }
            RouteSegment::Vertical { x, from_y, to_y } => {
                let part = (to_y - from_y).abs() as f64 * bias.pow(origin - x);
                if x <= cut {
                    lo += part;
                }
                hi += part;
            }
        }
    }
    let ray = route.ray_start.x;
    let r = 1.0 / bias.beta();
    lo += geometric_rel(bias, origin, ray + 1, cut);
    hi += bias.pow(origin - ray - 1) / (1.0 - r);
    let interval = Interval::new(lo * (1.0 - ROUNDING_SLACK), hi * (1.0 + ROUNDING_SLACK))?;
    Ok(ScaledResistance { origin, interval })
}

/// `R_eff(v, infinity)` bounds in absolute units. Underflows to zero for
/// vertices far to the right; use the scaled form there.
pub fn resistance_to_infinity<C: Configuration + ?Sized>(
    v: Vertex,
    cfg: &C,
    bias: &Bias,
    horizon: i128,
) -> Result<Interval, NetworkError> {
    let s = resistance_to_infinity_scaled(v, cfg, bias, horizon)?;
    let scale = bias.pow(-s.origin);
    Interval::new(s.interval.lo * scale, s.interval.hi * scale)
}

/// Sum of conductances of the edges at `v`, in units of `beta^v.x`.
pub fn incident_conductance_rel<C: Configuration + ?Sized>(
    v: Vertex,
    cfg: &C,
    bias: &Bias,
) -> Result<f64, NetworkError> {
    let mut total = 0.0;
    for &u in cfg.neighbors(v)?.iter() {
        total += bias.conductance_rel(&Edge::new(v, u)?, v.x);
    }
    Ok(total)
}

/// Probability that the walk leaves `v` and never returns:
/// `1 / (R_eff(v, infinity) * sum of conductances at v)`.
pub fn escape_probability<C: Configuration + ?Sized>(
    v: Vertex,
    cfg: &C,
    bias: &Bias,
    horizon: i128,
) -> Result<Interval, NetworkError> {
    let r = resistance_to_infinity_scaled(v, cfg, bias, horizon)?;
    let c = incident_conductance_rel(v, cfg, bias)?;
    // R * C = R_rel * C_rel * beta^(v.x - origin); combine in logarithms.
    let shift = (v.x - r.origin) as f64 * bias.beta().ln();
    let p = |res: f64| (-(res.ln() + c.ln() + shift)).exp().min(1.0);
    Interval::new(p(r.interval.hi), p(r.interval.lo))
}

/// Chance that a walk started at the bottom of a trap entrance of length
/// `e` reaches the core before returning to the anchor.
pub fn hit_core_probability(entrance_len: u64, bias: &Bias) -> f64 {
    let b = bias.beta();
    (b - 1.0) / (b.powf(entrance_len as f64 + 1.0) + b - 2.0)
}

/// One-sided lower bound on the chance of a long stay in the core.
pub fn stay_in_core_lower_bound(entrance_len: u64, bias: &Bias) -> f64 {
    let b = bias.beta();
    (b - 1.0).powi(2) / (2.0 * b * (b.powf(entrance_len as f64 + 1.0) + b - 2.0))
}

/// The closed form `(2 beta - 1) / (beta - 1)` stated for the mean visit
/// length of a trap with infinite entrance.
pub fn expected_infinite_entrance_excursion(bias: &Bias) -> f64 {
    let b = bias.beta();
    (2.0 * b - 1.0) / (b - 1.0)
}

/// Mean anchor-to-anchor visit length of an infinite-entrance trap computed
/// directly from the walk: one step up, then `2 + (beta+1)/(beta-1)` more
/// on average before the anchor is reached again.
pub fn infinite_entrance_mean_visit(bias: &Bias) -> f64 {
    let b = bias.beta();
    2.0 * (2.0 * b - 1.0) / (b - 1.0)
}

/// `C'_beta = (3 + beta)/2 * sum_i (2i+1) beta^-i`, closed form.
pub fn cone_return_time_bound(bias: &Bias) -> f64 {
    let b = bias.beta();
    let r = 1.0 / b;
    (3.0 + b) / 2.0 * (1.0 + r) / ((1.0 - r) * (1.0 - r))
}

/// The same constant by direct summation until the relative change of a
/// term drops below `1e-12`.
pub fn cone_return_time_series(bias: &Bias) -> f64 {
    let r = 1.0 / bias.beta();
    let mut sum = 0.0;
    let mut pow = 1.0;
    let mut i = 0u64;
    loop {
        let term = (2 * i + 1) as f64 * pow;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        pow *= r;
        i += 1;
    }
    (3.0 + bias.beta()) / 2.0 * sum
}

/// Normalized conductances of the edges from `v` to each neighbor. With
/// all conductances relative to `beta^v.x`, an edge to the right weighs
/// `beta` and every other edge weighs one.
pub fn conductance_step_weights<T: Num + Clone>(v: Vertex, neighbors: &[Vertex], beta: T) -> Vec<T> {
    let raw: Vec<T> = neighbors
        .iter()
        .map(|u| if u.x > v.x { beta.clone() } else { T::one() })
        .collect();
    let total = raw.iter().cloned().fold(T::zero(), |a, b| a + b);
    raw.into_iter().map(|w| w / total.clone()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reward {
    /// Probability of absorption in `targets` (a subset of the absorbing set).
    HitProbability(Vec<Vertex>),
    /// Expected number of steps until absorption.
    ExpectedTime,
}

#[derive(Clone, Debug)]
pub struct AbsorbingSolution {
    pub values: BTreeMap<Vertex, f64>,
    /// Largest equation residual relative to `max(1, |value|)`.
    pub residual: f64,
}

impl AbsorbingSolution {
    pub fn get(&self, v: Vertex) -> Option<f64> {
        self.values.get(&v).copied()
    }
}

// Dense fallback is only meant for small non-tree networks.
const DENSE_LIMIT: usize = 4000;

struct Network {
    vertices: Vec<Vertex>,
    // Neighbor index and transition probability out of each vertex.
    adj: Vec<Vec<(usize, f64)>>,
    edges: usize,
}

impl Network {
    fn build(edges: &[Edge], bias: &Bias) -> Self {
        let mut index: BTreeMap<Vertex, usize> = BTreeMap::new();
        for e in edges {
            for v in [e.a(), e.b()] {
                let n = index.len();
                index.entry(v).or_insert(n);
            }
        }
        let mut vertices = vec![Vertex::new(0, 0); index.len()];
        for (v, &i) in &index {
            vertices[i] = *v;
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vertices.len()];
        let mut seen = std::collections::BTreeSet::new();
        for e in edges {
            if !seen.insert(*e) {
                continue;
            }
            let (a, b) = (index[&e.a()], index[&e.b()]);
            adj[a].push((b, bias.conductance_rel(e, e.a().x)));
            adj[b].push((a, bias.conductance_rel(e, e.b().x)));
        }
        for list in &mut adj {
            let total: f64 = list.iter().map(|&(_, c)| c).sum();
            for item in list.iter_mut() {
                item.1 /= total;
            }
        }
        Network { vertices, adj, edges: seen.len() }
    }
}

/// Hitting probabilities or expected absorption times for the
/// conductance-weighted walk on a finite edge set.
pub fn absorbing_solve(
    edges: &[Edge],
    bias: &Bias,
    absorbing: &[Vertex],
    reward: &Reward,
) -> Result<AbsorbingSolution, NetworkError> {
    let net = Network::build(edges, bias);
    let n = net.vertices.len();
    let pos: HashMap<Vertex, usize> = net.vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for v in absorbing {
        let &i = pos.get(v).ok_or_else(|| {
            NetworkError::InvalidParameter(format!("absorbing vertex {v} not in the network"))
        })?;
        fixed[i] = Some(0.0);
    }
    let rate = match reward {
        Reward::HitProbability(targets) => {
            for t in targets {
                match pos.get(t) {
                    Some(&i) if fixed[i].is_some() => fixed[i] = Some(1.0),
                    _ => {
                        return Err(NetworkError::InvalidParameter(format!(
                            "target {t} is not an absorbing vertex"
                        )))
                    }
                }
            }
            0.0
        }
        Reward::ExpectedTime => 1.0,
    };
    if fixed.iter().all(|f| f.is_none()) {
        return Err(NetworkError::Singular);
    }
    let components = count_components(&net);
    let values = if net.edges + components == n {
        solve_tree(&net, &fixed, rate)?
    } else if n <= DENSE_LIMIT {
        solve_dense(&net, &fixed, rate)?
    } else {
        return Err(NetworkError::InvalidParameter(format!(
            "non-tree network with {n} vertices exceeds the dense limit {DENSE_LIMIT}"
        )));
    };
    let mut residual = 0.0f64;
    for i in 0..n {
        if fixed[i].is_some() {
            continue;
        }
        let mut rhs = rate;
        for &(j, p) in &net.adj[i] {
            rhs += p * values[j];
        }
        residual = residual.max((values[i] - rhs).abs() / values[i].abs().max(1.0));
    }
    Ok(AbsorbingSolution {
        values: net.vertices.iter().copied().zip(values).collect(),
        residual,
    })
}

fn count_components(net: &Network) -> usize {
    let n = net.vertices.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for &(j, _) in &net.adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}

/// Leaf elimination: a free vertex with one free neighbor left is written
/// as an affine function of that neighbor and removed.
fn solve_tree(net: &Network, fixed: &[Option<f64>], rate: f64) -> Result<Vec<f64>, NetworkError> {
    let n = net.vertices.len();
    let mut diag = vec![1.0f64; n];
    let mut constant = vec![0.0f64; n];
    let mut free_deg = vec![0usize; n];
    for i in 0..n {
        if fixed[i].is_some() {
            continue;
        }
        constant[i] = rate;
        for &(j, p) in &net.adj[i] {
            match fixed[j] {
                Some(val) => constant[i] += p * val,
                None => free_deg[i] += 1,
            }
        }
    }
    let mut removed = vec![false; n];
    // (vertex, parent, coefficient) with value = coef * value(parent) + offset.
    let mut order: Vec<(usize, Option<(usize, f64)>)> = Vec::with_capacity(n);
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| fixed[i].is_none() && free_deg[i] <= 1).collect();
    while let Some(i) = queue.pop_front() {
        if removed[i] {
            continue;
        }
        removed[i] = true;
        let parent = net.adj[i].iter().find(|&&(j, _)| fixed[j].is_none() && !removed[j]).copied();
        if diag[i].abs() < 1e-300 {
            return Err(NetworkError::Singular);
        }
        match parent {
            Some((j, p_ij)) => {
                let coef = p_ij / diag[i];
                let offset = constant[i] / diag[i];
                let p_ji = net.adj[j].iter().find(|&&(k, _)| k == i).map(|&(_, p)| p).unwrap_or(0.0);
                diag[j] -= p_ji * coef;
                constant[j] += p_ji * offset;
                constant[i] = offset;
                order.push((i, Some((j, coef))));
                free_deg[j] -= 1;
                if free_deg[j] <= 1 {
                    queue.push_back(j);
                }
            }
            None => {
                // Component root. A vanishing pivot means no absorbing exit.
                if diag[i] < 1e-12 {
                    return Err(NetworkError::Singular);
                }
                constant[i] /= diag[i];
                order.push((i, None));
            }
        }
    }
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for &(i, link) in order.iter().rev() {
        values[i] = match link {
            Some((j, coef)) => coef * values[j] + constant[i],
            None => constant[i],
        };
    }
    Ok(values)
}

fn solve_dense(net: &Network, fixed: &[Option<f64>], rate: f64) -> Result<Vec<f64>, NetworkError> {
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    let slot: HashMap<usize, usize> = free.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let m = free.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut rhs = DVector::<f64>::from_element(m, rate);
    for (row, &i) in free.iter().enumerate() {
        for &(j, p) in &net.adj[i] {
            match fixed[j] {
                Some(val) => rhs[row] += p * val,
                None => a[(row, slot[&j])] -= p,
            }
        }
    }
    let sol = a.lu().solve(&rhs).ok_or(NetworkError::Singular)?;
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(NetworkError::Singular);
    }
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (row, &i) in free.iter().enumerate() {
        values[i] = sol[row];
    }
    Ok(values)
}

/// Expected return time to `v` for the walk on a finite connected edge
/// set: total conductance over the conductance at `v`.
pub fn stationary_return_time(edges: &[Edge], bias: &Bias, v: Vertex) -> Result<f64, NetworkError> {
    let mut total = 0.0;
    let mut at_v = 0.0;
    let mut seen = std::collections::BTreeSet::new();
    for e in edges {
        if !seen.insert(*e) {
            continue;
        }
        let c = bias.conductance_rel(e, v.x);
        // Each edge counts once at each endpoint.
        total += 2.0 * c;
        if e.a() == v || e.b() == v {
            at_v += c;
        }
    }
    if at_v == 0.0 {
        return Err(NetworkError::InvalidParameter(format!("{v} is not in the subgraph")));
    }
    Ok(total / at_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{TrapSpec, WarmupConfig};
    use num_rational::Ratio;

    fn v(x: i128, y: i128) -> Vertex {
        Vertex::new(x, y)
    }

    fn e(a: Vertex, b: Vertex) -> Edge {
        Edge::new(a, b).unwrap()
    }

    fn bias(b: f64) -> Bias {
        Bias::new(b).unwrap()
    }

    #[test]
    fn bias_rejects_one() {
        assert!(Bias::new(1.0).is_err());
        assert!(Bias::new(f64::NAN).is_err());
    }

    #[test]
    fn naked_line_path_resistance() {
        let cfg = WarmupConfig::naked();
        let r = effective_resistance_path(v(0, 0), v(3, 0), &cfg, &bias(2.0)).unwrap();
        assert!((r - 0.875).abs() < 1e-15);
        assert_eq!(effective_resistance_path(v(4, 0), v(4, 0), &cfg, &bias(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn trap_entrance_path_resistance() {
        let trap = TrapSpec::new(v(8, 0), 1, 1, 1).unwrap();
        let cfg = WarmupConfig::with_traps(vec![trap]).unwrap();
        let r = effective_resistance_path(v(8, 1), v(7, 2), &cfg, &bias(2.0)).unwrap();
        assert!((r - 3.0 / 256.0).abs() < 1e-15);
        assert!(effective_resistance_path(v(8, 1), v(3, 5), &cfg, &bias(2.0)).is_err());
    }

    #[test]
    fn naked_line_resistance_to_infinity() {
        let cfg = WarmupConfig::naked();
        let b = bias(2.0);
        let r = resistance_to_infinity(v(0, 0), &cfg, &b, 60).unwrap();
        assert!(r.contains(1.0));
        let r5 = resistance_to_infinity(v(5, 0), &cfg, &b, 6).unwrap();
        assert!(r5.contains(2f64.powi(-5)));
        let w1 = resistance_to_infinity(v(5, 0), &cfg, &b, 10).unwrap().width();
        let w2 = resistance_to_infinity(v(5, 0), &cfg, &b, 20).unwrap().width();
        assert!(w2 < w1);
    }

    #[test]
    fn escape_from_plain_vertex_and_anchor() {
        let b = bias(2.0);
        let cfg = WarmupConfig::new(1.0).unwrap();
        let anchor = v(cfg.anchor_x(5).unwrap(), 0);
        let p = escape_probability(anchor, &cfg, &b, 200).unwrap();
        assert!(p.contains(0.25) && p.width() < 1e-9, "{p:?}");
        let plain = escape_probability(v(126, 0), &cfg, &b, 200).unwrap();
        assert!(plain.contains(1.0 / 3.0));
    }

    #[test]
    fn escape_far_right_does_not_underflow() {
        let b = bias(3.0);
        let cfg = WarmupConfig::naked();
        let p = escape_probability(v(10_000_000, 0), &cfg, &b, 100).unwrap();
        assert!(p.contains(0.5));
    }

    #[test]
    fn closed_forms() {
        assert!((hit_core_probability(1, &bias(2.0)) - 0.25).abs() < 1e-15);
        assert!((hit_core_probability(2, &bias(2.0)) - 0.125).abs() < 1e-15);
        assert!((hit_core_probability(1, &bias(3.0)) - 0.2).abs() < 1e-15);
        assert!(hit_core_probability(200, &bias(2.0)) < 1e-50);
        assert!((stay_in_core_lower_bound(1, &bias(2.0)) - 1.0 / 16.0).abs() < 1e-15);
        assert!((stay_in_core_lower_bound(2, &bias(2.0)) - 1.0 / 32.0).abs() < 1e-15);
        assert!((expected_infinite_entrance_excursion(&bias(2.0)) - 3.0).abs() < 1e-15);
        assert!((expected_infinite_entrance_excursion(&bias(3.0)) - 2.5).abs() < 1e-15);
        assert!((expected_infinite_entrance_excursion(&bias(1e9)) - 2.0).abs() < 1e-8);
        assert!((infinite_entrance_mean_visit(&bias(2.0)) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn cone_constant() {
        for (b, want) in [(2.0, 15.0), (3.0, 9.0)] {
            let c = cone_return_time_bound(&bias(b));
            assert!((c - want).abs() < 1e-12);
            assert!((cone_return_time_series(&bias(b)) - c).abs() < 1e-12 * c);
        }
        // The series factor falls with beta, but the (3 + beta)/2 prefactor
        // wins past beta ~ 5.2, so the constant is only monotone below that.
        let mut prev = f64::INFINITY;
        for i in 0..=37 {
            let c = cone_return_time_bound(&bias(1.5 + 0.1 * i as f64));
            assert!(c < prev);
            prev = c;
        }
        assert!(cone_return_time_bound(&bias(10.0)) > cone_return_time_bound(&bias(5.0)));
    }

    #[test]
    fn conductance_weights_exact() {
        let c = v(0, 0);
        let w = conductance_step_weights(c, &[v(1, 0), v(-1, 0), v(0, 1)], Ratio::new(2i64, 1));
        assert_eq!(w, vec![Ratio::new(1, 2), Ratio::new(1, 4), Ratio::new(1, 4)]);
    }

    fn entrance_chain(d: i128, len: i128) -> (Vec<Edge>, Vertex, Vertex) {
        let mut edges = vec![e(v(d, 0), v(d, 1))];
        for i in 0..len {
            edges.push(e(v(d - i, 1), v(d - i - 1, 1)));
        }
        edges.push(e(v(d - len, 1), v(d - len, 2)));
        (edges, v(d, 0), v(d - len, 2))
    }

    #[test]
    fn entrance_chain_matches_closed_form() {
        for b in [1.5, 2.0, 3.0] {
            for len in [1, 2, 5] {
                let (edges, anchor, core) = entrance_chain(40, len);
                let s = absorbing_solve(&edges, &bias(b), &[anchor, core], &Reward::HitProbability(vec![core]))
                    .unwrap();
                let got = s.get(v(40, 1)).unwrap();
                assert!((got - hit_core_probability(len as u64, &bias(b))).abs() < 1e-10);
                assert!(s.residual < 1e-10);
            }
        }
    }

    #[test]
    fn single_edge() {
        let s = absorbing_solve(&[e(v(0, 0), v(1, 0))], &bias(2.0), &[v(1, 0)], &Reward::HitProbability(vec![v(1, 0)]))
            .unwrap();
        assert_eq!(s.get(v(0, 0)), Some(1.0));
        let t = absorbing_solve(&[e(v(0, 0), v(1, 0))], &bias(2.0), &[v(1, 0)], &Reward::ExpectedTime).unwrap();
        assert_eq!(t.get(v(0, 0)), Some(1.0));
        assert_eq!(stationary_return_time(&[e(v(0, 0), v(1, 0))], &bias(2.0), v(0, 0)).unwrap(), 2.0);
    }

    #[test]
    fn gamblers_ruin_segment() {
        let b = bias(2.0);
        let edges: Vec<Edge> = (0..10).map(|i| e(v(i, 0), v(i + 1, 0))).collect();
        let s = absorbing_solve(&edges, &b, &[v(0, 0), v(10, 0)], &Reward::HitProbability(vec![v(10, 0)])).unwrap();
        let cfg = WarmupConfig::naked();
        let left = effective_resistance_path(v(0, 0), v(5, 0), &cfg, &b).unwrap();
        let right = effective_resistance_path(v(5, 0), v(10, 0), &cfg, &b).unwrap();
        assert!((s.get(v(5, 0)).unwrap() - left / (left + right)).abs() < 1e-10);
    }

    #[test]
    fn singular_when_no_exit() {
        let edges = [e(v(0, 0), v(1, 0)), e(v(1, 0), v(2, 0)), e(v(5, 0), v(6, 0))];
        let err = absorbing_solve(&edges, &bias(2.0), &[v(0, 0)], &Reward::ExpectedTime).unwrap_err();
        assert_eq!(err, NetworkError::Singular);
    }

    #[test]
    fn dense_fallback_on_cycle() {
        // Unit square plus a tail: one cycle forces the dense path.
        let sq = [v(0, 0), v(1, 0), v(1, 1), v(0, 1)];
        let mut edges: Vec<Edge> = (0..4).map(|i| e(sq[i], sq[(i + 1) % 4])).collect();
        edges.push(e(v(1, 0), v(2, 0)));
        let s = absorbing_solve(&edges, &bias(2.0), &[v(2, 0)], &Reward::HitProbability(vec![v(2, 0)])).unwrap();
        for w in sq {
            assert!((s.get(w).unwrap() - 1.0).abs() < 1e-12);
        }
        let t = absorbing_solve(&edges, &bias(2.0), &[v(2, 0)], &Reward::ExpectedTime).unwrap();
        assert!(t.residual < 1e-10);
    }

    #[test]
    fn tree_and_dense_agree() {
        let (edges, anchor, core) = entrance_chain(10, 4);
        let b = bias(1.7);
        let tree = absorbing_solve(&edges, &b, &[anchor, core], &Reward::ExpectedTime).unwrap();
        let net = Network::build(&edges, &b);
        let fixed: Vec<Option<f64>> =
            net.vertices.iter().map(|w| if *w == anchor || *w == core { Some(0.0) } else { None }).collect();
        let dense = solve_dense(&net, &fixed, 1.0).unwrap();
        for (i, w) in net.vertices.iter().enumerate() {
            assert!((tree.get(*w).unwrap() - dense[i]).abs() < 1e-10);
        }
    }
}
