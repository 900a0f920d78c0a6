//! The beta-biased nearest-neighbor walk on a configuration, with trap
//! visit bookkeeping and first-passage records.

use std::collections::HashMap;

use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    Claim, Configuration, EscapeRoute, GeometryError, Neighbors, TrapSpec, Vertex,
};
use crate::network::Bias;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("walk reached the truncation column {column} at time {time} (position {position})")]
    Truncated { time: u64, position: Vertex, column: i128 },
    #[error("{start} is not in the configuration")]
    IsolatedStart { start: Vertex },
    #[error("forced first step {0} is not a neighbor of the start")]
    BadForcedStep(Vertex),
    #[error("excursion exceeded {0} steps; is beta > 1?")]
    ExcursionCap(u64),
}

/// Per-step law over the neighbor list, or `Stay` for an empty list.
#[derive(Clone, Debug, PartialEq)]
pub enum StepDistribution<T> {
    Stay,
    Weights(Vec<T>),
}

/// The right neighbor, if open, gets `beta / (beta + l - 1)` and each other
/// neighbor `1 / (beta + l - 1)`; otherwise the choice is uniform.
pub fn step_distribution<T: Num + Clone>(v: Vertex, neighbors: &[Vertex], beta: T) -> StepDistribution<T> {
    if neighbors.is_empty() {
        return StepDistribution::Stay;
    }
    let l = neighbors.iter().fold(T::zero(), |acc, _| acc + T::one());
    let has_right = neighbors.iter().any(|u| u.x == v.x + 1 && u.y == v.y);
    let weights = if has_right {
        let denom = beta.clone() + l - T::one();
        neighbors
            .iter()
            .map(|u| {
                if u.x > v.x {
                    beta.clone() / denom.clone()
                } else {
                    T::one() / denom.clone()
                }
            })
            .collect()
    } else {
        neighbors.iter().map(|_| T::one() / l.clone()).collect()
    };
    StepDistribution::Weights(weights)
}

/// Samples one step with a single uniform draw on `[0, beta + l - 1)`.
fn sample_step<R: Rng + ?Sized>(v: Vertex, nb: &Neighbors, beta: f64, rng: &mut R) -> Vertex {
    let items = nb.as_slice();
    match items.len() {
        0 => v,
        1 => items[0],
        l => {
            // Neighbors are stored right first, so an open right edge is slot 0.
            let has_right = items[0].x > v.x;
            let total = if has_right { beta + (l - 1) as f64 } else { l as f64 };
            let mut u = rng.gen::<f64>() * total;
            if has_right {
                if u < beta {
                    return items[0];
                }
                u -= beta;
                return items[(1 + u as usize).min(l - 1)];
            }
            items[(u as usize).min(l - 1)]
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WalkState {
    pub position: Vertex,
    pub time: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrapVisitRecord {
    /// `n` for the trapped line, the owning branch order for the fractal.
    pub trap_index: u32,
    pub anchor: Vertex,
    pub entrance_len: i128,
    pub core_len: i128,
    /// 1-based count of visits to this trap.
    pub visit_number: u64,
    /// Time of the step from the anchor into the trap.
    pub start_time: u64,
    /// Steps from leaving the anchor until the next return to it.
    pub duration: u64,
    pub hit_core: bool,
    /// False if the run stopped while the walker was inside.
    pub completed: bool,
    /// The anchor lies on the start vertex's escape route.
    pub on_path: bool,
}

impl TrapVisitRecord {
    /// Visit length counted only when the core was never reached.
    pub fn t_star(&self) -> u64 {
        if self.hit_core {
            0
        } else {
            self.duration
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// `t_max` steps were taken under the horizon rule.
    Horizon,
    TargetReached,
    ReturnedToStart,
    /// `t_max` elapsed before the requested stop condition.
    TimeLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    Horizon,
    FirstPassage(i128),
    ReturnToStart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrajectoryRow {
    pub t: u64,
    pub x: i128,
    pub y: i128,
    pub in_trap: bool,
    pub trap_index: Option<u32>,
}

#[derive(Clone, Debug, Default)]
pub struct WalkOptions {
    /// Times at which to record the position (each at most `t_max`).
    pub time_checkpoints: Vec<u64>,
    /// Take this neighbor as the first step instead of sampling it.
    pub forced_first_step: Option<Vertex>,
    /// Classify every step as on or off the start's escape route.
    pub track_path: bool,
    /// Record the first arrival time at every trap anchor.
    pub track_anchor_arrivals: bool,
    /// Keep every `stride`-th state for a trajectory dump.
    pub trajectory_stride: Option<u64>,
}

impl WalkOptions {
    pub fn standard() -> Self {
        WalkOptions { track_path: true, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkRecord {
    pub start: Vertex,
    /// `first_passage[i]` is the first time the walk had x = start.x + i.
    pub first_passage: Vec<u64>,
    pub trap_visits: Vec<TrapVisitRecord>,
    pub time_on_path: u64,
    pub time_off_path: u64,
    pub time_in_traps_on_path: u64,
    pub final_state: WalkState,
    pub stop_reason: StopReason,
    /// `(t, position)` at each requested time checkpoint that was reached.
    pub checkpoints: Vec<(u64, Vertex)>,
    /// First arrival time at each anchor reached, in order of arrival.
    pub anchor_arrivals: Vec<(Vertex, u64)>,
    pub trajectory: Vec<TrajectoryRow>,
}

impl WalkRecord {
    /// First-passage time to column `x`, if reached.
    pub fn first_passage_at(&self, x: i128) -> Option<u64> {
        let i = x.checked_sub(self.start.x)?;
        if i < 0 {
            return None;
        }
        self.first_passage.get(usize::try_from(i).ok()?).copied()
    }

    pub fn elapsed(&self) -> u64 {
        self.final_state.time
    }

    /// `X_t / t` at the final time, measured from the start column.
    pub fn speed(&self) -> f64 {
        let t = self.final_state.time;
        if t == 0 {
            return 0.0;
        }
        (self.final_state.position.x - self.start.x) as f64 / t as f64
    }
}

struct ActiveVisit {
    record: TrapVisitRecord,
}

/// Runs the walk from `start` until the stop rule fires or `t_max` steps
/// have been taken.
pub fn run<C: Configuration + ?Sized, R: Rng + ?Sized>(
    start: Vertex,
    cfg: &C,
    bias: &Bias,
    t_max: u64,
    stop: StopRule,
    options: &WalkOptions,
    rng: &mut R,
) -> Result<WalkRecord, WalkError> {
    let beta = bias.beta();
    let route: Option<EscapeRoute> = if options.track_path { Some(cfg.escape_route(start)?) } else { None };
    let limit = cfg.truncation_x();
    let mut checkpoints_todo: Vec<u64> = options.time_checkpoints.clone();
    checkpoints_todo.sort_unstable();
    checkpoints_todo.dedup();
    let mut next_cp = 0usize;

    let mut rec = WalkRecord {
        start,
        first_passage: vec![0],
        trap_visits: Vec::new(),
        time_on_path: 0,
        time_off_path: 0,
        time_in_traps_on_path: 0,
        final_state: WalkState { position: start, time: 0 },
        stop_reason: StopReason::TimeLimit,
        checkpoints: Vec::new(),
        anchor_arrivals: Vec::new(),
        trajectory: Vec::new(),
    };
    let mut visit_counts: HashMap<Vertex, u64> = HashMap::new();
    let mut arrived: HashMap<Vertex, u64> = HashMap::new();
    let mut active: Option<ActiveVisit> = None;
    let mut pos = start;
    let mut t = 0u64;

    if cfg.neighbors(start)?.is_empty() && options.forced_first_step.is_some() {
        return Err(WalkError::IsolatedStart { start });
    }
    if options.track_anchor_arrivals && cfg.trap_anchored_at(start)?.is_some() {
        arrived.insert(start, 0);
        rec.anchor_arrivals.push((start, 0));
    }
    let record_row = |rec: &mut WalkRecord, t: u64, pos: Vertex, active: &Option<ActiveVisit>| {
        if let Some(stride) = options.trajectory_stride {
            if stride > 0 && t % stride == 0 {
                rec.trajectory.push(TrajectoryRow {
                    t,
                    x: pos.x,
                    y: pos.y,
                    in_trap: active.is_some(),
                    trap_index: active.as_ref().map(|a| a.record.trap_index),
                });
            }
        }
    };
    record_row(&mut rec, 0, pos, &active);
    while next_cp < checkpoints_todo.len() && checkpoints_todo[next_cp] == 0 {
        rec.checkpoints.push((0, pos));
        next_cp += 1;
    }
    if let StopRule::FirstPassage(target) = stop {
        if pos.x >= target {
            rec.stop_reason = StopReason::TargetReached;
            return Ok(rec);
        }
    }

    while t < t_max {
        let nb = cfg.neighbors(pos)?;
        let next = match (t, options.forced_first_step) {
            (0, Some(f)) => {
                if !nb.contains(&f) {
                    return Err(WalkError::BadForcedStep(f));
                }
                f
            }
            _ => sample_step(pos, &nb, beta, rng),
        };
        if let Some(r) = &route {
            if r.contains(pos) {
                rec.time_on_path += 1;
            } else {
                rec.time_off_path += 1;
            }
        } else {
            rec.time_off_path += 1;
        }
        // A visit starts with the step from an anchor to the vertex above it.
        if active.is_none() && next.y == pos.y + 1 && next.x == pos.x {
            if let Some(trap) = cfg.trap_anchored_at(pos)? {
                let count = visit_counts.entry(trap.anchor).or_insert(0);
                *count += 1;
                let on_path = route.as_ref().is_some_and(|r| r.contains(trap.anchor));
                active = Some(ActiveVisit { record: new_visit(&trap, *count, t, on_path) });
            }
        }
        let prev = pos;
        pos = next;
        t += 1;
        if let Some(a) = active.as_mut() {
            a.record.duration += 1;
            if a.record.on_path {
                rec.time_in_traps_on_path += 1;
            }
            if pos.y == a.record.anchor.y + 2 {
                a.record.hit_core = true;
            }
            if pos == a.record.anchor {
                a.record.completed = true;
                rec.trap_visits.push(a.record);
                active = None;
            }
        }
        if pos.x > prev.x {
            let i = (pos.x - start.x) as usize;
            if pos.x > start.x && i == rec.first_passage.len() {
                rec.first_passage.push(t);
            }
        }
        if options.track_anchor_arrivals && pos != prev && !arrived.contains_key(&pos) {
            if cfg.trap_anchored_at(pos)?.is_some() {
                arrived.insert(pos, t);
                rec.anchor_arrivals.push((pos, t));
            }
        }
        record_row(&mut rec, t, pos, &active);
        while next_cp < checkpoints_todo.len() && checkpoints_todo[next_cp] == t {
            rec.checkpoints.push((t, pos));
            next_cp += 1;
        }
        if let Some(col) = limit {
            if pos.x >= col {
                return Err(WalkError::Truncated { time: t, position: pos, column: col });
            }
        }
        let done = match stop {
            StopRule::Horizon => false,
            StopRule::FirstPassage(target) => pos.x >= target,
            StopRule::ReturnToStart => pos == start,
        };
        if done {
            rec.stop_reason = match stop {
                StopRule::FirstPassage(_) => StopReason::TargetReached,
                _ => StopReason::ReturnedToStart,
            };
            break;
        }
    }
    if t == t_max && rec.stop_reason == StopReason::TimeLimit && stop == StopRule::Horizon {
        rec.stop_reason = StopReason::Horizon;
    }
    if let Some(a) = active {
        rec.trap_visits.push(a.record);
    }
    rec.final_state = WalkState { position: pos, time: t };
    Ok(rec)
}

fn new_visit(trap: &TrapSpec, visit_number: u64, t: u64, on_path: bool) -> TrapVisitRecord {
    TrapVisitRecord {
        trap_index: trap.index,
        anchor: trap.anchor,
        entrance_len: trap.entrance_len,
        core_len: trap.core_len,
        visit_number,
        start_time: t,
        duration: 0,
        hit_core: false,
        completed: false,
        on_path,
    }
}

/// Independent generator for replicate `index`: ChaCha8 seeded from the
/// master seed, with the replicate index selecting the stream.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// A horizontal line through the origin with a trap whose entrance runs
/// left forever from `(0, 1)` and which has no core.
#[derive(Clone, Copy, Debug, Default)]
pub struct InfiniteEntranceTrap;

impl Configuration for InfiniteEntranceTrap {
    fn neighbors(&self, v: Vertex) -> Result<Neighbors, GeometryError> {
        match v.y {
            0 => Neighbors::from_flags(v, true, true, v.x == 0, false),
            1 if v.x <= 0 => Neighbors::from_flags(v, v.x < 0, true, false, v.x == 0),
            _ => Ok(Neighbors::new()),
        }
    }

    fn trap_anchored_at(&self, _: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        Ok(None)
    }

    fn claims(&self, _: Vertex) -> Result<Vec<Claim>, GeometryError> {
        Ok(Vec::new())
    }

    fn escape_route(&self, v: Vertex) -> Result<EscapeRoute, GeometryError> {
        Err(GeometryError::NotInConfiguration(v))
    }
}

pub const EXCURSION_CAP: u64 = 1_000_000_000;

/// Length of one anchor-to-anchor visit to a trap with infinite entrance.
pub fn sample_infinite_entrance_excursion<R: Rng + ?Sized>(bias: &Bias, rng: &mut R) -> Result<u64, WalkError> {
    let options = WalkOptions { forced_first_step: Some(Vertex::new(0, 1)), ..Default::default() };
    let origin = Vertex::new(0, 0);
    let rec = run(origin, &InfiniteEntranceTrap, bias, EXCURSION_CAP, StopRule::ReturnToStart, &options, rng)?;
    match rec.stop_reason {
        StopReason::ReturnedToStart => Ok(rec.elapsed()),
        _ => Err(WalkError::ExcursionCap(EXCURSION_CAP)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapEvent {
    pub anchor: Vertex,
    pub trap_index: u32,
    pub first_arrival: u64,
    /// The walk stepped into the trap right after first reaching the anchor.
    pub entered_on_arrival: bool,
    /// ... and stayed at least `beta^core_len` steps (capped at the run end).
    pub long_stay: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSpeedReport {
    /// `(x, U(x)/x)` per checkpoint; `None` where x was not reached.
    pub ratios: Vec<(i128, Option<f64>)>,
    pub events: Vec<TrapEvent>,
}

/// First-passage ratios `U(x)/(x - start.x)` at the given columns, plus the
/// enter-on-first-arrival-and-stay-long event for each anchor reached.
pub fn zero_speed_detector(record: &WalkRecord, checkpoints: &[i128], bias: &Bias) -> ZeroSpeedReport {
    let ratios = checkpoints
        .iter()
        .filter(|&&x| x != record.start.x)
        .map(|&x| {
            let dist = (x - record.start.x) as f64;
            (x, record.first_passage_at(x).map(|u| u as f64 / dist))
        })
        .collect();
    let ln_beta = bias.beta().ln();
    let events = record
        .anchor_arrivals
        .iter()
        .map(|&(anchor, first)| {
            let visit = record.trap_visits.iter().find(|v| v.anchor == anchor && v.start_time == first);
            // Compare in logarithms: beta^core_len overflows for real cores.
            let long_stay = visit.is_some_and(|v| {
                (v.duration as f64).ln() >= v.core_len as f64 * ln_beta || (!v.completed && v.hit_core)
            });
            TrapEvent {
                anchor,
                trap_index: visit.map(|v| v.trap_index).unwrap_or(0),
                first_arrival: first,
                entered_on_arrival: visit.is_some(),
                long_stay,
            }
        })
        .collect();
    ZeroSpeedReport { ratios, events }
}
