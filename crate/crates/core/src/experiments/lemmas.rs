use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use super::stats::{domination_test, SummaryStats};
use super::ExperimentError;
use crate::geometry::{Configuration, Edge, FractalConfig, Location, TrapSpec, Vertex, WarmupConfig};
use crate::network::{
    absorbing_solve, cone_return_time_bound, escape_probability, expected_infinite_entrance_excursion,
    hit_core_probability, infinite_entrance_mean_visit, stationary_return_time, stay_in_core_lower_bound,
    Bias, Interval, Reward,
};
use crate::walker::{
    replicate_rng, run, sample_infinite_entrance_excursion, StopReason, StopRule, WalkOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaRow {
    pub lemma: String,
    pub beta: f64,
    pub e: Option<u64>,
    pub c: Option<u64>,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub verdict: Verdict,
}

impl LemmaRow {
    fn two_sided(lemma: &str, beta: f64, e: Option<u64>, c: Option<u64>, stats: &SummaryStats, target: f64) -> Self {
        let ok = (stats.mean - target).abs() <= 3.0 * stats.std_err;
        LemmaRow {
            lemma: lemma.to_string(),
            beta,
            e,
            c,
            estimate: stats.mean,
            stderr: stats.std_err,
            target,
            verdict: Verdict::from_bool(ok),
        }
    }

    /// Passes when the estimate is not more than 3 standard errors above `bound`.
    fn at_most(lemma: &str, beta: f64, k: Option<u64>, stats: &SummaryStats, bound: f64) -> Self {
        LemmaRow {
            lemma: lemma.to_string(),
            beta,
            e: k,
            c: None,
            estimate: stats.mean,
            stderr: stats.std_err,
            target: bound,
            verdict: Verdict::from_bool(stats.mean <= bound + 3.0 * stats.std_err),
        }
    }
}

pub fn write_lemma_csv<W: Write>(rows: &[LemmaRow], seed: u64, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# master_seed={seed}")?;
    writeln!(out, "lemma,beta,e,c,estimate,stderr,target,verdict")?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.lemma,
            r.beta,
            opt(r.e),
            opt(r.c),
            r.estimate,
            r.stderr,
            r.target,
            r.verdict.as_str()
        )?;
    }
    Ok(())
}

/// Anchor column used for isolated test traps; far enough right that the
/// left end of the line is irrelevant.
const TEST_ANCHOR_X: i128 = 64;
const ENTRY_TIME_CAP: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntrySample {
    pub duration: u64,
    pub hit_core: bool,
    pub t_star: u64,
}

fn single_trap_line(entrance_len: u64, core_len: u64) -> Result<(WarmupConfig, TrapSpec), ExperimentError> {
    let anchor = Vertex::new(TEST_ANCHOR_X, 0);
    let trap = TrapSpec::new(anchor, entrance_len as i128, core_len as i128, 1)?;
    Ok((WarmupConfig::with_traps(vec![trap])?, trap))
}

/// Visits to a single trap, each started by stepping from the anchor into
/// the entrance and ended on return to the anchor.
pub fn trap_entry_samples(
    bias: &Bias,
    entrance_len: u64,
    core_len: u64,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<EntrySample>, ExperimentError> {
    let (cfg, trap) = single_trap_line(entrance_len, core_len)?;
    let options = WalkOptions { forced_first_step: Some(trap.mouth()), ..Default::default() };
    let mut rng = replicate_rng(seed, stream);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let rec = run(trap.anchor, &cfg, bias, ENTRY_TIME_CAP, StopRule::ReturnToStart, &options, &mut rng)?;
        let visit = rec.trap_visits.first().copied().ok_or_else(|| {
            ExperimentError::Invalid("forced entry did not register a trap visit".into())
        })?;
        out.push(EntrySample { duration: visit.duration, hit_core: visit.hit_core, t_star: visit.t_star() });
    }
    Ok(out)
}

pub fn infinite_entrance_samples(bias: &Bias, samples: usize, seed: u64, stream: u64) -> Result<Vec<u64>, ExperimentError> {
    let mut rng = replicate_rng(seed, stream);
    (0..samples)
        .map(|_| sample_infinite_entrance_excursion(bias, &mut rng).map_err(ExperimentError::from))
        .collect()
}

/// Number of trap entries made by walks started at the anchor of a single
/// trap, run until they are far enough right that a return has
/// probability below `1e-12`.
pub fn entry_count_samples(bias: &Bias, samples: usize, seed: u64, stream: u64) -> Result<Vec<u64>, ExperimentError> {
    let (cfg, trap) = single_trap_line(1, 1)?;
    let margin = (12.0 * 10f64.ln() / bias.beta().ln()).ceil() as i128 + 1;
    let target = trap.anchor.x + margin;
    let mut rng = replicate_rng(seed, stream);
    let options = WalkOptions::default();
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let rec = run(trap.anchor, &cfg, bias, ENTRY_TIME_CAP, StopRule::FirstPassage(target), &options, &mut rng)?;
        if rec.stop_reason != StopReason::TargetReached {
            return Err(ExperimentError::Invalid("entry-count walk hit the time cap".into()));
        }
        out.push(rec.trap_visits.len() as u64);
    }
    Ok(out)
}

/// Edges of the entrance chain of a trap plus its anchor edge and the first
/// core edge, the smallest network on which the core-hit event is decided.
fn entrance_network(trap: &TrapSpec) -> Result<(Vec<Edge>, Vertex), ExperimentError> {
    let mut edges = vec![Edge::new(trap.anchor, trap.mouth())?];
    let y = trap.entrance_row();
    for x in trap.left_x()..trap.anchor.x {
        edges.push(Edge::new(Vertex::new(x, y), Vertex::new(x + 1, y))?);
    }
    edges.push(Edge::new(Vertex::new(trap.left_x(), y), trap.core_entry())?);
    Ok((edges, trap.core_entry()))
}

/// Exact core-hit probability from the absorbing chain on the entrance.
pub fn exact_core_hit(bias: &Bias, entrance_len: u64) -> Result<(f64, f64), ExperimentError> {
    let (_, trap) = single_trap_line(entrance_len, 1)?;
    let (edges, core) = entrance_network(&trap)?;
    let sol = absorbing_solve(&edges, bias, &[trap.anchor, core], &Reward::HitProbability(vec![core]))?;
    Ok((sol.get(trap.mouth()).unwrap_or(f64::NAN), sol.residual))
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub betas: Vec<f64>,
    pub entrances: Vec<u64>,
    /// Core length of the test traps; also the sojourn threshold exponent.
    pub core_len: u64,
    pub samples: usize,
    pub seed: u64,
}

/// Core-hit, core-sojourn, infinite-entrance and entry-count checks for
/// every bias and entrance length in the grids.
pub fn lemma_suite(opts: &SuiteOptions) -> Result<Vec<LemmaRow>, ExperimentError> {
    if opts.betas.is_empty() || opts.entrances.is_empty() || opts.samples == 0 {
        return Err(ExperimentError::Invalid("lemma suite needs non-empty grids and samples".into()));
    }
    let mut rows = Vec::new();
    let mut stream = 0u64;
    for &beta in &opts.betas {
        let bias = Bias::new(beta)?;
        let mut finite_t_star: Vec<f64> = Vec::new();
        for &e in &opts.entrances {
            let c = opts.core_len;
            let (exact, residual) = exact_core_hit(&bias, e)?;
            let closed = hit_core_probability(e, &bias);
            rows.push(LemmaRow {
                lemma: "core_hit_exact".into(),
                beta,
                e: Some(e),
                c: None,
                estimate: exact,
                stderr: residual,
                target: closed,
                verdict: Verdict::from_bool((exact - closed).abs() <= 1e-10),
            });
            let entries = trap_entry_samples(&bias, e, c, opts.samples, opts.seed, stream)?;
            stream += 1;
            let hits = SummaryStats::from_samples(
                &entries.iter().map(|s| if s.hit_core { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
            )
            .expect("non-empty");
            rows.push(LemmaRow::two_sided("core_hit", beta, Some(e), Some(c), &hits, closed));
            // Long sojourn: a visit lasting at least beta^c steps.
            let threshold = beta.powf(c as f64);
            let long = SummaryStats::from_samples(
                &entries.iter().map(|s| if s.duration as f64 >= threshold { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
            )
            .expect("non-empty");
            let bound = stay_in_core_lower_bound(e, &bias);
            rows.push(LemmaRow {
                lemma: "core_sojourn".into(),
                beta,
                e: Some(e),
                c: Some(c),
                estimate: long.mean,
                stderr: long.std_err,
                target: bound,
                verdict: Verdict::from_bool(long.mean >= bound - 3.0 * long.std_err),
            });
            finite_t_star.extend(entries.iter().map(|s| s.t_star as f64));
        }
        let inf = infinite_entrance_samples(&bias, opts.samples, opts.seed, stream)?;
        stream += 1;
        let inf_f: Vec<f64> = inf.iter().map(|&x| x as f64).collect();
        let inf_stats = SummaryStats::from_samples(&inf_f).expect("non-empty");
        rows.push(LemmaRow::two_sided(
            "t_star_mean",
            beta,
            None,
            None,
            &inf_stats,
            expected_infinite_entrance_excursion(&bias),
        ));
        rows.push(LemmaRow::two_sided("t_star_visit_mean", beta, None, None, &inf_stats, infinite_entrance_mean_visit(&bias)));
        let dom = domination_test(&finite_t_star, &inf_f, 0.01);
        rows.push(LemmaRow {
            lemma: "t_star_domination".into(),
            beta,
            e: None,
            c: None,
            estimate: dom.statistic,
            stderr: 0.0,
            target: dom.critical,
            verdict: Verdict::from_bool(dom.passed),
        });
        let counts = entry_count_samples(&bias, opts.samples, opts.seed, stream)?;
        stream += 1;
        let count_stats = SummaryStats::from_counts(counts).expect("non-empty");
        rows.push(LemmaRow::two_sided("entry_count", beta, None, None, &count_stats, 1.0 / (beta - 1.0)));
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma42Sample {
    pub vertex: Vertex,
    pub order: u32,
    pub escape: Interval,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma42Report {
    pub bound: f64,
    pub samples: Vec<Lemma42Sample>,
    /// Candidates drawn but discarded for being too close to their corner
    /// or not on a main part of the drawn order.
    pub rejected: usize,
    pub min_lower: f64,
    pub passed: bool,
}

/// Escape-probability lower bounds at random main-part vertices lying at
/// least `3 * 2^(k-1)` left of their corner, against `(beta-1)/(2(3+beta))`.
pub fn lemma42_bound_check<R: Rng + ?Sized>(
    cfg: &FractalConfig,
    bias: &Bias,
    sample_count: usize,
    horizon: i128,
    rng: &mut R,
) -> Result<Lemma42Report, ExperimentError> {
    let beta = bias.beta();
    let bound = (beta - 1.0) / (2.0 * (3.0 + beta));
    let top = cfg.max_order().min(5);
    // Draw columns from the span of one top-level branch below the cutoff.
    let span = cfg.b((top + 1).min(cfg.max_order()));
    let mut samples = Vec::with_capacity(sample_count);
    let mut rejected = 0usize;
    let mut attempts = 0usize;
    while samples.len() < sample_count {
        attempts += 1;
        if attempts > 1000 * sample_count.max(1) {
            return Err(ExperimentError::Invalid("could not find qualifying vertices".into()));
        }
        let k = rng.gen_range(1..=top);
        let j: i128 = rng.gen_range(0..4);
        let y = (3i128 << (k - 1)) * (2 * j + 1);
        let x = rng.gen_range(0..span);
        let v = Vertex::new(x, y);
        match cfg.locate(v)? {
            Location::MainPart(br) if br.order == k && br.corner.x - x >= 3i128 << (k - 1) => {
                let escape = escape_probability(v, cfg, bias, horizon)?;
                samples.push(Lemma42Sample { vertex: v, order: k, escape });
            }
            _ => rejected += 1,
        }
    }
    let min_lower = samples.iter().map(|s| s.escape.lo).fold(f64::INFINITY, f64::min);
    Ok(Lemma42Report { bound, passed: min_lower >= bound, samples, rejected, min_lower })
}

/// Edges reachable from the left neighbor of `corner` without passing
/// through `corner`, plus the edge joining them: the region a walk explores
/// on an excursion to the left of the corner.
pub fn cone_subgraph<C: Configuration + ?Sized>(
    cfg: &C,
    corner: Vertex,
    limit: usize,
) -> Result<Vec<Edge>, ExperimentError> {
    let first = corner.left()?;
    let mut seen = BTreeSet::from([corner, first]);
    let mut edges = vec![Edge::new(corner, first)?];
    let mut queue = VecDeque::from([first]);
    while let Some(w) = queue.pop_front() {
        for &u in cfg.neighbors(w)?.iter() {
            if u == corner {
                continue;
            }
            if w < u || !seen.contains(&u) {
                edges.push(Edge::new(w, u)?);
            }
            if seen.insert(u) {
                if seen.len() > limit {
                    return Err(ExperimentError::Invalid(format!("cone at {corner} exceeds {limit} vertices")));
                }
                queue.push_back(u);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

fn excursion_samples<C: Configuration + ?Sized>(
    cfg: &C,
    bias: &Bias,
    start: Vertex,
    first: Vertex,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<u64>, ExperimentError> {
    let options = WalkOptions { forced_first_step: Some(first), ..Default::default() };
    let mut rng = replicate_rng(seed, stream);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let rec = run(start, cfg, bias, ENTRY_TIME_CAP, StopRule::ReturnToStart, &options, &mut rng)?;
        if rec.stop_reason != StopReason::ReturnedToStart {
            return Err(ExperimentError::Invalid(format!("excursion from {start} hit the time cap")));
        }
        out.push(rec.elapsed());
    }
    Ok(out)
}

/// Corner and root excursions of the branches on the escape path from
/// `(0, 3)`, against `C'_beta`, `3 * 2^k + C'_beta` and the stationary
/// return time of the cone.
pub fn return_time_check(
    cfg: &FractalConfig,
    bias: &Bias,
    orders: &[u32],
    samples: usize,
    seed: u64,
) -> Result<Vec<LemmaRow>, ExperimentError> {
    let beta = bias.beta();
    let c_prime = cone_return_time_bound(bias);
    let top = orders.iter().copied().max().unwrap_or(1);
    if top > 4 || top >= cfg.max_order() {
        return Err(ExperimentError::Invalid(format!("orders must be at most 4 and below {}", cfg.max_order())));
    }
    let branches = cfg.path_branches(Vertex::new(0, 3), top)?;
    let mut rows = Vec::new();
    for (i, &k) in orders.iter().enumerate() {
        let br = branches[(k - 1) as usize];
        let stream = 1000 + 3 * i as u64;
        let corner_times = excursion_samples(cfg, bias, br.corner, br.corner.left()?, samples, seed, stream)?;
        let min_len = corner_times.iter().copied().min().unwrap_or(0);
        let stats = SummaryStats::from_counts(corner_times).expect("non-empty");
        rows.push(LemmaRow::at_most("corner_excursion", beta, Some(k as u64), &stats, c_prime));
        let cone = cone_subgraph(cfg, br.corner, 1_000_000)?;
        let stationary = stationary_return_time(&cone, bias, br.corner)?;
        rows.push(LemmaRow::two_sided("cone_return_time", beta, Some(k as u64), None, &stats, stationary));

        let toward = if br.abutment_up { br.root.down()? } else { br.root.up()? };
        let root_times = excursion_samples(cfg, bias, br.root, toward, samples, seed, stream + 1)?;
        let min_len = min_len.min(root_times.iter().copied().min().unwrap_or(0));
        let stats = SummaryStats::from_counts(root_times).expect("non-empty");
        let bound = (3i128 << k) as f64 + c_prime;
        rows.push(LemmaRow::at_most("root_excursion", beta, Some(k as u64), &stats, bound));
        rows.push(LemmaRow {
            lemma: "excursion_min_length".into(),
            beta,
            e: Some(k as u64),
            c: None,
            estimate: min_len as f64,
            stderr: 0.0,
            target: 2.0,
            verdict: Verdict::from_bool(min_len >= 2),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_core_hit_matches_closed_form() {
        for beta in [1.5, 2.0, 3.0] {
            let bias = Bias::new(beta).unwrap();
            for e in [1, 2, 5] {
                let (p, res) = exact_core_hit(&bias, e).unwrap();
                assert!((p - hit_core_probability(e, &bias)).abs() < 1e-10);
                assert!(res < 1e-10);
            }
        }
    }

    #[test]
    fn small_suite_runs() {
        let rows = lemma_suite(&SuiteOptions { betas: vec![2.0], entrances: vec![1], core_len: 3, samples: 2000, seed: 4 })
            .unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.lemma.as_str()).collect();
        assert_eq!(
            names,
            ["core_hit_exact", "core_hit", "core_sojourn", "t_star_mean", "t_star_visit_mean", "t_star_domination", "entry_count"]
        );
        let get = |n: &str| rows.iter().find(|r| r.lemma == n).unwrap();
        assert_eq!(get("core_hit_exact").verdict, Verdict::Pass);
        assert_eq!(get("t_star_visit_mean").verdict, Verdict::Pass);
        let mut buf = Vec::new();
        write_lemma_csv(&rows, 4, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("lemma,beta,e,c"));
        assert_eq!(text.lines().count(), 2 + rows.len());
    }

    #[test]
    fn cone_of_order_two_corner() {
        let cfg = FractalConfig::new(2.0, 6).unwrap();
        let edges = cone_subgraph(&cfg, Vertex::new(11, 6), 10_000).unwrap();
        // Main part 11 edges, two order-1 branches on each side (3 + 3 edges
        // each) and a trap with e = c = 1 (4 edges).
        assert_eq!(edges.len(), 11 + 4 * 6 + 4);
        let t = stationary_return_time(&edges, &Bias::new(2.0).unwrap(), Vertex::new(11, 6)).unwrap();
        assert!(t <= 15.0, "{t}");
    }

    #[test]
    fn lemma42_rejects_and_samples() {
        let cfg = FractalConfig::new(2.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = lemma42_bound_check(&cfg, &Bias::new(2.0).unwrap(), 20, 200, &mut rng).unwrap();
        assert_eq!(r.samples.len(), 20);
        assert!(r.rejected > 0);
        assert!((r.bound - 0.1).abs() < 1e-15);
        for s in &r.samples {
            let br = match cfg.locate(s.vertex).unwrap() {
                Location::MainPart(br) => br,
                other => panic!("{other:?}"),
            };
            assert!(br.corner.x - s.vertex.x >= 3 << (s.order - 1));
        }
    }
}
