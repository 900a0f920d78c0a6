use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::SummaryStats;
use super::ExperimentError;
use crate::geometry::{Configuration, FractalConfig, Vertex, WarmupConfig};
use crate::network::Bias;
use crate::walker::{replicate_rng, run, StopRule, WalkError, WalkOptions, WalkRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Warmup { alpha: f64 },
    Fractal { gamma: f64, max_order: u32 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn Configuration>, ExperimentError> {
        Ok(match *self {
            ModelSpec::Warmup { alpha } => Box::new(WarmupConfig::new(alpha)?),
            ModelSpec::Fractal { gamma, max_order } => Box::new(FractalConfig::new(gamma, max_order)?),
        })
    }

    /// The canonical start: the origin of the line, or the tip at `(0, 3)`.
    pub fn default_start(&self) -> Vertex {
        match self {
            ModelSpec::Warmup { .. } => Vertex::new(0, 0),
            ModelSpec::Fractal { .. } => Vertex::new(0, 3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSpec {
    pub model: ModelSpec,
    pub beta: f64,
    pub start: Vertex,
    pub t_max: u64,
    /// Times at which `X_t / t` is recorded.
    pub time_checkpoints: Vec<u64>,
    /// Columns at which `U(x) / x` is recorded.
    pub x_checkpoints: Vec<i128>,
    pub replicates: u64,
    pub seed: u64,
}

impl ReplicateSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replicates == 0 {
            return Err(ExperimentError::Invalid("replicates must be at least 1".into()));
        }
        if !self.time_checkpoints.windows(2).all(|w| w[0] < w[1]) || !self.x_checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(ExperimentError::Invalid("checkpoints must be strictly increasing".into()));
        }
        if self.time_checkpoints.iter().any(|&t| t == 0 || t > self.t_max) {
            return Err(ExperimentError::Invalid("time checkpoints must lie in 1..=t_max".into()));
        }
        Bias::new(self.beta)?;
        Ok(())
    }
}

/// Runs every replicate of `spec` at bias `beta`; results are returned in
/// replicate order whatever the scheduling. Truncated walks come back as
/// errors in their slot.
pub fn run_replicates(
    spec: &ReplicateSpec,
    beta: f64,
    jobs: Option<usize>,
) -> Result<Vec<Result<WalkRecord, WalkError>>, ExperimentError> {
    let cfg = spec.model.build()?;
    let bias = Bias::new(beta)?;
    let options = WalkOptions {
        time_checkpoints: spec.time_checkpoints.clone(),
        track_anchor_arrivals: true,
        ..WalkOptions::standard()
    };
    let one = |i: u64| {
        let mut rng = replicate_rng(spec.seed, i);
        run(spec.start, cfg.as_ref(), &bias, spec.t_max, StopRule::Horizon, &options, &mut rng)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(|| (0..spec.replicates).into_par_iter().map(one).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub t: Option<u64>,
    pub checkpoint_x: Option<i128>,
    pub stat: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub n_replicates: u64,
    pub n_aborted: u64,
}

/// Summaries of `X_t / t` at each time checkpoint and of `U(x) / x` at each
/// column checkpoint, for every bias in the grid. Unreached columns count
/// as `U(x) = infinity` in the median.
pub fn speed_sweep(spec: &ReplicateSpec, betas: &[f64], jobs: Option<usize>) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.validate()?;
    if betas.is_empty() {
        return Err(ExperimentError::Invalid("beta grid is empty".into()));
    }
    let mut rows = Vec::new();
    for &beta in betas {
        let results = run_replicates(spec, beta, jobs)?;
        let mut ok: Vec<WalkRecord> = Vec::new();
        let mut aborted = 0u64;
        for r in results {
            match r {
                Ok(rec) => ok.push(rec),
                Err(WalkError::Truncated { .. }) => aborted += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let row = |t: Option<u64>, x: Option<i128>, stat: &str, value: f64, stderr: Option<f64>| SweepRow {
            beta,
            t,
            checkpoint_x: x,
            stat: stat.to_string(),
            value,
            stderr,
            n_replicates: spec.replicates,
            n_aborted: aborted,
        };
        for &t in &spec.time_checkpoints {
            let speeds: Vec<f64> = ok
                .iter()
                .filter_map(|rec| rec.checkpoints.iter().find(|c| c.0 == t))
                .map(|&(t, p)| (p.x - spec.start.x) as f64 / t as f64)
                .collect();
            if let Some(s) = SummaryStats::from_samples(&speeds) {
                rows.push(row(Some(t), None, "speed_mean", s.mean, Some(s.std_err)));
                rows.push(row(Some(t), None, "speed_median", s.median, None));
                rows.push(row(Some(t), None, "speed_q25", s.q25, None));
                rows.push(row(Some(t), None, "speed_q75", s.q75, None));
            }
        }
        for &x in &spec.x_checkpoints {
            let dist = (x - spec.start.x) as f64;
            if dist <= 0.0 {
                continue;
            }
            let all: Vec<f64> = ok
                .iter()
                .map(|rec| rec.first_passage_at(x).map_or(f64::INFINITY, |u| u as f64 / dist))
                .collect();
            let reached: Vec<f64> = all.iter().copied().filter(|v| v.is_finite()).collect();
            if let Some(s) = SummaryStats::from_samples(&all) {
                rows.push(row(None, Some(x), "u_ratio_median", s.median, None));
            }
            if let Some(s) = SummaryStats::from_samples(&reached) {
                rows.push(row(None, Some(x), "u_ratio_mean_reached", s.mean, Some(s.std_err)));
            }
            let frac = if ok.is_empty() { 0.0 } else { reached.len() as f64 / ok.len() as f64 };
            rows.push(row(None, Some(x), "reached_fraction", frac, None));
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], seed: u64, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# master_seed={seed}")?;
    writeln!(out, "beta,t,checkpoint_x,stat,value,stderr,n_replicates,n_aborted")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.beta,
            r.t.map(|t| t.to_string()).unwrap_or_default(),
            r.checkpoint_x.map(|x| x.to_string()).unwrap_or_default(),
            r.stat,
            r.value,
            r.stderr.map(|s| s.to_string()).unwrap_or_default(),
            r.n_replicates,
            r.n_aborted
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ReplicateSpec {
        ReplicateSpec {
            model: ModelSpec::Warmup { alpha: 1.0 },
            beta: 2.0,
            start: Vertex::new(0, 0),
            t_max: 20_000,
            time_checkpoints: vec![1_000, 20_000],
            x_checkpoints: vec![8, 27],
            replicates: 4,
            seed: 9,
        }
    }

    #[test]
    fn sweep_rows_and_reproducibility() {
        let a = speed_sweep(&spec(), &[2.0, 4.0], Some(2)).unwrap();
        let b = speed_sweep(&spec(), &[2.0, 4.0], Some(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().any(|r| r.stat == "speed_mean" && r.t == Some(20_000) && r.beta == 4.0));
        let mut buf = Vec::new();
        write_sweep_csv(&a, 9, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# master_seed=9\nbeta,t,checkpoint_x,stat,value,stderr,n_replicates,n_aborted\n"));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = spec();
        s.replicates = 0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.time_checkpoints = vec![5, 3];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.beta = 0.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn model_spec_json() {
        let m: ModelSpec = serde_json::from_str(r#"{"model":"fractal","gamma":2.0,"max_order":8}"#).unwrap();
        assert_eq!(m, ModelSpec::Fractal { gamma: 2.0, max_order: 8 });
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"warmup","alpha":1.0,"x":1}"#).is_err());
    }
}
