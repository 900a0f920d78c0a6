use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance (zero for fewer than two samples).
    pub variance: f64,
    pub std_err: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    /// Welford's one-pass mean and variance, taken in slice order so the
    /// result is bit-reproducible; quantiles use linear interpolation
    /// between order statistics.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let n = samples.len();
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(SummaryStats {
            n,
            mean,
            variance,
            std_err: (variance / n as f64).sqrt(),
            q05: quantile_sorted(&sorted, 0.05),
            q25: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q75: quantile_sorted(&sorted, 0.75),
            q95: quantile_sorted(&sorted, 0.95),
            min: sorted[0],
            max: sorted[n - 1],
        })
    }

    pub fn from_counts<I: IntoIterator<Item = u64>>(samples: I) -> Option<Self> {
        let v: Vec<f64> = samples.into_iter().map(|x| x as f64).collect();
        Self::from_samples(&v)
    }

    /// Signed distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_err == 0.0 {
            return if self.mean == target { 0.0 } else { f64::INFINITY.copysign(self.mean - target) };
        }
        (self.mean - target) / self.std_err
    }
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One-sided two-sample Kolmogorov-Smirnov test of "`smaller` is
/// stochastically dominated by `larger`".
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationTest {
    /// `sup_t (F_larger(t) - F_smaller(t))`; large values contradict domination.
    pub statistic: f64,
    pub critical: f64,
    pub p_value: f64,
    pub passed: bool,
}

pub fn domination_test(smaller: &[f64], larger: &[f64], significance: f64) -> DominationTest {
    let mut a = smaller.to_vec();
    let mut b = larger.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max(j as f64 / m - i as f64 / n);
    }
    let scale = (n * m / (n + m)).sqrt();
    let critical = (-(significance.ln()) / 2.0).sqrt() / scale;
    let p_value = (-2.0 * (d * scale).powi(2)).exp().min(1.0);
    DominationTest { statistic: d, critical, p_value, passed: d <= critical }
}
