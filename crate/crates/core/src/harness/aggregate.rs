//! Summaries over runs: per-strength statistics, N-model bins and p-value
//! histograms.

use crate::error::{Error, Result};
use crate::stats::n_model_test;
use crate::synthetic::scenario::RANGE_U;
use crate::synthetic::{RunRecord, Scenario};

pub const HISTOGRAM_BINS: usize = 20;

/// Mean, 2.5%/97.5% percentiles and range of the finite values of a series.
/// All fields are NaN when no value is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Linear interpolation between order statistics (the R-7 rule); `sorted`
/// must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl SeriesStats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> SeriesStats {
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            let nan = f64::NAN;
            return SeriesStats { mean: nan, lo: nan, hi: nan, min: nan, max: nan, count: 0 };
        }
        v.sort_by(f64::total_cmp);
        SeriesStats {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            lo: quantile(&v, 0.025),
            hi: quantile(&v, 0.975),
            min: v[0],
            max: v[v.len() - 1],
            count: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub scenario: Scenario,
    pub epsilon: f64,
    pub runs: usize,
    pub median_p: f64,
    pub basic_reject_rate: f64,
    pub p_value: SeriesStats,
    pub r_hat_s: SeriesStats,
    pub r_hat_g: SeriesStats,
    pub r_hat_s_prime: SeriesStats,
    pub true_risk_estimate: SeriesStats,
    pub avg_weight_misclassified: SeriesStats,
    pub avg_weight_successful_adv: SeriesStats,
}

/// p-value of one bin of `n` consecutive runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NModelRow {
    pub epsilon: f64,
    pub n: usize,
    pub bin: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub epsilon: f64,
    pub n: usize,
    /// Counts over equal-width bins of `[0, 1]`; `p = 1` falls in the last.
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn of(epsilon: f64, n: usize, p_values: &[f64]) -> Histogram {
        let mut counts = vec![0; HISTOGRAM_BINS];
        for &p in p_values {
            let i = ((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            counts[i] += 1;
        }
        Histogram { epsilon, n, counts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
    pub n_values: Vec<usize>,
    pub n_model: Vec<NModelRow>,
    pub histograms: Vec<Histogram>,
}

impl Summary {
    /// Per strength: mean N-model p with percentile bounds for `n <= 2` and
    /// the min/max range otherwise.
    pub fn n_model_curve(&self, n: usize) -> impl Iterator<Item = (f64, SeriesStats)> + '_ {
        self.cells.iter().map(move |c| {
            let mut s = SeriesStats::of(
                self.n_model
                    .iter()
                    .filter(|r| r.n == n && r.epsilon.to_bits() == c.epsilon.to_bits())
                    .map(|r| r.p_value),
            );
            if n > 2 {
                (s.lo, s.hi) = (s.min, s.max);
            }
            (c.epsilon, s)
        })
    }

    pub fn cell(&self, epsilon: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.epsilon == epsilon)
    }

    pub fn n_model_p_values(&self, epsilon: f64, n: usize) -> Vec<f64> {
        self.n_model
            .iter()
            .filter(|r| r.n == n && r.epsilon == epsilon)
            .map(|r| r.p_value)
            .collect()
    }
}

/// Groups records by strength in order of first appearance; within a group
/// runs keep their record order, which defines the N-model bins.
///
/// `t_values[i]` must hold the differences behind `records[i]`; they are
/// required only when some `n > 1`. N-model bins align examples by index
/// across runs.
pub fn aggregate(records: &[RunRecord], t_values: Option<&[Vec<f64>]>, n_model_bins: &[usize]) -> Result<Summary> {
    if let Some(t) = t_values {
        if t.len() != records.len() {
            return Err(Error::LengthMismatch { left: records.len(), right: t.len() });
        }
    }
    let mut groups: Vec<(Scenario, f64, Vec<usize>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|(s, e, _)| *s == r.scenario && e.to_bits() == r.epsilon.to_bits())
        {
            Some(g) => g.2.push(i),
            None => groups.push((r.scenario, r.epsilon, vec![i])),
        }
    }
    let mut n_values: Vec<usize> = n_model_bins.to_vec();
    n_values.sort_unstable();
    n_values.dedup();

    let mut summary = Summary { cells: Vec::new(), n_values: n_values.clone(), n_model: Vec::new(), histograms: Vec::new() };
    for (scenario, epsilon, idx) in &groups {
        let series = |f: fn(&RunRecord) -> f64| SeriesStats::of(idx.iter().map(|&i| f(&records[i])));
        let mut ps: Vec<f64> = idx.iter().map(|&i| records[i].p_value).collect();
        let p_in_order = ps.clone();
        ps.sort_by(f64::total_cmp);
        summary.cells.push(CellSummary {
            scenario: *scenario,
            epsilon: *epsilon,
            runs: idx.len(),
            median_p: quantile(&ps, 0.5),
            basic_reject_rate: idx.iter().filter(|&&i| records[i].basic_test_reject).count() as f64 / idx.len() as f64,
            p_value: series(|r| r.p_value),
            r_hat_s: series(|r| r.r_hat_s),
            r_hat_g: series(|r| r.r_hat_g),
            r_hat_s_prime: series(|r| r.r_hat_s_prime),
            true_risk_estimate: series(|r| r.true_risk_estimate),
            avg_weight_misclassified: series(|r| r.avg_weight_misclassified),
            avg_weight_successful_adv: series(|r| r.avg_weight_successful_adv),
        });
        for &n in &n_values {
            if n == 0 || idx.len() < n {
                return Err(Error::InsufficientRuns { runs: idx.len(), bin: n });
            }
            let bin_ps: Vec<f64> = if n == 1 {
                p_in_order.clone()
            } else {
                let t = t_values.ok_or_else(|| {
                    Error::Config(format!("`n_model_bins`: N = {n} needs the per-example differences"))
                })?;
                idx.chunks_exact(n)
                    .map(|bin| {
                        let rows: Vec<Vec<f64>> = bin.iter().map(|&i| t[i].clone()).collect();
                        n_model_test(&rows, RANGE_U, 0.05).map(|v| v.p_value)
                    })
                    .collect::<Result<_>>()?
            };
            for (bin, &p_value) in bin_ps.iter().enumerate() {
                summary.n_model.push(NModelRow { epsilon: *epsilon, n, bin, p_value });
            }
            summary.histograms.push(Histogram::of(*epsilon, n, &bin_ps));
        }
    }
    Ok(summary)
}
