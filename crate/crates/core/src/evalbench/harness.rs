//! Timing of matrix construction and replacement across core-set sizes, and
//! the composability evaluation against offline baselines.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use super::oracle::{alpha_ratio, exhaustive_max_min, gmm_greedy, EXHAUSTIVE_MAX_POINTS};
use super::regression::{better_fit, extrapolate_total, fit, Basis, Extrapolation, RegressionFit};
use super::EvalError;
use crate::engine::{self, diversity, Algorithm, EngineConfig, StreamWorker};
use crate::streams::partition;
use crate::vecspace::Vector;

pub const DEFAULT_K_VALUES: [usize; 5] = [10, 50, 100, 500, 1000];
pub const DEFAULT_STREAMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    MatrixBuild,
    Replacement,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::MatrixBuild => "matrix_build",
            Phase::Replacement => "replacement",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSample {
    pub k: usize,
    pub stream_id: usize,
    pub phase: Phase,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplacementCount {
    pub k: usize,
    pub steady_state: usize,
    pub accepted: usize,
}

impl ReplacementCount {
    pub fn rate(&self) -> Option<f64> {
        (self.steady_state > 0).then(|| self.accepted as f64 / self.steady_state as f64)
    }
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub n_streams: usize,
    pub elements_per_stream: usize,
    pub samples: Vec<TimingSample>,
    pub counts: Vec<ReplacementCount>,
}

impl Measurement {
    /// `(k, mean seconds)` for one phase, ascending in k; sizes with no
    /// samples are omitted.
    pub fn means(&self, phase: Phase) -> Vec<(f64, f64)> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for s in self.samples.iter().filter(|s| s.phase == phase) {
            let e = acc.entry(s.k).or_default();
            e.0 += s.seconds;
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (sum, n))| (k as f64, sum / n as f64)).collect()
    }

    /// Per-stream build time plus all replacement time, averaged over streams.
    pub fn measured_totals(&self) -> Vec<(usize, f64)> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for s in &self.samples {
            *acc.entry(s.k).or_default() += s.seconds;
        }
        acc.into_iter().map(|(k, sum)| (k, sum / self.n_streams as f64)).collect()
    }

    pub fn rate_for(&self, k: usize) -> Option<f64> {
        self.counts.iter().find(|c| c.k == k).and_then(ReplacementCount::rate)
    }
}

/// Runs the k-adjacency engine over `n_streams` partitions for each k,
/// one stream at a time, timing each matrix build and each accepted
/// steady-state replacement.
pub fn measure(dataset: &[Vector], k_values: &[usize], n_streams: usize) -> Result<Measurement, EvalError> {
    if k_values.is_empty() {
        return Err(EvalError::NoSizes);
    }
    let streams = partition(dataset.to_vec(), n_streams)?;
    let shortest = streams.iter().map(|s| s.len()).min().unwrap_or(0);
    if let Some(&k) = k_values.iter().find(|&&k| k >= shortest) {
        return Err(EvalError::SizeExceedsStream { k, stream_len: shortest });
    }
    let mut samples = Vec::new();
    let mut counts = Vec::new();
    for &k in k_values {
        let config = EngineConfig::new(k, Algorithm::KAdjacency);
        config.validate()?;
        let mut count = ReplacementCount { k, steady_state: 0, accepted: 0 };
        for source in &streams {
            let mut source = source.clone();
            let sid = source.stream_id();
            let mut worker = StreamWorker::new(sid, &config);
            while let Some(p) = source.next_local(n_streams) {
                if worker.needs_matrix() {
                    let t = Instant::now();
                    worker.build_matrix()?;
                    samples.push(TimingSample { k, stream_id: sid, phase: Phase::MatrixBuild, seconds: t.elapsed().as_secs_f64() });
                }
                let t = Instant::now();
                let d = worker.offer(p)?;
                let seconds = t.elapsed().as_secs_f64();
                if d.is_steady_state() {
                    count.steady_state += 1;
                    if d.accepted {
                        count.accepted += 1;
                        samples.push(TimingSample { k, stream_id: sid, phase: Phase::Replacement, seconds });
                    }
                }
            }
        }
        counts.push(count);
    }
    Ok(Measurement { n_streams, elements_per_stream: dataset.len() / n_streams, samples, counts })
}

#[derive(Debug, Clone, Default)]
pub struct PhaseFits {
    pub linear: Option<RegressionFit>,
    pub quadratic: Option<RegressionFit>,
}

impl PhaseFits {
    fn from_means(means: &[(f64, f64)], phase: Phase) -> Self {
        let attempt = |basis| match fit(means, basis) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("no {basis} fit for {phase}: {e}");
                None
            }
        };
        Self { linear: attempt(Basis::Linear), quadratic: attempt(Basis::Quadratic) }
    }

    pub fn best(&self) -> Option<&RegressionFit> {
        better_fit(self.linear.as_ref(), self.quadratic.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationRow {
    pub k: usize,
    pub predicted: Option<Extrapolation>,
    pub measured_total_seconds: Option<f64>,
    pub measured_replacement_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub measurement: Measurement,
    pub build: PhaseFits,
    pub replacement: PhaseFits,
    pub replace_fraction: f64,
    pub extrapolation: Vec<ExtrapolationRow>,
}

/// Fits both phases and extrapolates total construction time for every
/// measured k plus any in `extra_k`.
pub fn summarize_bench(measurement: Measurement, replace_fraction: f64, extra_k: &[usize]) -> Result<BenchReport, EvalError> {
    if !(0.0..=1.0).contains(&replace_fraction) {
        return Err(EvalError::InvalidFraction(replace_fraction));
    }
    let build = PhaseFits::from_means(&measurement.means(Phase::MatrixBuild), Phase::MatrixBuild);
    let replacement = PhaseFits::from_means(&measurement.means(Phase::Replacement), Phase::Replacement);
    let totals: BTreeMap<usize, f64> = measurement.measured_totals().into_iter().collect();
    let mut ks: Vec<usize> = measurement.counts.iter().map(|c| c.k).chain(extra_k.iter().copied()).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut extrapolation = Vec::with_capacity(ks.len());
    for k in ks {
        let predicted = match (build.best(), replacement.best()) {
            (Some(b), Some(r)) => Some(extrapolate_total(k, measurement.elements_per_stream, b, r, replace_fraction)?),
            _ => None,
        };
        extrapolation.push(ExtrapolationRow {
            k,
            predicted,
            measured_total_seconds: totals.get(&k).copied(),
            measured_replacement_rate: measurement.rate_for(k),
        });
    }
    Ok(BenchReport { measurement, build, replacement, replace_fraction, extrapolation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Exhaustive,
    Greedy,
}

/// Composability of the streamed core-sets against an offline baseline of
/// the same size over the pooled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub composed_size: usize,
    pub composed_diversity: f64,
    pub baseline_diversity: f64,
    pub alpha: f64,
    pub replacement_rate: Option<f64>,
}

pub fn evaluate(
    dataset: &[Vector],
    config: &EngineConfig,
    n_streams: usize,
    baseline: Baseline,
) -> Result<EvalReport, EvalError> {
    if baseline == Baseline::Exhaustive && dataset.len() > EXHAUSTIVE_MAX_POINTS {
        return Err(EvalError::ExhaustiveTooLarge { n: dataset.len() });
    }
    let out = engine::run(partition(dataset.to_vec(), n_streams)?, config)?;
    let composed = out.compose();
    let composed_diversity = diversity(&composed)?;
    let m = composed.len();
    let baseline_diversity = match baseline {
        Baseline::Exhaustive => exhaustive_max_min(dataset, m)?.diversity,
        Baseline::Greedy => gmm_greedy(dataset, m)?.diversity,
    };
    Ok(EvalReport {
        composed_size: m,
        composed_diversity,
        baseline_diversity,
        alpha: alpha_ratio(baseline_diversity, composed_diversity),
        replacement_rate: out.replacement_rate(),
    })
}
