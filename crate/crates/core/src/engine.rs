//! Streaming k-replacement: fill phase, the eligibility gate, eviction of the
//! least satisfying point, the brute-force and k-adjacency drivers, and
//! composition by union.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::streams::{Scheduler, StreamSource};
use crate::trimatrix::{self, MatrixError, TriangularDistanceMatrix};
use crate::vecspace::{Cosine, Metric, Vector, VectorError};

/// Distances within this of each other count as equal for eviction.
pub const EVICTION_TIE_EPSILON: f64 = 1e-12;

pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no streams to run")]
    NoStreams,
    #[error("diversity needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("stream {stream_id}, timestamp {timestamp}: dimension {found}, expected {expected}")]
    Dimension { stream_id: usize, timestamp: u64, expected: usize, found: usize },
    #[error("adjacency matrix does not match core-set of stream {0}")]
    Inconsistent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub u64);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub point_id: PointId,
    pub stream_id: usize,
    pub timestamp: u64,
    pub vector: Vector,
}

impl LabeledPoint {
    pub fn new(point_id: PointId, stream_id: usize, timestamp: u64, vector: Vector) -> Self {
        Self { point_id, stream_id, timestamp, vector }
    }
}

impl AsRef<Vector> for LabeledPoint {
    fn as_ref(&self) -> &Vector {
        &self.vector
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreSet {
    pub stream_id: usize,
    pub capacity: usize,
    pub members: Vec<LabeledPoint>,
}

impl CoreSet {
    pub fn new(stream_id: usize, capacity: usize) -> Self {
        Self { stream_id, capacity, members: Vec::with_capacity(capacity) }
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn diversity(&self) -> Result<f64, EngineError> {
        diversity(&self.members)
    }
}

/// Audit record for one offered element.
///
/// Fill-phase admissions have `accepted` set and no minima.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplacementDecision {
    pub stream_id: usize,
    pub timestamp: u64,
    pub incoming_id: PointId,
    pub accepted: bool,
    pub evicted_slot: Option<usize>,
    pub evicted_id: Option<PointId>,
    /// Slots `(p', q')` of the core-set's closest pair, `p' < q'`.
    pub min_core_pair: Option<(usize, usize)>,
    pub min_core_edge: Option<f64>,
    pub min_incoming_edge: Option<f64>,
    pub tie_broken: bool,
}

impl ReplacementDecision {
    pub fn is_steady_state(&self) -> bool {
        self.min_core_edge.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    BruteForce,
    KAdjacency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub k: usize,
    /// Scheduler ticks; `None` runs every stream to exhaustion.
    pub horizon: Option<u64>,
    pub rng_seed: u64,
    pub algorithm: Algorithm,
    pub memory_budget_bytes: usize,
}

impl EngineConfig {
    pub fn new(k: usize, algorithm: Algorithm) -> Self {
        Self { k, horizon: None, rng_seed: 0, algorithm, memory_budget_bytes: DEFAULT_MEMORY_BUDGET }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.k < 2 {
            return Err(EngineError::InvalidConfig(format!("k must be at least 2, got {}", self.k)));
        }
        if self.algorithm == Algorithm::KAdjacency {
            trimatrix::check_memory_budget(self.k, self.memory_budget_bytes)?;
        }
        Ok(())
    }
}

/// Remote-edge diversity: the minimum pairwise cosine distance.
pub fn diversity<P: AsRef<Vector>>(points: &[P]) -> Result<f64, EngineError> {
    closest_pair(points).map(|(_, _, d)| d)
}

/// The pair realizing [`diversity`]; ties go to the lexicographically
/// smallest `(i, j)` with `i < j`.
pub fn closest_pair<P: AsRef<Vector>>(points: &[P]) -> Result<(usize, usize, f64), EngineError> {
    if points.len() < 2 {
        return Err(EngineError::TooFewPoints(points.len()));
    }
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = Cosine.distance(points[i].as_ref(), points[j].as_ref())?;
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    Ok(best)
}

/// Closest pair scanned in the matrix's flat order, so ties resolve the same
/// way as [`TriangularDistanceMatrix::min_entry`]. Returns `(lo, hi, d)`.
fn closest_pair_flat_order<M: Metric>(
    members: &[LabeledPoint],
    metric: &M,
) -> Result<(usize, usize, f64), EngineError> {
    let mut best = (0, 1, f64::INFINITY);
    for i in 1..members.len() {
        for j in 0..i {
            let d = metric.distance(&members[i].vector, &members[j].vector)?;
            if d < best.2 {
                best = (j, i, d);
            }
        }
    }
    Ok(best)
}

/// Offers `incoming` to `core`.
///
/// With `aux` present the closest pair and incoming column come from the
/// matrix (k-adjacency); without it both are recomputed from scratch
/// (brute force). Control flow is otherwise identical.
pub fn process_point<M: Metric, R: Rng>(
    core: &mut CoreSet,
    incoming: LabeledPoint,
    aux: Option<&mut TriangularDistanceMatrix>,
    rng: &mut R,
    metric: &M,
) -> Result<ReplacementDecision, EngineError> {
    if let Some(first) = core.members.first() {
        if first.vector.dim() != incoming.vector.dim() {
            return Err(EngineError::Dimension {
                stream_id: core.stream_id,
                timestamp: incoming.timestamp,
                expected: first.vector.dim(),
                found: incoming.vector.dim(),
            });
        }
    }
    let mut decision = ReplacementDecision {
        stream_id: core.stream_id,
        timestamp: incoming.timestamp,
        incoming_id: incoming.point_id,
        accepted: false,
        evicted_slot: None,
        evicted_id: None,
        min_core_pair: None,
        min_core_edge: None,
        min_incoming_edge: None,
        tie_broken: false,
    };

    if !core.is_full() {
        if aux.is_some() {
            return Err(EngineError::Inconsistent(core.stream_id));
        }
        core.members.push(incoming);
        decision.accepted = true;
        return Ok(decision);
    }

    let (p, q, min_core, column) = match &aux {
        Some(m) => {
            m.check_members(&core.members).map_err(|_| EngineError::Inconsistent(core.stream_id))?;
            let e = m.min_entry();
            let column = m.column_distances(&incoming, &core.members, metric)?;
            (e.j, e.i, e.distance, column)
        }
        None => {
            let (p, q, d) = closest_pair_flat_order(&core.members, metric)?;
            let column = core
                .members
                .iter()
                .map(|m| metric.distance(&incoming.vector, &m.vector))
                .collect::<Result<Vec<_>, _>>()?;
            (p, q, d, column)
        }
    };
    let min_incoming = column.iter().copied().fold(f64::INFINITY, f64::min);
    decision.min_core_pair = Some((p, q));
    decision.min_core_edge = Some(min_core);
    decision.min_incoming_edge = Some(min_incoming);

    if min_incoming <= min_core {
        return Ok(decision);
    }

    // Evict whichever endpoint of the closest pair is nearer the newcomer.
    let (dp, dq) = (column[p], column[q]);
    let slot = if (dp - dq).abs() <= EVICTION_TIE_EPSILON {
        decision.tie_broken = true;
        if rng.gen_bool(0.5) {
            p
        } else {
            q
        }
    } else if dp < dq {
        p
    } else {
        q
    };
    decision.accepted = true;
    decision.evicted_slot = Some(slot);
    decision.evicted_id = Some(core.members[slot].point_id);
    if let Some(m) = aux {
        m.replace_slot(slot, incoming.point_id, &column)?;
    }
    core.members[slot] = incoming;
    Ok(decision)
}

fn stream_rng(seed: u64, stream_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id as u64);
    rng
}

/// Owns one stream's core-set, its lazily built matrix, and its tie-break RNG.
#[derive(Debug)]
pub struct StreamWorker<M = Cosine> {
    core: CoreSet,
    matrix: Option<TriangularDistanceMatrix>,
    rng: ChaCha8Rng,
    algorithm: Algorithm,
    metric: M,
}

impl StreamWorker<Cosine> {
    pub fn new(stream_id: usize, config: &EngineConfig) -> Self {
        Self::with_metric(stream_id, config, Cosine)
    }
}

impl<M: Metric> StreamWorker<M> {
    pub fn with_metric(stream_id: usize, config: &EngineConfig, metric: M) -> Self {
        Self {
            core: CoreSet::new(stream_id, config.k),
            matrix: None,
            rng: stream_rng(config.rng_seed, stream_id),
            algorithm: config.algorithm,
            metric,
        }
    }

    pub fn core(&self) -> &CoreSet {
        &self.core
    }

    pub fn matrix(&self) -> Option<&TriangularDistanceMatrix> {
        self.matrix.as_ref()
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    /// True when the next steady-state offer will first build the matrix.
    pub fn needs_matrix(&self) -> bool {
        self.algorithm == Algorithm::KAdjacency && self.matrix.is_none() && self.core.is_full()
    }

    /// Builds the matrix from the full core-set; a no-op if already built.
    pub fn build_matrix(&mut self) -> Result<(), EngineError> {
        if self.needs_matrix() {
            self.matrix = Some(TriangularDistanceMatrix::build(&self.core.members, &self.metric)?);
        }
        Ok(())
    }

    pub fn offer(&mut self, point: LabeledPoint) -> Result<ReplacementDecision, EngineError> {
        self.build_matrix()?;
        process_point(&mut self.core, point, self.matrix.as_mut(), &mut self.rng, &self.metric)
    }

    pub fn into_parts(self) -> (CoreSet, Option<TriangularDistanceMatrix>) {
        (self.core, self.matrix)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub coresets: Vec<CoreSet>,
    /// In global arrival order.
    pub decisions: Vec<ReplacementDecision>,
    pub matrices: Vec<Option<TriangularDistanceMatrix>>,
}

impl RunOutput {
    /// Fraction of steady-state offers that were accepted; `None` if there
    /// were none.
    pub fn replacement_rate(&self) -> Option<f64> {
        replacement_rate(&self.decisions)
    }

    pub fn compose(&self) -> Vec<LabeledPoint> {
        compose(&self.coresets)
    }
}

pub fn replacement_rate(decisions: &[ReplacementDecision]) -> Option<f64> {
    let (steady, accepted) = decisions
        .iter()
        .filter(|d| d.is_steady_state())
        .fold((0usize, 0usize), |(s, a), d| (s + 1, a + d.accepted as usize));
    (steady > 0).then(|| accepted as f64 / steady as f64)
}

fn check_streams(streams: &[StreamSource], config: &EngineConfig) -> Result<(), EngineError> {
    config.validate()?;
    if streams.is_empty() {
        return Err(EngineError::NoStreams);
    }
    Ok(())
}

/// Round-robin over all streams until the horizon or exhaustion.
pub fn run(streams: Vec<StreamSource>, config: &EngineConfig) -> Result<RunOutput, EngineError> {
    check_streams(&streams, config)?;
    let mut workers: Vec<StreamWorker> = streams.iter().map(|s| StreamWorker::new(s.stream_id(), config)).collect();
    let mut scheduler = Scheduler::new(streams);
    let mut decisions = Vec::new();
    let mut tick = 0u64;
    while config.horizon.map_or(true, |h| tick < h) {
        let round = scheduler.next_round();
        if round.is_empty() {
            break;
        }
        for p in round {
            let sid = p.stream_id;
            decisions.push(workers[sid].offer(p)?);
        }
        tick += 1;
    }
    let (coresets, matrices) = workers.into_iter().map(StreamWorker::into_parts).unzip();
    Ok(RunOutput { coresets, decisions, matrices })
}

/// One worker per stream, no shared state; decisions are merged by timestamp.
///
/// Timestamps are stream-local (`local * n + stream_id`), so they match
/// [`run`] only when all streams have equal length. Core-sets always match.
pub fn run_parallel(streams: Vec<StreamSource>, config: &EngineConfig) -> Result<RunOutput, EngineError> {
    check_streams(&streams, config)?;
    let n = streams.len();
    let per_stream = streams
        .into_par_iter()
        .map(|mut source| {
            let mut worker = StreamWorker::new(source.stream_id(), config);
            let mut log = Vec::new();
            let mut taken = 0u64;
            while config.horizon.map_or(true, |h| taken < h) {
                let Some(p) = source.next_local(n) else { break };
                log.push(worker.offer(p)?);
                taken += 1;
            }
            let (core, matrix) = worker.into_parts();
            Ok((core, matrix, log))
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    let mut coresets = Vec::with_capacity(n);
    let mut matrices = Vec::with_capacity(n);
    let mut decisions = Vec::new();
    for (c, m, log) in per_stream {
        coresets.push(c);
        matrices.push(m);
        decisions.extend(log);
    }
    decisions.sort_by_key(|d| d.timestamp);
    Ok(RunOutput { coresets, decisions, matrices })
}

/// Union of per-stream core-sets, in stream order.
pub fn compose(coresets: &[CoreSet]) -> Vec<LabeledPoint> {
    coresets.iter().flat_map(|c| c.members.iter().cloned()).collect()
}
