//! Streaming composable core-sets for max-min (remote-edge) diversity.
//!
//! Each input stream keeps a size-k core-set. Once full, an arriving point
//! replaces one endpoint of the core-set's closest pair only if its nearest
//! member is farther away than that pair. Per-stream core-sets compose by
//! union. Two drivers share that control flow: a brute-force one that
//! rescans all pairs per arrival, and a k-adjacency one that keeps the
//! pairwise distances in a packed triangular matrix.

pub mod engine;
pub mod evalbench;
pub mod export;
pub mod streams;
pub mod synthetic;
pub mod trimatrix;
pub mod vecspace;

pub use engine::{
    closest_pair, compose, diversity, process_point, run, run_parallel, Algorithm, CoreSet, EngineConfig,
    EngineError, LabeledPoint, PointId, ReplacementDecision, RunOutput, StreamWorker,
};
pub use streams::{
    load_any, load_binary, load_csv, partition, write_binary, Scheduler, StreamError, StreamSource,
};
pub use trimatrix::{MatrixError, TriangularDistanceMatrix};
pub use vecspace::{cosine_distance, cosine_similarity, Cosine, Metric, Vector, VectorError};
