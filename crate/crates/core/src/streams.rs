//! Dataset ingestion, partitioning into simulated streams, and the
//! round-robin scheduler that stamps arrivals with global timestamps.
//!
//! Binary layout (`DIVCORE1`): 8-byte magic, `u32` LE count `N`, `u32` LE
//! dimension `d`, then `N·d` little-endian `f32` values in row-major order.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{LabeledPoint, PointId};
use crate::vecspace::{Vector, VectorError};

pub const BINARY_MAGIC: &[u8; 8] = b"DIVCORE1";
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged { row: u64, expected: usize, found: usize },
    #[error("row {row}, column {column}: cannot parse {text:?} as a number")]
    Parse { row: u64, column: usize, text: String },
    #[error("row {row}: {source}")]
    InvalidVector {
        row: u64,
        #[source]
        source: VectorError,
    },
    #[error("input contains no vectors")]
    Empty,
    #[error("bad magic: not a DIVCORE1 file")]
    BadMagic,
    #[error("header declares an empty dataset (count {count}, dim {dim})")]
    EmptyHeader { count: u32, dim: u32 },
    #[error("truncated payload: {required} bytes required, {found} present")]
    Truncated { required: u64, found: u64 },
    #[error("{0} unexpected trailing bytes after payload")]
    TrailingBytes(u64),
    #[error("vectors have mixed dimensions ({expected} and {found})")]
    MixedDimensions { expected: usize, found: usize },
    #[error("cannot split {len} vectors into {streams} streams")]
    TooManyStreams { streams: usize, len: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StreamError + '_ {
    move |source| StreamError::Io { path: path.to_path_buf(), source }
}

/// One vector per row; rows and columns in errors are 1-based file positions.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Vec<Vector>, StreamError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(StreamError::Ragged { row, expected, found: record.len() });
        }
        let components = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| StreamError::Parse {
                    row,
                    column: c + 1,
                    text: field.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Vector::new(components).map_err(|source| StreamError::InvalidVector { row, source })?);
    }
    if out.is_empty() {
        return Err(StreamError::Empty);
    }
    Ok(out)
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Vec<Vector>, StreamError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_csv(std::io::BufReader::new(file), has_header)
}

pub fn decode_binary(bytes: &[u8]) -> Result<Vec<Vector>, StreamError> {
    if bytes.len() < BINARY_MAGIC.len() || &bytes[..8] != BINARY_MAGIC {
        return Err(StreamError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(StreamError::Truncated { required: HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
    if count == 0 || dim == 0 {
        return Err(StreamError::EmptyHeader { count, dim });
    }
    let payload = &bytes[HEADER_LEN..];
    let required = count as u64 * dim as u64 * 4;
    let found = payload.len() as u64;
    if found < required {
        return Err(StreamError::Truncated { required, found });
    }
    if found > required {
        return Err(StreamError::TrailingBytes(found - required));
    }
    let dim = dim as usize;
    let mut row = vec![0f32; dim];
    payload
        .chunks_exact(dim * 4)
        .enumerate()
        .map(|(r, chunk)| {
            for (slot, b) in row.iter_mut().zip(chunk.chunks_exact(4)) {
                *slot = f32::from_le_bytes(b.try_into().unwrap());
            }
            Vector::from_f32(&row).map_err(|source| StreamError::InvalidVector { row: r as u64 + 1, source })
        })
        .collect()
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<Vec<Vector>, StreamError> {
    let path = path.as_ref();
    decode_binary(&fs::read(path).map_err(io_err(path))?)
}

/// Narrows to `f32`; all vectors must share one dimension.
pub fn encode_binary(vectors: &[Vector]) -> Result<Vec<u8>, StreamError> {
    let dim = vectors.first().ok_or(StreamError::Empty)?.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + vectors.len() * dim * 4);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for v in vectors {
        if v.dim() != dim {
            return Err(StreamError::MixedDimensions { expected: dim, found: v.dim() });
        }
        for &c in v.components() {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_binary(path: impl AsRef<Path>, vectors: &[Vector]) -> Result<(), StreamError> {
    let path = path.as_ref();
    fs::write(path, encode_binary(vectors)?).map_err(io_err(path))
}

fn looks_binary(head: &[u8]) -> bool {
    head.iter().any(|&b| b == 0 || (b < 0x20 && !matches!(b, b'\t' | b'\n' | b'\r')))
}

/// Sniffs the `DIVCORE1` magic and falls back to CSV. Leading bytes that
/// cannot be CSV text (NUL, control characters) are reported as a bad magic.
pub fn load_any(path: impl AsRef<Path>, has_header: bool) -> Result<Vec<Vector>, StreamError> {
    let path = path.as_ref();
    let mut head = Vec::with_capacity(512);
    fs::File::open(path).map_err(io_err(path))?.take(512).read_to_end(&mut head).map_err(io_err(path))?;
    if head.starts_with(BINARY_MAGIC) {
        load_binary(path)
    } else if looks_binary(&head) {
        Err(StreamError::BadMagic)
    } else {
        load_csv(path, has_header)
    }
}

/// A finite, single-consumer stream over a slice of the dataset.
///
/// Point ids are the element's index in the original dataset.
#[derive(Debug, Clone)]
pub struct StreamSource {
    stream_id: usize,
    base_index: u64,
    elements: Vec<Vector>,
    cursor: usize,
}

impl StreamSource {
    pub fn new(stream_id: usize, base_index: u64, elements: Vec<Vector>) -> Self {
        Self { stream_id, base_index, elements, cursor: 0 }
    }

    pub fn stream_id(&self) -> usize {
        self.stream_id
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor >= self.elements.len()
    }

    pub fn elements(&self) -> &[Vector] {
        &self.elements
    }

    /// Next unread element with its point id.
    pub fn next_element(&mut self) -> Option<(PointId, Vector)> {
        let v = self.elements.get(self.cursor)?.clone();
        let id = PointId(self.base_index + self.cursor as u64);
        self.cursor += 1;
        Some((id, v))
    }

    /// Next element stamped with a stream-local timestamp
    /// `local * n_streams + stream_id`, for workers that bypass the scheduler.
    pub fn next_local(&mut self, n_streams: usize) -> Option<LabeledPoint> {
        let local = self.cursor as u64;
        let (id, v) = self.next_element()?;
        let ts = local * n_streams as u64 + self.stream_id as u64;
        Some(LabeledPoint::new(id, self.stream_id, ts, v))
    }
}

/// Contiguous blocks of `⌊N/n⌋`; the last stream takes the remainder.
pub fn partition(dataset: Vec<Vector>, n: usize) -> Result<Vec<StreamSource>, StreamError> {
    let len = dataset.len();
    if n == 0 || n > len {
        return Err(StreamError::TooManyStreams { streams: n, len });
    }
    let block = len / n;
    let mut rest = dataset;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let tail = if i + 1 == n { Vec::new() } else { rest.split_off(block) };
        out.push(StreamSource::new(i, (i * block) as u64, rest));
        rest = tail;
    }
    Ok(out)
}

/// Round-robin over streams with a single global timestamp counter.
#[derive(Debug)]
pub struct Scheduler {
    streams: Vec<StreamSource>,
    next_timestamp: u64,
}

impl Scheduler {
    pub fn new(streams: Vec<StreamSource>) -> Self {
        Self { streams, next_timestamp: 0 }
    }

    pub fn streams(&self) -> &[StreamSource] {
        &self.streams
    }

    pub fn issued(&self) -> u64 {
        self.next_timestamp
    }

    /// One element from each live stream in stream order; empty once every
    /// stream is exhausted.
    pub fn next_round(&mut self) -> Vec<LabeledPoint> {
        let mut out = Vec::with_capacity(self.streams.len());
        for s in &mut self.streams {
            if let Some((id, v)) = s.next_element() {
                out.push(LabeledPoint::new(id, s.stream_id, self.next_timestamp, v));
                self.next_timestamp += 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecs(n: usize) -> Vec<Vector> {
        (0..n).map(|i| Vector::new(vec![1.0 + i as f64, 0.5]).unwrap()).collect()
    }

    #[test]
    fn csv_basic() {
        let v = read_csv("1.0,0.0\n0.0,1.0\n".as_bytes(), false).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].components(), &[0.0, 1.0]);
    }

    #[test]
    fn csv_header_skipped() {
        let v = read_csv("a,b\n1.0, 2.0\n".as_bytes(), true).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].components(), &[1.0, 2.0]);
    }

    #[test]
    fn csv_errors() {
        match read_csv("1.0,abc\n".as_bytes(), false) {
            Err(StreamError::Parse { row: 1, column: 2, text }) => assert_eq!(text, "abc"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            read_csv("1,2\n3,4,5\n".as_bytes(), false),
            Err(StreamError::Ragged { row: 2, expected: 2, found: 3 })
        ));
        assert!(matches!(
            read_csv("1,2\n0,0\n".as_bytes(), false),
            Err(StreamError::InvalidVector { row: 2, source: VectorError::ZeroNorm })
        ));
        assert!(matches!(read_csv("".as_bytes(), false), Err(StreamError::Empty)));
    }

    #[test]
    fn binary_basic() {
        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend(1u32.to_le_bytes());
        bytes.extend(2u32.to_le_bytes());
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(0.0f32.to_le_bytes());
        let v = decode_binary(&bytes).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].components(), &[1.0, 0.0]);
    }

    #[test]
    fn binary_errors() {
        assert!(matches!(decode_binary(b"NOTMAGIC\0\0\0\0\0\0\0\0"), Err(StreamError::BadMagic)));
        assert!(matches!(decode_binary(b"DIV"), Err(StreamError::BadMagic)));

        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend(2u32.to_le_bytes());
        bytes.extend(3u32.to_le_bytes());
        bytes.extend([0u8; 20]);
        assert!(matches!(decode_binary(&bytes), Err(StreamError::Truncated { required: 24, found: 20 })));

        let mut bytes = BINARY_MAGIC.to_vec();
        bytes.extend(0u32.to_le_bytes());
        bytes.extend(3u32.to_le_bytes());
        assert!(matches!(decode_binary(&bytes), Err(StreamError::EmptyHeader { count: 0, dim: 3 })));
    }

    #[test]
    fn sniffing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x");
        for (bytes, binary) in [(&b"NOTMAGIC\x01\0\0\0"[..], true), (b"1,2\r\n3,4\n", false), (b"\t1, 2\n", false)] {
            fs::write(&path, bytes).unwrap();
            assert_eq!(matches!(load_any(&path, false), Err(StreamError::BadMagic)), binary, "{bytes:?}");
        }
        write_binary(&path, &[Vector::new(vec![1.0, 0.0]).unwrap()]).unwrap();
        assert_eq!(load_any(&path, false).unwrap().len(), 1);
    }

    #[test]
    fn encode_rejects_mixed_dims() {
        let v = vec![Vector::new(vec![1.0]).unwrap(), Vector::new(vec![1.0, 2.0]).unwrap()];
        assert!(matches!(encode_binary(&v), Err(StreamError::MixedDimensions { expected: 1, found: 2 })));
    }

    #[test]
    fn partition_examples() {
        let s = partition(vecs(50_000), 5).unwrap();
        assert!(s.iter().all(|s| s.len() == 10_000));

        let s = partition(vecs(7), 2).unwrap();
        assert_eq!(s.iter().map(|s| s.len()).collect::<Vec<_>>(), vec![3, 4]);

        let s = partition(vecs(4), 1).unwrap();
        assert_eq!(s[0].elements(), &vecs(4)[..]);

        assert!(matches!(partition(vecs(2), 3), Err(StreamError::TooManyStreams { .. })));
        assert!(partition(vecs(2), 0).is_err());
    }

    #[test]
    fn round_robin() {
        let a = StreamSource::new(0, 0, vecs(2));
        let b = StreamSource::new(1, 2, vecs(2));
        let mut s = Scheduler::new(vec![a, b]);
        let r1: Vec<_> = s.next_round().iter().map(|p| (p.stream_id, p.point_id.0, p.timestamp)).collect();
        assert_eq!(r1, vec![(0, 0, 0), (1, 2, 1)]);
        let r2: Vec<_> = s.next_round().iter().map(|p| (p.stream_id, p.point_id.0, p.timestamp)).collect();
        assert_eq!(r2, vec![(0, 1, 2), (1, 3, 3)]);
        assert!(s.next_round().is_empty());
    }

    #[test]
    fn exhausted_streams_skipped() {
        let a = StreamSource::new(0, 0, vecs(1));
        let b = StreamSource::new(1, 1, vecs(2));
        let mut s = Scheduler::new(vec![a, b]);
        s.next_round();
        let r2: Vec<_> = s.next_round().iter().map(|p| (p.stream_id, p.point_id.0, p.timestamp)).collect();
        assert_eq!(r2, vec![(1, 2, 2)]);
    }

    #[test]
    fn local_timestamps() {
        let mut s = StreamSource::new(2, 10, vecs(3));
        let ts: Vec<_> = std::iter::from_fn(|| s.next_local(5)).map(|p| p.timestamp).collect();
        assert_eq!(ts, vec![2, 7, 12]);
    }

    proptest! {
        #[test]
        fn conservation_and_timestamps(len in 1usize..200, n in 1usize..20) {
            prop_assume!(n <= len);
            let data = vecs(len);
            let streams = partition(data.clone(), n).unwrap();
            prop_assert_eq!(streams.iter().map(|s| s.len()).sum::<usize>(), len);
            let mut sched = Scheduler::new(streams);
            let mut seen = Vec::new();
            loop {
                let round = sched.next_round();
                if round.is_empty() { break; }
                seen.extend(round);
            }
            prop_assert_eq!(sched.issued(), len as u64);
            for (expected_ts, p) in seen.iter().enumerate() {
                prop_assert_eq!(p.timestamp, expected_ts as u64);
                prop_assert_eq!(&p.vector, &data[p.point_id.0 as usize]);
            }
            let mut ids: Vec<_> = seen.iter().map(|p| p.point_id.0).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..len as u64).collect::<Vec<_>>());
            for sid in 0..n {
                let ts: Vec<_> = seen.iter().filter(|p| p.stream_id == sid).map(|p| p.timestamp).collect();
                prop_assert!(ts.windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn binary_round_trip(rows in prop::collection::vec(prop::collection::vec(0.1f32..10.0, 4), 1..30)) {
            let vectors: Vec<_> = rows.iter().map(|r| Vector::from_f32(r).unwrap()).collect();
            let back = decode_binary(&encode_binary(&vectors).unwrap()).unwrap();
            prop_assert_eq!(back, vectors);
        }
    }
}
