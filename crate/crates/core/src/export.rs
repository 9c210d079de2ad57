//! CSV encodings of core-sets and decision logs.
//!
//! Floats use Rust's shortest round-trip formatting, so identical runs give
//! byte-identical files.

use std::io::{self, Write};

use crate::engine::{CoreSet, ReplacementDecision};

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Header `stream_id,point_id,timestamp,dim,v0,...,v{dim-1}`, one row per
/// member in stream then slot order.
pub fn write_coreset_csv<W: Write>(mut w: W, coresets: &[CoreSet]) -> io::Result<()> {
    let dim = coresets.iter().flat_map(|c| c.members.first()).map(|p| p.vector.dim()).next().unwrap_or(0);
    write!(w, "stream_id,point_id,timestamp,dim")?;
    for i in 0..dim {
        write!(w, ",v{i}")?;
    }
    writeln!(w)?;
    for c in coresets {
        for p in &c.members {
            write!(w, "{},{},{},{}", c.stream_id, p.point_id, p.timestamp, p.vector.dim())?;
            for x in p.vector.components() {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

/// Header `stream_id,timestamp,incoming_id,accepted,evicted_id,min_core_edge,min_incoming_edge`;
/// fill-phase rows leave the last three fields empty.
pub fn write_decisions_csv<W: Write>(mut w: W, decisions: &[ReplacementDecision]) -> io::Result<()> {
    writeln!(w, "stream_id,timestamp,incoming_id,accepted,evicted_id,min_core_edge,min_incoming_edge")?;
    for d in decisions {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            d.stream_id,
            d.timestamp,
            d.incoming_id,
            d.accepted,
            opt(d.evicted_id),
            opt(d.min_core_edge),
            opt(d.min_incoming_edge)
        )?;
    }
    w.flush()
}
