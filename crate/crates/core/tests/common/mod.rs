#![allow(dead_code)]

use std::collections::HashMap;

use divcore::engine::{diversity, ReplacementDecision};
use divcore::Vector;

/// Failure description from replaying a decision log against the dataset.
pub type Audit = Result<AuditStats, String>;

#[derive(Debug, Default, Clone, Copy)]
pub struct AuditStats {
    pub steady: usize,
    pub accepted: usize,
    pub ties: usize,
}

/// Rebuilds every stream's core-set from the log alone and checks the
/// eligibility gate, eviction target and diversity monotonicity.
pub fn audit_log(dataset: &[Vector], decisions: &[ReplacementDecision], k: usize) -> Audit {
    let mut cores: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut stats = AuditStats::default();
    let vecs = |ids: &[u64]| ids.iter().map(|&i| dataset[i as usize].clone()).collect::<Vec<_>>();
    for d in decisions {
        let core = cores.entry(d.stream_id).or_default();
        if !d.is_steady_state() {
            if core.len() >= k || !d.accepted {
                return Err(format!("bad fill decision {d:?}"));
            }
            core.push(d.incoming_id.0);
            continue;
        }
        stats.steady += 1;
        if core.len() != k {
            return Err(format!("steady-state decision before core full: {d:?}"));
        }
        let before = diversity(&vecs(core)).unwrap();
        let (min_core, min_in) = (d.min_core_edge.unwrap(), d.min_incoming_edge.unwrap());
        if min_core != before {
            return Err(format!("logged min_core_edge {min_core} != replayed diversity {before}"));
        }
        let incoming = &dataset[d.incoming_id.0 as usize];
        let nearest = core
            .iter()
            .map(|&i| divcore::cosine_distance(incoming, &dataset[i as usize]).unwrap())
            .fold(f64::INFINITY, f64::min);
        if nearest != min_in {
            return Err(format!("logged min_incoming_edge {min_in} != replayed {nearest}"));
        }
        if d.tie_broken {
            stats.ties += 1;
        }
        if !d.accepted {
            if min_in > min_core {
                return Err(format!("rejected an eligible point: {d:?}"));
            }
            continue;
        }
        stats.accepted += 1;
        if min_in <= min_core {
            return Err(format!("accepted an ineligible point: {d:?}"));
        }
        let (p, q) = d.min_core_pair.unwrap();
        let slot = d.evicted_slot.unwrap();
        if slot != p && slot != q {
            return Err(format!("evicted slot {slot} not in closest pair ({p}, {q})"));
        }
        let dist_pq = divcore::cosine_distance(&dataset[core[p] as usize], &dataset[core[q] as usize]).unwrap();
        if dist_pq != min_core {
            return Err(format!("logged pair ({p}, {q}) has distance {dist_pq}, not {min_core}"));
        }
        if Some(divcore::PointId(core[slot])) != d.evicted_id {
            return Err("evicted_id does not match slot".into());
        }
        // Closest pair unique => strictly better afterwards.
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                edges.push(divcore::cosine_distance(&dataset[core[i] as usize], &dataset[core[j] as usize]).unwrap());
            }
        }
        let unique = edges.iter().filter(|&&e| e == min_core).count() == 1;
        core[slot] = d.incoming_id.0;
        let after = diversity(&vecs(core)).unwrap();
        if after < before || (unique && after <= before) {
            return Err(format!("diversity fell from {before} to {after} at {d:?}"));
        }
    }
    Ok(stats)
}
