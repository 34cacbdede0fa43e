//! Multistart enumeration of central configuration classes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{center_and_normalize, Configuration, MassSystem};
use crate::index::{verify_theorem, TheoremReport};
use crate::solver::{
    classify, newton_solve, CentralConfigCandidate, Group, IsometryClassKey, NewtonOptions, DEDUP_TOL,
    START_MIN_DISTANCE,
};

/// One isometry class of central configurations.
#[derive(Debug, Clone)]
pub struct CensusEntry {
    pub class_id: usize,
    pub key: IsometryClassKey,
    /// First converged candidate of the class, in start order.
    pub representative: CentralConfigCandidate,
    pub potential: f64,
    pub lambda: f64,
    /// Number of starts that converged into this class.
    pub hits: usize,
    pub analysis: TheoremReport,
}

impl CensusEntry {
    pub fn morse_index(&self) -> Option<usize> {
        self.analysis.spectrum.as_ref().map(|s| s.morse_index)
    }

    pub fn fixed_point_index(&self) -> Option<i32> {
        self.analysis.index_by_determinant
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusOptions {
    pub group: Group,
    pub n_starts: usize,
    pub seed: u64,
    pub newton: NewtonOptions,
}

impl CensusOptions {
    pub fn new(group: Group, n_starts: usize, seed: u64) -> Self {
        Self { group, n_starts, seed, newton: NewtonOptions::default() }
    }
}

/// Random generator for start `index`: stream `index` of the ChaCha8
/// generator keyed by `seed`.
fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Standard normal coordinates, centered and normalized, redrawn until no two
/// bodies are closer than [`START_MIN_DISTANCE`].
pub fn sample_start(sys: &Arc<MassSystem>, rng: &mut impl Rng) -> Configuration {
    loop {
        let coords: Vec<f64> = (0..sys.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let Ok(q) = Configuration::new(sys.clone(), coords) else { continue };
        let Ok(q) = center_and_normalize(&q) else { continue };
        if q.min_distance() >= START_MIN_DISTANCE {
            return q;
        }
    }
}

/// Converged solutions from every start, ordered by start index.
pub fn solve_starts(sys: &Arc<MassSystem>, opts: &CensusOptions) -> Vec<CentralConfigCandidate> {
    (0..opts.n_starts)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = start_rng(opts.seed, k);
            let q0 = sample_start(sys, &mut rng);
            newton_solve(&q0, &opts.newton).ok().filter(|c| c.converged)
        })
        .collect()
}

/// Merges candidates into classes, sequentially in the given order.
pub fn deduplicate(candidates: Vec<CentralConfigCandidate>, group: Group) -> Vec<(IsometryClassKey, CentralConfigCandidate, usize)> {
    let mut classes: Vec<(IsometryClassKey, CentralConfigCandidate, usize)> = Vec::new();
    for c in candidates {
        let key = classify(&c.q, group);
        match classes.iter_mut().find(|(k, _, _)| k.matches(&key, DEDUP_TOL)) {
            Some((_, _, hits)) => *hits += 1,
            None => classes.push((key, c, 1)),
        }
    }
    classes
}

/// Sort key: potential, then distance vector, then chirality, quantized so
/// that the order is total and insensitive to roundoff.
fn order_key(potential: f64, key: &IsometryClassKey) -> (i64, Vec<i64>, i8) {
    let quantize = |x: f64, scale: f64| (x * scale).round() as i64;
    (
        quantize(potential, 1e10),
        key.distance_vector.iter().map(|&x| quantize(x, 1e6)).collect(),
        key.chirality,
    )
}

fn finish(classes: Vec<(IsometryClassKey, CentralConfigCandidate, usize)>) -> Result<Vec<CensusEntry>> {
    let mut entries = classes
        .into_par_iter()
        .map(|(key, representative, hits)| {
            let analysis = verify_theorem(&representative.q)?;
            Ok(CensusEntry {
                class_id: 0,
                potential: analysis.potential,
                lambda: representative.lambda,
                key,
                representative,
                hits,
                analysis,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by_cached_key(|e| order_key(e.potential, &e.key));
    for (i, e) in entries.iter_mut().enumerate() {
        e.class_id = i;
    }
    Ok(entries)
}

/// Enumerates central configuration classes from `n_starts` random starts
/// and analyses one representative per class.
///
/// The result depends only on the options: every start draws from its own
/// stream and classes are merged in start order.
pub fn census(sys: &Arc<MassSystem>, opts: &CensusOptions) -> Result<Vec<CensusEntry>> {
    let candidates = solve_starts(sys, opts);
    finish(deduplicate(candidates, opts.group))
}

/// Coarsens a census to another grouping, e.g. `SO(d)` classes to `O(d)`.
pub fn regroup(entries: &[CensusEntry], group: Group) -> Result<Vec<CensusEntry>> {
    let mut classes: Vec<(IsometryClassKey, CentralConfigCandidate, usize)> = Vec::new();
    for e in entries {
        let key = classify(&e.representative.q, group);
        match classes.iter_mut().find(|(k, _, _)| k.matches(&key, DEDUP_TOL)) {
            Some((_, _, hits)) => *hits += e.hits,
            None => classes.push((key, e.representative.clone(), e.hits)),
        }
    }
    finish(classes)
}
