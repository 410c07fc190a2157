//! Reference engine: every permutation of `S_N` is visited by Heap's
//! algorithm, so consecutive permutations differ by one transposition and the
//! log-weight and every linear statistic are updated from the two touched
//! rows only.

use rayon::prelude::*;

use super::permanent::SquareMatrix;
use super::{MomentRequest, Moments};
use crate::numeric::Accumulator;

/// Largest array the enumeration engine accepts.
pub const MAX_ENUMERATE_SOURCES: usize = 11;

// Incremental sums are recomputed from scratch this often.
const RESYNC_INTERVAL: usize = 1 << 12;

struct ChunkSums {
    norm: Accumulator,
    first: Vec<Accumulator>,
    second: Vec<Accumulator>,
}

impl ChunkSums {
    fn new(request: &MomentRequest<'_>, compensated: bool) -> Self {
        Self {
            norm: Accumulator::new(compensated),
            first: vec![Accumulator::new(compensated); request.linear.len()],
            second: vec![Accumulator::new(compensated); request.products.len()],
        }
    }

    fn into_moments(self) -> Moments {
        Moments {
            norm: self.norm.value(),
            first: self.first.iter().map(Accumulator::value).collect(),
            second: self.second.iter().map(Accumulator::value).collect(),
        }
    }
}

struct Walker<'a> {
    request: &'a MomentRequest<'a>,
    perm: Vec<usize>,
    log_weight: f64,
    stats: Vec<f64>,
    since_resync: usize,
}

impl<'a> Walker<'a> {
    fn new(request: &'a MomentRequest<'a>, perm: Vec<usize>) -> Self {
        let mut w = Self {
            request,
            perm,
            log_weight: 0.0,
            stats: vec![0.0; request.linear.len()],
            since_resync: 0,
        };
        w.resync();
        w
    }

    fn resync(&mut self) {
        let logs = self.request.log_weights;
        self.log_weight = self
            .perm
            .iter()
            .enumerate()
            .map(|(r, &c)| logs[(r, c)])
            .sum();
        for (s, u) in self.stats.iter_mut().zip(&self.request.linear) {
            *s = self.perm.iter().enumerate().map(|(r, &c)| u[(r, c)]).sum();
        }
        self.since_resync = 0;
    }

    fn swap(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.perm[a], self.perm[b]);
        let delta = |m: &SquareMatrix| m[(a, pb)] + m[(b, pa)] - m[(a, pa)] - m[(b, pb)];
        self.log_weight += delta(self.request.log_weights);
        for (s, u) in self.stats.iter_mut().zip(&self.request.linear) {
            *s += delta(u);
        }
        self.perm.swap(a, b);
        self.since_resync += 1;
        if self.since_resync >= RESYNC_INTERVAL {
            self.resync();
        }
    }

    fn visit(&self, sums: &mut ChunkSums) {
        let w = self.log_weight.exp();
        sums.norm.add(w);
        for (acc, s) in sums.first.iter_mut().zip(&self.stats) {
            acc.add(w * s);
        }
        for (acc, &(i, k)) in sums.second.iter_mut().zip(&self.request.products) {
            acc.add(w * self.stats[i] * self.stats[k]);
        }
    }
}

// All permutations whose last entry is `last`.
fn run_chunk(request: &MomentRequest<'_>, last: usize, compensated: bool) -> Moments {
    let n = request.log_weights.dim();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(last, n - 1);
    let mut walker = Walker::new(request, perm);
    let mut sums = ChunkSums::new(request, compensated);
    walker.visit(&mut sums);

    // iterative Heap's algorithm over positions 0..m
    let m = n - 1;
    let mut counters = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if counters[i] < i {
            if i % 2 == 0 {
                walker.swap(0, i);
            } else {
                walker.swap(counters[i], i);
            }
            walker.visit(&mut sums);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    sums.into_moments()
}

pub(crate) fn enumerate_moments(
    request: &MomentRequest<'_>,
    deterministic: bool,
    compensated: bool,
) -> Moments {
    let n = request.log_weights.dim();
    let chunks = (0..n)
        .into_par_iter()
        .map(|last| run_chunk(request, last, compensated));
    if deterministic {
        let parts: Vec<Moments> = chunks.collect();
        Moments::combine_ordered(&parts, compensated)
    } else {
        chunks
            .reduce_with(|a, b| a.add(&b))
            .unwrap_or_else(|| Moments::zeros(request))
    }
}

/// Every permutation of `0..n` in the order the enumeration engine visits
/// them (chunk by chunk, Heap's order within a chunk).
pub fn heap_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for last in 0..n {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(last, n - 1);
        out.push(perm.clone());
        let m = n - 1;
        let mut counters = vec![0usize; m];
        let mut i = 1;
        while i < m {
            if counters[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(counters[i], i);
                }
                out.push(perm.clone());
                counters[i] += 1;
                i = 1;
            } else {
                counters[i] = 0;
                i += 1;
            }
        }
    }
    out
}
