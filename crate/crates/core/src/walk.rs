//! Random-walk samplers and the reproducible random stream they draw from.
//!
//! Walk batches are split into fixed-size chunks and chunk `i` draws from
//! `stream.derive(i)`. Chunk partial sums are folded in chunk order, so a
//! batch result depends only on `(seed, stream_id)` and never on how many
//! worker threads executed it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_open_unit, Result};
use crate::graph::{Graph, NodeId};

/// A seeded random stream. Identical `(seed, stream_id)` pairs produce
/// identical sequences; distinct stream ids select disjoint ChaCha streams.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream number `index`. Depends only on this stream's
    /// `(seed, stream_id)`, not on how much of it has been consumed.
    pub fn derive(&self, index: u64) -> RandomStream {
        let id = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)));
        RandomStream::new(self.seed, id)
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`; `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Terminal node and number of steps of a geometric-length walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkEnd {
    pub terminal: NodeId,
    pub length: usize,
}

/// Full trajectory of a fixed-length walk; `positions[0]` is the start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkRecord {
    pub positions: Vec<NodeId>,
}

impl WalkRecord {
    pub fn len(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.positions.len() <= 1
    }

    pub fn terminal(&self) -> NodeId {
        *self.positions.last().expect("walk record always holds its start")
    }
}

/// Walk from `start`, stopping with probability `alpha` before every step.
///
/// The length satisfies `P(L = l) = alpha (1 - alpha)^l` for `l >= 0`, so the
/// terminal node is distributed as the personalized PageRank vector of
/// `start`.
pub fn sample_geometric_walk(g: &Graph, start: NodeId, alpha: f64, rng: &mut RandomStream) -> Result<WalkEnd> {
    check_open_unit("alpha", alpha)?;
    g.check_walkable(start)?;
    Ok(geometric_walk(g, start, alpha, rng))
}

#[inline]
pub(crate) fn geometric_walk(g: &Graph, start: NodeId, alpha: f64, rng: &mut RandomStream) -> WalkEnd {
    let mut at = start;
    let mut length = 0;
    while rng.uniform() >= alpha {
        at = g.step_unchecked(at, rng);
        length += 1;
    }
    WalkEnd { terminal: at, length }
}

pub fn sample_fixed_walk(g: &Graph, start: NodeId, ell: usize, rng: &mut RandomStream) -> Result<WalkRecord> {
    g.check_walkable(start)?;
    let mut positions = Vec::with_capacity(ell + 1);
    fixed_walk_into(g, start, ell, rng, &mut positions);
    Ok(WalkRecord { positions })
}

#[inline]
pub(crate) fn fixed_walk_into(
    g: &Graph,
    start: NodeId,
    ell: usize,
    rng: &mut RandomStream,
    positions: &mut Vec<NodeId>,
) {
    positions.clear();
    positions.push(start);
    let mut at = start;
    for _ in 0..ell {
        at = g.step_unchecked(at, rng);
        positions.push(at);
    }
}

pub(crate) const WALK_CHUNK: usize = 1024;

/// Per-coordinate sums over a batch of walks plus the total step count.
#[derive(Debug, Clone)]
pub(crate) struct BatchTotals {
    pub sums: Vec<f64>,
    pub steps: u64,
}

/// Runs `count` independent samples in parallel chunks.
///
/// `sample` receives a zeroed `dims`-length output slice and a scratch
/// trajectory buffer, writes its sample into the slice and returns the number
/// of walk steps it took.
pub(crate) fn walk_batch<F>(count: usize, stream: &RandomStream, dims: usize, sample: F) -> BatchTotals
where
    F: Fn(&mut RandomStream, &mut Vec<NodeId>, &mut [f64]) -> usize + Sync,
{
    let chunks = count.div_ceil(WALK_CHUNK);
    let partials: Vec<BatchTotals> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.derive(c as u64);
            let len = WALK_CHUNK.min(count - c * WALK_CHUNK);
            let mut sums = vec![0.0; dims];
            let mut out = vec![0.0; dims];
            let mut scratch = Vec::new();
            let mut steps = 0u64;
            for _ in 0..len {
                out.iter_mut().for_each(|x| *x = 0.0);
                steps += sample(&mut rng, &mut scratch, &mut out) as u64;
                for (s, x) in sums.iter_mut().zip(&out) {
                    *s += x;
                }
            }
            BatchTotals { sums, steps }
        })
        .collect();

    let mut total = BatchTotals { sums: vec![0.0; dims], steps: 0 };
    for p in partials {
        for (s, x) in total.sums.iter_mut().zip(&p.sums) {
            *s += x;
        }
        total.steps += p.steps;
    }
    total
}
