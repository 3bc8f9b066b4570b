//! Provably uniform samplers for each class and scope, built from the
//! class structure theorems, plus a rejection-sampling oracle used by the
//! uniformity tests.
//!
//! Uniformity is exact, not approximate: every discrete choice is drawn
//! from exact big-integer weights (a uniform big integer below the total,
//! found by linear scan), so the output distribution over labelled frames
//! is uniform by construction.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::classes::{in_class, tree_structure, ClassId, ClassScope};
use crate::count::{bell, count_connected, kd5_core_weights, MAX_CENSUS_N};
use crate::frame::{Frame, Partition, StateSet};
use crate::rng::RngStream;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("rejection sampling supports n <= {max}, got {n}")]
    RejectionTooLarge { n: usize, max: usize },
    #[error("rejection sampling exhausted its retry budget after {attempts} attempts")]
    RetryBudget { attempts: u64 },
}

/// Per-draw retry cap for the rejection oracle.
pub const REJECTION_ATTEMPT_BUDGET: u64 = 100_000_000;

// In release builds the per-draw class membership check runs on a sample of
// draws; debug builds check every draw.
const RELEASE_CHECK_INTERVAL: u64 = 997;

fn verify_draw(class: ClassId, scope: ClassScope, frame: &Frame, counter: &AtomicU64) {
    let check = if cfg!(debug_assertions) {
        true
    } else {
        counter.fetch_add(1, Ordering::Relaxed) % RELEASE_CHECK_INTERVAL == 0
    };
    if check {
        let ok = match class {
            // structural membership is equivalent and much faster on trees
            ClassId::Gl3 => tree_structure(frame, false).is_some(),
            ClassId::Grz3 => tree_structure(frame, true).is_some(),
            _ => in_class(class, ClassScope::Connected, frame),
        } || scope == ClassScope::All && in_class(class, ClassScope::All, frame);
        assert!(ok, "sampler produced a frame outside {class}/{scope}");
    }
}

// ---------------------------------------------------------------------------
// Weighted and subset draws
// ---------------------------------------------------------------------------

/// Uniformly draws `m` distinct states out of `0..n`, returned sorted.
fn uniform_m_subset(n: usize, m: usize, rng: &mut RngStream) -> Vec<usize> {
    debug_assert!(m <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut chosen = pool[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Uniformly draws a nonempty subset of the given items.
fn uniform_nonempty_subset(items: &[usize], rng: &mut RngStream) -> Vec<usize> {
    let m = items.len();
    debug_assert!(m >= 1);
    if m <= 63 {
        let mask = rng.gen_range(1..(1u64 << m));
        items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &x)| x)
            .collect()
    } else {
        let bound = BigUint::from(2u32).pow(m as u32) - 1u32;
        let mask = rng.gen_biguint_below(&bound) + 1u32;
        items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask.bit(*i as u64))
            .map(|(_, &x)| x)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Uniform set partitions
// ---------------------------------------------------------------------------

/// Exactly uniform sampler over the `B_n` set partitions of `[n]`.
///
/// The block containing the smallest unassigned element gets size `j` with
/// probability `C(m-1, j-1) B_(m-j) / B_m` (`m` elements remaining), then
/// its members are drawn uniformly without replacement.
pub struct PartitionSampler {
    n: usize,
    bells: Vec<BigUint>,
}

impl PartitionSampler {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        PartitionSampler { n, bells: bell(n) }
    }

    /// Draws the size of the block containing the smallest of `m` remaining
    /// elements: weight `C(m-1, j-1) B_(m-j)`, total `B_m`. The binomial is
    /// updated incrementally along the scan.
    fn draw_block_size(&self, m: usize, rng: &mut RngStream) -> usize {
        let x = rng.gen_biguint_below(&self.bells[m]);
        let mut cumulative = BigUint::zero();
        let mut binom = BigUint::one();
        for j in 1..=m {
            cumulative += &binom * &self.bells[m - j];
            if x < cumulative {
                return j;
            }
            binom = binom * (m - j) / j;
        }
        unreachable!("weights sum to B_m");
    }

    pub fn sample(&self, rng: &mut RngStream) -> Partition {
        let mut remaining: Vec<usize> = (0..self.n).collect();
        let mut blocks = Vec::new();
        while !remaining.is_empty() {
            let m = remaining.len();
            let j = self.draw_block_size(m, rng);
            // the smallest remaining element plus j-1 uniform others
            let others = uniform_m_subset(m - 1, j - 1, rng);
            let mut block = vec![remaining[0]];
            block.extend(others.iter().map(|&i| remaining[i + 1]));
            let mut keep = Vec::with_capacity(m - j);
            let mut drop_iter = block.iter().skip(1).peekable();
            for &state in remaining.iter().skip(1) {
                if drop_iter.peek() == Some(&&state) {
                    drop_iter.next();
                } else {
                    keep.push(state);
                }
            }
            remaining = keep;
            blocks.push(block);
        }
        Partition::new(self.n, blocks)
    }
}

/// One-shot convenience for [`PartitionSampler`].
pub fn sample_partition(n: usize, rng: &mut RngStream) -> Partition {
    PartitionSampler::new(n).sample(rng)
}

// ---------------------------------------------------------------------------
// Connected-frame samplers
// ---------------------------------------------------------------------------

/// Exactly uniform sampler over the connected class members on `[n]`.
pub struct ConnectedSampler {
    class: ClassId,
    n: usize,
    // KD5 core-size weights C(n,m)(2^m-1)^(n-m), 1-indexed by m
    kd5_weights: Option<(Vec<BigUint>, BigUint)>,
    checks: AtomicU64,
}

impl ConnectedSampler {
    pub fn new(class: ClassId, n: usize) -> Self {
        assert!(n >= 1);
        let kd5_weights = (class == ClassId::Kd5).then(|| {
            let weights = kd5_core_weights(n);
            let total = weights.iter().sum();
            (weights, total)
        });
        ConnectedSampler { class, n, kd5_weights, checks: AtomicU64::new(0) }
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample(&self, rng: &mut RngStream) -> Frame {
        let n = self.n;
        let frame = match self.class {
            ClassId::S5 => Frame::cluster(n),
            ClassId::K5b => {
                if n == 1 {
                    if rng.gen_range(0..2u32) == 0 {
                        Frame::cluster(1)
                    } else {
                        Frame::empty(1)
                    }
                } else {
                    Frame::cluster(n)
                }
            }
            ClassId::Kd45 => {
                let all: Vec<usize> = (0..n).collect();
                let core = uniform_nonempty_subset(&all, rng);
                core_frame(n, &core, |_| true, |_, _| unreachable!())
            }
            ClassId::Kd5 => {
                let (weights, total) = self.kd5_weights.as_ref().unwrap();
                let x = rng.gen_biguint_below(total);
                let mut cumulative = BigUint::zero();
                let mut size = 0;
                for (i, w) in weights.iter().enumerate() {
                    cumulative += w;
                    if x < cumulative {
                        size = i + 1;
                        break;
                    }
                }
                let core = uniform_m_subset(n, size, rng);
                let mut outside_rows: Vec<Vec<usize>> = Vec::new();
                for _ in 0..n - size {
                    outside_rows.push(uniform_nonempty_subset(&core, rng));
                }
                let mut outside_index = 0;
                core_frame(
                    n,
                    &core,
                    |_| false,
                    |_, _| {
                        let row = outside_rows[outside_index].clone();
                        outside_index += 1;
                        row
                    },
                )
            }
            ClassId::Gl3 | ClassId::Grz3 => {
                let (root, parent) = sample_rooted_tree(n, rng);
                tree_closure_frame(n, root, &parent, self.class == ClassId::Grz3)
            }
        };
        verify_draw(self.class, ClassScope::Connected, &frame, &self.checks);
        frame
    }
}

/// Builds the Euclidean frame with cluster core `core`: every core state
/// sees the whole core; outside state rows come from `outside_row` unless
/// `full_outside` says they see the whole core too (KD45).
fn core_frame(
    n: usize,
    core: &[usize],
    mut full_outside: impl FnMut(usize) -> bool,
    mut outside_row: impl FnMut(usize, &[usize]) -> Vec<usize>,
) -> Frame {
    let core_set = StateSet::from_states(n, core.iter().copied());
    let mut f = Frame::empty(n);
    let mut in_core = vec![false; n];
    for &u in core {
        in_core[u] = true;
        f.or_row_from(u, core_set.words());
    }
    for a in 0..n {
        if in_core[a] {
            continue;
        }
        if full_outside(a) {
            f.or_row_from(a, core_set.words());
        } else {
            for b in outside_row(a, core) {
                f.set_edge(a, b);
            }
        }
    }
    f
}

/// Uniform rooted labelled tree on `[n]`: a uniform Prüfer word decoded to
/// a tree, plus an independent uniform root. Returns `(root, parent)` with
/// `parent[root] = usize::MAX`.
fn sample_rooted_tree(n: usize, rng: &mut RngStream) -> (usize, Vec<usize>) {
    if n == 1 {
        return (0, vec![usize::MAX]);
    }
    let edges = if n == 2 {
        vec![(0, 1)]
    } else {
        let word: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        prufer_to_edges(&word, n)
    };
    let root = rng.gen_range(0..n);
    orient_toward_root(n, &edges, root)
}

/// Standard Prüfer decoding; the word has length n-2 over `[n]`.
pub(crate) fn prufer_to_edges(word: &[usize], n: usize) -> Vec<(usize, usize)> {
    debug_assert_eq!(word.len(), n - 2);
    let mut degree = vec![1u32; n];
    for &x in word {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &x in word {
        edges.push((leaf, x));
        degree[x] -= 1;
        if degree[x] == 1 && x < ptr {
            leaf = x;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n - 1));
    edges
}

pub(crate) fn orient_toward_root(
    n: usize,
    edges: &[(usize, usize)],
    root: usize,
) -> (usize, Vec<usize>) {
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = vec![root];
    let mut head = 0;
    while head < queue.len() {
        let a = queue[head];
        head += 1;
        for &b in &adjacency[a] {
            if !seen[b] {
                seen[b] = true;
                parent[b] = a;
                queue.push(b);
            }
        }
    }
    (root, parent)
}

/// Transitive (or reflexive-transitive) closure of the parent relation,
/// built row by row in root-first order: each state's ancestors are its
/// parent's ancestors plus the parent.
pub(crate) fn tree_closure_frame(
    n: usize,
    root: usize,
    parent: &[usize],
    reflexive: bool,
) -> Frame {
    let mut children = vec![Vec::new(); n];
    for (a, &p) in parent.iter().enumerate() {
        if p != usize::MAX {
            children[p].push(a);
        }
    }
    let mut f = Frame::empty(n);
    if reflexive {
        f.set_edge(root, root);
    }
    let mut queue = vec![root];
    let mut head = 0;
    while head < queue.len() {
        let a = queue[head];
        head += 1;
        for &c in &children[a] {
            f.copy_row_within(a, c);
            if reflexive {
                // drop the parent's self-loop, add our own below
                f.set_edge(c, a);
                f.set_edge(c, c);
            } else {
                f.set_edge(c, a);
            }
            queue.push(c);
        }
    }
    f
}

/// One-shot convenience for [`ConnectedSampler`].
pub fn sample_connected(class: ClassId, n: usize, rng: &mut RngStream) -> Frame {
    ConnectedSampler::new(class, n).sample(rng)
}

/// Closures of all `n^(n-1)` rooted labelled trees on `[n]` — the full
/// support of the connected GL.3 (irreflexive) or Grz.3 (reflexive)
/// sampler. For exhaustive checks at small n.
pub fn prufer_all_rooted_closures(n: usize, reflexive: bool) -> Vec<Frame> {
    assert!(n >= 1);
    if n == 1 {
        return vec![tree_closure_frame(1, 0, &[usize::MAX], reflexive)];
    }
    let words = if n == 2 { 1 } else { n.pow((n - 2) as u32) };
    let mut out = Vec::with_capacity(n.pow((n - 1) as u32));
    for code in 0..words {
        let mut word = Vec::with_capacity(n.saturating_sub(2));
        let mut c = code;
        for _ in 0..n.saturating_sub(2) {
            word.push(c % n);
            c /= n;
        }
        let edges = if n == 2 { vec![(0, 1)] } else { prufer_to_edges(&word, n) };
        for root in 0..n {
            let (root, parent) = orient_toward_root(n, &edges, root);
            out.push(tree_closure_frame(n, root, &parent, reflexive));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Whole-class samplers
// ---------------------------------------------------------------------------

/// Exactly uniform sampler over all class members on `[n]`, by
/// component-structure sampling: the block containing the smallest
/// unplaced label has size `j` with probability
/// `C(m-1, j-1) c_j a_(m-j) / a_m`, its members are uniform, and the block
/// is filled with an independent uniform connected member of size `j`.
pub struct AllSampler {
    class: ClassId,
    n: usize,
    connected_counts: Vec<BigUint>, // c_1..c_n
    totals: Vec<BigUint>,           // a_0..a_n
    size_samplers: Vec<ConnectedSampler>,
    checks: AtomicU64,
}

impl AllSampler {
    pub fn new(class: ClassId, n: usize) -> Self {
        assert!(n >= 1);
        let connected_counts: Vec<BigUint> =
            (1..=n).map(|m| count_connected(class, m)).collect();
        let mut totals = Vec::with_capacity(n + 1);
        totals.push(BigUint::one());
        for m in 1..=n {
            let mut a_m = BigUint::zero();
            let mut binom = BigUint::one();
            for j in 1..=m {
                a_m += &binom * &connected_counts[j - 1] * &totals[m - j];
                if j < m {
                    binom = binom * (m - j) / j;
                }
            }
            totals.push(a_m);
        }
        let size_samplers = (1..=n).map(|m| ConnectedSampler::new(class, m)).collect();
        AllSampler {
            class,
            n,
            connected_counts,
            totals,
            size_samplers,
            checks: AtomicU64::new(0),
        }
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total member count `a_n`, equal to the exponential formula applied
    /// to the connected counts.
    pub fn total(&self) -> &BigUint {
        &self.totals[self.n]
    }

    fn draw_block_size(&self, m: usize, rng: &mut RngStream) -> usize {
        let x = rng.gen_biguint_below(&self.totals[m]);
        let mut cumulative = BigUint::zero();
        let mut binom = BigUint::one();
        for j in 1..=m {
            cumulative += &binom * &self.connected_counts[j - 1] * &self.totals[m - j];
            if x < cumulative {
                return j;
            }
            binom = binom * (m - j) / j;
        }
        unreachable!("weights sum to a_m");
    }

    pub fn sample(&self, rng: &mut RngStream) -> Frame {
        let n = self.n;
        let mut frame = Frame::empty(n);
        let mut remaining: Vec<usize> = (0..n).collect();
        while !remaining.is_empty() {
            let m = remaining.len();
            let j = self.draw_block_size(m, rng);
            let others = uniform_m_subset(m - 1, j - 1, rng);
            let mut block = vec![remaining[0]];
            block.extend(others.iter().map(|&i| remaining[i + 1]));
            block.sort_unstable();

            let component = self.size_samplers[j - 1].sample(rng);
            for (x, y) in component.edges() {
                frame.set_edge(block[x], block[y]);
            }

            let block_set: Vec<bool> = {
                let mut mark = vec![false; n];
                for &b in &block {
                    mark[b] = true;
                }
                mark
            };
            remaining.retain(|&s| !block_set[s]);
        }
        verify_draw(self.class, ClassScope::All, &frame, &self.checks);
        frame
    }
}

/// One-shot convenience for [`AllSampler`].
pub fn sample_all(class: ClassId, n: usize, rng: &mut RngStream) -> Frame {
    AllSampler::new(class, n).sample(rng)
}

// ---------------------------------------------------------------------------
// Rejection oracle
// ---------------------------------------------------------------------------

/// Uniform by construction: draws all n² adjacency bits fair and retries
/// until the frame lands in the class. The distribution oracle for the
/// structured samplers; enforced small because acceptance ratios collapse.
pub fn sample_rejection(
    class: ClassId,
    scope: ClassScope,
    n: usize,
    rng: &mut RngStream,
) -> Result<Frame, SampleError> {
    if n == 0 || n > 4 {
        return Err(SampleError::RejectionTooLarge { n, max: 4 });
    }
    let cells = (n * n) as u32;
    let mut frame = Frame::empty(n);
    let row_mask = (1u64 << n) - 1;
    for _ in 0..REJECTION_ATTEMPT_BUDGET {
        let rel = rng.next_u64() & ((1u64 << cells) - 1);
        for a in 0..n {
            frame.set_row_mask(a, rel >> (a * n) & row_mask);
        }
        if in_class(class, scope, &frame) {
            return Ok(frame);
        }
    }
    Err(SampleError::RetryBudget { attempts: REJECTION_ATTEMPT_BUDGET })
}

/// Enumerates the class census for small n as explicit frames, in
/// enumeration order. Support lists for the uniformity tests.
pub fn census_frames(
    class: ClassId,
    scope: ClassScope,
    n: usize,
) -> Result<Vec<Frame>, crate::count::CountError> {
    let mut frames = Vec::new();
    crate::count::for_each_frame(n, |f| {
        if in_class(class, scope, f) {
            frames.push(f.clone());
        }
    })?;
    Ok(frames)
}

// keep the census bound visible here for callers sizing uniformity tests
pub const MAX_REJECTION_N: usize = MAX_CENSUS_N - 1;

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn partition_sampler_basics() {
        let mut rng = RngStream::new(11);
        assert_eq!(
            sample_partition(1, &mut rng).blocks(),
            &[vec![0usize]]
        );
        let sampler = PartitionSampler::new(6);
        for _ in 0..200 {
            let p = sampler.sample(&mut rng);
            assert_eq!(p.n(), 6);
            let total: usize = p.blocks().iter().map(|b| b.len()).sum();
            assert_eq!(total, 6);
        }
    }

    #[test]
    fn partition_first_block_size_distribution() {
        // at n = 4 the first block has size j with weight C(3, j-1) B_(4-j):
        // (5, 6, 3, 1) out of 15
        let sampler = PartitionSampler::new(4);
        let mut rng = RngStream::new(5);
        let trials = 60_000;
        let mut counts = [0u32; 4];
        for _ in 0..trials {
            let p = sampler.sample(&mut rng);
            counts[p.blocks()[0].len() - 1] += 1;
        }
        let expected = [5.0, 6.0, 3.0, 1.0].map(|w| w / 15.0 * trials as f64);
        for (got, want) in counts.iter().zip(expected) {
            assert!(
                (*got as f64 - want).abs() < 5.0 * want.sqrt(),
                "block-size counts {counts:?}"
            );
        }
    }

    #[test]
    fn prufer_rooted_trees_are_a_bijection() {
        // all (word, root) pairs decode to pairwise distinct closures,
        // n^(n-1) of them
        for n in [3usize, 4] {
            let words = n.pow((n - 2) as u32);
            let mut seen = HashSet::new();
            for code in 0..words {
                let mut word = Vec::with_capacity(n - 2);
                let mut c = code;
                for _ in 0..n - 2 {
                    word.push(c % n);
                    c /= n;
                }
                let edges = prufer_to_edges(&word, n);
                for root in 0..n {
                    let (root, parent) = orient_toward_root(n, &edges, root);
                    let frame = tree_closure_frame(n, root, &parent, false);
                    assert!(seen.insert(frame), "duplicate rooted tree");
                }
            }
            assert_eq!(seen.len(), n.pow((n - 1) as u32));
        }
    }

    #[test]
    fn connected_samples_land_in_class() {
        let mut rng = RngStream::new(99);
        for class in crate::classes::ALL_CLASSES {
            for n in 1..=6 {
                let sampler = ConnectedSampler::new(class, n);
                for _ in 0..50 {
                    let f = sampler.sample(&mut rng);
                    assert!(
                        in_class(class, ClassScope::Connected, &f),
                        "{class} n={n} {f:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn s5_sample_is_the_cluster() {
        let mut rng = RngStream::new(1);
        for n in 1..=5 {
            assert_eq!(sample_connected(ClassId::S5, n, &mut rng), Frame::cluster(n));
        }
    }

    #[test]
    fn all_samples_land_in_class_and_totals_match() {
        let mut rng = RngStream::new(7);
        for class in crate::classes::ALL_CLASSES {
            let sampler = AllSampler::new(class, 6);
            assert_eq!(sampler.total(), &crate::count::count_all(class, 6));
            for _ in 0..100 {
                let f = sampler.sample(&mut rng);
                assert!(in_class(class, ClassScope::All, &f), "{class} {f:?}");
            }
        }
    }

    #[test]
    fn k5b_singletons_split_evenly() {
        let mut rng = RngStream::new(123);
        let mut reflexive = 0u32;
        for _ in 0..2000 {
            if sample_connected(ClassId::K5b, 1, &mut rng).has_edge(0, 0) {
                reflexive += 1;
            }
        }
        assert!((800..1200).contains(&reflexive), "reflexive singleton count {reflexive}");
    }

    #[test]
    fn rejection_oracle_bounds() {
        let mut rng = RngStream::new(3);
        let f = sample_rejection(ClassId::Kd5, ClassScope::Connected, 2, &mut rng).unwrap();
        assert!(in_class(ClassId::Kd5, ClassScope::Connected, &f));
        assert!(matches!(
            sample_rejection(ClassId::Kd5, ClassScope::All, 5, &mut rng),
            Err(SampleError::RejectionTooLarge { n: 5, .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a: Vec<Frame> = {
            let root = RngStream::new(2024);
            (0..20)
                .map(|i| sample_all(ClassId::Kd5, 5, &mut root.substream(i)))
                .collect()
        };
        let b: Vec<Frame> = {
            let root = RngStream::new(2024);
            (0..20)
                .map(|i| sample_all(ClassId::Kd5, 5, &mut root.substream(i)))
                .collect()
        };
        assert_eq!(a, b);
    }
}
