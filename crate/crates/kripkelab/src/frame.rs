//! Finite Kripke frames and the relation-level operations every other
//! module builds on: property predicates, closures and reductions,
//! connected components, generated subframes and frame surgery.
//!
//! A frame is immutable after construction; all operations return new
//! frames, so values can be shared freely across threads.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(n: usize) -> usize {
    (n + WORD_BITS - 1) / WORD_BITS
}

#[inline]
fn tail_mask(n: usize) -> u64 {
    match n % WORD_BITS {
        0 => !0u64,
        rem => (1u64 << rem) - 1,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    /// A precondition named a relation property the input does not have.
    #[error("frame is not {0}")]
    PropertyRequired(PropertyName),
    #[error("state set is empty")]
    EmptyStateSet,
    #[error("frame list is empty")]
    EmptyFrameList,
    #[error("state {state} out of range for frame on {n} states")]
    StateOutOfRange { state: usize, n: usize },
}

/// Errors from reading the frame text format.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct FrameTextError {
    pub line: usize,
    pub message: String,
}

// ---------------------------------------------------------------------------
// StateSet
// ---------------------------------------------------------------------------

/// A subset of the states `0..n` of a frame, stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    n: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet { n, words: vec![0; words_for(n)] }
    }

    pub fn full(n: usize) -> Self {
        let mut words = vec![!0u64; words_for(n)];
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(n);
        }
        StateSet { n, words }
    }

    pub fn singleton(n: usize, a: usize) -> Self {
        let mut s = Self::empty(n);
        s.insert(a);
        s
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(n: usize, states: I) -> Self {
        let mut s = Self::empty(n);
        for a in states {
            s.insert(a);
        }
        s
    }

    pub(crate) fn from_words(n: usize, mut words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(n));
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(n);
        }
        StateSet { n, words }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, a: usize) {
        assert!(a < self.n, "state {a} out of range 0..{}", self.n);
        self.words[a / WORD_BITS] |= 1u64 << (a % WORD_BITS);
    }

    pub fn remove(&mut self, a: usize) {
        assert!(a < self.n);
        self.words[a / WORD_BITS] &= !(1u64 << (a % WORD_BITS));
    }

    pub fn contains(&self, a: usize) -> bool {
        a < self.n && self.words[a / WORD_BITS] >> (a % WORD_BITS) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn min(&self) -> Option<usize> {
        for (i, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(i * WORD_BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * WORD_BITS + b)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        StateSet { n: self.n, words }
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        StateSet { n: self.n, words }
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        assert_eq!(self.n, other.n);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        StateSet { n: self.n, words }
    }

    pub fn complement(&self) -> StateSet {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(self.n);
        }
        StateSet { n: self.n, words }
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        assert_eq!(self.n, other.n);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

/// A set partition of `0..n`: pairwise disjoint nonempty blocks covering the
/// whole state set. Canonical order: blocks sorted by minimum element, each
/// block sorted ascending.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes and validates the block family.
    ///
    /// Panics if the blocks are not a partition of `0..n`; internal callers
    /// construct blocks that are partitions by design, external callers are
    /// expected to do the same.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        let mut seen = vec![false; n];
        for block in &mut blocks {
            block.sort_unstable();
            assert!(!block.is_empty(), "empty block");
            for &a in block.iter() {
                assert!(a < n, "state {a} out of range");
                assert!(!seen[a], "state {a} in two blocks");
                seen[a] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "blocks do not cover 0..{n}");
        blocks.sort_by_key(|b| b[0]);
        Partition { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).max().unwrap_or(0)
    }

    /// Index of the block containing `a`.
    pub fn block_of(&self, a: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&a).is_ok())
            .expect("state not in any block")
    }
}

// ---------------------------------------------------------------------------
// Frame
// ---------------------------------------------------------------------------

/// Relation properties of §-style frame conditions, each decidable on a
/// finite frame.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum PropertyName {
    Serial,
    Reflexive,
    Irreflexive,
    Symmetric,
    Transitive,
    Euclidean,
    NonBranching,
    Noetherian,
}

impl fmt::Display for PropertyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PropertyName::Serial => "serial",
            PropertyName::Reflexive => "reflexive",
            PropertyName::Irreflexive => "irreflexive",
            PropertyName::Symmetric => "symmetric",
            PropertyName::Transitive => "transitive",
            PropertyName::Euclidean => "euclidean",
            PropertyName::NonBranching => "nonbranching",
            PropertyName::Noetherian => "noetherian",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClosureKind {
    Transitive,
    ReflexiveTransitive,
    Inverse,
}

/// BFS distance between two states; `d(a, a) = 0`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Distance {
    Steps(usize),
    Unreachable,
}

/// A finite Kripke frame: states `0..n` and a relation stored as an n×n
/// boolean adjacency matrix, one bitset row per state. Value equality is
/// matrix equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    n: usize,
    wpr: usize,
    bits: Vec<u64>,
}

impl Frame {
    /// The frame on `n` states with the empty relation.
    pub fn empty(n: usize) -> Frame {
        assert!(n >= 1, "frames have at least one state");
        let wpr = words_for(n);
        Frame { n, wpr, bits: vec![0; n * wpr] }
    }

    /// The cluster: relation `X × X`.
    pub fn cluster(n: usize) -> Frame {
        let mut f = Frame::empty(n);
        let full = StateSet::full(n);
        for a in 0..n {
            f.row_mut(a).copy_from_slice(full.words());
        }
        f
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Frame {
        let mut f = Frame::empty(n);
        for &(a, b) in edges {
            assert!(a < n && b < n, "edge ({a},{b}) out of range");
            f.set_edge(a, b);
        }
        f
    }

    /// Irreflexive transitively-closed chain: `a R b` iff `a > b`.
    pub fn strict_chain(n: usize) -> Frame {
        let mut f = Frame::empty(n);
        for a in 0..n {
            for b in 0..a {
                f.set_edge(a, b);
            }
        }
        f
    }

    /// Reflexive transitively-closed chain: `a R b` iff `a >= b`.
    pub fn reflexive_chain(n: usize) -> Frame {
        let mut f = Frame::empty(n);
        for a in 0..n {
            for b in 0..=a {
                f.set_edge(a, b);
            }
        }
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub(crate) fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.wpr..(a + 1) * self.wpr]
    }

    #[inline]
    fn row_mut(&mut self, a: usize) -> &mut [u64] {
        &mut self.bits[a * self.wpr..(a + 1) * self.wpr]
    }

    #[inline]
    pub(crate) fn set_edge(&mut self, a: usize, b: usize) {
        self.bits[a * self.wpr + b / WORD_BITS] |= 1u64 << (b % WORD_BITS);
    }

    /// Replaces row `a` with the low `n` bits of `mask`. Only valid for
    /// frames with at most 64 states; used by the census enumerator.
    pub(crate) fn set_row_mask(&mut self, a: usize, mask: u64) {
        debug_assert!(self.wpr == 1);
        self.bits[a] = mask & tail_mask(self.n);
    }

    pub(crate) fn or_row_from(&mut self, a: usize, words: &[u64]) {
        let row = self.row_mut(a);
        for (dst, src) in row.iter_mut().zip(words) {
            *dst |= src;
        }
    }

    pub(crate) fn copy_row_within(&mut self, src: usize, dst: usize) {
        self.bits
            .copy_within(src * self.wpr..(src + 1) * self.wpr, dst * self.wpr);
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.row(a)[b / WORD_BITS] >> (b % WORD_BITS) & 1 == 1
    }

    pub fn out_degree(&self, a: usize) -> usize {
        self.row(a).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `R_out(a)` as a fresh set.
    pub fn out_set(&self, a: usize) -> StateSet {
        StateSet { n: self.n, words: self.row(a).to_vec() }
    }

    /// `R_in(a)`.
    pub fn in_set(&self, a: usize) -> StateSet {
        let mut s = StateSet::empty(self.n);
        for b in 0..self.n {
            if self.has_edge(b, a) {
                s.insert(b);
            }
        }
        s
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in self.out_set(a).iter() {
                out.push((a, b));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    // -- text format --------------------------------------------------------

    /// Bit-exact text format: line 1 is the decimal state count, lines
    /// 2..n+1 are rows of `'0'`/`'1'` out-edge characters, newline
    /// terminated, no other whitespace.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.n + 1) * (self.n + 1));
        s.push_str(&self.n.to_string());
        s.push('\n');
        for a in 0..self.n {
            for b in 0..self.n {
                s.push(if self.has_edge(a, b) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Frame, FrameTextError> {
        let err = |line: usize, message: &str| FrameTextError { line, message: message.into() };
        let mut lines = text.split_inclusive('\n');
        let header = lines.next().ok_or_else(|| err(1, "empty input"))?;
        let header_body = header
            .strip_suffix('\n')
            .ok_or_else(|| err(1, "missing trailing newline"))?;
        let n: usize = header_body
            .parse()
            .map_err(|_| err(1, "expected a decimal state count"))?;
        if n == 0 {
            return Err(err(1, "state count must be at least 1"));
        }
        let mut frame = Frame::empty(n);
        for a in 0..n {
            let line_no = a + 2;
            let line = lines.next().ok_or_else(|| err(line_no, "missing adjacency row"))?;
            let body = line
                .strip_suffix('\n')
                .ok_or_else(|| err(line_no, "missing trailing newline"))?;
            if body.len() != n {
                return Err(err(line_no, &format!("expected {n} characters")));
            }
            for (b, ch) in body.bytes().enumerate() {
                match ch {
                    b'1' => frame.set_edge(a, b),
                    b'0' => {}
                    _ => return Err(err(line_no, "rows must contain only '0' and '1'")),
                }
            }
        }
        if lines.next().is_some() {
            return Err(err(n + 2, "trailing content after last row"));
        }
        Ok(frame)
    }

    // -- property predicates -------------------------------------------------

    pub fn check_property(&self, p: PropertyName) -> bool {
        match p {
            PropertyName::Serial => self.is_serial(),
            PropertyName::Reflexive => self.is_reflexive(),
            PropertyName::Irreflexive => self.is_irreflexive(),
            PropertyName::Symmetric => self.is_symmetric(),
            PropertyName::Transitive => self.is_transitive(),
            PropertyName::Euclidean => self.is_euclidean(),
            PropertyName::NonBranching => self.is_non_branching(),
            PropertyName::Noetherian => self.is_noetherian(),
        }
    }

    pub fn is_serial(&self) -> bool {
        (0..self.n).all(|a| self.row(a).iter().any(|&w| w != 0))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|a| self.has_edge(a, a))
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|a| !self.has_edge(a, a))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|a| (0..a).all(|b| self.has_edge(a, b) == self.has_edge(b, a)))
    }

    /// `aRb` and `bRc` imply `aRc`: every successor's row is contained in
    /// the state's own row.
    pub fn is_transitive(&self) -> bool {
        (0..self.n).all(|a| {
            self.out_iter(a).all(|b| subset(self.row(b), self.row(a)))
        })
    }

    /// `aRb` and `aRc` imply `bRc`: the state's row is contained in every
    /// successor's row.
    pub fn is_euclidean(&self) -> bool {
        (0..self.n).all(|a| {
            self.out_iter(a).all(|b| subset(self.row(a), self.row(b)))
        })
    }

    /// Successors of a common state are comparable or equal.
    pub fn is_non_branching(&self) -> bool {
        let transpose = self.transpose();
        let wpr = self.wpr;
        let mut scratch = vec![0u64; wpr];
        for a in 0..self.n {
            for b in self.out_iter(a) {
                // Every c in row(a) must satisfy bRc, cRb, or c = b.
                let rb = self.row(b);
                let cb = transpose.row(b);
                for w in 0..wpr {
                    scratch[w] = self.row(a)[w] & !(rb[w] | cb[w]);
                }
                scratch[b / WORD_BITS] &= !(1u64 << (b % WORD_BITS));
                if scratch.iter().any(|&w| w != 0) {
                    return false;
                }
            }
        }
        true
    }

    /// No infinite chain with distinct consecutive states. On a finite frame
    /// this is equivalent to "no strongly connected component with two or
    /// more states"; self-loops are allowed.
    pub fn is_noetherian(&self) -> bool {
        self.scc_sizes().into_iter().all(|size| size <= 1)
    }

    pub(crate) fn out_iter(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.row(a);
        row.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * WORD_BITS + b)
                }
            })
        })
    }

    /// Sizes of the strongly connected components (iterative Tarjan).
    fn scc_sizes(&self) -> Vec<usize> {
        let n = self.n;
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut sizes = Vec::new();
        let mut next_index = 0usize;

        // Explicit DFS stack of (state, successor iterator position).
        let mut call: Vec<(usize, Box<dyn Iterator<Item = usize> + '_>)> = Vec::new();
        for start in 0..n {
            if index[start] != usize::MAX {
                continue;
            }
            index[start] = next_index;
            low[start] = next_index;
            next_index += 1;
            stack.push(start);
            on_stack[start] = true;
            call.push((start, Box::new(self.out_iter(start))));
            while let Some((v, it)) = call.last_mut() {
                let v = *v;
                if let Some(w) = it.next() {
                    if index[w] == usize::MAX {
                        index[w] = next_index;
                        low[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, Box::new(self.out_iter(w))));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some((parent, _)) = call.last() {
                        low[*parent] = low[*parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut size = 0;
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            size += 1;
                            if w == v {
                                break;
                            }
                        }
                        sizes.push(size);
                    }
                }
            }
        }
        sizes
    }

    // -- closures and reduction ----------------------------------------------

    pub fn closure(&self, kind: ClosureKind) -> Frame {
        match kind {
            ClosureKind::Transitive => self.transitive_closure(),
            ClosureKind::ReflexiveTransitive => {
                let mut f = self.transitive_closure();
                for a in 0..f.n {
                    f.set_edge(a, a);
                }
                f
            }
            ClosureKind::Inverse => self.transpose(),
        }
    }

    fn transitive_closure(&self) -> Frame {
        let mut f = self.clone();
        let wpr = f.wpr;
        for k in 0..f.n {
            let (k_word, k_bit) = (k / WORD_BITS, k % WORD_BITS);
            for i in 0..f.n {
                if f.bits[i * wpr + k_word] >> k_bit & 1 == 1 {
                    for w in 0..wpr {
                        let kw = f.bits[k * wpr + w];
                        f.bits[i * wpr + w] |= kw;
                    }
                }
            }
        }
        f
    }

    pub fn transpose(&self) -> Frame {
        let mut f = Frame::empty(self.n);
        for a in 0..self.n {
            for b in self.out_iter(a) {
                f.set_edge(b, a);
            }
        }
        f
    }

    /// Transitive reduction of a transitive Noetherian relation.
    ///
    /// Computed on the strict kernel: with `R' = R \ Id`, the result is
    /// `R' \ R'^2`. For irreflexive relations this is exactly `R \ R^2`;
    /// keeping the diagonal out of the squaring step makes the reduction
    /// invertible on reflexive chains as well, where `R \ R^2` would always
    /// be empty.
    pub fn transitive_reduction(&self) -> Result<Frame, FrameError> {
        if !self.is_transitive() {
            return Err(FrameError::PropertyRequired(PropertyName::Transitive));
        }
        if !self.is_noetherian() {
            return Err(FrameError::PropertyRequired(PropertyName::Noetherian));
        }
        Ok(self.strict_kernel_reduction())
    }

    pub(crate) fn strict_kernel_reduction(&self) -> Frame {
        let n = self.n;
        // strict = R minus the diagonal
        let mut strict = self.clone();
        for a in 0..n {
            strict.bits[a * strict.wpr + a / WORD_BITS] &= !(1u64 << (a % WORD_BITS));
        }
        // square = strict ∘ strict
        let wpr = strict.wpr;
        let mut reduced = strict.clone();
        for a in 0..n {
            let mut sq = vec![0u64; wpr];
            for b in strict.out_iter(a) {
                for w in 0..wpr {
                    sq[w] |= strict.bits[b * wpr + w];
                }
            }
            for w in 0..wpr {
                reduced.bits[a * wpr + w] &= !sq[w];
            }
        }
        reduced
    }

    // -- components, subframes, sums ------------------------------------------

    /// Equivalence classes of `(R ∪ R⁻¹)*`.
    pub fn connected_components(&self) -> Partition {
        let n = self.n;
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let transpose = self.transpose();
        let mut queue = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push(start);
            while let Some(a) = queue.pop() {
                for b in self.out_iter(a).chain(transpose.out_iter(a)) {
                    if comp[b] == usize::MAX {
                        comp[b] = next;
                        queue.push(b);
                    }
                }
            }
            next += 1;
        }
        let mut blocks = vec![Vec::new(); next];
        for (a, &c) in comp.iter().enumerate() {
            blocks[c].push(a);
        }
        Partition::new(n, blocks)
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().num_blocks() == 1
    }

    /// Forward closure `R*_out[U]` of a state set.
    pub fn forward_closure(&self, seed: &StateSet) -> StateSet {
        assert_eq!(seed.n(), self.n);
        let mut closure = seed.clone();
        let mut queue: Vec<usize> = seed.iter().collect();
        while let Some(a) = queue.pop() {
            for b in self.out_iter(a) {
                if !closure.contains(b) {
                    closure.insert(b);
                    queue.push(b);
                }
            }
        }
        closure
    }

    /// The subframe generated by `U`: the restriction of the relation to
    /// `R*_out[U]`, monotone-relabeled to an initial segment. Also returns
    /// the relabeling as a vector mapping new state index to old.
    pub fn generated_subframe(&self, seed: &StateSet) -> Result<(Frame, Vec<usize>), FrameError> {
        if seed.is_empty() {
            return Err(FrameError::EmptyStateSet);
        }
        let closure = self.forward_closure(seed);
        let old_of: Vec<usize> = closure.iter().collect();
        Ok((self.monotone_relabel(&closure)?, old_of))
    }

    /// Applies the unique order-preserving bijection `U -> [|U|]` to the
    /// restriction of the relation to `U`.
    pub fn monotone_relabel(&self, u: &StateSet) -> Result<Frame, FrameError> {
        assert_eq!(u.n(), self.n);
        if u.is_empty() {
            return Err(FrameError::EmptyStateSet);
        }
        let old_of: Vec<usize> = u.iter().collect();
        let mut new_of = vec![usize::MAX; self.n];
        for (new, &old) in old_of.iter().enumerate() {
            new_of[old] = new;
        }
        let mut f = Frame::empty(old_of.len());
        for (new_a, &old_a) in old_of.iter().enumerate() {
            for old_b in self.out_iter(old_a) {
                if new_of[old_b] != usize::MAX {
                    f.set_edge(new_a, new_of[old_b]);
                }
            }
        }
        Ok(f)
    }

    /// Disjoint sum: states re-indexed consecutively block by block.
    pub fn disjoint_sum(frames: &[Frame]) -> Result<Frame, FrameError> {
        if frames.is_empty() {
            return Err(FrameError::EmptyFrameList);
        }
        let n: usize = frames.iter().map(|f| f.n).sum();
        let mut sum = Frame::empty(n);
        let mut offset = 0;
        for f in frames {
            for a in 0..f.n {
                for b in f.out_iter(a) {
                    sum.set_edge(offset + a, offset + b);
                }
            }
            offset += f.n;
        }
        Ok(sum)
    }

    // -- isomorphism ----------------------------------------------------------

    /// Exact isomorphism test by backtracking with degree-profile pruning.
    /// Intended for frames with at most ~10 states; above that it may be
    /// slow but stays correct.
    pub fn is_isomorphic(&self, other: &Frame) -> bool {
        if self.n != other.n {
            return false;
        }
        if self.edge_count() != other.edge_count() {
            return false;
        }
        let profile = |f: &Frame, a: usize| {
            (f.out_degree(a), f.in_set(a).len(), f.has_edge(a, a))
        };
        let mut left: Vec<_> = (0..self.n).map(|a| profile(self, a)).collect();
        let mut right: Vec<_> = (0..self.n).map(|a| profile(other, a)).collect();
        let src_profile = left.clone();
        let tgt_profile = right.clone();
        left.sort_unstable();
        right.sort_unstable();
        if left != right {
            return false;
        }

        let n = self.n;
        let mut map = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn backtrack(
            f: &Frame,
            g: &Frame,
            src_profile: &[(usize, usize, bool)],
            tgt_profile: &[(usize, usize, bool)],
            map: &mut Vec<usize>,
            used: &mut Vec<bool>,
            a: usize,
        ) -> bool {
            let n = f.n();
            if a == n {
                return true;
            }
            for t in 0..n {
                if used[t] || src_profile[a] != tgt_profile[t] {
                    continue;
                }
                let consistent = (0..a).all(|b| {
                    f.has_edge(a, b) == g.has_edge(t, map[b])
                        && f.has_edge(b, a) == g.has_edge(map[b], t)
                }) && f.has_edge(a, a) == g.has_edge(t, t);
                if consistent {
                    map[a] = t;
                    used[t] = true;
                    if backtrack(f, g, src_profile, tgt_profile, map, used, a + 1) {
                        return true;
                    }
                    used[t] = false;
                    map[a] = usize::MAX;
                }
            }
            false
        }
        backtrack(self, other, &src_profile, &tgt_profile, &mut map, &mut used, 0)
    }

    // -- Euclidean structure ----------------------------------------------------

    /// The cluster core `U_F = ∪_a R_out(a)` of a Euclidean frame: the unique
    /// subset on which the relation restricts to an equivalence relation and
    /// into which every edge points.
    pub fn cluster_core(&self) -> Result<StateSet, FrameError> {
        if !self.is_euclidean() {
            return Err(FrameError::PropertyRequired(PropertyName::Euclidean));
        }
        let mut words = vec![0u64; self.wpr];
        for a in 0..self.n {
            for (w, &rw) in words.iter_mut().zip(self.row(a)) {
                *w |= rw;
            }
        }
        Ok(StateSet::from_words(self.n, words))
    }

    // -- distance ---------------------------------------------------------------

    /// `min { k : a R^k b }`, with `R^0 = Id`.
    pub fn distance(&self, a: usize, b: usize) -> Distance {
        assert!(a < self.n && b < self.n);
        if a == b {
            return Distance::Steps(0);
        }
        let mut dist = vec![usize::MAX; self.n];
        dist[a] = 0;
        let mut frontier = vec![a];
        let mut next = Vec::new();
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            for &x in &frontier {
                for y in self.out_iter(x) {
                    if dist[y] == usize::MAX {
                        if y == b {
                            return Distance::Steps(d);
                        }
                        dist[y] = d;
                        next.push(y);
                    }
                }
            }
            frontier.clear();
            std::mem::swap(&mut frontier, &mut next);
        }
        Distance::Unreachable
    }
}

#[inline]
fn subset(inner: &[u64], outer: &[u64]) -> bool {
    inner.iter().zip(outer).all(|(a, b)| a & !b == 0)
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frame(n={}, edges={:?})", self.n, self.edges())
    }
}
