//! p-morphism validation and search, point-generated subframe enumeration,
//! and the explicit refuting p-morphism construction for connected KD5
//! frames.

use thiserror::Error;

use crate::classes::{in_class, ClassId, ClassScope};
use crate::frame::{Frame, StateSet};

/// Total map from source states to target states, indexed by source state.
pub type StateMap = Vec<usize>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MorphismError {
    #[error("p-morphism search exceeded its budget of {nodes} nodes")]
    BudgetExceeded { nodes: u64 },
}

/// Search-node budget for [`find_p_morphism`].
pub const SEARCH_NODE_BUDGET: u64 = 20_000_000;

/// True iff `map` is surjective onto the target and satisfies the image
/// condition `S_out(f(a)) = f(R_out(a))` at every source state.
pub fn is_p_morphism(source: &Frame, target: &Frame, map: &[usize]) -> bool {
    assert_eq!(map.len(), source.n(), "map must be total on the source");
    assert!(map.iter().all(|&t| t < target.n()), "map must land in the target");

    let mut covered = StateSet::empty(target.n());
    for &t in map {
        covered.insert(t);
    }
    if covered.len() != target.n() {
        return false;
    }

    for a in 0..source.n() {
        let mut image = StateSet::empty(target.n());
        for b in source.out_iter(a) {
            image.insert(map[b]);
        }
        if image != target.out_set(map[a]) {
            return false;
        }
    }
    true
}

/// Backtracking search for a p-morphism witness, or `None` when the
/// exhaustive search closes without one. Partial assignments are pruned by
/// the forward half of the image condition and by a surjectivity count.
pub fn find_p_morphism(source: &Frame, target: &Frame) -> Result<Option<StateMap>, MorphismError> {
    let n = source.n();
    let tn = target.n();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![0usize; tn];
    let mut nodes = 0u64;

    fn consistent(source: &Frame, target: &Frame, map: &[usize], a: usize, t: usize) -> bool {
        if source.has_edge(a, a) && !target.has_edge(t, t) {
            return false;
        }
        for b in 0..a {
            let fb = map[b];
            if source.has_edge(a, b) && !target.has_edge(t, fb) {
                return false;
            }
            if source.has_edge(b, a) && !target.has_edge(fb, t) {
                return false;
            }
        }
        true
    }

    fn backtrack(
        source: &Frame,
        target: &Frame,
        map: &mut Vec<usize>,
        used: &mut Vec<usize>,
        a: usize,
        nodes: &mut u64,
    ) -> Result<bool, MorphismError> {
        *nodes += 1;
        if *nodes > SEARCH_NODE_BUDGET {
            return Err(MorphismError::BudgetExceeded { nodes: *nodes });
        }
        let n = source.n();
        if a == n {
            return Ok(is_p_morphism(source, target, map));
        }
        // surjectivity: every still-uncovered target needs a source state
        let uncovered = used.iter().filter(|&&c| c == 0).count();
        if uncovered > n - a {
            return Ok(false);
        }
        for t in 0..target.n() {
            if consistent(source, target, map, a, t) {
                map[a] = t;
                used[t] += 1;
                if backtrack(source, target, map, used, a + 1, nodes)? {
                    return Ok(true);
                }
                used[t] -= 1;
                map[a] = usize::MAX;
            }
        }
        Ok(false)
    }

    if backtrack(source, target, &mut map, &mut used, 0, &mut nodes)? {
        Ok(Some(map))
    } else {
        Ok(None)
    }
}

/// For every state `a`, the monotone-relabeled point-generated subframe
/// `F⟨a⟩`. With `dedup` set, only one representative per isomorphism class
/// is kept (first generating state wins).
pub fn point_generated(frame: &Frame, dedup: bool) -> Vec<(usize, Frame)> {
    let mut out: Vec<(usize, Frame)> = Vec::new();
    for a in 0..frame.n() {
        let (sub, _) = frame
            .generated_subframe(&StateSet::singleton(frame.n(), a))
            .expect("singleton seed is nonempty");
        if dedup && out.iter().any(|(_, g)| g.is_isomorphic(&sub)) {
            continue;
        }
        out.push((a, sub));
    }
    out
}

// ---------------------------------------------------------------------------
// KD5 refutation construction
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Kd5MapError {
    #[error("source frame is not a connected KD5 frame")]
    SourceNotConnectedKd5,
    #[error("state {state} out of range for frame on {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error("state {state} lies in the cluster core")]
    StateInCore { state: usize },
    #[error("target is not a point-generated KD5 frame with root {root}")]
    TargetNotPointGeneratedKd5 { root: usize },
    #[error("target has {size} states, more than the radius {r}")]
    TargetTooLarge { size: usize, r: usize },
    #[error("cluster core has {core} states, radius {r} requires more")]
    CoreTooSmall { core: usize, r: usize },
    #[error("out-degree {degree} of the chosen state violates r < degree < core - r (r = {r}, core = {core})")]
    OutDegreeOutOfRange { degree: usize, r: usize, core: usize },
}

/// The refuting p-morphism from `F⟨a⟩` onto a small point-generated KD5
/// target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kd5Refutation {
    /// `F⟨a⟩`, monotone-relabeled; its domain is the cluster core plus `a`.
    pub subframe: Frame,
    /// New state index to original state of the source frame.
    pub relabel: Vec<usize>,
    /// The p-morphism from `subframe` onto the target.
    pub map: StateMap,
}

/// Builds the p-morphism `F⟨a⟩ -> G` from the out-degree-spread argument:
/// `a` goes to the root `c`, `R_out(a)` is mapped round-robin (by ascending
/// label) onto `S_out(c)`, and the remaining core states go round-robin
/// onto `U_G \ S_out(c)` — or onto `min S_out(c)` when that set is empty,
/// which keeps the image condition intact because every core state already
/// covers all of `U_G`.
pub fn build_kd5_refutation_map(
    source: &Frame,
    a: usize,
    target: &Frame,
    c: usize,
    r: usize,
) -> Result<Kd5Refutation, Kd5MapError> {
    let n = source.n();
    if a >= n {
        return Err(Kd5MapError::StateOutOfRange { state: a, n });
    }
    if c >= target.n() {
        return Err(Kd5MapError::StateOutOfRange { state: c, n: target.n() });
    }
    if !in_class(ClassId::Kd5, ClassScope::Connected, source) {
        return Err(Kd5MapError::SourceNotConnectedKd5);
    }
    let core = source.cluster_core().expect("KD5 frames are Euclidean");
    if core.contains(a) {
        return Err(Kd5MapError::StateInCore { state: a });
    }
    let is_point_generated = in_class(ClassId::Kd5, ClassScope::All, target)
        && target.forward_closure(&StateSet::singleton(target.n(), c)).len() == target.n();
    if !is_point_generated {
        return Err(Kd5MapError::TargetNotPointGeneratedKd5 { root: c });
    }
    if target.n() > r {
        return Err(Kd5MapError::TargetTooLarge { size: target.n(), r });
    }
    let core_size = core.len();
    if core_size <= r {
        return Err(Kd5MapError::CoreTooSmall { core: core_size, r });
    }
    let degree = source.out_degree(a);
    if degree <= r || degree >= core_size - r {
        return Err(Kd5MapError::OutDegreeOutOfRange { degree, r, core: core_size });
    }

    // On original labels: a -> c; R_out(a) onto S_out(c); the rest of the
    // core onto U_G \ S_out(c).
    let out_a: Vec<usize> = source.out_set(a).to_vec();
    let root_successors: Vec<usize> = target.out_set(c).to_vec();
    let target_core = target.cluster_core().expect("KD5 frames are Euclidean");
    let leftovers: Vec<usize> = target_core.difference(&target.out_set(c)).to_vec();

    let mut assignment = vec![usize::MAX; n];
    assignment[a] = c;
    for (i, &b) in out_a.iter().enumerate() {
        assignment[b] = root_successors[i % root_successors.len()];
    }
    let rest: Vec<usize> = core.difference(&source.out_set(a)).to_vec();
    for (i, &u) in rest.iter().enumerate() {
        assignment[u] = if leftovers.is_empty() {
            root_successors[0]
        } else {
            leftovers[i % leftovers.len()]
        };
    }

    let (subframe, relabel) = source
        .generated_subframe(&StateSet::singleton(n, a))
        .expect("singleton seed is nonempty");
    debug_assert_eq!(relabel.len(), core_size + 1);
    let map: StateMap = relabel.iter().map(|&old| assignment[old]).collect();
    Ok(Kd5Refutation { subframe, relabel, map })
}
