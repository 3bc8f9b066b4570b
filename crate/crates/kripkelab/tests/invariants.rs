//! Exhaustive small-n structural invariants: cluster-core uniqueness, the
//! connectivity characterization, reduction round trips, validity
//! preservation, an independently coded class-predicate oracle, sampler
//! uniformity across every class and scope, p-morphism completeness, and
//! the Monte Carlo trend checks.

use num_bigint::BigUint;
use rand::Rng;

use kripkelab::classes::{fixtures, in_class, ClassId, ClassScope, FixtureKind, ALL_CLASSES};
use kripkelab::count::{bell, brute_census, count_connected, for_each_frame};
use kripkelab::formula::Formula;
use kripkelab::frame::{ClosureKind, Frame, StateSet};
use kripkelab::lab::{chi_square_uniform, estimate_validity, frame_statistic, stat_sweep, StatisticName};
use kripkelab::morphism::{find_p_morphism, is_p_morphism};
use kripkelab::rng::RngStream;
use kripkelab::sample::{
    census_frames, prufer_all_rooted_closures, sample_rejection, AllSampler, ConnectedSampler,
};
use kripkelab::semantics::{is_valid, Validity};

// ---------------------------------------------------------------------------
// frame-core
// ---------------------------------------------------------------------------

/// On every Euclidean frame with up to 5 states, the cluster core is an
/// equivalence relation under R, absorbs every edge, and is the unique
/// subset doing both (exhaustive subset search).
#[test]
fn cluster_core_unique_on_euclidean_frames() {
    for n in 1..=5usize {
        let mut euclidean_seen = 0u64;
        for_each_frame(n, |f| {
            if !f.check_property(kripkelab::PropertyName::Euclidean) {
                return;
            }
            euclidean_seen += 1;
            let core = f.cluster_core().unwrap();

            let satisfies = |subset: &StateSet| {
                // R restricted to the subset is an equivalence relation
                for a in subset.iter() {
                    if !f.has_edge(a, a) {
                        return false;
                    }
                    for b in subset.iter() {
                        if f.has_edge(a, b) != f.has_edge(b, a) {
                            return false;
                        }
                        for c in subset.iter() {
                            if f.has_edge(a, b) && f.has_edge(b, c) && !f.has_edge(a, c) {
                                return false;
                            }
                        }
                    }
                }
                // every edge of F lands inside the subset
                f.edges().iter().all(|&(_, b)| subset.contains(b))
            };

            assert!(satisfies(&core), "core fails its own conditions on {f:?}");
            for mask in 0u32..1 << n {
                let subset = StateSet::from_states(n, (0..n).filter(|&a| mask >> a & 1 == 1));
                if subset != core {
                    assert!(!satisfies(&subset), "second core {subset:?} on {f:?}");
                }
            }
        })
        .unwrap();
        assert!(euclidean_seen > 0);
    }
}

/// A serial Euclidean frame is connected exactly when the subframe
/// generated by its core is a cluster (exhaustive n <= 4).
#[test]
fn connected_iff_core_generates_cluster() {
    for n in 1..=4usize {
        for_each_frame(n, |f| {
            if !in_class(ClassId::Kd5, ClassScope::All, f) {
                return;
            }
            let core = f.cluster_core().unwrap();
            let connected = f.is_connected();
            let core_cluster = if core.is_empty() {
                false
            } else {
                let (sub, _) = f.generated_subframe(&core).unwrap();
                sub == Frame::cluster(sub.n())
            };
            assert_eq!(connected, core_cluster, "{f:?}");
        })
        .unwrap();
    }
}

/// Reduction and closure are mutually inverse on the connected GL.3 and
/// Grz.3 frames: exhaustively for n <= 4, and over the full tree
/// enumeration at n = 5.
#[test]
fn reduction_closure_round_trip_on_tree_classes() {
    for n in 1..=4usize {
        for_each_frame(n, |f| {
            if in_class(ClassId::Gl3, ClassScope::Connected, f) {
                let red = f.transitive_reduction().unwrap();
                assert_eq!(red.closure(ClosureKind::Transitive), *f, "gl3 {f:?}");
            }
            if in_class(ClassId::Grz3, ClassScope::Connected, f) {
                let red = f.transitive_reduction().unwrap();
                assert_eq!(red.closure(ClosureKind::ReflexiveTransitive), *f, "grz3 {f:?}");
            }
        })
        .unwrap();
    }
    for reflexive in [false, true] {
        let frames = prufer_all_rooted_closures(5, reflexive);
        assert_eq!(frames.len(), 5usize.pow(4));
        for f in frames {
            let red = f.transitive_reduction().unwrap();
            let closed = if reflexive {
                red.closure(ClosureKind::ReflexiveTransitive)
            } else {
                red.closure(ClosureKind::Transitive)
            };
            assert_eq!(closed, f);
        }
    }
}

/// Validity is preserved by generated subframes, and a disjoint sum
/// validates a formula exactly when every summand does.
#[test]
fn validity_preservation_spot_checks() {
    let formulas: Vec<Formula> = ALL_CLASSES
        .iter()
        .flat_map(|&c| fixtures(c))
        .map(|fixture| fixture.formula)
        .collect();

    let mut rng = RngStream::new(41);
    let mut frames: Vec<Frame> = Vec::new();
    for n in 1..=4usize {
        for _ in 0..6 {
            let mask: u64 = rng.gen_range(0..1u64 << (n * n));
            let mut edges = Vec::new();
            for c in 0..n * n {
                if mask >> c & 1 == 1 {
                    edges.push((c / n, c % n));
                }
            }
            frames.push(Frame::from_edges(n, &edges));
        }
    }

    for f in &frames {
        for phi in &formulas {
            let valid = is_valid(f, phi).unwrap().is_valid();
            if valid {
                for a in 0..f.n() {
                    let (sub, _) = f.generated_subframe(&StateSet::singleton(f.n(), a)).unwrap();
                    assert!(
                        is_valid(&sub, phi).unwrap().is_valid(),
                        "generated subframe lost validity of {phi} on {f:?}"
                    );
                }
            }
        }
    }

    for pair in frames.chunks(2) {
        if pair.len() < 2 {
            continue;
        }
        let sum = Frame::disjoint_sum(pair).unwrap();
        for phi in formulas.iter().take(6) {
            let sum_valid = is_valid(&sum, phi).unwrap().is_valid();
            let all_valid = pair
                .iter()
                .all(|f| is_valid(f, phi).unwrap().is_valid());
            assert_eq!(sum_valid, all_valid, "{phi} on sum of {pair:?}");
        }
    }
}

// ---------------------------------------------------------------------------
// frame-classes: independently coded predicate oracle
// ---------------------------------------------------------------------------

fn naive_in_class(class: ClassId, scope: ClassScope, f: &Frame) -> bool {
    let n = f.n();
    let edge = |a: usize, b: usize| f.has_edge(a, b);
    let serial = (0..n).all(|a| (0..n).any(|b| edge(a, b)));
    let reflexive = (0..n).all(|a| edge(a, a));
    let irreflexive = (0..n).all(|a| !edge(a, a));
    let symmetric =
        (0..n).all(|a| (0..n).all(|b| !edge(a, b) || edge(b, a)));
    let transitive = (0..n).all(|a| {
        (0..n).all(|b| {
            (0..n).all(|c| !(edge(a, b) && edge(b, c)) || edge(a, c))
        })
    });
    let euclidean = (0..n).all(|a| {
        (0..n).all(|b| {
            (0..n).all(|c| !(edge(a, b) && edge(a, c)) || edge(b, c))
        })
    });
    let non_branching = (0..n).all(|a| {
        (0..n).all(|b| {
            (0..n).all(|c| {
                !(edge(a, b) && edge(a, c)) || edge(b, c) || edge(c, b) || b == c
            })
        })
    });
    // reachability by at least one step, naive cubic closure
    let mut reach = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            reach[a][b] = edge(a, b);
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                reach[a][b] = reach[a][b] || (reach[a][k] && reach[k][b]);
            }
        }
    }
    let noetherian =
        (0..n).all(|a| (0..n).all(|b| a == b || !(reach[a][b] && reach[b][a])));

    let conditions = match class {
        ClassId::Kd5 => serial && euclidean,
        ClassId::Kd45 => serial && transitive && euclidean,
        ClassId::K5b => symmetric && euclidean,
        ClassId::S5 => reflexive && euclidean,
        ClassId::Gl3 => transitive && irreflexive && non_branching && noetherian,
        ClassId::Grz3 => transitive && reflexive && non_branching && noetherian,
    };
    if !conditions {
        return false;
    }
    match scope {
        ClassScope::All => true,
        ClassScope::Connected => {
            let mut undirected = reach;
            for a in 0..n {
                undirected[a][a] = true;
                for b in 0..n {
                    if edge(a, b) || edge(b, a) {
                        undirected[a][b] = true;
                        undirected[b][a] = true;
                    }
                }
            }
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        undirected[a][b] =
                            undirected[a][b] || (undirected[a][k] && undirected[k][b]);
                    }
                }
            }
            (0..n).all(|a| undirected[0][a])
        }
    }
}

#[test]
fn class_predicates_match_naive_oracle() {
    for n in 1..=4usize {
        for_each_frame(n, |f| {
            for class in ALL_CLASSES {
                for scope in [ClassScope::All, ClassScope::Connected] {
                    assert_eq!(
                        in_class(class, scope, f),
                        naive_in_class(class, scope, f),
                        "{class}/{scope} on {f:?}"
                    );
                }
            }
        })
        .unwrap();
    }
}

/// Every axiom fixture is valid on every class member with up to 4 states.
#[test]
fn axiom_fixtures_valid_on_enumerated_members() {
    for class in ALL_CLASSES {
        let axioms: Vec<Formula> = fixtures(class)
            .into_iter()
            .filter(|f| matches!(f.kind, FixtureKind::Axiom))
            .map(|f| f.formula)
            .collect();
        for n in 1..=4usize {
            for_each_frame(n, |f| {
                if !in_class(class, ClassScope::All, f) {
                    return;
                }
                for phi in &axioms {
                    assert!(
                        is_valid(f, phi).unwrap().is_valid(),
                        "axiom {phi} of {class} fails on {f:?}"
                    );
                }
            })
            .unwrap();
        }
    }
}

#[test]
fn connected_scope_is_conjunction_with_connectivity() {
    for n in 1..=3usize {
        for_each_frame(n, |f| {
            for class in ALL_CLASSES {
                let lhs = in_class(class, ClassScope::Connected, f);
                let rhs = in_class(class, ClassScope::All, f)
                    && f.connected_components().num_blocks() == 1;
                assert_eq!(lhs, rhs);
            }
        })
        .unwrap();
    }
}

// ---------------------------------------------------------------------------
// modal-lang: checker agreement and isomorphism invariance
// ---------------------------------------------------------------------------

fn random_formula(rng: &mut RngStream, depth: usize, vars: u32) -> Formula {
    let choice = if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..6) };
    match choice {
        0 => Formula::var(rng.gen_range(0..vars)),
        1 => Formula::bottom(),
        2 => Formula::implies(
            random_formula(rng, depth - 1, vars),
            random_formula(rng, depth - 1, vars),
        ),
        3 => Formula::boxed(random_formula(rng, depth - 1, vars)),
        4 => Formula::diamond(random_formula(rng, depth - 1, vars)),
        _ => Formula::and(
            random_formula(rng, depth - 1, vars),
            random_formula(rng, depth - 1, vars),
        ),
    }
}

fn random_frame(rng: &mut RngStream, n: usize) -> Frame {
    let mask: u64 = rng.gen_range(0..1u64 << (n * n));
    let mut edges = Vec::new();
    for c in 0..n * n {
        if mask >> c & 1 == 1 {
            edges.push((c / n, c % n));
        }
    }
    Frame::from_edges(n, &edges)
}

/// The fast valuation-enumeration checker agrees with a naive per-state,
/// all-valuations evaluation on 1000 random (frame, formula) pairs.
#[test]
fn validity_checker_agrees_with_naive_enumeration() {
    fn naive_holds(f: &Frame, sets: &[u64], phi: &Formula, a: usize) -> bool {
        match phi {
            Formula::Var(v) => sets[*v as usize] >> a & 1 == 1,
            Formula::Bottom => false,
            Formula::Implies(x, y) => {
                !naive_holds(f, sets, x, a) || naive_holds(f, sets, y, a)
            }
            Formula::Box(g) => {
                (0..f.n()).filter(|&b| f.has_edge(a, b)).all(|b| naive_holds(f, sets, g, b))
            }
        }
    }

    let mut rng = RngStream::new(97);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=4usize);
        let f = random_frame(&mut rng, n);
        let phi = random_formula(&mut rng, 3, 2);

        let naive_valid = (0..1u64 << (2 * n)).all(|assignment| {
            let sets = [assignment & ((1 << n) - 1), assignment >> n & ((1 << n) - 1)];
            (0..n).all(|a| naive_holds(&f, &sets, &phi, a))
        });
        let fast = is_valid(&f, &phi).unwrap().is_valid();
        assert_eq!(fast, naive_valid, "{phi} on {f:?}");
    }
}

#[test]
fn validity_invariant_under_isomorphism() {
    let mut rng = RngStream::new(31);
    for _ in 0..200 {
        let n = rng.gen_range(2..=5usize);
        let f = random_frame(&mut rng, n);
        let phi = random_formula(&mut rng, 3, 2);

        // conjugate by a random permutation
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let edges: Vec<(usize, usize)> =
            f.edges().into_iter().map(|(a, b)| (perm[a], perm[b])).collect();
        let g = Frame::from_edges(n, &edges);

        assert!(f.is_isomorphic(&g));
        assert_eq!(
            is_valid(&f, &phi).unwrap().is_valid(),
            is_valid(&g, &phi).unwrap().is_valid(),
            "{phi} across {f:?} ~ {g:?}"
        );
    }
}

// ---------------------------------------------------------------------------
// samplers: uniformity across every class and scope at n <= 3
// ---------------------------------------------------------------------------

#[test]
fn structured_samplers_uniform_over_census_all_scopes() {
    let trials = 20_000u64;
    for class in ALL_CLASSES {
        for scope in [ClassScope::All, ClassScope::Connected] {
            for n in 1..=3usize {
                let support = census_frames(class, scope, n).unwrap();
                let index: std::collections::HashMap<&Frame, usize> =
                    support.iter().enumerate().map(|(i, f)| (f, i)).collect();
                let mut counts = vec![0u64; support.len()];
                let root = RngStream::new(1000 + n as u64);
                match scope {
                    ClassScope::Connected => {
                        let sampler = ConnectedSampler::new(class, n);
                        for i in 0..trials {
                            let f = sampler.sample(&mut root.substream(i));
                            counts[index[&f]] += 1;
                        }
                    }
                    ClassScope::All => {
                        let sampler = AllSampler::new(class, n);
                        for i in 0..trials {
                            let f = sampler.sample(&mut root.substream(i));
                            counts[index[&f]] += 1;
                        }
                    }
                }
                let outcome = chi_square_uniform(&counts, 1e-3);
                assert!(
                    outcome.pass,
                    "{class}/{scope} n={n}: chi2 {} > {} over {counts:?}",
                    outcome.statistic, outcome.critical
                );
            }
        }
    }
}

#[test]
fn rejection_oracle_matches_structured_support() {
    // n = 1, K5B: both singletons near one half
    let mut rng = RngStream::new(5);
    let mut reflexive = 0u64;
    for _ in 0..2000 {
        let f = sample_rejection(ClassId::K5b, ClassScope::All, 1, &mut rng).unwrap();
        if f.has_edge(0, 0) {
            reflexive += 1;
        }
    }
    assert!((800..1200).contains(&reflexive));

    // n = 3, S5 all: 5 equivalence relations uniformly
    let support = census_frames(ClassId::S5, ClassScope::All, 3).unwrap();
    assert_eq!(support.len(), 5);
    let index: std::collections::HashMap<&Frame, usize> =
        support.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let mut counts = vec![0u64; 5];
    for _ in 0..20_000 {
        let f = sample_rejection(ClassId::S5, ClassScope::All, 3, &mut rng).unwrap();
        counts[index[&f]] += 1;
    }
    assert!(chi_square_uniform(&counts, 1e-3).pass, "{counts:?}");
}

// ---------------------------------------------------------------------------
// morphisms: completeness and validity transfer
// ---------------------------------------------------------------------------

/// The backtracking search agrees with exhaustive enumeration of all maps
/// on instances with |F| <= 4 and |G| <= 3.
#[test]
fn p_morphism_search_is_complete_on_small_instances() {
    let mut rng = RngStream::new(77);
    for _ in 0..300 {
        let fn_ = rng.gen_range(1..=4usize);
        let gn = rng.gen_range(1..=3usize);
        let f = random_frame(&mut rng, fn_);
        let g = random_frame(&mut rng, gn);

        let found = find_p_morphism(&f, &g).unwrap();
        let mut exists = false;
        let total = gn.pow(fn_ as u32);
        for code in 0..total {
            let mut map = Vec::with_capacity(fn_);
            let mut c = code;
            for _ in 0..fn_ {
                map.push(c % gn);
                c /= gn;
            }
            if is_p_morphism(&f, &g, &map) {
                exists = true;
                break;
            }
        }
        assert_eq!(found.is_some(), exists, "{f:?} -> {g:?}");
        if let Some(map) = found {
            assert!(is_p_morphism(&f, &g, &map));
        }
    }
}

/// p-morphisms transfer refutations backward: if G refutes a fixture
/// formula, so does F.
#[test]
fn p_morphisms_transfer_refutation() {
    let formulas: Vec<Formula> = ALL_CLASSES
        .iter()
        .flat_map(|&c| fixtures(c))
        .map(|fixture| fixture.formula)
        .take(8)
        .collect();
    let mut rng = RngStream::new(55);
    let mut transfers = 0;
    for _ in 0..400 {
        let fn_ = rng.gen_range(1..=4usize);
        let f = random_frame(&mut rng, fn_);
        let gn = rng.gen_range(1..=3usize);
        let g = random_frame(&mut rng, gn);
        if let Some(map) = find_p_morphism(&f, &g).unwrap() {
            assert!(is_p_morphism(&f, &g, &map));
            for phi in &formulas {
                if let Validity::Refuted { .. } = is_valid(&g, phi).unwrap() {
                    assert!(
                        matches!(is_valid(&f, phi).unwrap(), Validity::Refuted { .. }),
                        "{phi}: target refutes but source validates"
                    );
                    transfers += 1;
                }
            }
        }
    }
    assert!(transfers > 50, "exercised only {transfers} transfers");
}

// ---------------------------------------------------------------------------
// zeroone-lab
// ---------------------------------------------------------------------------

/// Estimated validity is statistically consistent with the exact census
/// ratio at n <= 3.
#[test]
fn estimates_consistent_with_exact_ratios() {
    let phi = kripkelab::parse("box p0 -> p0").unwrap();
    for n in 2..=3usize {
        let (valid, total) =
            kripkelab::lab::exact_validity_ratio(ClassId::Kd5, ClassScope::Connected, &phi, n)
                .unwrap();
        let exact = valid as f64 / total as f64;
        let record =
            estimate_validity(ClassId::Kd5, ClassScope::Connected, &phi, n, 20_000, 99).unwrap();
        assert!(
            record.ci_low <= exact && exact <= record.ci_high,
            "n={n}: exact {exact} outside CI [{}, {}]",
            record.ci_low,
            record.ci_high
        );
    }
}

/// Frequency of a large component is nondecreasing in n for KD5 scope=all.
#[test]
fn large_component_trend_nondecreasing() {
    let rows = stat_sweep(
        ClassId::Kd5,
        ClassScope::All,
        StatisticName::MaxComponentSize,
        &[4, 6, 8, 10],
        4000,
        2024,
        Some(3.0),
    )
    .unwrap();
    let freqs: Vec<f64> = rows.iter().map(|r| r.freq_exceed.unwrap()).collect();
    for pair in freqs.windows(2) {
        assert!(pair[1] >= pair[0], "trend broke: {freqs:?}");
    }
}

/// K5B frequency of "no irreflexive singleton" at n = 4 equals B_4/B_5
/// exactly over the census.
#[test]
fn k5b_singleton_frequency_exact() {
    let bells = bell(5);
    let mut without = 0u64;
    let total = brute_census(4, |f| {
        if !in_class(ClassId::K5b, ClassScope::All, f) {
            return false;
        }
        if frame_statistic(f, StatisticName::IrreflexiveSingletonCount).unwrap() == 0.0 {
            without += 1;
        }
        true
    })
    .unwrap();
    assert_eq!(BigUint::from(total), bells[5]);
    assert_eq!(BigUint::from(without), bells[4]);
}

/// KD5 connected census sizes used across the acceptance suite.
#[test]
fn kd5_census_spot() {
    for (n, expect) in [(1u64, 1u64), (2, 3), (3, 13), (4, 87)] {
        let got = brute_census(n as usize, |f| {
            in_class(ClassId::Kd5, ClassScope::Connected, f)
        })
        .unwrap();
        assert_eq!(got, expect);
        assert_eq!(
            count_connected(ClassId::Kd5, n as usize),
            BigUint::from(expect)
        );
    }
}
