//! The six frame classes as decidable frame-condition predicates, plus the
//! axiom and refutation fixtures used by tests and experiments.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::Formula;
use crate::frame::{Frame, PropertyName};
use crate::parser::parse;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ClassId {
    Kd5,
    Kd45,
    K5b,
    S5,
    Gl3,
    Grz3,
}

pub const ALL_CLASSES: [ClassId; 6] = [
    ClassId::Kd5,
    ClassId::Kd45,
    ClassId::K5b,
    ClassId::S5,
    ClassId::Gl3,
    ClassId::Grz3,
];

impl ClassId {
    /// The defining frame conditions, in the order they are checked.
    pub fn properties(self) -> &'static [PropertyName] {
        use PropertyName::*;
        match self {
            ClassId::Kd5 => &[Serial, Euclidean],
            ClassId::Kd45 => &[Serial, Transitive, Euclidean],
            ClassId::K5b => &[Symmetric, Euclidean],
            ClassId::S5 => &[Reflexive, Euclidean],
            ClassId::Gl3 => &[Irreflexive, Transitive, NonBranching, Noetherian],
            ClassId::Grz3 => &[Reflexive, Transitive, NonBranching, Noetherian],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassId::Kd5 => "kd5",
            ClassId::Kd45 => "kd45",
            ClassId::K5b => "k5b",
            ClassId::S5 => "s5",
            ClassId::Gl3 => "gl3",
            ClassId::Grz3 => "grz3",
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassId {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, UnknownName> {
        match s {
            "kd5" => Ok(ClassId::Kd5),
            "kd45" => Ok(ClassId::Kd45),
            "k5b" => Ok(ClassId::K5b),
            "s5" => Ok(ClassId::S5),
            "gl3" => Ok(ClassId::Gl3),
            "grz3" => Ok(ClassId::Grz3),
            _ => Err(UnknownName { kind: "class", name: s.to_string() }),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ClassScope {
    All,
    Connected,
}

impl fmt::Display for ClassScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassScope::All => "all",
            ClassScope::Connected => "connected",
        })
    }
}

impl FromStr for ClassScope {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, UnknownName> {
        match s {
            "all" => Ok(ClassScope::All),
            "connected" => Ok(ClassScope::Connected),
            _ => Err(UnknownName { kind: "scope", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} name `{name}`")]
pub struct UnknownName {
    pub kind: &'static str,
    pub name: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassError {
    #[error("operation is defined for gl3 and grz3 only, got {0}")]
    NotATreeClass(ClassId),
    #[error("frame is not a connected {0} frame")]
    NotInClass(ClassId),
    #[error("chain length must be at least 1")]
    EmptyChain,
}

/// Conjunction of the class's frame conditions, plus connectivity when the
/// scope is `Connected`.
pub fn in_class(class: ClassId, scope: ClassScope, frame: &Frame) -> bool {
    frame_conditions_hold(class, frame)
        && (scope == ClassScope::All || frame.is_connected())
}

fn frame_conditions_hold(class: ClassId, frame: &Frame) -> bool {
    class.properties().iter().all(|&p| frame.check_property(p))
}

// ---------------------------------------------------------------------------
// Inverse-tree structure and reduction height
// ---------------------------------------------------------------------------

/// Reads an inverse tree off a relation: every state has exactly one
/// out-edge (its parent) except a single root with none, and every state
/// reaches the root. Returns `(root, parent, root-first order)`.
fn inverse_tree_parents(f: &Frame) -> Option<(usize, Vec<Option<usize>>, Vec<usize>)> {
    let n = f.n();
    let mut root = None;
    let mut parent = vec![None; n];
    for a in 0..n {
        match f.out_degree(a) {
            0 => {
                if root.replace(a).is_some() {
                    return None;
                }
            }
            1 => parent[a] = f.out_iter(a).next(),
            _ => return None,
        }
    }
    let root = root?;
    let mut children = vec![Vec::new(); n];
    for a in 0..n {
        if let Some(p) = parent[a] {
            if p == a {
                return None;
            }
            children[p].push(a);
        }
    }
    let mut order = Vec::with_capacity(n);
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let a = order[head];
        head += 1;
        order.extend_from_slice(&children[a]);
    }
    if order.len() == n {
        Some((root, parent, order))
    } else {
        None
    }
}

/// Height of the inverse tree underlying a connected GL.3 or Grz.3 frame.
///
/// Membership is checked structurally: the transitive reduction must be an
/// inverse tree whose transitive (GL.3) or reflexive-transitive (Grz.3)
/// closure reproduces the frame exactly. This is equivalent to the frame
/// conditions plus connectivity and much cheaper on large frames.
pub fn reduction_height(frame: &Frame, class: ClassId) -> Result<usize, ClassError> {
    let reflexive = match class {
        ClassId::Gl3 => false,
        ClassId::Grz3 => true,
        other => return Err(ClassError::NotATreeClass(other)),
    };
    tree_structure(frame, reflexive)
        .map(|(_, depth)| depth.into_iter().max().unwrap_or(0))
        .ok_or(ClassError::NotInClass(class))
}

/// Membership test for `Con Fr GL.3` / `Con Fr Grz.3` via the tree
/// structure; when the frame belongs, also returns the root and per-state
/// depths.
pub(crate) fn tree_structure(frame: &Frame, reflexive: bool) -> Option<(usize, Vec<usize>)> {
    let n = frame.n();
    for a in 0..n {
        if frame.has_edge(a, a) != reflexive {
            return None;
        }
    }
    let reduction = frame.strict_kernel_reduction();
    let (root, parent, order) = inverse_tree_parents(&reduction)?;
    // The closure of the parent relation must reproduce the frame: in
    // root-first order, row(a) = row(parent) ∪ {parent} (∪ {a} when
    // reflexive).
    let mut expected = Frame::empty(n);
    let mut depth = vec![0usize; n];
    for &a in &order {
        match parent[a] {
            None => {
                if reflexive {
                    expected.set_edge(a, a);
                }
            }
            Some(p) => {
                depth[a] = depth[p] + 1;
                let parent_row = expected.row(p).to_vec();
                expected.or_row_from(a, &parent_row);
                expected.set_edge(a, p);
                if reflexive {
                    expected.set_edge(a, a);
                }
            }
        }
    }
    if &expected == frame {
        Some((root, depth))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FixtureKind {
    /// Valid on every frame of the class.
    Axiom,
    /// Refuted on the witness frame, which belongs to the class.
    Refuted { witness: Frame },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fixture {
    pub name: String,
    pub formula: Formula,
    pub kind: FixtureKind,
}

impl Fixture {
    fn axiom(name: &str, text: &str) -> Fixture {
        Fixture {
            name: name.to_string(),
            formula: parse(text).expect("fixture formula must parse"),
            kind: FixtureKind::Axiom,
        }
    }

    fn refuted(name: &str, text: &str, witness: Frame) -> Fixture {
        Fixture {
            name: name.to_string(),
            formula: parse(text).expect("fixture formula must parse"),
            kind: FixtureKind::Refuted { witness },
        }
    }
}

const AXIOM_D: &str = "box p0 -> dia p0";
const AXIOM_4: &str = "box p0 -> box box p0";
const AXIOM_5: &str = "dia p0 -> box dia p0";
const AXIOM_B: &str = "p0 -> box dia p0";
const AXIOM_T: &str = "box p0 -> p0";
const AXIOM_GL: &str = "box (box p0 -> p0) -> box p0";
const AXIOM_GRZ: &str = "box (box (p0 -> box p0) -> p0) -> p0";
const AXIOM_DOT3: &str =
    "dia p0 & dia p1 -> dia (p0 & p1) | dia (p0 & dia p1) | dia (p1 & dia p0)";

/// Canonical axiom fixtures of the class together with at least one
/// formula refuted inside the class, with a witness frame.
pub fn fixtures(class: ClassId) -> Vec<Fixture> {
    // T fails on the two-state frame whose only successor is the core state.
    let t_witness = Frame::from_edges(2, &[(0, 0), (1, 0)]);
    match class {
        ClassId::Kd5 => vec![
            Fixture::axiom("D", AXIOM_D),
            Fixture::axiom("5", AXIOM_5),
            Fixture::refuted("T-refuted", AXIOM_T, t_witness),
        ],
        ClassId::Kd45 => vec![
            Fixture::axiom("D", AXIOM_D),
            Fixture::axiom("4", AXIOM_4),
            Fixture::axiom("5", AXIOM_5),
            Fixture::refuted("T-refuted", AXIOM_T, t_witness),
        ],
        ClassId::K5b => vec![
            Fixture::axiom("5", AXIOM_5),
            Fixture::axiom("B", AXIOM_B),
            Fixture::refuted("seriality-refuted", "dia true", Frame::empty(1)),
        ],
        ClassId::S5 => vec![
            Fixture::axiom("T", AXIOM_T),
            Fixture::axiom("B", AXIOM_B),
            Fixture::axiom("4", AXIOM_4),
            Fixture::axiom("5", AXIOM_5),
            Fixture::refuted("GL-refuted", AXIOM_GL, Frame::cluster(1)),
        ],
        ClassId::Gl3 => vec![
            Fixture::axiom("GL", AXIOM_GL),
            Fixture::axiom("4", AXIOM_4),
            Fixture::axiom(".3", AXIOM_DOT3),
            refuted_on_chain(ClassId::Gl3, 3).expect("r = 3 chain fixture"),
        ],
        ClassId::Grz3 => vec![
            Fixture::axiom("Grz", AXIOM_GRZ),
            Fixture::axiom("T", AXIOM_T),
            Fixture::axiom("4", AXIOM_4),
            Fixture::axiom(".3", AXIOM_DOT3),
            refuted_on_chain(ClassId::Grz3, 3).expect("r = 3 chain fixture"),
        ],
    }
}

/// A formula refuted on the r-state chain of the class (irreflexive for
/// GL.3, reflexive for Grz.3), with the chain as witness.
///
/// GL.3 uses the bounded-depth formula `box^(r-1) false`; Grz.3 uses the
/// standard bounded-depth schema `bd`, since no iterated box reaches bottom
/// on a reflexive frame.
pub fn refuted_on_chain(class: ClassId, r: usize) -> Result<Fixture, ClassError> {
    if r == 0 {
        return Err(ClassError::EmptyChain);
    }
    match class {
        ClassId::Gl3 => {
            let mut formula = Formula::bottom();
            for _ in 0..r - 1 {
                formula = Formula::boxed(formula);
            }
            Ok(Fixture {
                name: format!("depth-{}-refuted", r - 1),
                formula,
                kind: FixtureKind::Refuted { witness: Frame::strict_chain(r) },
            })
        }
        ClassId::Grz3 => {
            let formula = if r == 1 {
                Formula::boxed(Formula::bottom())
            } else {
                bounded_depth(r - 1)
            };
            Ok(Fixture {
                name: format!("depth-{}-refuted", r - 1),
                formula,
                kind: FixtureKind::Refuted { witness: Frame::reflexive_chain(r) },
            })
        }
        other => Err(ClassError::NotATreeClass(other)),
    }
}

/// `bd_1 = dia box p0 -> p0`;
/// `bd_(k+1) = dia (box p_k & ~bd_k) -> p_k`.
fn bounded_depth(k: usize) -> Formula {
    assert!(k >= 1);
    let mut bd = Formula::implies(
        Formula::diamond(Formula::boxed(Formula::var(0))),
        Formula::var(0),
    );
    for i in 1..k {
        let v = Formula::var(i as u32);
        bd = Formula::implies(
            Formula::diamond(Formula::and(Formula::boxed(v.clone()), Formula::not(bd))),
            v,
        );
    }
    bd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{is_valid, is_valid_with_budget, Validity};

    #[test]
    fn class_name_round_trip() {
        for c in ALL_CLASSES {
            assert_eq!(c.to_string().parse::<ClassId>().unwrap(), c);
        }
        assert!("s4".parse::<ClassId>().is_err());
        assert_eq!("connected".parse::<ClassScope>().unwrap(), ClassScope::Connected);
    }

    #[test]
    fn in_class_examples() {
        // The reflexive singleton belongs to every class except GL.3.
        let one = Frame::cluster(1);
        for c in ALL_CLASSES {
            assert_eq!(in_class(c, ClassScope::All, &one), c != ClassId::Gl3);
        }
        // Larger clusters: the four Euclidean classes only (the nontrivial
        // SCC breaks noetherianity for Grz.3).
        let cl = Frame::cluster(3);
        for c in [ClassId::Kd5, ClassId::Kd45, ClassId::K5b, ClassId::S5] {
            assert!(in_class(c, ClassScope::Connected, &cl));
        }
        assert!(!in_class(ClassId::Grz3, ClassScope::All, &cl));
        assert!(!in_class(ClassId::Gl3, ClassScope::All, &cl));

        // R = X × {0}: serial, transitive, Euclidean, not reflexive.
        let f = Frame::from_edges(2, &[(0, 0), (1, 0)]);
        assert!(in_class(ClassId::Kd5, ClassScope::All, &f));
        assert!(in_class(ClassId::Kd45, ClassScope::All, &f));
        assert!(!in_class(ClassId::S5, ClassScope::All, &f));

        // The irreflexive singleton is K5B but not KD5.
        let empty = Frame::empty(1);
        assert!(in_class(ClassId::K5b, ClassScope::All, &empty));
        assert!(!in_class(ClassId::Kd5, ClassScope::All, &empty));

        // Scope: two clusters are S5 but not connected.
        let two = Frame::disjoint_sum(&[Frame::cluster(1), Frame::cluster(2)]).unwrap();
        assert!(in_class(ClassId::S5, ClassScope::All, &two));
        assert!(!in_class(ClassId::S5, ClassScope::Connected, &two));
    }

    #[test]
    fn reduction_height_examples() {
        // 1 -> 0, 2 -> 1, transitively closed: height 2.
        let f = Frame::from_edges(3, &[(1, 0), (2, 1), (2, 0)]);
        assert_eq!(reduction_height(&f, ClassId::Gl3), Ok(2));

        assert_eq!(reduction_height(&Frame::empty(1), ClassId::Gl3), Ok(0));
        assert_eq!(reduction_height(&Frame::cluster(1), ClassId::Grz3), Ok(0));

        assert_eq!(reduction_height(&Frame::strict_chain(4), ClassId::Gl3), Ok(3));
        assert_eq!(reduction_height(&Frame::reflexive_chain(4), ClassId::Grz3), Ok(3));

        // class-membership failures are named
        assert_eq!(
            reduction_height(&Frame::cluster(2), ClassId::Gl3),
            Err(ClassError::NotInClass(ClassId::Gl3))
        );
        assert_eq!(
            reduction_height(&Frame::strict_chain(2), ClassId::Grz3),
            Err(ClassError::NotInClass(ClassId::Grz3))
        );
        assert_eq!(
            reduction_height(&Frame::cluster(2), ClassId::S5),
            Err(ClassError::NotATreeClass(ClassId::S5))
        );
    }

    #[test]
    fn tree_membership_matches_frame_conditions() {
        // Structural membership agrees with the predicate conjunction on
        // every frame with up to 3 states, both flavors.
        for n in 1..=3usize {
            let cells = n * n;
            for mask in 0u64..1 << cells {
                let mut f = Frame::empty(n);
                for c in 0..cells {
                    if mask >> c & 1 == 1 {
                        f.set_edge(c / n, c % n);
                    }
                }
                let gl = tree_structure(&f, false).is_some();
                assert_eq!(gl, in_class(ClassId::Gl3, ClassScope::Connected, &f), "{f:?}");
                let grz = tree_structure(&f, true).is_some();
                assert_eq!(grz, in_class(ClassId::Grz3, ClassScope::Connected, &f), "{f:?}");
            }
        }
    }

    #[test]
    fn height_equals_out_degree_formula() {
        // max |R_out| on GL.3 frames, max (|R_out| - 1) on Grz.3 frames.
        let gl = Frame::from_edges(3, &[(1, 0), (2, 1), (2, 0)]);
        let h = reduction_height(&gl, ClassId::Gl3).unwrap();
        let max_deg = (0..3).map(|a| gl.out_degree(a)).max().unwrap();
        assert_eq!(h, max_deg);

        let grz = Frame::reflexive_chain(4);
        let h = reduction_height(&grz, ClassId::Grz3).unwrap();
        let max_deg = (0..4).map(|a| grz.out_degree(a)).max().unwrap();
        assert_eq!(h, max_deg - 1);
    }

    #[test]
    fn fixtures_refuted_on_witnesses() {
        for c in ALL_CLASSES {
            let fixtures = fixtures(c);
            assert!(fixtures.iter().any(|f| matches!(f.kind, FixtureKind::Axiom)));
            assert!(fixtures.iter().any(|f| matches!(f.kind, FixtureKind::Refuted { .. })));
            for fixture in &fixtures {
                if let FixtureKind::Refuted { witness } = &fixture.kind {
                    assert!(
                        in_class(c, ClassScope::All, witness),
                        "{c} witness for {} not in class",
                        fixture.name
                    );
                    let verdict = is_valid(witness, &fixture.formula).unwrap();
                    assert!(
                        matches!(verdict, Validity::Refuted { .. }),
                        "{c} fixture {} not refuted on witness",
                        fixture.name
                    );
                }
            }
        }
    }

    #[test]
    fn chain_fixtures_parameterized() {
        for r in 1..=4usize {
            for class in [ClassId::Gl3, ClassId::Grz3] {
                let fixture = refuted_on_chain(class, r).unwrap();
                let FixtureKind::Refuted { witness } = &fixture.kind else {
                    panic!("chain fixture must be refuted kind");
                };
                assert!(in_class(class, ClassScope::Connected, witness));
                let verdict = is_valid_with_budget(witness, &fixture.formula, 32).unwrap();
                assert!(matches!(verdict, Validity::Refuted { .. }), "{class} r={r}");

                // ... and the same formula is valid one step shorter.
                if r >= 2 {
                    let shorter = match class {
                        ClassId::Gl3 => Frame::strict_chain(r - 1),
                        _ => Frame::reflexive_chain(r - 1),
                    };
                    let verdict = is_valid_with_budget(&shorter, &fixture.formula, 32).unwrap();
                    assert!(verdict.is_valid(), "{class} r={r} valid on shorter chain");
                }
            }
        }
        assert_eq!(refuted_on_chain(ClassId::Gl3, 0), Err(ClassError::EmptyChain));
        assert!(refuted_on_chain(ClassId::S5, 2).is_err());
    }
}
