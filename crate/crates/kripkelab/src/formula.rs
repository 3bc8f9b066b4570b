//! Modal formula syntax trees over the primitives `Var`, `Bottom`,
//! `Implies` and `Box`. Derived connectives (negation, conjunction,
//! disjunction, top, diamond) expand to primitives at construction time, so
//! two formulas are equal exactly when their canonical trees are.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Var(u32),
    Bottom,
    Implies(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
}

impl Formula {
    pub fn var(index: u32) -> Formula {
        Formula::Var(index)
    }

    pub fn bottom() -> Formula {
        Formula::Bottom
    }

    pub fn implies(antecedent: Formula, consequent: Formula) -> Formula {
        Formula::Implies(antecedent.into(), consequent.into())
    }

    pub fn boxed(inner: Formula) -> Formula {
        Formula::Box(inner.into())
    }

    // Derived connectives, expanded to primitives.

    pub fn not(inner: Formula) -> Formula {
        Formula::implies(inner, Formula::Bottom)
    }

    pub fn top() -> Formula {
        Formula::not(Formula::Bottom)
    }

    /// `a ∧ b ≡ ¬(a → ¬b)`
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::implies(a, Formula::not(b)))
    }

    /// `a ∨ b ≡ ¬a → b`
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::implies(Formula::not(a), b)
    }

    /// `◇a ≡ ¬□¬a`
    pub fn diamond(inner: Formula) -> Formula {
        Formula::not(Formula::boxed(Formula::not(inner)))
    }

    /// The set of variable indices occurring in the formula.
    pub fn variables(&self) -> BTreeSet<u32> {
        let mut vars = BTreeSet::new();
        self.collect_variables(&mut vars);
        vars
    }

    fn collect_variables(&self, vars: &mut BTreeSet<u32>) {
        match self {
            Formula::Var(v) => {
                vars.insert(*v);
            }
            Formula::Bottom => {}
            Formula::Implies(a, b) => {
                a.collect_variables(vars);
                b.collect_variables(vars);
            }
            Formula::Box(g) => g.collect_variables(vars),
        }
    }

    /// Uniform replacement of `Var(v)` by `replacement`.
    pub fn substitute(&self, v: u32, replacement: &Formula) -> Formula {
        match self {
            Formula::Var(w) if *w == v => replacement.clone(),
            Formula::Var(w) => Formula::Var(*w),
            Formula::Bottom => Formula::Bottom,
            Formula::Implies(a, b) => {
                Formula::implies(a.substitute(v, replacement), b.substitute(v, replacement))
            }
            Formula::Box(g) => Formula::boxed(g.substitute(v, replacement)),
        }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

// Rendering recognizes the canonical expansions of the derived connectives
// so output stays readable; the sugar re-expands to the identical tree, so
// `parse(render(f)) == f` regardless of which branch fires.
enum Shape<'a> {
    Top,
    And(&'a Formula, &'a Formula),
    Diamond(&'a Formula),
    Not(&'a Formula),
    Or(&'a Formula, &'a Formula),
    Implies(&'a Formula, &'a Formula),
    Box(&'a Formula),
    Var(u32),
    Bottom,
}

fn shape(f: &Formula) -> Shape<'_> {
    match f {
        Formula::Var(v) => Shape::Var(*v),
        Formula::Bottom => Shape::Bottom,
        Formula::Box(g) => Shape::Box(g),
        Formula::Implies(a, b) => {
            if let Formula::Bottom = **b {
                match &**a {
                    Formula::Bottom => Shape::Top,
                    // ¬(x → ¬y) is a conjunction
                    Formula::Implies(x, rest) => {
                        if let Formula::Implies(y, bot) = &**rest {
                            if matches!(**bot, Formula::Bottom) {
                                return Shape::And(x, y);
                            }
                        }
                        Shape::Not(a)
                    }
                    // ¬□¬g is a diamond
                    Formula::Box(inner) => {
                        if let Formula::Implies(g, bot) = &**inner {
                            if matches!(**bot, Formula::Bottom) {
                                return Shape::Diamond(g);
                            }
                        }
                        Shape::Not(a)
                    }
                    _ => Shape::Not(a),
                }
            } else if let Formula::Implies(x, bot) = &**a {
                if matches!(**bot, Formula::Bottom) {
                    Shape::Or(x, b)
                } else {
                    Shape::Implies(a, b)
                }
            } else {
                Shape::Implies(a, b)
            }
        }
    }
}

// Precedence levels, tightest first: atoms, unary, &, |, ->.
const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(s: &Shape<'_>) -> u8 {
    match s {
        Shape::Var(_) | Shape::Bottom | Shape::Top => PREC_ATOM,
        Shape::Not(_) | Shape::Box(_) | Shape::Diamond(_) => PREC_UNARY,
        Shape::And(..) => PREC_AND,
        Shape::Or(..) => PREC_OR,
        Shape::Implies(..) => PREC_IMPLIES,
    }
}

fn write_at(f: &Formula, min_prec: u8, out: &mut String) {
    let s = shape(f);
    let prec = precedence(&s);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match s {
        Shape::Var(v) => {
            out.push('p');
            out.push_str(&v.to_string());
        }
        Shape::Bottom => out.push_str("false"),
        Shape::Top => out.push_str("true"),
        Shape::Not(g) => {
            out.push('~');
            write_at(g, PREC_UNARY, out);
        }
        Shape::Box(g) => {
            out.push_str("box ");
            write_at(g, PREC_UNARY, out);
        }
        Shape::Diamond(g) => {
            out.push_str("dia ");
            write_at(g, PREC_UNARY, out);
        }
        Shape::And(a, b) => {
            write_at(a, PREC_AND + 1, out);
            out.push_str(" & ");
            write_at(b, PREC_AND, out);
        }
        Shape::Or(a, b) => {
            write_at(a, PREC_OR + 1, out);
            out.push_str(" | ");
            write_at(b, PREC_OR, out);
        }
        Shape::Implies(a, b) => {
            write_at(a, PREC_IMPLIES + 1, out);
            out.push_str(" -> ");
            write_at(b, PREC_IMPLIES, out);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_at(self, 0, &mut out);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_forms_expand() {
        assert_eq!(Formula::top(), Formula::implies(Formula::Bottom, Formula::Bottom));
        assert_eq!(
            Formula::diamond(Formula::var(0)),
            Formula::not(Formula::boxed(Formula::not(Formula::var(0))))
        );
    }

    #[test]
    fn render_examples() {
        let t = Formula::implies(Formula::boxed(Formula::var(0)), Formula::var(0));
        assert_eq!(t.render(), "box p0 -> p0");

        let k_body = Formula::boxed(Formula::implies(Formula::var(0), Formula::var(1)));
        assert_eq!(k_body.render(), "box (p0 -> p1)");

        assert_eq!(Formula::Bottom.render(), "false");
        assert_eq!(Formula::top().render(), "true");
        assert_eq!(Formula::not(Formula::var(3)).render(), "~p3");
        assert_eq!(
            Formula::and(Formula::var(0), Formula::or(Formula::var(1), Formula::var(2))).render(),
            "p0 & (p1 | p2)"
        );
        assert_eq!(Formula::diamond(Formula::top()).render(), "dia true");
    }

    #[test]
    fn substitute_examples() {
        let t = Formula::implies(Formula::boxed(Formula::var(0)), Formula::var(0));
        let dia_p1 = Formula::diamond(Formula::var(1));
        let res = t.substitute(0, &dia_p1);
        assert_eq!(
            res,
            Formula::implies(Formula::boxed(dia_p1.clone()), dia_p1.clone())
        );

        // absent variable: identity
        assert_eq!(t.substitute(7, &Formula::Bottom), t);

        assert_eq!(Formula::var(0).substitute(0, &Formula::Bottom), Formula::Bottom);
    }

    #[test]
    fn variables_collected() {
        let f = Formula::and(Formula::var(2), Formula::boxed(Formula::var(0)));
        assert_eq!(f.variables().into_iter().collect::<Vec<_>>(), vec![0, 2]);
    }
}
