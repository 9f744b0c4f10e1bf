//! Higher-order terms: variables, constructor constants, application,
//! abstraction, conditional and recursion.
//!
//! Variables carry globally unique identifiers; alpha-equivalence is
//! identifier-insensitive structural equality via [`Term::alpha_canonical`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::algebra::{AlgebraFamily, AlgebraicTerm, ConsRef};
use crate::ty::Type;

static NEXT_VAR: AtomicU64 = AtomicU64::new(1);

/// A variable with a display name and a globally unique identity.
/// Equality and hashing use the identity only.
#[derive(Debug, Clone)]
pub struct Var {
    pub name: Arc<str>,
    pub id: u64,
}

impl Var {
    pub fn fresh(name: &str) -> Var {
        Var {
            name: Arc::from(name),
            id: NEXT_VAR.fetch_add(1, Ordering::Relaxed),
        }
    }

    /// A fresh variable reusing this one's display name.
    pub fn renamed(&self) -> Var {
        Var {
            name: self.name.clone(),
            id: NEXT_VAR.fetch_add(1, Ordering::Relaxed),
        }
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Var {}
impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Var {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}
impl std::hash::Hash for Var {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    /// Constructor constant with an optional tier annotation (`c1_U@3`).
    Cons(ConsRef, Option<u32>),
    App(Box<Term>, Box<Term>),
    Abs(Var, Type, Box<Term>),
    /// Conditional: scrutinee and one branch per constructor.
    Cond(Box<Term>, Vec<Term>),
    /// Recursion: scrutinee and one branch per constructor.
    Rec(Box<Term>, Vec<Term>),
}

/// Classification of a term against the value grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    VariableValue,
    AbstractionValue,
    AlgebraicValue,
    NonValue,
}

impl Term {
    pub fn var(v: &Var) -> Term {
        Term::Var(v.clone())
    }

    pub fn cons(c: ConsRef) -> Term {
        Term::Cons(c, None)
    }

    pub fn cons_at(c: ConsRef, tier: u32) -> Term {
        Term::Cons(c, Some(tier))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn abs(x: Var, ty: Type, body: Term) -> Term {
        Term::Abs(x, ty, Box::new(body))
    }

    pub fn cond(scrut: Term, branches: Vec<Term>) -> Term {
        Term::Cond(Box::new(scrut), branches)
    }

    pub fn rec(scrut: Term, branches: Vec<Term>) -> Term {
        Term::Rec(Box::new(scrut), branches)
    }

    /// `|M|`: 1 for variables and constants, `|M|+1` for abstractions,
    /// `|M|+|N|` for applications, and `|M|+Σ|Mi|+n` for the two
    /// branching formers.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Cons(..) => 1,
            Term::Abs(_, _, b) => b.size() + 1,
            Term::App(f, a) => f.size() + a.size(),
            Term::Cond(s, br) | Term::Rec(s, br) => {
                s.size() + br.iter().map(|b| b.size()).sum::<usize>() + br.len()
            }
        }
    }

    /// Free variable occurrences, in left-to-right order (with repeats).
    pub fn free_var_occurrences(&self) -> Vec<Var> {
        fn go(t: &Term, bound: &mut Vec<u64>, out: &mut Vec<Var>) {
            match t {
                Term::Var(v) => {
                    if !bound.contains(&v.id) {
                        out.push(v.clone());
                    }
                }
                Term::Cons(..) => {}
                Term::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
                Term::Abs(x, _, b) => {
                    bound.push(x.id);
                    go(b, bound, out);
                    bound.pop();
                }
                Term::Cond(s, br) | Term::Rec(s, br) => {
                    go(s, bound, out);
                    for b in br {
                        go(b, bound, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Distinct free variables, ordered by identity.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut vs = self.free_var_occurrences();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn is_closed(&self) -> bool {
        self.free_var_occurrences().is_empty()
    }

    pub fn count_free(&self, v: &Var) -> usize {
        self.free_var_occurrences()
            .iter()
            .filter(|w| *w == v)
            .count()
    }

    pub fn classify_value(&self) -> ValueKind {
        match self {
            Term::Var(_) => ValueKind::VariableValue,
            Term::Abs(..) => ValueKind::AbstractionValue,
            _ if self.is_algebraic() => ValueKind::AlgebraicValue,
            _ => ValueKind::NonValue,
        }
    }

    pub fn is_value(&self) -> bool {
        self.classify_value() != ValueKind::NonValue
    }

    /// Is this generated by `T ::= c | T T`?
    pub fn is_algebraic(&self) -> bool {
        match self {
            Term::Cons(..) => true,
            Term::App(f, a) => f.is_algebraic() && a.is_algebraic(),
            _ => false,
        }
    }

    /// View an algebraic term as a first-order term. Fails when the
    /// term is not algebraic or a constructor is over-applied; an
    /// under-applied constructor also fails (no partial nodes).
    pub fn to_algebraic(&self, family: &AlgebraFamily) -> Option<AlgebraicTerm> {
        fn spine<'t>(t: &'t Term, args: &mut Vec<&'t Term>) -> Option<ConsRef> {
            match t {
                Term::Cons(c, _) => Some(*c),
                Term::App(f, a) => {
                    let c = spine(f, args)?;
                    args.push(a);
                    Some(c)
                }
                _ => None,
            }
        }
        let mut args = Vec::new();
        let c = spine(self, &mut args)?;
        if args.len() != family.arity(c) {
            return None;
        }
        let args = args
            .iter()
            .map(|a| a.to_algebraic(family))
            .collect::<Option<Vec<_>>>()?;
        Some(AlgebraicTerm::new(c, args))
    }

    /// The inverse embedding (without tier annotations).
    pub fn from_algebraic(t: &AlgebraicTerm) -> Term {
        Term::apps(
            Term::cons(t.cons),
            t.args.iter().map(Term::from_algebraic),
        )
    }

    /// Like [`Term::from_algebraic`] but annotating every constructor
    /// with the given tier.
    pub fn from_algebraic_at(t: &AlgebraicTerm, tier: u32) -> Term {
        Term::apps(
            Term::cons_at(t.cons, tier),
            t.args.iter().map(|a| Term::from_algebraic_at(a, tier)),
        )
    }

    /// Capture-avoiding substitution of `v` for free occurrences of `x`.
    pub fn substitute(&self, x: &Var, v: &Term) -> Term {
        let fv: Vec<Var> = v.free_vars();
        self.subst_inner(x, v, &fv)
    }

    fn subst_inner(&self, x: &Var, v: &Term, fv: &[Var]) -> Term {
        match self {
            Term::Var(y) => {
                if y == x {
                    v.clone()
                } else {
                    self.clone()
                }
            }
            Term::Cons(..) => self.clone(),
            Term::App(f, a) => Term::app(f.subst_inner(x, v, fv), a.subst_inner(x, v, fv)),
            Term::Abs(y, ty, b) => {
                if y == x {
                    // x is shadowed; nothing free below
                    self.clone()
                } else if fv.contains(y) {
                    // rename the binder away from v's free variables
                    let y2 = y.renamed();
                    let b2 = b.rename_var(y, &y2);
                    Term::abs(y2, ty.clone(), b2.subst_inner(x, v, fv))
                } else {
                    Term::abs(y.clone(), ty.clone(), b.subst_inner(x, v, fv))
                }
            }
            Term::Cond(s, br) => Term::cond(
                s.subst_inner(x, v, fv),
                br.iter().map(|b| b.subst_inner(x, v, fv)).collect(),
            ),
            Term::Rec(s, br) => Term::rec(
                s.subst_inner(x, v, fv),
                br.iter().map(|b| b.subst_inner(x, v, fv)).collect(),
            ),
        }
    }

    /// Replace free occurrences of variable `from` with variable `to`.
    pub fn rename_var(&self, from: &Var, to: &Var) -> Term {
        self.substitute(from, &Term::var(to))
    }

    /// Alpha-canonical form: binders renumbered in traversal order.
    /// Structural equality of canonical forms is alpha-equivalence.
    pub fn alpha_canonical(&self) -> Term {
        fn go(t: &Term, env: &BTreeMap<u64, Var>, counter: &mut u64) -> Term {
            match t {
                Term::Var(v) => match env.get(&v.id) {
                    Some(w) => Term::Var(w.clone()),
                    None => t.clone(),
                },
                Term::Cons(..) => t.clone(),
                Term::App(f, a) => Term::app(go(f, env, counter), go(a, env, counter)),
                Term::Abs(x, ty, b) => {
                    *counter += 1;
                    let x2 = Var {
                        name: Arc::from("_"),
                        id: *counter,
                    };
                    let mut env2 = env.clone();
                    env2.insert(x.id, x2.clone());
                    Term::Abs(x2, ty.clone(), Box::new(go(b, &env2, counter)))
                }
                Term::Cond(s, br) => Term::cond(
                    go(s, env, counter),
                    br.iter().map(|b| go(b, env, counter)).collect(),
                ),
                Term::Rec(s, br) => Term::rec(
                    go(s, env, counter),
                    br.iter().map(|b| go(b, env, counter)).collect(),
                ),
            }
        }
        go(self, &BTreeMap::new(), &mut 0)
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        self.alpha_canonical() == other.alpha_canonical()
    }

    pub fn display<'a>(&'a self, family: &'a AlgebraFamily) -> DisplayTerm<'a> {
        DisplayTerm { term: self, family }
    }
}

/// Pretty-printer producing the concrete syntax; `parse ∘ print` is the
/// identity up to alpha. Variables sharing a display name are
/// disambiguated with a numeric suffix chosen positionally.
pub struct DisplayTerm<'a> {
    term: &'a Term,
    family: &'a AlgebraFamily,
}

struct Printer<'a> {
    family: &'a AlgebraFamily,
    names: BTreeMap<u64, String>,
    used: BTreeMap<String, usize>,
}

impl<'a> Printer<'a> {
    fn bind(&mut self, v: &Var) -> String {
        let base: &str = &v.name;
        let n = self.used.entry(base.to_string()).or_insert(0);
        let name = if *n == 0 {
            base.to_string()
        } else {
            format!("{}{}", base, n)
        };
        *n += 1;
        self.names.insert(v.id, name.clone());
        name
    }

    fn name(&self, v: &Var) -> String {
        self.names
            .get(&v.id)
            .cloned()
            .unwrap_or_else(|| v.name.to_string())
    }

    // prec 0: lambda body / top; 1: application; 2: atom
    fn print(&mut self, t: &Term, prec: u8, out: &mut String) {
        match t {
            Term::Var(v) => out.push_str(&self.name(v)),
            Term::Cons(c, ann) => {
                out.push_str(self.family.cons_name(*c));
                if let Some(n) = ann {
                    out.push('@');
                    out.push_str(&n.to_string());
                }
            }
            Term::App(f, a) => {
                let wrap = prec > 1;
                if wrap {
                    out.push('(');
                }
                self.print(f, 1, out);
                out.push(' ');
                self.print(a, 2, out);
                if wrap {
                    out.push(')');
                }
            }
            Term::Abs(x, ty, b) => {
                let wrap = prec > 0;
                if wrap {
                    out.push('(');
                }
                let name = self.bind(x);
                out.push('\\');
                out.push_str(&name);
                out.push(':');
                out.push_str(&ty.display(self.family).to_string());
                out.push_str(". ");
                self.print(b, 0, out);
                if wrap {
                    out.push(')');
                }
            }
            Term::Cond(s, br) | Term::Rec(s, br) => {
                let rec = matches!(t, Term::Rec(..));
                let wrap = prec > 1;
                if wrap {
                    out.push('(');
                }
                self.print(s, 2, out);
                out.push_str(if rec { " << " } else { " {{ " });
                for (i, b) in br.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.print(b, 0, out);
                }
                out.push_str(if rec { " >>" } else { " }}" });
                if wrap {
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for DisplayTerm<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            family: self.family,
            names: BTreeMap::new(),
            used: BTreeMap::new(),
        };
        let mut s = String::new();
        p.print(self.term, 0, &mut s);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{encode_nat, C1_U, C2_U};
    use crate::ty::Type;
    use crate::algebra::ALG_U;

    fn u(n: u32) -> Type {
        Type::Base(ALG_U, n)
    }

    #[test]
    fn sizes_match_definition() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let z = Var::fresh("z");
        assert_eq!(Term::var(&x).size(), 1);
        assert_eq!(Term::abs(x.clone(), u(0), Term::var(&x)).size(), 2);
        // |x<<y,z>>| = 1+1+1+2
        let t = Term::rec(Term::var(&x), vec![Term::var(&y), Term::var(&z)]);
        assert_eq!(t.size(), 5);
    }

    #[test]
    fn value_classification() {
        let x = Var::fresh("x");
        let id = Term::abs(x.clone(), u(0), Term::var(&x));
        assert_eq!(id.classify_value(), ValueKind::AbstractionValue);
        let t = Term::app(Term::cons(C1_U), Term::cons(C2_U));
        assert_eq!(t.classify_value(), ValueKind::AlgebraicValue);
        let redex = Term::app(id, Term::cons(C2_U));
        assert_eq!(redex.classify_value(), ValueKind::NonValue);
        // every first-order term embeds as an algebraic value
        for n in 0..5 {
            let emb = Term::from_algebraic(&encode_nat(n));
            assert_eq!(emb.classify_value(), ValueKind::AlgebraicValue);
        }
    }

    #[test]
    fn substitution_single_occurrence() {
        let x = Var::fresh("x");
        let one = Term::from_algebraic(&encode_nat(1));
        assert_eq!(Term::var(&x).substitute(&x, &one), one);
    }

    #[test]
    fn substitution_avoids_capture() {
        // substitute(\y.x, x, y) must rename the binder
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let t = Term::abs(y.clone(), u(0), Term::var(&x));
        let r = t.substitute(&x, &Term::var(&y));
        match r {
            Term::Abs(y2, _, body) => {
                assert_ne!(y2, y);
                assert_eq!(*body, Term::var(&y));
            }
            _ => panic!("expected abstraction"),
        }
    }

    #[test]
    fn substitution_homomorphic_on_recursion() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let z = Var::fresh("z");
        let w = Var::fresh("w");
        let t = Term::rec(Term::var(&x), vec![Term::var(&y), Term::var(&z)]);
        let lam = Term::abs(w.clone(), u(0), Term::var(&w));
        let r = t.substitute(&y, &lam);
        assert_eq!(
            r,
            Term::rec(Term::var(&x), vec![lam, Term::var(&z)])
        );
    }

    #[test]
    fn substitution_preserves_other_free_vars() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let z = Var::fresh("z");
        let t = Term::app(
            Term::app(Term::var(&x), Term::var(&y)),
            Term::app(Term::var(&z), Term::var(&y)),
        );
        let before: Vec<_> = t
            .free_var_occurrences()
            .into_iter()
            .filter(|v| v != &x)
            .collect();
        let after = t.substitute(&x, &Term::cons(C2_U)).free_var_occurrences();
        assert_eq!(before, after);
    }

    #[test]
    fn alpha_equivalence_ignores_ids() {
        let x = Var::fresh("x");
        let y = Var::fresh("y");
        let a = Term::abs(x.clone(), u(0), Term::var(&x));
        let b = Term::abs(y.clone(), u(0), Term::var(&y));
        assert!(a.alpha_eq(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn algebraic_roundtrip() {
        let fam = AlgebraFamily::new();
        for n in 0..6 {
            let t = encode_nat(n);
            assert_eq!(Term::from_algebraic(&t).to_algebraic(&fam), Some(t));
        }
        // partial application is not algebraic-as-first-order
        let partial = Term::cons(C1_U);
        assert_eq!(partial.to_algebraic(&fam), None);
    }
}
