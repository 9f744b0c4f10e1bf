//! Syntax-directed type checking for the six subsystems.
//!
//! The declarative rules are algorithmized bottom-up on the annotated
//! term: contexts are split by free-variable usage, contraction is
//! inserted at the lowest node dominating all occurrences of a
//! variable used more than once, and weakening appears only
//! immediately below an arrow introduction (standard form).

use thiserror::Error;

use crate::algebra::{AlgId, AlgebraFamily, ConsRef};
use crate::term::{Term, Var};
use crate::ty::{Subsystem, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Axiom,
    Weaken,
    Contract,
    ArrowIntro,
    ArrowElim,
    ConsIntro,
    CondElim,
    RecElim,
}

#[derive(Debug, Clone)]
pub enum RuleInfo {
    None,
    Axiom { var: Var },
    Weaken { var: Var, ty: Type },
    Contract { left: Var, right: Var, merged: Var, ty: Type },
    ArrowIntro { binder: Var },
    Cons { cons: ConsRef, tier: u32 },
    Branching { alg: AlgId, scrutinee_tier: u32 },
}

/// Context: variables with their types, kept sorted by variable identity.
pub type Ctx = Vec<(Var, Type)>;

#[derive(Debug, Clone)]
pub struct Derivation {
    pub rule: RuleKind,
    pub ctx: Ctx,
    pub subject: Term,
    pub ty: Type,
    pub premises: Vec<Derivation>,
    pub info: RuleInfo,
}

impl Derivation {
    /// Maximum number of recursion-elimination instances on any path
    /// from the root to a leaf.
    pub fn recursion_depth(&self) -> u32 {
        let here = u32::from(self.rule == RuleKind::RecElim);
        here + self
            .premises
            .iter()
            .map(|p| p.recursion_depth())
            .max()
            .unwrap_or(0)
    }

    /// Maximum scrutinee tier over all recursion-elimination instances;
    /// 0 when the derivation is recursion-free.
    pub fn highest_tier(&self) -> u32 {
        let here = match (&self.rule, &self.info) {
            (RuleKind::RecElim, RuleInfo::Branching { scrutinee_tier, .. }) => *scrutinee_tier,
            _ => 0,
        };
        here.max(
            self.premises
                .iter()
                .map(|p| p.highest_tier())
                .max()
                .unwrap_or(0),
        )
    }

    pub fn count_rule(&self, rule: RuleKind) -> usize {
        usize::from(self.rule == rule)
            + self.premises.iter().map(|p| p.count_rule(rule)).sum::<usize>()
    }
}

#[derive(Debug, Error)]
pub enum TypeError {
    #[error("type mismatch at `{at}`: expected {expected}, found {found}")]
    TypeMismatch {
        at: String,
        expected: String,
        found: String,
    },
    #[error("`{at}` is not a function (has type {found}) but is applied")]
    NotAFunction { at: String, found: String },
    #[error("variable `{var}` used more than once at type {ty}, which the subsystem does not admit for contraction")]
    ContractionNotAllowed { var: String, ty: String },
    #[error("ramification violation: recurrence argument tier {scrutinee_tier} is not above result level {result_level}")]
    RamificationViolation {
        scrutinee_tier: u32,
        result_level: u32,
    },
    #[error("recursion branch uses variable `{var}` of type {ty}, outside the subsystem's contraction class")]
    RecursionContextViolation { var: String, ty: String },
    #[error("unbound variable `{var}`")]
    UnboundVariable { var: String },
    #[error("context variable `{var}` does not occur in the term")]
    UnusedVariable { var: String },
    #[error("branching over `{alg}` needs {expected} branches, found {found}")]
    BranchArityMismatch {
        alg: String,
        expected: usize,
        found: usize,
    },
    #[error("cannot infer a tier for `{at}`: annotate the constant (e.g. `c1_U@0`) or check against a known type")]
    CannotInferTier { at: String },
    #[error("scrutinee `{at}` has non-base type {found}")]
    ScrutineeNotBase { at: String, found: String },
}

impl TypeError {
    /// Stable diagnostic code for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            TypeError::TypeMismatch { .. } => "E01-type-mismatch",
            TypeError::NotAFunction { .. } => "E02-not-a-function",
            TypeError::ContractionNotAllowed { .. } => "E03-contraction",
            TypeError::RamificationViolation { .. } => "E04-ramification",
            TypeError::RecursionContextViolation { .. } => "E05-recursion-context",
            TypeError::UnboundVariable { .. } => "E06-unbound",
            TypeError::UnusedVariable { .. } => "E07-unused",
            TypeError::BranchArityMismatch { .. } => "E08-branch-arity",
            TypeError::CannotInferTier { .. } => "E09-tier-inference",
            TypeError::ScrutineeNotBase { .. } => "E10-scrutinee",
        }
    }
}

/// The type of a constructor constant at tier `n`.
pub fn infer_constant_type(family: &AlgebraFamily, c: ConsRef, tier: u32) -> Type {
    let base = Type::Base(c.alg, tier);
    Type::arrow_n(&base, family.arity(c), base.clone())
}

pub struct Checker<'f> {
    pub family: &'f AlgebraFamily,
    pub sys: Subsystem,
}

impl<'f> Checker<'f> {
    pub fn new(family: &'f AlgebraFamily, sys: Subsystem) -> Self {
        Checker { family, sys }
    }

    fn show_t(&self, t: &Term) -> String {
        t.display(self.family).to_string()
    }

    fn show_ty(&self, t: &Type) -> String {
        t.display(self.family).to_string()
    }

    /// Check `ctx ⊢ m : ty`, producing a standard-form derivation.
    pub fn check(&self, ctx: &[(Var, Type)], m: &Term, ty: &Type) -> Result<Derivation, TypeError> {
        let ctx = self.toplevel_ctx(ctx, m)?;
        self.derive(ctx, m, Some(ty), None)
    }

    /// Synthesize a type for `m` under `ctx`.
    pub fn synth(&self, ctx: &[(Var, Type)], m: &Term) -> Result<Derivation, TypeError> {
        let ctx = self.toplevel_ctx(ctx, m)?;
        self.derive(ctx, m, None, None)
    }

    fn toplevel_ctx(&self, ctx: &[(Var, Type)], m: &Term) -> Result<Ctx, TypeError> {
        let fv = m.free_vars();
        for v in &fv {
            if !ctx.iter().any(|(w, _)| w == v) {
                return Err(TypeError::UnboundVariable {
                    var: v.name.to_string(),
                });
            }
        }
        for (w, _) in ctx {
            if !fv.contains(w) {
                return Err(TypeError::UnusedVariable {
                    var: w.name.to_string(),
                });
            }
        }
        let mut c: Ctx = ctx.to_vec();
        c.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(c)
    }

    fn derive(
        &self,
        ctx: Ctx,
        m: &Term,
        goal: Option<&Type>,
        tier_hint: Option<u32>,
    ) -> Result<Derivation, TypeError> {
        // Insert contractions for every context variable whose
        // occurrences split across the children of this node.
        let mut splits: Vec<(Var, Type, Vec<Var>)> = Vec::new();
        let mut m2 = m.clone();
        let mut ctx2 = ctx.clone();
        for (v, ty) in &ctx {
            let k = m2.count_free(v);
            if k >= 2 && splits_here(&m2, v) {
                let parts: Vec<Var> = (0..k).map(|_| v.renamed()).collect();
                m2 = rename_occurrences(&m2, v, &parts);
                ctx2.retain(|(w, _)| w != v);
                for p in &parts {
                    ctx2.push((p.clone(), ty.clone()));
                }
                splits.push((v.clone(), ty.clone(), parts));
            }
        }
        ctx2.sort_by(|a, b| a.0.cmp(&b.0));

        let mut d = self.dispatch(ctx2, &m2, goal, tier_hint)?;

        // Re-merge the split variables with explicit contraction instances.
        for (orig, ty, parts) in splits.iter().rev() {
            if !self.sys.contraction.admits(self.family, ty) {
                return Err(TypeError::ContractionNotAllowed {
                    var: orig.name.to_string(),
                    ty: self.show_ty(ty),
                });
            }
            let mut merged = parts[0].clone();
            for (j, right) in parts.iter().enumerate().skip(1) {
                let target = if j + 1 == parts.len() {
                    orig.clone()
                } else {
                    orig.renamed()
                };
                let mut nctx: Ctx = d
                    .ctx
                    .iter()
                    .filter(|(w, _)| w != &merged && w != right)
                    .cloned()
                    .collect();
                nctx.push((target.clone(), ty.clone()));
                nctx.sort_by(|a, b| a.0.cmp(&b.0));
                let subject = d
                    .subject
                    .rename_var(&merged, &target)
                    .rename_var(right, &target);
                d = Derivation {
                    rule: RuleKind::Contract,
                    ctx: nctx,
                    subject,
                    ty: d.ty.clone(),
                    info: RuleInfo::Contract {
                        left: merged.clone(),
                        right: right.clone(),
                        merged: target.clone(),
                        ty: ty.clone(),
                    },
                    premises: vec![d],
                };
                merged = target;
            }
        }
        Ok(d)
    }

    fn dispatch(
        &self,
        ctx: Ctx,
        m: &Term,
        goal: Option<&Type>,
        tier_hint: Option<u32>,
    ) -> Result<Derivation, TypeError> {
        match m {
            Term::Var(x) => {
                let ty = match ctx.as_slice() {
                    [(w, ty)] if w == x => ty.clone(),
                    _ => {
                        return Err(TypeError::UnboundVariable {
                            var: x.name.to_string(),
                        })
                    }
                };
                if let Some(g) = goal {
                    if *g != ty {
                        return Err(TypeError::TypeMismatch {
                            at: self.show_t(m),
                            expected: self.show_ty(g),
                            found: self.show_ty(&ty),
                        });
                    }
                }
                Ok(Derivation {
                    rule: RuleKind::Axiom,
                    ctx,
                    subject: m.clone(),
                    ty,
                    premises: vec![],
                    info: RuleInfo::Axiom { var: x.clone() },
                })
            }
            Term::Cons(c, ann) => {
                if let Some((w, _)) = ctx.first() {
                    return Err(TypeError::UnusedVariable {
                        var: w.name.to_string(),
                    });
                }
                let tier = self.resolve_cons_tier(m, *c, *ann, goal, tier_hint)?;
                let ty = infer_constant_type(self.family, *c, tier);
                if let Some(g) = goal {
                    if *g != ty {
                        return Err(TypeError::TypeMismatch {
                            at: self.show_t(m),
                            expected: self.show_ty(g),
                            found: self.show_ty(&ty),
                        });
                    }
                }
                Ok(Derivation {
                    rule: RuleKind::ConsIntro,
                    ctx,
                    subject: m.clone(),
                    ty,
                    premises: vec![],
                    info: RuleInfo::Cons { cons: *c, tier },
                })
            }
            Term::Abs(x, ann, body) => {
                let body_goal = match goal {
                    Some(Type::Arrow(dom, cod)) => {
                        if dom.as_ref() != ann {
                            return Err(TypeError::TypeMismatch {
                                at: self.show_t(m),
                                expected: self.show_ty(dom),
                                found: self.show_ty(ann),
                            });
                        }
                        Some(cod.as_ref())
                    }
                    Some(g) => {
                        return Err(TypeError::TypeMismatch {
                            at: self.show_t(m),
                            expected: self.show_ty(g),
                            found: format!("{} -o _", self.show_ty(ann)),
                        })
                    }
                    None => None,
                };
                let used = body.count_free(x) > 0;
                let inner = if used {
                    let mut c2 = ctx.clone();
                    c2.push((x.clone(), ann.clone()));
                    c2.sort_by(|a, b| a.0.cmp(&b.0));
                    self.derive(c2, body, body_goal, None)?
                } else {
                    let d = self.derive(ctx.clone(), body, body_goal, None)?;
                    let mut c2 = d.ctx.clone();
                    c2.push((x.clone(), ann.clone()));
                    c2.sort_by(|a, b| a.0.cmp(&b.0));
                    Derivation {
                        rule: RuleKind::Weaken,
                        ctx: c2,
                        subject: d.subject.clone(),
                        ty: d.ty.clone(),
                        info: RuleInfo::Weaken {
                            var: x.clone(),
                            ty: ann.clone(),
                        },
                        premises: vec![d],
                    }
                };
                let ty = Type::arrow(ann.clone(), inner.ty.clone());
                Ok(Derivation {
                    rule: RuleKind::ArrowIntro,
                    ctx,
                    subject: m.clone(),
                    ty,
                    premises: vec![inner],
                    info: RuleInfo::ArrowIntro { binder: x.clone() },
                })
            }
            Term::App(f, a) => {
                let hint = match tier_hint {
                    Some(h) => Some(h),
                    None => self.spine_tier_hint(&ctx, m, goal)?.flatten(),
                };
                let ctx_f = restrict(&ctx, f);
                let ctx_a = restrict(&ctx, a);
                debug_assert_eq!(ctx_f.len() + ctx_a.len(), ctx.len());
                let df = self.derive(ctx_f, f, None, hint)?;
                let (dom, cod) = match &df.ty {
                    Type::Arrow(d, c) => (d.as_ref().clone(), c.as_ref().clone()),
                    other => {
                        return Err(TypeError::NotAFunction {
                            at: self.show_t(f),
                            found: self.show_ty(other),
                        })
                    }
                };
                let da = self.derive(ctx_a, a, Some(&dom), None)?;
                if let Some(g) = goal {
                    if *g != cod {
                        return Err(TypeError::TypeMismatch {
                            at: self.show_t(m),
                            expected: self.show_ty(g),
                            found: self.show_ty(&cod),
                        });
                    }
                }
                Ok(Derivation {
                    rule: RuleKind::ArrowElim,
                    ctx,
                    subject: m.clone(),
                    ty: cod,
                    premises: vec![df, da],
                    info: RuleInfo::None,
                })
            }
            Term::Cond(scrut, branches) | Term::Rec(scrut, branches) => {
                let is_rec = matches!(m, Term::Rec(..));
                let ctx_s = restrict(&ctx, scrut);
                let ds = self.derive(ctx_s, scrut, None, None)?;
                let (alg, m_tier) = match ds.ty.as_base() {
                    Some(b) => b,
                    None => {
                        return Err(TypeError::ScrutineeNotBase {
                            at: self.show_t(scrut),
                            found: self.show_ty(&ds.ty),
                        })
                    }
                };
                let algebra = self.family.algebra(alg);
                if branches.len() != algebra.len() {
                    return Err(TypeError::BranchArityMismatch {
                        alg: algebra.name.clone(),
                        expected: algebra.len(),
                        found: branches.len(),
                    });
                }
                let result = match goal {
                    Some(g) => (*g).clone(),
                    None => self.infer_branch_result(&ctx, branches, alg, m_tier, is_rec)?,
                };
                let base = Type::Base(alg, m_tier);
                let mut prems = Vec::with_capacity(branches.len() + 1);
                for (i, b) in branches.iter().enumerate() {
                    let n_i = algebra.arity(i as u16);
                    let expected = if is_rec {
                        Type::arrow_n(&base, n_i, Type::arrow_n(&result, n_i, result.clone()))
                    } else {
                        Type::arrow_n(&base, n_i, result.clone())
                    };
                    let ctx_b = restrict(&ctx, b);
                    let db = self.derive(ctx_b, b, Some(&expected), None)?;
                    if is_rec {
                        for (v, t) in &db.ctx {
                            if !self.sys.contraction.admits(self.family, t) {
                                return Err(TypeError::RecursionContextViolation {
                                    var: v.name.to_string(),
                                    ty: self.show_ty(t),
                                });
                            }
                        }
                    }
                    prems.push(db);
                }
                if is_rec && self.sys.ramified && m_tier <= result.level() {
                    return Err(TypeError::RamificationViolation {
                        scrutinee_tier: m_tier,
                        result_level: result.level(),
                    });
                }
                prems.push(ds);
                Ok(Derivation {
                    rule: if is_rec {
                        RuleKind::RecElim
                    } else {
                        RuleKind::CondElim
                    },
                    ctx,
                    subject: m.clone(),
                    ty: result,
                    premises: prems,
                    info: RuleInfo::Branching {
                        alg,
                        scrutinee_tier: m_tier,
                    },
                })
            }
        }
    }

    fn resolve_cons_tier(
        &self,
        at: &Term,
        c: ConsRef,
        ann: Option<u32>,
        goal: Option<&Type>,
        hint: Option<u32>,
    ) -> Result<u32, TypeError> {
        if let Some(n) = ann {
            return Ok(n);
        }
        if let Some(g) = goal {
            if let Some(n) = tier_from_goal(self.family, c, g, 0) {
                return Ok(n);
            }
            return Err(TypeError::TypeMismatch {
                at: self.show_t(at),
                expected: self.show_ty(g),
                found: format!("a constant of algebra {}", self.family.algebra(c.alg).name),
            });
        }
        if let Some(n) = hint {
            return Ok(n);
        }
        Err(TypeError::CannotInferTier { at: self.show_t(at) })
    }

    /// For a constant-headed application spine with no annotation, work
    /// out the constant's tier from the expected type of the whole
    /// spine or, failing that, from a synthesizable argument.
    fn spine_tier_hint(
        &self,
        ctx: &Ctx,
        m: &Term,
        goal: Option<&Type>,
    ) -> Result<Option<Option<u32>>, TypeError> {
        let mut head = m;
        let mut args = Vec::new();
        while let Term::App(f, a) = head {
            args.push(a.as_ref());
            head = f;
        }
        args.reverse();
        let c = match head {
            Term::Cons(c, None) => *c,
            _ => return Ok(None),
        };
        let arity = self.family.arity(c);
        if args.len() > arity {
            return Err(TypeError::NotAFunction {
                at: self.show_t(m),
                found: self.show_ty(&infer_constant_type(self.family, c, 0)),
            });
        }
        if let Some(g) = goal {
            if let Some(n) = tier_from_goal(self.family, c, g, args.len()) {
                return Ok(Some(Some(n)));
            }
            return Err(TypeError::TypeMismatch {
                at: self.show_t(m),
                expected: self.show_ty(g),
                found: format!(
                    "an application of constant {}",
                    self.family.cons_name(c)
                ),
            });
        }
        for a in &args {
            let ctx_a = restrict(ctx, a);
            if let Ok(da) = self.derive(ctx_a, a, None, None) {
                if let Some((alg, n)) = da.ty.as_base() {
                    if alg == c.alg {
                        return Ok(Some(Some(n)));
                    }
                }
            }
        }
        Err(TypeError::CannotInferTier { at: self.show_t(m) })
    }

    /// Determine the branching result type by probing a branch: prefer
    /// a nullary branch (its type is the result itself), otherwise
    /// peel the first branch's synthesized type.
    fn infer_branch_result(
        &self,
        ctx: &Ctx,
        branches: &[Term],
        alg: AlgId,
        m_tier: u32,
        is_rec: bool,
    ) -> Result<Type, TypeError> {
        let algebra = self.family.algebra(alg);
        if let Some(z) = (0..algebra.len()).find(|&i| algebra.arity(i as u16) == 0) {
            let ctx_b = restrict(ctx, &branches[z]);
            let db = self.derive(ctx_b, &branches[z], None, None)?;
            return Ok(db.ty);
        }
        let ctx_b = restrict(ctx, &branches[0]);
        let db = self.derive(ctx_b, &branches[0], None, None)?;
        let n0 = algebra.arity(0);
        let base = Type::Base(alg, m_tier);
        let rest = db.ty.strip_args(&base, n0).ok_or_else(|| TypeError::TypeMismatch {
            at: self.show_t(&branches[0]),
            expected: format!("{} -o ...", self.show_ty(&base)),
            found: self.show_ty(&db.ty),
        })?;
        if is_rec {
            match rest {
                Type::Arrow(c, _) => Ok(c.as_ref().clone()),
                other => Ok(other.clone()),
            }
        } else {
            Ok(rest.clone())
        }
    }
}

/// Does the contraction for `v` belong at this node, i.e. do its
/// occurrences span more than one immediate subterm?
fn splits_here(m: &Term, v: &Var) -> bool {
    let counts: Vec<usize> = match m {
        Term::Var(_) | Term::Cons(..) => return false,
        Term::Abs(..) => return false,
        Term::App(f, a) => vec![f.count_free(v), a.count_free(v)],
        Term::Cond(s, br) | Term::Rec(s, br) => {
            let mut c = vec![s.count_free(v)];
            c.extend(br.iter().map(|b| b.count_free(v)));
            c
        }
    };
    counts.iter().filter(|&&c| c > 0).count() >= 2
}

/// Replace the free occurrences of `v`, left to right, with the given
/// replacement variables (one per occurrence).
fn rename_occurrences(m: &Term, v: &Var, parts: &[Var]) -> Term {
    fn go(t: &Term, v: &Var, parts: &[Var], next: &mut usize) -> Term {
        match t {
            Term::Var(w) if w == v => {
                let r = parts[*next].clone();
                *next += 1;
                Term::Var(r)
            }
            Term::Var(_) | Term::Cons(..) => t.clone(),
            Term::App(f, a) => Term::app(go(f, v, parts, next), go(a, v, parts, next)),
            Term::Abs(x, ty, b) => {
                if x == v {
                    t.clone()
                } else {
                    Term::abs(x.clone(), ty.clone(), go(b, v, parts, next))
                }
            }
            Term::Cond(s, br) => Term::cond(
                go(s, v, parts, next),
                br.iter().map(|b| go(b, v, parts, next)).collect(),
            ),
            Term::Rec(s, br) => Term::rec(
                go(s, v, parts, next),
                br.iter().map(|b| go(b, v, parts, next)).collect(),
            ),
        }
    }
    let mut next = 0;
    let out = go(m, v, parts, &mut next);
    debug_assert_eq!(next, parts.len());
    out
}

fn restrict(ctx: &Ctx, t: &Term) -> Ctx {
    ctx.iter()
        .filter(|(v, _)| t.count_free(v) > 0)
        .cloned()
        .collect()
}

/// Extract the tier of constant `c` from the expected type of the
/// constant applied to `applied` arguments.
fn tier_from_goal(
    family: &AlgebraFamily,
    c: ConsRef,
    goal: &Type,
    applied: usize,
) -> Option<u32> {
    let arity = family.arity(c);
    if applied > arity {
        return None;
    }
    let mut t = goal;
    for _ in 0..(arity - applied) {
        match t {
            Type::Arrow(_, b) => t = b,
            _ => return None,
        }
    }
    let (alg, n) = t.as_base()?;
    if alg != c.alg {
        return None;
    }
    // the full constant type must then agree with the goal
    let full = infer_constant_type(family, c, n);
    let expected_here = full.strip_args(&Type::Base(c.alg, n), applied)?;
    if expected_here == goal {
        Some(n)
    } else {
        None
    }
}

/// Independent auditor: replay every rule instance against its schema,
/// check standard form (weakening only immediately below an arrow
/// introduction), and the subsystem's side conditions. Returns the
/// list of violations (empty for a well-formed derivation).
pub fn validate_derivation(
    d: &Derivation,
    family: &AlgebraFamily,
    sys: Subsystem,
) -> Vec<String> {
    let mut out = Vec::new();
    validate_node(d, family, sys, None, &mut out);
    out
}

fn ctx_eq(a: &Ctx, b: &Ctx) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    a.sort_by(|x, y| x.0.cmp(&y.0));
    b.sort_by(|x, y| x.0.cmp(&y.0));
    a == b
}

fn validate_node(
    d: &Derivation,
    family: &AlgebraFamily,
    sys: Subsystem,
    parent: Option<RuleKind>,
    out: &mut Vec<String>,
) {
    let fail = |out: &mut Vec<String>, msg: String| out.push(msg);
    match d.rule {
        RuleKind::Axiom => {
            let ok = matches!((&d.subject, d.ctx.as_slice()),
                (Term::Var(x), [(w, ty)]) if x == w && *ty == d.ty);
            if !ok {
                fail(out, "axiom instance malformed".into());
            }
        }
        RuleKind::ConsIntro => {
            if !d.ctx.is_empty() {
                fail(out, "constant typed in nonempty context".into());
            }
            if let RuleInfo::Cons { cons, tier } = &d.info {
                if d.ty != infer_constant_type(family, *cons, *tier) {
                    fail(out, "constant type does not match its schema".into());
                }
            } else {
                fail(out, "constant instance missing info".into());
            }
        }
        RuleKind::Weaken => {
            if parent != Some(RuleKind::ArrowIntro) {
                fail(
                    out,
                    "weakening not immediately below an arrow introduction".into(),
                );
            }
            let p = &d.premises[0];
            if let RuleInfo::Weaken { var, ty } = &d.info {
                let mut expect = p.ctx.clone();
                expect.push((var.clone(), ty.clone()));
                if !ctx_eq(&d.ctx, &expect) || d.subject != p.subject || d.ty != p.ty {
                    fail(out, "weakening instance malformed".into());
                }
            } else {
                fail(out, "weakening missing info".into());
            }
        }
        RuleKind::Contract => {
            let p = &d.premises[0];
            if let RuleInfo::Contract { left, right, merged, ty } = &d.info {
                if !sys.contraction.admits(family, ty) {
                    fail(
                        out,
                        format!("contraction at inadmissible type {:?}", ty),
                    );
                }
                let mut expect: Ctx = p
                    .ctx
                    .iter()
                    .filter(|(w, _)| w != left && w != right)
                    .cloned()
                    .collect();
                expect.push((merged.clone(), ty.clone()));
                let subj = p.subject.rename_var(left, merged).rename_var(right, merged);
                if !ctx_eq(&d.ctx, &expect) || d.subject != subj || d.ty != p.ty {
                    fail(out, "contraction instance malformed".into());
                }
                let has = |v: &Var| p.ctx.iter().any(|(w, t)| w == v && t == ty);
                if !has(left) || !has(right) {
                    fail(out, "contracted variables missing from premise".into());
                }
            } else {
                fail(out, "contraction missing info".into());
            }
        }
        RuleKind::ArrowIntro => {
            let p = &d.premises[0];
            match (&d.subject, &d.info) {
                (Term::Abs(x, ann, body), RuleInfo::ArrowIntro { binder }) if x == binder => {
                    let mut expect = d.ctx.clone();
                    expect.push((x.clone(), ann.clone()));
                    if !ctx_eq(&p.ctx, &expect)
                        || p.subject != **body
                        || d.ty != Type::arrow(ann.clone(), p.ty.clone())
                    {
                        fail(out, "arrow introduction malformed".into());
                    }
                }
                _ => fail(out, "arrow introduction malformed".into()),
            }
        }
        RuleKind::ArrowElim => {
            let (pf, pa) = (&d.premises[0], &d.premises[1]);
            let join: Ctx = pf.ctx.iter().chain(pa.ctx.iter()).cloned().collect();
            let disjoint = pf.ctx.iter().all(|(v, _)| !pa.ctx.iter().any(|(w, _)| w == v));
            let shape_ok = match (&d.subject, &pf.ty) {
                (Term::App(f, a), Type::Arrow(dom, cod)) => {
                    **f == pf.subject && **a == pa.subject && pa.ty == **dom && d.ty == **cod
                }
                _ => false,
            };
            if !disjoint || !ctx_eq(&d.ctx, &join) || !shape_ok {
                fail(out, "arrow elimination malformed".into());
            }
        }
        RuleKind::CondElim | RuleKind::RecElim => {
            let is_rec = d.rule == RuleKind::RecElim;
            let (alg, m_tier) = match &d.info {
                RuleInfo::Branching { alg, scrutinee_tier } => (*alg, *scrutinee_tier),
                _ => {
                    fail(out, "branching missing info".into());
                    return;
                }
            };
            let algebra = family.algebra(alg);
            let k = algebra.len();
            if d.premises.len() != k + 1 {
                fail(out, "branching premise count wrong".into());
                return;
            }
            let scrut = &d.premises[k];
            if scrut.ty != Type::Base(alg, m_tier) {
                fail(out, "scrutinee premise has wrong type".into());
            }
            let base = Type::Base(alg, m_tier);
            let (subj_s, subj_br) = match &d.subject {
                Term::Cond(s, br) if !is_rec => (s, br),
                Term::Rec(s, br) if is_rec => (s, br),
                _ => {
                    fail(out, "branching subject malformed".into());
                    return;
                }
            };
            if **subj_s != scrut.subject {
                fail(out, "scrutinee subject mismatch".into());
            }
            let mut join: Ctx = Vec::new();
            for (i, p) in d.premises.iter().take(k).enumerate() {
                let n_i = algebra.arity(i as u16);
                let expect = if is_rec {
                    Type::arrow_n(&base, n_i, Type::arrow_n(&d.ty, n_i, d.ty.clone()))
                } else {
                    Type::arrow_n(&base, n_i, d.ty.clone())
                };
                if p.ty != expect {
                    fail(out, format!("branch {} has wrong type", i + 1));
                }
                if p.subject != subj_br[i] {
                    fail(out, format!("branch {} subject mismatch", i + 1));
                }
                if is_rec {
                    for (v, t) in &p.ctx {
                        if !sys.contraction.admits(family, t) {
                            fail(
                                out,
                                format!(
                                    "recursion branch context variable {} outside class",
                                    v.name
                                ),
                            );
                        }
                    }
                }
                join.extend(p.ctx.iter().cloned());
            }
            join.extend(scrut.ctx.iter().cloned());
            let mut seen = std::collections::BTreeSet::new();
            for (v, _) in &join {
                if !seen.insert(v.id) {
                    fail(out, "branching premise contexts overlap".into());
                }
            }
            if !ctx_eq(&d.ctx, &join) {
                fail(out, "branching context join mismatch".into());
            }
            if is_rec && sys.ramified && m_tier <= d.ty.level() {
                fail(out, "ramification premise violated".into());
            }
        }
    }
    for p in &d.premises {
        validate_node(p, family, sys, Some(d.rule), out);
    }
}

/// A derivation is in standard form when weakening only occurs
/// immediately below an arrow introduction.
pub fn is_standard_form(d: &Derivation) -> bool {
    fn go(d: &Derivation, parent: Option<RuleKind>) -> bool {
        if d.rule == RuleKind::Weaken && parent != Some(RuleKind::ArrowIntro) {
            return false;
        }
        d.premises.iter().all(|p| go(p, Some(d.rule)))
    }
    go(d, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{AlgebraFamily, ALG_U, C1_U, C2_U};
    use crate::parser::parse_term;

    fn u(n: u32) -> Type {
        Type::Base(ALG_U, n)
    }

    #[test]
    fn constant_types() {
        let fam = AlgebraFamily::new();
        let c1c = fam.lookup_cons("c1_C").unwrap();
        assert_eq!(
            infer_constant_type(&fam, c1c, 3),
            Type::arrow(
                Type::Base(crate::algebra::ALG_C, 3),
                Type::arrow(
                    Type::Base(crate::algebra::ALG_C, 3),
                    Type::Base(crate::algebra::ALG_C, 3)
                )
            )
        );
        assert_eq!(infer_constant_type(&fam, C2_U, 0), u(0));
        assert_eq!(
            infer_constant_type(&fam, C1_U, 5),
            Type::arrow(u(5), u(5))
        );
    }

    #[test]
    fn checks_identity() {
        let fam = AlgebraFamily::new();
        let ck = Checker::new(&fam, Subsystem::H_A);
        let t = parse_term("\\x:U^1. x", &fam).unwrap();
        let d = ck.check(&[], &t, &Type::arrow(u(1), u(1))).unwrap();
        assert_eq!(d.recursion_depth(), 0);
        assert_eq!(d.highest_tier(), 0);
        assert!(validate_derivation(&d, &fam, Subsystem::H_A).is_empty());
        assert!(is_standard_form(&d));
    }

    #[test]
    fn checks_numeral_against_any_tier() {
        let fam = AlgebraFamily::new();
        let ck = Checker::new(&fam, Subsystem::H_A);
        let t = parse_term("2", &fam).unwrap();
        assert!(ck.check(&[], &t, &u(0)).is_ok());
        assert!(ck.check(&[], &t, &u(7)).is_ok());
        // synthesis without annotation cannot pick a tier
        assert!(matches!(
            ck.synth(&[], &t),
            Err(TypeError::CannotInferTier { .. })
        ));
    }

    #[test]
    fn weakening_only_under_lambda() {
        let fam = AlgebraFamily::new();
        let ck = Checker::new(&fam, Subsystem::H_A);
        let t = parse_term("\\x:U^0. \\y:U^1. x", &fam).unwrap();
        let d = ck
            .check(&[], &t, &Type::arrow(u(0), Type::arrow(u(1), u(0))))
            .unwrap();
        assert!(is_standard_form(&d));
        assert_eq!(d.count_rule(RuleKind::Weaken), 1);
        assert!(validate_derivation(&d, &fam, Subsystem::H_A).is_empty());
    }

    #[test]
    fn contraction_gated_by_class() {
        let fam = AlgebraFamily::new();
        // \f:U^0 -o U^0 -o U^0. \x:U^0. f x x  — x used twice at a base type
        let t = parse_term("\\f:U^0 -o U^0 -o U^0. \\x:U^0. f x x", &fam).unwrap();
        let ty = Type::arrow(
            Type::arrow(u(0), Type::arrow(u(0), u(0))),
            Type::arrow(u(0), u(0)),
        );
        let ok = Checker::new(&fam, Subsystem::H_A).check(&[], &t, &ty);
        assert!(ok.is_ok());
        let d = ok.unwrap();
        assert_eq!(d.count_rule(RuleKind::Contract), 1);
        assert!(validate_derivation(&d, &fam, Subsystem::H_A).is_empty());
        // same term rejected without contraction
        assert!(matches!(
            Checker::new(&fam, Subsystem::H_0).check(&[], &t, &ty),
            Err(TypeError::ContractionNotAllowed { .. })
        ));
    }

    #[test]
    fn contraction_at_function_type_rejected_everywhere() {
        let fam = AlgebraFamily::new();
        // g duplicated at an arrow type: not admitted even in H(A)
        let t = parse_term(
            "\\g:U^0 -o U^0. \\x:U^0. g (g x)",
            &fam,
        )
        .unwrap();
        let ty = Type::arrow(Type::arrow(u(0), u(0)), Type::arrow(u(0), u(0)));
        assert!(matches!(
            Checker::new(&fam, Subsystem::H_A).check(&[], &t, &ty),
            Err(TypeError::ContractionNotAllowed { .. })
        ));
    }

    #[test]
    fn branch_arity_checked() {
        let fam = AlgebraFamily::new();
        let ck = Checker::new(&fam, Subsystem::H_A);
        let t = parse_term("\\x:U^0. x {{\\y:U^0. y, c2_U, c2_U}}", &fam);
        // parse passes (scrutinee is a variable), type check catches it
        let t = t.unwrap();
        assert!(matches!(
            ck.check(&[], &t, &Type::arrow(u(0), u(0))),
            Err(TypeError::BranchArityMismatch { .. })
        ));
    }

    #[test]
    fn ramification_enforced() {
        let fam = AlgebraFamily::new();
        // recursion at equal tiers: fine in H, rejected in RH
        let t = parse_term("\\x:U^0. x <<\\y:U^0. \\z:U^0. c1_U z, c2_U>>", &fam).unwrap();
        let ty = Type::arrow(u(0), u(0));
        assert!(Checker::new(&fam, Subsystem::H_A).check(&[], &t, &ty).is_ok());
        assert!(matches!(
            Checker::new(&fam, Subsystem::RH_A).check(&[], &t, &ty),
            Err(TypeError::RamificationViolation { .. })
        ));
    }

    #[test]
    fn recursion_branch_context_gated() {
        let fam = AlgebraFamily::new();
        // y free in a recursion branch at a base type: needs D to admit U^0
        let t = parse_term(
            "\\x:U^1. \\y:U^0. x <<\\w:U^1. \\z:U^0. c1_U z, y>>",
            &fam,
        )
        .unwrap();
        let ty = Type::arrow(u(1), Type::arrow(u(0), u(0)));
        assert!(Checker::new(&fam, Subsystem::H_A).check(&[], &t, &ty).is_ok());
        assert!(Checker::new(&fam, Subsystem::H_W).check(&[], &t, &ty).is_ok());
        assert!(matches!(
            Checker::new(&fam, Subsystem::H_0).check(&[], &t, &ty),
            Err(TypeError::RecursionContextViolation { .. })
        ));
    }

    #[test]
    fn conclusion_subject_is_input_term() {
        let fam = AlgebraFamily::new();
        let t = parse_term("\\f:U^0 -o U^0 -o U^0. \\x:U^0. f x x", &fam).unwrap();
        let ty = Type::arrow(
            Type::arrow(u(0), Type::arrow(u(0), u(0))),
            Type::arrow(u(0), u(0)),
        );
        let d = Checker::new(&fam, Subsystem::H_A).check(&[], &t, &ty).unwrap();
        assert_eq!(d.subject, t);
    }
}
