//! Library terms: the arithmetic and tree combinators, the duplication
//! construct for contraction-free subsystems, and a compiler from
//! first-order primitive recursive function schemes.
//!
//! Every builder takes a tier parameter `i` and annotates binders and
//! constants so that the resulting term checks at its documented type;
//! where ramification applies, the recursion argument always sits one
//! tier above the recursion result.

use thiserror::Error;

use crate::algebra::{ALG_C, ALG_U, C1_C, C1_U, C2_C, C2_U};
use crate::term::{Term, Var};
use crate::ty::Type;

fn u(n: u32) -> Type {
    Type::Base(ALG_U, n)
}

fn c(n: u32) -> Type {
    Type::Base(ALG_C, n)
}

/// `UnAdd = \x.\y. x<<\w.\z. c1_U z, y>>` at `U^{i+1} -o U^i -o U^i`.
/// The second addend sits inside the recursion branch context.
pub fn un_add(i: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let z = Var::fresh("z");
    let step = Term::abs(
        w,
        u(i + 1),
        Term::abs(
            z.clone(),
            u(i),
            Term::app(Term::cons_at(C1_U, i), Term::var(&z)),
        ),
    );
    Term::abs(
        x.clone(),
        u(i + 1),
        Term::abs(
            y.clone(),
            u(i),
            Term::rec(Term::var(&x), vec![step, Term::var(&y)]),
        ),
    )
}

/// `Predecessor = \x. x{{\y. y, c2_U}}` at `U^i -o U^i`.
pub fn predecessor(i: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    Term::abs(
        x.clone(),
        u(i),
        Term::cond(
            Term::var(&x),
            vec![
                Term::abs(y.clone(), u(i), Term::var(&y)),
                Term::cons_at(C2_U, i),
            ],
        ),
    )
}

/// `Coerc = \x. x<<\y.\w. c1_U w, c2_U>>` at `U^{i+1} -o U^i`.
pub fn coerc(i: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let step = Term::abs(
        y,
        u(i + 1),
        Term::abs(
            w.clone(),
            u(i),
            Term::app(Term::cons_at(C1_U, i), Term::var(&w)),
        ),
    );
    Term::abs(
        x.clone(),
        u(i + 1),
        Term::rec(Term::var(&x), vec![step, Term::cons_at(C2_U, i)]),
    )
}

/// `Add = \x.\y. (x<<\w.\z.\q. c1_U (z q), \z. z>>) y` at
/// `U^{i+1} -o U^i -o U^i`. The recursion builds an iterator, keeping
/// both branches closed.
pub fn add(i: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let z = Var::fresh("z");
    let q = Var::fresh("q");
    let z2 = Var::fresh("z");
    let step = Term::abs(
        w,
        u(i + 1),
        Term::abs(
            z.clone(),
            Type::arrow(u(i), u(i)),
            Term::abs(
                q.clone(),
                u(i),
                Term::app(
                    Term::cons_at(C1_U, i),
                    Term::app(Term::var(&z), Term::var(&q)),
                ),
            ),
        ),
    );
    let base = Term::abs(z2.clone(), u(i), Term::var(&z2));
    Term::abs(
        x.clone(),
        u(i + 1),
        Term::abs(
            y.clone(),
            u(i),
            Term::app(
                Term::rec(Term::var(&x), vec![step, base]),
                Term::var(&y),
            ),
        ),
    )
}

/// Generalized tree-to-word read-back at `C^m -o U^j` (requires `m > j`
/// under ramification). `extract(i)` is the `C^{i+1} -o U^i` instance.
pub fn extract_at(m: u32, j: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let z = Var::fresh("z");
    let q = Var::fresh("q");
    let step = Term::abs(
        y,
        c(m),
        Term::abs(
            w,
            c(m),
            Term::abs(
                z.clone(),
                u(j),
                Term::abs(q, u(j), Term::app(Term::cons_at(C1_U, j), Term::var(&z))),
            ),
        ),
    );
    Term::abs(
        x.clone(),
        c(m),
        Term::rec(Term::var(&x), vec![step, Term::cons_at(C2_U, j)]),
    )
}

pub fn extract(i: u32) -> Term {
    extract_at(i + 1, i)
}

/// Word-to-tree duplication at `U^m -o C^j` (requires `m > j` under
/// ramification): the result is a `c1_C` node carrying two copies of
/// the input's tree coding.
pub fn duplicate_at(m: u32, j: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let z = Var::fresh("z");
    let q = Var::fresh("q");
    let grow = |v: &Var| {
        Term::apps(
            Term::cons_at(C1_C, j),
            [Term::var(v), Term::cons_at(C2_C, j)],
        )
    };
    let pair = Term::abs(
        z.clone(),
        c(j),
        Term::abs(
            q.clone(),
            c(j),
            Term::apps(Term::cons_at(C1_C, j), [grow(&z), grow(&q)]),
        ),
    );
    let step = Term::abs(
        y,
        u(m),
        Term::abs(
            w.clone(),
            c(j),
            Term::cond(Term::var(&w), vec![pair, Term::cons_at(C2_C, j)]),
        ),
    );
    let base = Term::apps(
        Term::cons_at(C1_C, j),
        [Term::cons_at(C2_C, j), Term::cons_at(C2_C, j)],
    );
    Term::abs(
        x.clone(),
        u(m),
        Term::rec(Term::var(&x), vec![step, base]),
    )
}

pub fn duplicate(i: u32) -> Term {
    duplicate_at(i + 1, i)
}

/// `Blowup = \x. x<<\y.\w. c1_C w w, c2_C>>` at `U^{i+1} -o C^i`:
/// builds the complete binary tree of the input's height. The doubled
/// `w` needs contraction at a tree type.
pub fn blowup(i: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let step = Term::abs(
        y,
        u(i + 1),
        Term::abs(
            w.clone(),
            c(i),
            Term::apps(Term::cons_at(C1_C, i), [Term::var(&w), Term::var(&w)]),
        ),
    );
    Term::abs(
        x.clone(),
        u(i + 1),
        Term::rec(Term::var(&x), vec![step, Term::cons_at(C2_C, i)]),
    )
}

/// `Leaves = \x. (x<<\y.\w.\z.\q.\r. z (q r), \s. c1_U s>>) c2_U` at
/// `C^{i+1} -o U^i`: counts leaves by composing unary adders.
pub fn leaves(i: u32) -> Term {
    let x = Var::fresh("x");
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    let z = Var::fresh("z");
    let q = Var::fresh("q");
    let r = Var::fresh("r");
    let s = Var::fresh("s");
    let uu = Type::arrow(u(i), u(i));
    let step = Term::abs(
        y,
        c(i + 1),
        Term::abs(
            w,
            c(i + 1),
            Term::abs(
                z.clone(),
                uu.clone(),
                Term::abs(
                    q.clone(),
                    uu.clone(),
                    Term::abs(
                        r.clone(),
                        u(i),
                        Term::app(
                            Term::var(&z),
                            Term::app(Term::var(&q), Term::var(&r)),
                        ),
                    ),
                ),
            ),
        ),
    );
    let base = Term::abs(
        s.clone(),
        u(i),
        Term::app(Term::cons_at(C1_U, i), Term::var(&s)),
    );
    Term::abs(
        x.clone(),
        c(i + 1),
        Term::app(
            Term::rec(Term::var(&x), vec![step, base]),
            Term::cons_at(C2_U, i),
        ),
    )
}

/// `Exp = \x. Leaves (Blowup x)` at `U^{i+2} -o U^i`.
pub fn exp(i: u32) -> Term {
    let x = Var::fresh("x");
    Term::abs(
        x.clone(),
        u(i + 2),
        Term::app(leaves(i), Term::app(blowup(i + 1), Term::var(&x))),
    )
}

/// Tier plan for [`dup_context`]: uniform tiers type-check without
/// ramification; the shifted plan loses two tiers (one for the
/// duplication recursion, one for the read-back recursion) and is the
/// ramification-compatible form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DupPlan {
    /// `w : U^n` with `x, y : U^n` (valid without ramification).
    Uniform(u32),
    /// `w : U^{n+2}` with `x, y : U^n` (valid under ramification).
    Shifted(u32),
}

/// The duplication context: a term `D` with `D{t/w} ⟿* M{t/x, t/y}`
/// for every unary word `t`. Both copies pass through the tree coding.
pub fn dup_context(m: Term, x: &Var, y: &Var, w: &Var, plan: DupPlan) -> Term {
    let (dup_m, dup_j, x_tier, y_tier) = match plan {
        DupPlan::Uniform(n) => (n, n, n, n),
        DupPlan::Shifted(n) => (n + 2, n + 1, n, n),
    };
    dup_context_tiers(m, x, y, w, dup_m, dup_j, x_tier, y_tier)
}

/// General form with explicit tiers: `w : U^{dup_m}`, the intermediate
/// trees at `C^{dup_j}`, and the two copies read back at `U^{x_tier}`
/// and `U^{y_tier}` respectively.
#[allow(clippy::too_many_arguments)]
pub fn dup_context_tiers(
    m: Term,
    x: &Var,
    y: &Var,
    w: &Var,
    dup_m: u32,
    dup_j: u32,
    x_tier: u32,
    y_tier: u32,
) -> Term {
    let z = Var::fresh("z");
    let q = Var::fresh("q");
    let consumer = || {
        Term::abs(
            x.clone(),
            u(x_tier),
            Term::abs(y.clone(), u(y_tier), m.clone()),
        )
    };
    let live = Term::abs(
        z.clone(),
        c(dup_j),
        Term::abs(
            q.clone(),
            c(dup_j),
            Term::apps(
                consumer(),
                [
                    Term::app(extract_at(dup_j, x_tier), Term::var(&z)),
                    Term::app(extract_at(dup_j, y_tier), Term::var(&q)),
                ],
            ),
        ),
    );
    // the leaf branch never fires (duplication always yields a c1_C
    // node) but must still inhabit the result type
    let dead = Term::apps(
        consumer(),
        [Term::cons_at(C2_U, x_tier), Term::cons_at(C2_U, y_tier)],
    );
    Term::cond(
        Term::app(duplicate_at(dup_m, dup_j), Term::var(w)),
        vec![live, dead],
    )
}

/// `Square = \x. [Add ((Coerc x1)<<Add, c2_U>>) ((Predecessor x2)<<Add, c2_U>>)]^x`
/// at `U^{i+5} -o U^i`: n² as the sum of two triangular numbers. The
/// two copies of the input are read back at different tiers so that
/// every recursion strictly drops.
pub fn square(i: u32) -> Term {
    let x = Var::fresh("x");
    let x1 = Var::fresh("x1");
    let x2 = Var::fresh("x2");
    let tri1 = Term::rec(
        Term::app(coerc(i + 2), Term::var(&x1)),
        vec![add(i + 1), Term::cons_at(C2_U, i + 1)],
    );
    let tri2 = Term::rec(
        Term::app(predecessor(i + 1), Term::var(&x2)),
        vec![add(i), Term::cons_at(C2_U, i)],
    );
    let body = Term::apps(add(i), [tri1, tri2]);
    Term::abs(
        x.clone(),
        u(i + 5),
        dup_context_tiers(body, &x1, &x2, &x, i + 4, i + 3, i + 3, i + 1),
    )
}

/// Documented tier signature of each library term.
pub fn signature(name: &str, i: u32) -> Option<Type> {
    let t = match name {
        "UnAdd" => Type::arrow(u(i + 1), Type::arrow(u(i), u(i))),
        "Predecessor" => Type::arrow(u(i), u(i)),
        "Coerc" => Type::arrow(u(i + 1), u(i)),
        "Add" => Type::arrow(u(i + 1), Type::arrow(u(i), u(i))),
        "Square" => Type::arrow(u(i + 5), u(i)),
        "Extract" => Type::arrow(c(i + 1), u(i)),
        "Duplicate" => Type::arrow(u(i + 1), c(i)),
        "Blowup" => Type::arrow(u(i + 1), c(i)),
        "Leaves" => Type::arrow(c(i + 1), u(i)),
        "Exp" => Type::arrow(u(i + 2), u(i)),
        _ => return None,
    };
    Some(t)
}

/// Build a library term by name at tier `i`.
pub fn build(name: &str, i: u32) -> Option<Term> {
    let t = match name {
        "UnAdd" => un_add(i),
        "Predecessor" => predecessor(i),
        "Coerc" => coerc(i),
        "Add" => add(i),
        "Square" => square(i),
        "Extract" => extract(i),
        "Duplicate" => duplicate(i),
        "Blowup" => blowup(i),
        "Leaves" => leaves(i),
        "Exp" => exp(i),
        _ => return None,
    };
    Some(t)
}

pub const LIBRARY_NAMES: [&str; 10] = [
    "UnAdd",
    "Predecessor",
    "Coerc",
    "Add",
    "Square",
    "Extract",
    "Duplicate",
    "Blowup",
    "Leaves",
    "Exp",
];

/// Which of the six subsystems accept each library term (at the tiers
/// emitted by its builder).
pub fn expected_acceptance(name: &str, sys: crate::ty::Subsystem) -> Option<bool> {
    use crate::ty::Subsystem as S;
    let all = [S::H_A, S::H_W, S::H_0, S::RH_A, S::RH_W, S::RH_0];
    let idx = all.iter().position(|s| *s == sys)?;
    // order: H(A) H(W) H(0) RH(A) RH(W) RH(0)
    let row = match name {
        "UnAdd" => [true, true, false, true, true, false],
        "Predecessor" => [true; 6],
        "Coerc" => [true; 6],
        "Add" => [true; 6],
        "Square" => [true; 6],
        "Extract" => [true; 6],
        "Duplicate" => [true; 6],
        "Blowup" => [true, false, false, true, false, false],
        "Leaves" => [true; 6],
        "Exp" => [true, false, false, true, false, false],
        _ => return None,
    };
    Some(row[idx])
}

/// First-order primitive recursive function schemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimRecFunction {
    Zero,
    Succ,
    /// `Proj(n, i)`: the i-th of n arguments (1-based).
    Proj(usize, usize),
    Compose(Box<PrimRecFunction>, Vec<PrimRecFunction>),
    PrimRec(Box<PrimRecFunction>, Box<PrimRecFunction>),
}

#[derive(Debug, Error)]
pub enum PrimRecError {
    #[error("projection index {i} out of range 1..={n}")]
    BadProjection { n: usize, i: usize },
    #[error("composition: outer function has arity {outer} but {given} inner functions were given")]
    ComposeArity { outer: usize, given: usize },
    #[error("composition: inner functions must share one arity (found {0} and {1})")]
    ComposeInnerArity(usize, usize),
    #[error("composition needs at least one inner function")]
    ComposeEmpty,
    #[error("recursion: step function has arity {got}, expected {expected}")]
    RecArity { expected: usize, got: usize },
}

impl PrimRecFunction {
    pub fn arity(&self) -> Result<usize, PrimRecError> {
        match self {
            PrimRecFunction::Zero | PrimRecFunction::Succ => Ok(1),
            PrimRecFunction::Proj(n, i) => {
                if *i >= 1 && i <= n && *n >= 1 {
                    Ok(*n)
                } else {
                    Err(PrimRecError::BadProjection { n: *n, i: *i })
                }
            }
            PrimRecFunction::Compose(f, gs) => {
                if gs.is_empty() {
                    return Err(PrimRecError::ComposeEmpty);
                }
                let outer = f.arity()?;
                if outer != gs.len() {
                    return Err(PrimRecError::ComposeArity {
                        outer,
                        given: gs.len(),
                    });
                }
                let m = gs[0].arity()?;
                for g in gs.iter().skip(1) {
                    let gm = g.arity()?;
                    if gm != m {
                        return Err(PrimRecError::ComposeInnerArity(m, gm));
                    }
                }
                Ok(m)
            }
            PrimRecFunction::PrimRec(f, g) => {
                let m = f.arity()?;
                let gm = g.arity()?;
                if gm != m + 2 {
                    return Err(PrimRecError::RecArity {
                        expected: m + 2,
                        got: gm,
                    });
                }
                Ok(m + 1)
            }
        }
    }
}

/// The n-ary duplication construct `<M>^z`: replaces the n free
/// variables `xs` of `M` by a single fresh one, at a uniform tier.
pub fn distribute(m: Term, xs: &[Var], z: &Var, tier: u32) -> Term {
    assert!(!xs.is_empty());
    let lam_all = |body: Term| -> Term {
        xs.iter()
            .rev()
            .fold(body, |acc, v| Term::abs(v.clone(), u(tier), acc))
    };
    // M_1 = (\x1...\xn. M) x1 ; M_{k+1} = [M_k x_{k+1}]^{x_{k+1}}_{x_k, x_{k+1}}
    let mut cur = Term::app(lam_all(m), Term::var(&xs[0]));
    for k in 1..xs.len() {
        let body = Term::app(cur, Term::var(&xs[k]));
        let fresh_w = xs[k].renamed();
        cur = dup_context(body, &xs[k - 1], &xs[k], &fresh_w, DupPlan::Uniform(tier));
        cur = cur.rename_var(&fresh_w, &xs[k]);
    }
    Term::app(
        Term::abs(xs[xs.len() - 1].clone(), u(tier), cur),
        Term::var(z),
    )
}

/// Compile a primitive recursive function scheme to a closed term of
/// type `U^0 ⊸^arity U^0` that checks without any contraction:
/// argument copies are threaded through the duplication construct, and
/// each stage re-absorbs the pending copies of earlier arguments
/// before exposing the next argument binder.
pub fn compile_primrec(f: &PrimRecFunction) -> Result<Term, PrimRecError> {
    let arity = f.arity()?;
    let _ = arity;
    Ok(compile(f))
}

fn u0() -> Type {
    u(0)
}

fn fun_ty(arity: usize) -> Type {
    Type::arrow_n(&u0(), arity, u0())
}

fn compile(f: &PrimRecFunction) -> Term {
    match f {
        PrimRecFunction::Zero => {
            let x = Var::fresh("x");
            Term::abs(x, u0(), Term::cons_at(C2_U, 0))
        }
        PrimRecFunction::Succ => {
            let x = Var::fresh("x");
            Term::abs(
                x.clone(),
                u0(),
                Term::app(Term::cons_at(C1_U, 0), Term::var(&x)),
            )
        }
        PrimRecFunction::Proj(n, i) => {
            let xs: Vec<Var> = (1..=*n).map(|k| Var::fresh(&format!("x{}", k))).collect();
            let body = Term::var(&xs[*i - 1]);
            xs.into_iter()
                .rev()
                .fold(body, |acc, v| Term::abs(v, u0(), acc))
        }
        PrimRecFunction::Compose(f, gs) => compile_compose(f, gs),
        PrimRecFunction::PrimRec(f, g) => compile_primrec_scheme(f, g),
    }
}

/// Build the staged duplication pipeline shared by composition and
/// recursion compilation.
///
/// Stage `j` consumes one argument (via [`distribute`]) into the copy
/// group `copies[j-1]`; the copies of earlier arguments arrive as
/// pending applications and are re-absorbed by explicit binders before
/// the next argument binder is exposed. The innermost stage applies
/// `target` to its own copies followed by all pending ones, so `target`
/// ends up applied to the copy groups in reverse argument order.
///
/// Returns the stage-1 term, whose single free variable is `feeds[0]`;
/// the chain then expects the remaining arguments `feeds[1..]` as
/// applications.
fn copy_pipeline(target: Term, copies: &[Vec<Var>], feeds: &[Var]) -> Term {
    let m = copies.len();
    assert!(m >= 1 && feeds.len() == m);
    let width = copies[0].len();
    let mut stage: Option<Term> = None;
    for j in (1..=m).rev() {
        let vs: Vec<Var> = (0..width * (j - 1))
            .map(|k| Var::fresh(&format!("v{}", k + 1)))
            .collect();
        let core = match stage.take() {
            // innermost stage: apply the target directly
            None => Term::apps(
                Term::apps(target.clone(), copies[j - 1].iter().map(Term::var)),
                vs.iter().map(Term::var),
            ),
            // re-expose the next argument binder after forwarding
            Some(next) => Term::abs(
                feeds[j].clone(),
                u0(),
                Term::apps(
                    Term::apps(next, copies[j - 1].iter().map(Term::var)),
                    vs.iter().map(Term::var),
                ),
            ),
        };
        let absorbed = vs
            .into_iter()
            .rev()
            .fold(core, |acc, v| Term::abs(v, u0(), acc));
        stage = Some(distribute(absorbed, &copies[j - 1], &feeds[j - 1], 0));
    }
    stage.expect("m >= 1")
}

fn compile_compose(f: &PrimRecFunction, gs: &[PrimRecFunction]) -> Term {
    let n = gs.len();
    let m = gs[0].arity().expect("validated");
    // xs[j-1][i-1] = the i-th copy of argument j
    let xs: Vec<Vec<Var>> = (1..=m)
        .map(|j| {
            (1..=n)
                .map(|i| Var::fresh(&format!("x{}_{}", i, j)))
                .collect()
        })
        .collect();
    let body = Term::apps(
        compile(f),
        (0..n).map(|i| {
            Term::apps(compile(&gs[i]), (0..m).map(|j| Term::var(&xs[j][i])))
        }),
    );
    // bind copy groups with the last argument's group outermost
    let mut n_term = body;
    for group in xs.iter() {
        for v in group.iter().rev() {
            n_term = Term::abs(v.clone(), u0(), n_term);
        }
    }
    let ys: Vec<Var> = (1..=m).map(|j| Var::fresh(&format!("y{}", j))).collect();
    let pipeline = copy_pipeline(n_term, &xs, &ys);
    Term::abs(ys[0].clone(), u0(), pipeline)
}

fn compile_primrec_scheme(f: &PrimRecFunction, g: &PrimRecFunction) -> Term {
    let m = f.arity().expect("validated");
    let rec_ty = fun_ty(m);
    let y = Var::fresh("y");
    let w = Var::fresh("w");
    // per argument j: x_j feeds the recursive call, u_j feeds the step
    let xs: Vec<Var> = (1..=m).map(|j| Var::fresh(&format!("x{}", j))).collect();
    let us: Vec<Var> = (1..=m).map(|j| Var::fresh(&format!("u{}", j))).collect();
    let n_body = Term::apps(
        compile(g),
        [
            Term::var(&y),
            Term::apps(Term::var(&w), xs.iter().map(Term::var)),
        ]
        .into_iter()
        .chain(us.iter().map(Term::var)),
    );
    // N binds pairs (x_m, u_m) .. (x_1, u_1), then y, then w
    let mut n_term = Term::abs(y.clone(), u0(), Term::abs(w.clone(), rec_ty.clone(), n_body));
    for j in 1..=m {
        n_term = Term::abs(
            xs[j - 1].clone(),
            u0(),
            Term::abs(us[j - 1].clone(), u0(), n_term),
        );
    }
    let n_h = if m == 0 {
        n_term
    } else {
        let pairs: Vec<Vec<Var>> = (0..m).map(|j| vec![xs[j].clone(), us[j].clone()]).collect();
        let zs: Vec<Var> = (1..=m).map(|j| Var::fresh(&format!("z{}", j))).collect();
        let pipeline = copy_pipeline(n_term, &pairs, &zs);
        // \y.\w.\z_1...\z_m. (pipeline z_2 ... z_m) y w
        let forwarded = Term::apps(
            Term::apps(pipeline, zs.iter().skip(1).map(Term::var)),
            [Term::var(&y), Term::var(&w)],
        );
        let with_args = zs
            .iter()
            .rev()
            .fold(forwarded, |acc, z| Term::abs(z.clone(), u0(), acc));
        Term::abs(y.clone(), u0(), Term::abs(w.clone(), rec_ty, with_args))
    };
    let x = Var::fresh("x");
    Term::abs(
        x.clone(),
        u0(),
        Term::rec(Term::var(&x), vec![n_h, compile(f)]),
    )
}
