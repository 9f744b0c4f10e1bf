//! Free algebras, algebra families, and first-order algebraic terms.
//!
//! An algebra family always contains the four built-ins: `U` (unary
//! strings), `B` (binary strings), `C` (binary trees) and `D` (binary
//! trees with binary labels). User algebras can be declared on top.

use std::fmt;

use thiserror::Error;

/// Index of an algebra within its [`AlgebraFamily`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlgId(pub u16);

/// Reference to a constructor: algebra index plus 0-based constructor index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConsRef {
    pub alg: AlgId,
    pub idx: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constructor {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeAlgebra {
    pub name: String,
    pub constructors: Vec<Constructor>,
}

impl FreeAlgebra {
    /// A word algebra has exactly one nullary constructor and all others unary.
    pub fn is_word_algebra(&self) -> bool {
        let nullary = self.constructors.iter().filter(|c| c.arity == 0).count();
        let unary = self.constructors.iter().filter(|c| c.arity == 1).count();
        nullary == 1 && nullary + unary == self.constructors.len()
    }

    pub fn arity(&self, idx: u16) -> usize {
        self.constructors[idx as usize].arity
    }

    /// Number of constructors.
    pub fn len(&self) -> usize {
        self.constructors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constructors.is_empty()
    }
}

pub const ALG_U: AlgId = AlgId(0);
pub const ALG_B: AlgId = AlgId(1);
pub const ALG_C: AlgId = AlgId(2);
pub const ALG_D: AlgId = AlgId(3);

/// `c1_U` (unary successor).
pub const C1_U: ConsRef = ConsRef { alg: ALG_U, idx: 0 };
/// `c2_U` (zero).
pub const C2_U: ConsRef = ConsRef { alg: ALG_U, idx: 1 };
pub const C1_B: ConsRef = ConsRef { alg: ALG_B, idx: 0 };
pub const C2_B: ConsRef = ConsRef { alg: ALG_B, idx: 1 };
pub const C3_B: ConsRef = ConsRef { alg: ALG_B, idx: 2 };
/// `c1_C` (binary node).
pub const C1_C: ConsRef = ConsRef { alg: ALG_C, idx: 0 };
/// `c2_C` (leaf).
pub const C2_C: ConsRef = ConsRef { alg: ALG_C, idx: 1 };

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("constructor name `{0}` declared twice in the family")]
    DuplicateConstructor(String),
    #[error("algebra name `{0}` declared twice")]
    DuplicateAlgebra(String),
    #[error("unknown algebra `{0}`")]
    UnknownAlgebra(String),
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(String),
    #[error("term is not built from constructors of algebra `{0}`")]
    WrongAlgebra(String),
}

/// A fixed, finite family of free algebras with pairwise disjoint
/// constructor names. The four built-ins are always present.
#[derive(Debug, Clone)]
pub struct AlgebraFamily {
    algebras: Vec<FreeAlgebra>,
}

impl Default for AlgebraFamily {
    fn default() -> Self {
        Self::new()
    }
}

impl AlgebraFamily {
    pub fn new() -> Self {
        let mk = |name: &str, cs: &[(u16, usize)]| FreeAlgebra {
            name: name.to_string(),
            constructors: cs
                .iter()
                .map(|&(i, arity)| Constructor {
                    name: format!("c{}_{}", i, name),
                    arity,
                })
                .collect(),
        };
        AlgebraFamily {
            algebras: vec![
                mk("U", &[(1, 1), (2, 0)]),
                mk("B", &[(1, 1), (2, 1), (3, 0)]),
                mk("C", &[(1, 2), (2, 0)]),
                mk("D", &[(1, 2), (2, 2), (3, 0)]),
            ],
        }
    }

    pub fn declare(&mut self, alg: FreeAlgebra) -> Result<AlgId, AlgebraError> {
        if self.algebras.iter().any(|a| a.name == alg.name) {
            return Err(AlgebraError::DuplicateAlgebra(alg.name));
        }
        for c in &alg.constructors {
            if self.lookup_cons(&c.name).is_some() {
                return Err(AlgebraError::DuplicateConstructor(c.name.clone()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &alg.constructors {
            if !seen.insert(&c.name) {
                return Err(AlgebraError::DuplicateConstructor(c.name.clone()));
            }
        }
        self.algebras.push(alg);
        Ok(AlgId(self.algebras.len() as u16 - 1))
    }

    pub fn algebra(&self, id: AlgId) -> &FreeAlgebra {
        &self.algebras[id.0 as usize]
    }

    pub fn algebras(&self) -> impl Iterator<Item = (AlgId, &FreeAlgebra)> {
        self.algebras
            .iter()
            .enumerate()
            .map(|(i, a)| (AlgId(i as u16), a))
    }

    pub fn lookup_algebra(&self, name: &str) -> Option<AlgId> {
        self.algebras
            .iter()
            .position(|a| a.name == name)
            .map(|i| AlgId(i as u16))
    }

    pub fn lookup_cons(&self, name: &str) -> Option<ConsRef> {
        for (i, a) in self.algebras.iter().enumerate() {
            if let Some(j) = a.constructors.iter().position(|c| c.name == name) {
                return Some(ConsRef {
                    alg: AlgId(i as u16),
                    idx: j as u16,
                });
            }
        }
        None
    }

    pub fn cons(&self, c: ConsRef) -> &Constructor {
        &self.algebra(c.alg).constructors[c.idx as usize]
    }

    pub fn arity(&self, c: ConsRef) -> usize {
        self.cons(c).arity
    }

    pub fn cons_name(&self, c: ConsRef) -> &str {
        &self.cons(c).name
    }

    /// Maximum constructor arity across the whole family.
    pub fn max_arity(&self) -> usize {
        self.algebras
            .iter()
            .flat_map(|a| a.constructors.iter())
            .map(|c| c.arity)
            .max()
            .unwrap_or(0)
    }
}

/// A first-order term of some algebra: a constructor applied to
/// arity-many algebraic subterms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlgebraicTerm {
    pub cons: ConsRef,
    pub args: Vec<AlgebraicTerm>,
}

impl AlgebraicTerm {
    pub fn leaf(cons: ConsRef) -> Self {
        AlgebraicTerm { cons, args: vec![] }
    }

    pub fn new(cons: ConsRef, args: Vec<AlgebraicTerm>) -> Self {
        AlgebraicTerm { cons, args }
    }

    /// Size = number of constructor occurrences.
    pub fn size(&self) -> usize {
        1 + self.args.iter().map(|a| a.size()).sum::<usize>()
    }

    pub fn algebra(&self) -> AlgId {
        self.cons.alg
    }

    /// Every subterm occurrence, paired with the path of child indices
    /// leading to it from the root.
    pub fn occurrences(&self) -> Vec<(Vec<usize>, &AlgebraicTerm)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), self)];
        while let Some((path, t)) = stack.pop() {
            for (i, a) in t.args.iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, a));
            }
            out.push((path, t));
        }
        out
    }

    pub fn display<'a>(&'a self, family: &'a AlgebraFamily) -> DisplayAlgTerm<'a> {
        DisplayAlgTerm { term: self, family }
    }
}

pub struct DisplayAlgTerm<'a> {
    term: &'a AlgebraicTerm,
    family: &'a AlgebraFamily,
}

impl fmt::Display for DisplayAlgTerm<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &AlgebraicTerm, family: &AlgebraFamily, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{}", family.cons_name(t.cons))?;
            for a in &t.args {
                if a.args.is_empty() {
                    write!(f, " {}", family.cons_name(a.cons))?;
                } else {
                    write!(f, " (")?;
                    go(a, family, f)?;
                    write!(f, ")")?;
                }
            }
            Ok(())
        }
        go(self.term, self.family, f)
    }
}

/// Unary numeral: `0` is `c2_U`, `n+1` is `c1_U n`.
pub fn encode_nat(n: u64) -> AlgebraicTerm {
    let mut t = AlgebraicTerm::leaf(C2_U);
    for _ in 0..n {
        t = AlgebraicTerm::new(C1_U, vec![t]);
    }
    t
}

pub fn decode_nat(t: &AlgebraicTerm) -> Result<u64, AlgebraError> {
    let mut n = 0u64;
    let mut cur = t;
    loop {
        if cur.cons == C2_U {
            return Ok(n);
        } else if cur.cons == C1_U {
            n += 1;
            cur = &cur.args[0];
        } else {
            return Err(AlgebraError::WrongAlgebra("U".to_string()));
        }
    }
}

/// Binary string: empty is `c3_B`, `0s` is `c1_B s`, `1s` is `c2_B s`.
pub fn encode_binstring(s: &str) -> AlgebraicTerm {
    let mut t = AlgebraicTerm::leaf(C3_B);
    for ch in s.chars().rev() {
        let c = if ch == '0' { C1_B } else { C2_B };
        t = AlgebraicTerm::new(c, vec![t]);
    }
    t
}

pub fn decode_binstring(t: &AlgebraicTerm) -> Result<String, AlgebraError> {
    let mut out = String::new();
    let mut cur = t;
    loop {
        if cur.cons == C3_B {
            return Ok(out);
        } else if cur.cons == C1_B {
            out.push('0');
            cur = &cur.args[0];
        } else if cur.cons == C2_B {
            out.push('1');
            cur = &cur.args[0];
        } else {
            return Err(AlgebraError::WrongAlgebra("B".to_string()));
        }
    }
}

/// Tree coding of a unary numeral: `0` maps to the leaf, `n+1` to a
/// node whose left child codes `n` and whose right child is a leaf.
pub fn overline(t: &AlgebraicTerm) -> Result<AlgebraicTerm, AlgebraError> {
    if t.cons == C2_U {
        Ok(AlgebraicTerm::leaf(C2_C))
    } else if t.cons == C1_U {
        let inner = overline(&t.args[0])?;
        Ok(AlgebraicTerm::new(
            C1_C,
            vec![inner, AlgebraicTerm::leaf(C2_C)],
        ))
    } else {
        Err(AlgebraError::WrongAlgebra("U".to_string()))
    }
}

/// Complete binary tree of height `n` (2^n leaves).
pub fn complete_tree(n: u32) -> AlgebraicTerm {
    if n == 0 {
        AlgebraicTerm::leaf(C2_C)
    } else {
        let sub = complete_tree(n - 1);
        AlgebraicTerm::new(C1_C, vec![sub.clone(), sub])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_word_algebra_status() {
        let fam = AlgebraFamily::new();
        assert!(fam.algebra(ALG_U).is_word_algebra());
        assert!(fam.algebra(ALG_B).is_word_algebra());
        assert!(!fam.algebra(ALG_C).is_word_algebra());
        assert!(!fam.algebra(ALG_D).is_word_algebra());
    }

    #[test]
    fn family_max_arity_is_two() {
        let fam = AlgebraFamily::new();
        assert_eq!(fam.max_arity(), 2);
    }

    #[test]
    fn nat_encoding() {
        let fam = AlgebraFamily::new();
        assert_eq!(encode_nat(0), AlgebraicTerm::leaf(C2_U));
        let two = encode_nat(2);
        assert_eq!(format!("{}", two.display(&fam)), "c1_U (c1_U c2_U)");
        assert_eq!(two.size(), 3);
        for n in 0..=16 {
            assert_eq!(decode_nat(&encode_nat(n)).unwrap(), n);
            assert_eq!(encode_nat(n).size() as u64, n + 1);
        }
    }

    #[test]
    fn binstring_encoding() {
        let fam = AlgebraFamily::new();
        assert_eq!(encode_binstring(""), AlgebraicTerm::leaf(C3_B));
        let s = encode_binstring("01");
        assert_eq!(format!("{}", s.display(&fam)), "c1_B (c2_B c3_B)");
        for s in ["", "0", "1", "101", "0110", "111000"] {
            assert_eq!(decode_binstring(&encode_binstring(s)).unwrap(), s);
        }
    }

    #[test]
    fn overline_shape() {
        assert_eq!(overline(&encode_nat(0)).unwrap(), AlgebraicTerm::leaf(C2_C));
        let one = overline(&encode_nat(1)).unwrap();
        assert_eq!(
            one,
            AlgebraicTerm::new(
                C1_C,
                vec![AlgebraicTerm::leaf(C2_C), AlgebraicTerm::leaf(C2_C)]
            )
        );
        // decoding a B-term as U fails
        assert!(overline(&encode_binstring("0")).is_err());
    }

    #[test]
    fn complete_tree_leaf_count() {
        for n in 0..6 {
            let t = complete_tree(n);
            let leaves = t
                .occurrences()
                .iter()
                .filter(|(_, s)| s.cons == C2_C)
                .count();
            assert_eq!(leaves, 1 << n);
            assert_eq!(t.size() as u32, (1 << (n + 1)) - 1);
        }
    }

    #[test]
    fn user_algebra_declaration() {
        let mut fam = AlgebraFamily::new();
        let id = fam
            .declare(FreeAlgebra {
                name: "T".into(),
                constructors: vec![
                    Constructor { name: "c1_T".into(), arity: 3 },
                    Constructor { name: "c2_T".into(), arity: 0 },
                ],
            })
            .unwrap();
        assert_eq!(fam.lookup_cons("c1_T"), Some(ConsRef { alg: id, idx: 0 }));
        assert_eq!(fam.max_arity(), 3);
        // duplicates rejected
        assert!(fam
            .declare(FreeAlgebra {
                name: "T2".into(),
                constructors: vec![Constructor { name: "c1_T".into(), arity: 1 }],
            })
            .is_err());
    }
}
