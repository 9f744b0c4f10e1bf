//! Types: tiered base types and linear arrows, plus the subsystem
//! selectors (contraction class and ramification).

use std::fmt;

use crate::algebra::{AlgebraFamily, AlgId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Base(AlgId, u32),
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Box::new(dom), Box::new(cod))
    }

    /// `A ⊸^n B`: `n` copies of `A` in front of `B`, right-associated.
    pub fn arrow_n(dom: &Type, n: usize, cod: Type) -> Type {
        let mut t = cod;
        for _ in 0..n {
            t = Type::arrow(dom.clone(), t);
        }
        t
    }

    /// The level: tier of a base type, max over an arrow.
    pub fn level(&self) -> u32 {
        match self {
            Type::Base(_, n) => *n,
            Type::Arrow(a, b) => a.level().max(b.level()),
        }
    }

    pub fn as_base(&self) -> Option<(AlgId, u32)> {
        match self {
            Type::Base(a, n) => Some((*a, *n)),
            _ => None,
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Type::Base(..))
    }

    /// Strip `n` leading arrows, checking each domain equals `dom`.
    pub fn strip_args(&self, dom: &Type, n: usize) -> Option<&Type> {
        let mut t = self;
        for _ in 0..n {
            match t {
                Type::Arrow(a, b) if a.as_ref() == dom => t = b,
                _ => return None,
            }
        }
        Some(t)
    }

    pub fn display<'a>(&'a self, family: &'a AlgebraFamily) -> DisplayType<'a> {
        DisplayType { ty: self, family }
    }
}

pub struct DisplayType<'a> {
    ty: &'a Type,
    family: &'a AlgebraFamily,
}

impl fmt::Display for DisplayType<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Type, family: &AlgebraFamily, left: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                Type::Base(a, n) => write!(f, "{}^{}", family.algebra(*a).name, n),
                Type::Arrow(a, b) => {
                    if left {
                        write!(f, "(")?;
                    }
                    go(a, family, true, f)?;
                    write!(f, " -o ")?;
                    go(b, family, false, f)?;
                    if left {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self.ty, self.family, false, f)
    }
}

/// The class of types at which contraction (and nonempty recursion
/// branch contexts) is permitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionClass {
    /// All base types.
    All,
    /// Base types of word algebras only.
    WordBases,
    /// No types at all.
    Empty,
    /// A caller-supplied predicate.
    Custom(fn(&AlgebraFamily, &Type) -> bool),
}

impl ContractionClass {
    pub fn admits(&self, family: &AlgebraFamily, ty: &Type) -> bool {
        match self {
            ContractionClass::All => ty.is_base(),
            ContractionClass::WordBases => match ty.as_base() {
                Some((a, _)) => family.algebra(a).is_word_algebra(),
                None => false,
            },
            ContractionClass::Empty => false,
            ContractionClass::Custom(p) => p(family, ty),
        }
    }
}

/// A subsystem: a contraction class plus an optional ramification
/// side condition on recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsystem {
    pub contraction: ContractionClass,
    pub ramified: bool,
}

impl Subsystem {
    pub const H_A: Subsystem = Subsystem { contraction: ContractionClass::All, ramified: false };
    pub const H_W: Subsystem = Subsystem { contraction: ContractionClass::WordBases, ramified: false };
    pub const H_0: Subsystem = Subsystem { contraction: ContractionClass::Empty, ramified: false };
    pub const RH_A: Subsystem = Subsystem { contraction: ContractionClass::All, ramified: true };
    pub const RH_W: Subsystem = Subsystem { contraction: ContractionClass::WordBases, ramified: true };
    pub const RH_0: Subsystem = Subsystem { contraction: ContractionClass::Empty, ramified: true };

    /// The six standard subsystems, in a fixed order.
    pub const ALL: [Subsystem; 6] = [
        Subsystem::H_A,
        Subsystem::H_W,
        Subsystem::H_0,
        Subsystem::RH_A,
        Subsystem::RH_W,
        Subsystem::RH_0,
    ];

    /// Parse a selector: `H(A) | H(W) | H(0) | RH(A) | RH(W) | RH(0)`.
    pub fn parse(s: &str) -> Option<Subsystem> {
        match s.trim() {
            "H(A)" => Some(Subsystem::H_A),
            "H(W)" => Some(Subsystem::H_W),
            "H(0)" => Some(Subsystem::H_0),
            "RH(A)" => Some(Subsystem::RH_A),
            "RH(W)" => Some(Subsystem::RH_W),
            "RH(0)" => Some(Subsystem::RH_0),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.ramified, self.contraction) {
            (false, ContractionClass::All) => "H(A)",
            (false, ContractionClass::WordBases) => "H(W)",
            (false, ContractionClass::Empty) => "H(0)",
            (true, ContractionClass::All) => "RH(A)",
            (true, ContractionClass::WordBases) => "RH(W)",
            (true, ContractionClass::Empty) => "RH(0)",
            (_, ContractionClass::Custom(_)) => "custom",
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ALG_B, ALG_C, ALG_U};

    #[test]
    fn levels() {
        let fam = AlgebraFamily::new();
        let u0 = Type::Base(ALG_U, 0);
        let u1 = Type::Base(ALG_U, 1);
        let b2 = Type::Base(ALG_B, 2);
        assert_eq!(u0.level(), 0);
        assert_eq!(Type::arrow(u1.clone(), u0.clone()).level(), 1);
        let nested = Type::arrow(Type::arrow(b2, u1), u0);
        assert_eq!(nested.level(), 2);
        assert_eq!(format!("{}", nested.display(&fam)), "(B^2 -o U^1) -o U^0");
    }

    #[test]
    fn arrow_n_unfolding() {
        let u5 = Type::Base(ALG_U, 5);
        assert_eq!(Type::arrow_n(&u5, 0, u5.clone()), u5);
        assert_eq!(
            Type::arrow_n(&u5, 1, u5.clone()),
            Type::arrow(u5.clone(), u5.clone())
        );
    }

    #[test]
    fn contraction_classes() {
        let fam = AlgebraFamily::new();
        let u0 = Type::Base(ALG_U, 0);
        let c0 = Type::Base(ALG_C, 0);
        let arr = Type::arrow(u0.clone(), u0.clone());
        assert!(ContractionClass::All.admits(&fam, &u0));
        assert!(ContractionClass::All.admits(&fam, &c0));
        assert!(!ContractionClass::All.admits(&fam, &arr));
        assert!(ContractionClass::WordBases.admits(&fam, &u0));
        assert!(!ContractionClass::WordBases.admits(&fam, &c0));
        assert!(!ContractionClass::Empty.admits(&fam, &u0));
    }

    #[test]
    fn subsystem_names_roundtrip() {
        for sys in Subsystem::ALL {
            assert_eq!(Subsystem::parse(sys.name()), Some(sys));
        }
        assert_eq!(Subsystem::parse("X(A)"), None);
    }
}
