//! IL types.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimType {
    Nat,
    Int32,
    Int64,
    Float32,
    Float64,
    Bool,
}

impl PrimType {
    pub const ALL: [PrimType; 6] = [
        PrimType::Nat,
        PrimType::Int32,
        PrimType::Int64,
        PrimType::Float32,
        PrimType::Float64,
        PrimType::Bool,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimType::Nat => "nat",
            PrimType::Int32 => "int_32",
            PrimType::Int64 => "int_64",
            PrimType::Float32 => "float_32",
            PrimType::Float64 => "float_64",
            PrimType::Bool => "bool",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        PrimType::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Types a natural-number literal may be given.
    pub fn admits_literal(self) -> bool {
        matches!(self, PrimType::Nat | PrimType::Int32 | PrimType::Int64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IterKind {
    List,
    Opt,
}

impl IterKind {
    pub fn suffix(self) -> &'static str {
        match self {
            IterKind::List => "*",
            IterKind::Opt => "?",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IlType {
    Prim(PrimType),
    Syn(String),
    Tuple(Vec<IlType>),
    Iter(Box<IlType>, IterKind),
}

impl IlType {
    pub fn syn(name: impl Into<String>) -> Self {
        IlType::Syn(name.into())
    }

    pub fn iter(self, kind: IterKind) -> Self {
        IlType::Iter(Box::new(self), kind)
    }

    pub fn list(self) -> Self {
        self.iter(IterKind::List)
    }

    pub fn opt(self) -> Self {
        self.iter(IterKind::Opt)
    }

    /// Element type and iterator of an iterated type.
    pub fn as_iter(&self) -> Option<(&IlType, IterKind)> {
        match self {
            IlType::Iter(t, k) => Some((t, *k)),
            _ => None,
        }
    }

    pub fn is_iter(&self) -> bool {
        matches!(self, IlType::Iter(..))
    }

    /// Removes up to `n` outer iterator layers.
    pub fn strip(&self, n: usize) -> &IlType {
        let mut t = self;
        for _ in 0..n {
            match t {
                IlType::Iter(inner, _) => t = inner,
                _ => break,
            }
        }
        t
    }

    /// Number of iterator layers.
    pub fn depth(&self) -> usize {
        match self {
            IlType::Iter(t, _) => 1 + t.depth(),
            _ => 0,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match self {
            IlType::Iter(inner, IterKind::Opt) if matches!(**inner, IlType::Iter(_, IterKind::Opt)) => false,
            IlType::Iter(inner, _) => inner.is_well_formed(),
            IlType::Tuple(ts) => ts.iter().all(IlType::is_well_formed),
            _ => true,
        }
    }
}

impl fmt::Display for IlType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IlType::Prim(p) => f.write_str(p.name()),
            IlType::Syn(s) => f.write_str(s),
            IlType::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            IlType::Iter(t, k) => write!(f, "{t}{}", k.suffix()),
        }
    }
}
