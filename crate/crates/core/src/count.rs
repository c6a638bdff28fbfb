use std::fmt;

/// A natural number or ω ("as many processes as needed").
///
/// The derived order puts every finite value below `Omega`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Count {
    Fin(u32),
    Omega,
}

impl Count {
    pub const ZERO: Count = Count::Fin(0);

    pub fn is_omega(self) -> bool {
        matches!(self, Count::Omega)
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Count::Fin(k) => Some(k),
            Count::Omega => None,
        }
    }

    pub fn is_zero(self) -> bool {
        self == Count::ZERO
    }

    /// `self + k`, with ω + k = ω.
    pub fn plus(self, k: u32) -> Count {
        match self {
            Count::Fin(a) => Count::Fin(a + k),
            Count::Omega => Count::Omega,
        }
    }

    /// `self - k`, with ω - k = ω; `None` when a finite value would go negative.
    pub fn minus(self, k: u32) -> Option<Count> {
        match self {
            Count::Fin(a) => a.checked_sub(k).map(Count::Fin),
            Count::Omega => Some(Count::Omega),
        }
    }

    /// True iff `self >= k`.
    pub fn covers(self, k: u32) -> bool {
        match self {
            Count::Fin(a) => a >= k,
            Count::Omega => true,
        }
    }
}

impl From<u32> for Count {
    fn from(k: u32) -> Self {
        Count::Fin(k)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Fin(k) => write!(f, "{k}"),
            Count::Omega => f.write_str("omega"),
        }
    }
}
