//! Three-valued answers and search budgets shared by every decision procedure.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<W> {
    Yes(W),
    No,
    /// The search hit a bound before it could conclude.
    Unknown(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "Yes",
            Answer::No => "No",
            Answer::Unknown => "Unknown",
        })
    }
}

impl<W> Verdict<W> {
    pub fn answer(&self) -> Answer {
        match self {
            Verdict::Yes(_) => Answer::Yes,
            Verdict::No => Answer::No,
            Verdict::Unknown(_) => Answer::Unknown,
        }
    }

    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Yes(w) => Some(w),
            _ => None,
        }
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> Verdict<V> {
        match self {
            Verdict::Yes(w) => Verdict::Yes(f(w)),
            Verdict::No => Verdict::No,
            Verdict::Unknown(s) => Verdict::Unknown(s),
        }
    }
}

/// Outcome of checking a property: it holds, a counterexample refutes it,
/// or the search was inconclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check<C> {
    Holds,
    Violated(C),
    Unknown(String),
}

impl<C> Check<C> {
    pub fn answer(&self) -> Answer {
        match self {
            Check::Holds => Answer::Yes,
            Check::Violated(_) => Answer::No,
            Check::Unknown(_) => Answer::Unknown,
        }
    }
}

/// Exploration limits; `nodes` caps stored states, `depth` caps BFS layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub nodes: usize,
    pub depth: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { nodes: 20_000, depth: 14 }
    }
}

impl Budget {
    pub fn nodes(nodes: usize) -> Self {
        Budget { nodes, ..Budget::default() }
    }
}
