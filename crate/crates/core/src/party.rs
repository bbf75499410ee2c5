//! Identities of the three generals.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the three generals. `A` is the commanding general; `B` and `C` are
/// the lieutenants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    /// All parties in canonical order.
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    /// The two lieutenants.
    pub const LIEUTENANTS: [Party; 2] = [Party::B, Party::C];

    /// Index into per-party arrays (A = 0, B = 1, C = 2).
    pub fn index(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        }
    }

    /// The other two parties, in canonical order.
    pub fn others(self) -> [Party; 2] {
        match self {
            Party::A => [Party::B, Party::C],
            Party::B => [Party::A, Party::C],
            Party::C => [Party::A, Party::B],
        }
    }

    /// For a lieutenant, the other lieutenant. `None` for the commander.
    pub fn peer_lieutenant(self) -> Option<Party> {
        match self {
            Party::A => None,
            Party::B => Some(Party::C),
            Party::C => Some(Party::B),
        }
    }

    pub fn is_commander(self) -> bool {
        self == Party::A
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::A => "A",
            Party::B => "B",
            Party::C => "C",
        };
        f.write_str(s)
    }
}
