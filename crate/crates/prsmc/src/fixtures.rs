//! The shipped example systems.

use crate::syntax::parse_system;
use crate::system::Mbrs;

pub const S1: &str = include_str!("../../../fixtures/S1.prs");
pub const S1_PRIME: &str = include_str!("../../../fixtures/S1prime.prs");
pub const S2: &str = include_str!("../../../fixtures/S2.prs");

pub fn s1() -> Mbrs {
    parse_system(S1).expect("fixture parses")
}

pub fn s1_prime() -> Mbrs {
    parse_system(S1_PRIME).expect("fixture parses")
}

pub fn s2() -> Mbrs {
    parse_system(S2).expect("fixture parses")
}
