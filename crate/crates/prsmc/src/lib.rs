//! Acceptance problems and ALTL model checking for process rewrite systems
//! in normal form.

pub mod altl;
pub mod compare;
pub mod construct;
pub mod decide;
pub mod oracle;
pub mod par_engine;
pub mod seq_engine;
pub mod verdict;
pub mod witness;
mod graph;
pub mod fixtures;
pub mod gen;
pub mod syntax;
pub mod system;
pub mod terms;
