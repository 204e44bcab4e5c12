//! Growth series and convexity probes for torus-bundle groups Z^N x_A Z.

pub mod automaton;
pub mod convexity;
pub mod cross_section;
pub mod group;
pub mod language;
pub mod matrix;
pub mod poly;
