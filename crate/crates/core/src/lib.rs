//! ReLU networks as eventually-always weak Büchi automata over binary
//! encodings of reals, with robustness, reachability and sufficient-reason
//! checks decided by emptiness.

pub mod analysis;
pub mod automaton;
pub mod error;
pub mod formats;
pub mod network;
pub mod numeric;
pub mod oracle;
pub mod relations;

pub use automaton::{Automaton, Cube, LetterSet, Verdict};
pub use error::{Error, Result};
pub use numeric::{encode, make_rational, stack, Letter, Rational, UPWord};
pub use network::{eval_exact, Activation, Layer, Network, Node};
