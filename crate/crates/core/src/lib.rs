//! Access-structure hiding verifiable secret sharing.
//!
//! The crate is organised bottom-up:
//!
//! * [`numt`]: modular arithmetic, CRT and multilinear polynomials.
//! * [`setsys`]: BBR polynomials, Grolmusz set-systems and the merged
//!   non-uniform system with restricted intersections.
//! * [`cover`]: covering vectors and the multilinear forms over them.
//! * [`tokens`]: access-structure tokens and the membership test.
//! * [`lattice`]: PRIM-LWE secrets, gadget trapdoors and preimage sampling.
//! * [`vss`]: dealing, reconstruction and share verification.
//! * [`codec`] and [`sim`]: canonical documents and the fault-injection harness.
//!
//! Hot loops run on rayon when the `parallel` feature is on (the default).
//! Every such entry point takes an [`Execution`] so both paths can be compared
//! in one build.

pub mod bitset;
pub mod codec;
pub mod cover;
pub mod lattice;
pub mod numt;
mod par;
pub mod rng;
pub mod setsys;
pub mod sim;
pub mod tokens;
pub mod vss;

pub use bitset::BitSet;
pub use par::Execution;
pub use rng::Streams;
