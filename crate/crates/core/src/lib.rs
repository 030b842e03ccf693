//! Exact arithmetic for Dirichlet L-values at negative integers along the
//! cyclotomic Z_2-tower, their 2-adic valuations in Q(ζ_{2^n}), and the
//! Iwasawa invariants of the 2-primary even K-groups they control.
//!
//! The crate is organised bottom-up:
//!
//! * [`cyclotomic`]: exact elements of Q(ζ_{2^n}) and the normalised valuation `ord2`.
//! * [`characters`]: the characters χ_n, ψ_d and their products.
//! * [`bernoulli`], [`sums`], [`lvalues`]: Bernoulli numbers, parallel exact character
//!   sums and L-values (plus Dedekind zeta values of the tower layers).
//! * [`cache`]: persistent JSON-lines cache for L-values.
//! * [`iwasawa`]: closed-form predictions, K-group orders and invariant triples.
//! * [`verify`]: executable congruence checks with re-verifiable witnesses.

pub mod arith;
pub mod bernoulli;
pub mod cache;
pub mod characters;
pub mod cyclotomic;
pub mod error;
pub mod iwasawa;
pub mod lvalues;
pub mod rational;
pub mod sums;
pub mod verify;

pub use characters::{CharSpec, CharValue, DirichletCharacter, FrobeniusConstant};
pub use cyclotomic::{CyclotomicNumber, DyadicValuation};
pub use error::{Error, Result};
pub use lvalues::{LValueEngine, LValueResult, SizeGuard};

/// Version tag written into every JSON document and cache file this crate produces.
pub const SCHEMA_VERSION: u32 = 1;
