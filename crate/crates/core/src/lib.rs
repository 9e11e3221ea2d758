//! SL(2,C) characters of the one-holed torus in trace coordinates.
//!
//! A character is a triple `(x, y, z)` of traces at the slopes `0/1`, `1/0`
//! and `1/1`. Traces at other slopes come from walking the Farey tree
//! ([`farey`], [`character`]). On top of that sit a certificate-producing
//! decision procedure for the Bowditch Q-conditions ([`bq`]), the
//! McShane-type identity series ([`series`]), fixed characters of
//! punctured-torus bundles with their identities ([`bundle`]) and a search
//! for end invariants ([`ends`]).
//!
//! ```
//! use fricke::bq::{decide_bq, BqStatus};
//! use fricke::character::{Character, TraceTriple};
//!
//! let c = Character::new("3,3,3".parse::<TraceTriple>()?);
//! assert_eq!(decide_bq(&c, 10_000)?.status, BqStatus::Satisfies);
//! # Ok::<(), fricke::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bq;
pub mod bundle;
pub mod character;
pub mod ends;
pub mod error;
pub mod farey;
pub mod quadratic;
pub mod series;

pub use error::{Error, Result};

/// Chapters of the guide in `book/src`, compiled as doc-tests so that their
/// examples stay in sync with the library.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/farey.md")]
    pub mod farey {}
    #[doc = include_str!("../../../book/src/traces.md")]
    pub mod traces {}
    #[doc = include_str!("../../../book/src/bq.md")]
    pub mod bq {}
    #[doc = include_str!("../../../book/src/identities.md")]
    pub mod identities {}
    #[doc = include_str!("../../../book/src/bundles.md")]
    pub mod bundles {}
    #[doc = include_str!("../../../book/src/ends.md")]
    pub mod ends {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
