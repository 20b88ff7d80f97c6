//! Dynamic lower envelopes of planes in three dimensions.
//!
//! The crate provides exact plane primitives ([`geom`]), vertical shallow
//! cuttings ([`cutting`]), Chan's recursive envelope structure ([`chan`]), a
//! two-tier variant with a main and an auxiliary subset ([`star`]), k-lowest
//! and below-point reporting ([`kreport`]), nearest-neighbor frontends
//! ([`nn2d`]), shortest paths in disk proximity graphs ([`sssp`]) and the
//! brute-force references everything is tested against ([`oracle`]).

pub mod chan;
pub mod cutting;
pub mod error;
pub mod exact;
pub mod geom;
pub mod kreport;
pub mod nn2d;
pub mod oracle;
pub mod sssp;
pub mod star;

pub use error::{Error, Result};
