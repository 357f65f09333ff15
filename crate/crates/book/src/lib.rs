//! The guide's chapters as doc modules, so `cargo test` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/modulus.md")]
pub mod modulus {}
#[doc = include_str!("../../../book/src/slopes.md")]
pub mod slopes {}
#[doc = include_str!("../../../book/src/criteria.md")]
pub mod criteria {}
#[doc = include_str!("../../../book/src/perturbation.md")]
pub mod perturbation {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
