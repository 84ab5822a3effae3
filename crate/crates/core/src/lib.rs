//! Dunkl operators for finite reflection groups, with exact symbolic and
//! numerical back ends and checks of sharp Hardy-type inequalities.
pub mod adapted;
pub mod corpus;
pub mod domains;
pub mod dunklnum;
pub mod error;
pub mod harmonics;
pub mod inequalities;
pub mod polyalg;
pub mod powerlaw;
pub mod quad;
pub mod rational;
pub mod reflection;
pub mod report;
pub mod suites;
pub use error::{Error, Result};
