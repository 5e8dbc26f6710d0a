//! Dialectal tweet corpus construction and dialect identification.

pub mod analysis;
pub mod country;
pub mod evalkit;
pub mod fixture;
pub mod gazetteer;
pub mod lintext;
pub mod pipeline;
pub mod records;
pub mod textnorm;
pub mod weaklabel;

pub use country::Country;
