//! Structural panel estimation of the basic reproduction number.
//!
//! Reported case counts are turned into a scaled transmission rate
//! (`beta_t / gamma`), which is regressed on lagged mitigating factors and a
//! precautionary threshold indicator with one intercept per region. Under the
//! single-group SIR moment condition those intercepts are the regions' basic
//! reproduction numbers.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, ingestion and
//! the command line live in the companion `r0-pipeline` crate.
#![no_std]

extern crate alloc;

pub mod calendar;
pub mod epi;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod panel;
pub mod simulate;

pub use calendar::Day;
pub use epi::{EpiFrame, EpiOptions, MfHorizon, MfSchedule, RegionSeries, Smoothing, ThresholdSource};
pub use error::{Error, Result};
pub use inference::{CovarianceReport, SeFlavor};
pub use panel::{
    CovariateSet, Interaction, ModelSpec, Panel, PanelObservation, PanelSpec, ThresholdFit, ThresholdSearch,
};
