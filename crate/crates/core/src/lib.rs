//! Exact and certified computations of hitting times for circle rotations,
//! torus translations and translation flows.
//!
//! Modules:
//! - [`cf`]: continued fractions, convergents, best-approximation norms.
//! - [`builder`]: intertwined pairs with prescribed denominator growth.
//! - [`orbit`]: exact hitting, entry and recurrence times.
//! - [`indicator`]: finite-scale hitting-time indicators.
//! - [`measure`]: exact level-set measures and window schedules.
//! - [`flow`]: translation flows, reparametrizations and sections.
//! - [`corr`]: correlations and decay-bound evaluators.
//! - [`trig`]: trigonometric polynomials with certified bounds.

pub mod angle;
pub mod builder;
pub mod certified;
pub mod cf;
pub mod corr;
pub mod error;
pub mod flow;
pub mod indicator;
pub mod io;
pub mod measure;
pub mod orbit;
pub mod sampling;
pub mod trig;

pub use angle::{Angle, AngleSource, CirclePoint, TorusPoint};
pub use cf::{ContinuedFraction, Convergent};
pub use error::{Error, Result};
pub use orbit::{HittingRecord, Translation};
