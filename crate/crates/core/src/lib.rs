//! Discrete-time Monte Carlo simulator for mmWave vehicle-to-vehicle beam
//! alignment and tracking.
//!
//! Three pointing strategies are compared over a two-vehicle line-of-sight
//! link whose antenna arrays pitch with the vehicle suspension:
//!
//! * conventional beam alignment repeated at the start of each beacon
//!   interval,
//! * inertial-sensor-aided tracking, where each vehicle predicts its stroke
//!   and shares the prediction at the start of the interval,
//! * an oracle with exact knowledge of the geometry at every step.
//!
//! The crate is organised bottom-up: [`dynamics`] produces stroke traces,
//! [`geometry`] turns heights into angles, [`array`] and [`channel`] form the
//! link budget, [`protocol`] holds frame timing and the pointing policies, and
//! [`sim`] assembles everything into Monte Carlo runs and sweeps.

pub mod array;
pub mod channel;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod protocol;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
