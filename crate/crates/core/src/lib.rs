//! Simulation and analytics for relativistic quantum bit commitment and coin
//! tossing with stretched two-hump states.
//!
//! The crate is organised bottom-up:
//!
//! - [`wavepacket`]: light-cone amplitude profiles, window masses and the
//!   two-hump stretched states.
//! - [`measurement`]: outcome sampling, verification, minimum-error
//!   discrimination and the error bookkeeping that goes with it.
//! - [`parity`]: block-code combinatorics, closed-form guessing
//!   probabilities and the exact parity guesser.
//! - [`protocol`]: event-driven two-party state machines with honest and
//!   cheating strategies.
//! - [`experiment`]: seeded Monte Carlo campaigns with Wilson intervals.

pub mod bit;
pub mod experiment;
pub mod measurement;
pub mod parity;
pub mod protocol;
mod quad;
pub mod rng;
pub mod wavepacket;

pub use bit::Bit;
