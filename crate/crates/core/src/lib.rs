//! Randomness certified by Kochen–Specker contextuality.
//!
//! Two constructions are modeled exactly and by sampling:
//!
//! * the two-qubit magic square, cast as a prepare-and-measure game whose
//!   quantum winning probability is 1 (noncontextual bound 5/6) and whose
//!   maximally mixed realization certifies 2 bits per round;
//! * the three-qubit magic star (Mermin pentagram), with inequality value 5
//!   against a noncontextual bound of 3, certifying 3 bits per round.
//!
//! Modules, bottom up: [`linalg`] (dense complex matrices), [`observables`]
//! (Pauli tables and contexts), [`engine`] (density states and Lüders
//! measurement), [`oracle`] (exhaustive noncontextual bounds), [`game`]
//! (inequalities, winning and guessing probabilities), [`simulator`]
//! (seeded Monte-Carlo rounds), and [`verify`], [`report`], [`cli`] for the
//! command-line tool.

pub mod cli;
pub mod engine;
pub mod error;
pub mod game;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod report;
pub mod simulator;
pub mod verify;

pub use engine::{maximally_mixed, DensityState};
pub use error::{Error, Result};
pub use game::{certify, CertificationReport, GameInputs, Scenario, SquareGame, StarGame};
pub use linalg::ComplexMatrix;
pub use observables::{MagicSquare, MagicStar, MeasurementContext, Observable};
