//! Link-level Monte Carlo simulator for the two-source multiple access relay
//! channel (MARC).
//!
//! Two sources `S1` and `S2` send packets to a destination `D`, helped by a
//! relay `R` that combines both messages with network coding before
//! forwarding. The crate implements the relay forwarding schemes
//!
//! * analog-NC: amplify the superposed reception and forward it,
//! * DmNC: de-map, XOR, re-map (uncoded),
//! * DF-NC: decode both sources, XOR, re-encode,
//! * QDF-NC: scalar-quantize, decode, XOR, re-encode,
//! * adaptive: per-packet choice between QDF-NC and analog-NC driven by an
//!   error-probability estimate compared against a threshold,
//!
//! together with the modems, channel models, convolutional code, destination
//! recovery and the BER sweep engine needed to compare them.
//!
//! Every random draw comes from a counter-addressed stream, so a sweep is a
//! pure function of its configuration and master seed regardless of how many
//! worker threads run it.

pub mod bitsource;
pub mod channel;
pub mod destination;
mod error;
pub mod fec;
pub mod harness;
pub mod modem;
pub mod presets;
pub mod relay;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
