//! Cross-validating performance engines for the X-duplex adaptive relay: a
//! two-antenna amplify-and-forward relay that jointly selects its duplex
//! mode (full or half) and Tx/Rx antenna assignment per fading block to
//! maximize the equivalent end-to-end SINR.
//!
//! Two engines cover the same metrics and check each other:
//!
//! * [`mc`] — a seeded, worker-count-invariant Monte Carlo simulator for
//!   outage probability, semi-analytic SER, empirical CDFs, and mode
//!   selection statistics;
//! * [`analytic`] — the closed-form asymptotic CDF, outage approximation,
//!   average SER (with a quadrature companion), FD error floor, and
//!   finite-SNR diversity orders.
//!
//! Supporting layers: [`specfun`] (Q, Bessel K, gamma, incomplete gamma,
//! parabolic cylinder D with quadrature oracles), [`quad`] (adaptive
//! Gauss-Kronrod), [`channel`] (parameters and the fading generator),
//! [`duplex`] (per-realization SINRs and selection rules), and [`bench`]
//! (sweep orchestration, CSV, self test).

pub mod analytic;
pub mod bench;
pub mod channel;
pub mod duplex;
mod error;
pub mod mc;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
