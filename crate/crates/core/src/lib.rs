//! Active constellation extension (ACE) for single-antenna, space-time and
//! space-frequency block coded OFDM.
//!
//! The crate is organised bottom-up:
//!
//! - [`constellation`]: QPSK / 16-QAM mapping, nearest-point demapping and the
//!   ACE extension regions with their orthogonal projection.
//! - [`transforms`]: oversampled OFDM synthesis and analysis plus the index
//!   helpers (circular shift, conjugate time reversal) used by the encoders.
//! - [`ace`]: the clip / filter / project loop on a single frame.
//! - [`stbc`]: Alamouti and four-antenna quasi-orthogonal STBC, and ACE ahead
//!   of STBC encoding.
//! - [`sfbc`]: subblock algebra, SFBC codes, Sub-ACE and Selective-ACE.
//! - [`metrics`]: PAPR, CCDF and CCDF read-out.
//!
//! All frames use `Complex64` samples. The transform pair is unitary, so the
//! mean time-domain power of a unit-power constellation on `n_c` of `n` bins
//! is `n_c / n`.

pub mod ace;
pub mod constellation;
mod error;
pub mod metrics;
pub mod sfbc;
pub mod stbc;
pub mod transforms;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// One complex baseband sample or symbol.
pub type Sample = Complex64;

pub use ace::{AceDiagnostics, AceParams};
pub use constellation::{Constellation, Modulation, Region, RegionClass};
pub use metrics::{CcdfCurve, PaprSample};
pub use sfbc::{SelectiveAceState, SfbcCode, SubblockSet};
pub use stbc::{AntennaTimeSet, StbcGrid};
pub use transforms::{Ofdm, OversamplingConfig, SymbolFrame, TimeFrame};
