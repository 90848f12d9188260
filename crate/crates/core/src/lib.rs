//! OQAM-OFDM and WCP-COQAM multicarrier modem.
//!
//! * [`frame`]: lattice parameters, symbol grids and the OQAM staggering map
//! * [`pulse`]: prototype filter generators and the pulse file format
//! * [`zak`]: discrete Zak transform and pulse orthogonalization
//! * [`orthogonality`]: numerical orthogonality checks and a Gram-matrix oracle
//! * [`modem`]: transmitters, cyclic prefix and matched-filter receivers
//! * [`channel`]: AWGN, theoretical SER and Monte-Carlo sweeps
//! * [`cli`]: the `coqam` command-line tool

pub mod channel;
pub mod cli;
pub mod error;
pub mod frame;
pub mod modem;
pub mod orthogonality;
pub mod pulse;
pub mod zak;

pub use error::{Error, Result};
pub use frame::{destagger, stagger, FrameParams, QamGrid, RealGrid};
pub use modem::Waveform;
pub use orthogonality::{check_oqam_ofdm, check_wcp_coqam, Family, OrthReport};
pub use pulse::{Generator, Pulse};
pub use zak::{dzt, idzt, orthogonalize_oqam, zak_orthogonalize, ZakMatrix};
