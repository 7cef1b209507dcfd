//! Polar codes with active-bit relocation under masks (ARUM) for hybrid ARQ.
//!
//! * [`gf2lin`]: GF(2) vectors, matrices and the inter-transmission kernels.
//! * [`polar`]: encoding, SC and list decoding, CRC.
//! * [`construct`]: Gaussian-approximation reliabilities and active-set
//!   selection.
//! * [`ratematch`]: repetition, puncturing and shortening.
//! * [`arum`]: transmitter and receiver sessions.
//! * [`chansim`]: BPSK/AWGN channel.
//! * [`oracle`]: brute-force references for small instances.
//! * [`harness`]: BLER experiments and the command line driver.

pub mod arum;
pub mod chansim;
pub mod construct;
pub mod gf2lin;
pub mod harness;
pub mod oracle;
pub mod polar;
pub mod ratematch;
