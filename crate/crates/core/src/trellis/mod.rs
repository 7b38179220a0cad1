//! Exact forward-backward processing: the ISI-channel MAP equalizer, the
//! rate-1/2 recursive systematic code and the random interleaver.

mod interleaver;
mod isi;
mod rsc;

pub use interleaver::Interleaver;
pub use isi::{bcjr_equalize, MAX_TRELLIS_MEMORY};
pub use rsc::{bcjr_decode, coded_len, rsc_encode, DecoderOutput, RSC_TAIL};
