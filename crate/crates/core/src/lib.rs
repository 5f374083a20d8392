//! Design and evaluation of cooperative pilot-spoofing attacks by several
//! single-antenna eavesdroppers against a multi-antenna TDD downlink.
//!
//! The crate builds the wiretapping-SNR maximization instance for each
//! scenario ([`channel`]), converts a detection-probability budget into an
//! aggregate power cap ([`detection`]), solves the resulting fractional QCQP
//! with an MM outer loop and ADMM inner loop ([`mm_admm`]) or with a
//! semidefinite relaxation ([`sdr`]), and runs Monte Carlo experiments and
//! brute-force oracles ([`experiments`]).

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod mm_admm;
pub mod numerics;
pub mod sdr;

pub use error::{Error, Result};
