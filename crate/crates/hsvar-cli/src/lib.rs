//! Implementation of the `hsvar` command line.
//!
//! Subcommands cover the full workflow: `simulate` emits synthetic samples
//! with a ground-truth sidecar, `estimate` runs the Gibbs sampler and writes
//! posterior artifacts, `verify` tabulates the per-shock homoskedasticity
//! tests, `irf` summarizes impulse responses, `normalize` resolves the
//! sign/order ambiguity of stored draws, and `check-identification` reports
//! which shocks a covariance sequence pins down.
//!
//! Every command is deterministic given its seed and inputs; all emitted
//! CSVs carry a header row.  User-facing equation, shock, variable, and
//! column indices are 1-based; library APIs are 0-based.

pub mod config;
pub mod csvio;
pub mod estimate;
pub mod identification;
pub mod irf;
pub mod manifest;
pub mod normalize;
pub mod simulate;
pub mod verify;
