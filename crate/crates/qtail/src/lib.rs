//! Regenerative delay-tail estimation toolkit.
//!
//! Simulates one truncated regeneration cycle of a queueing model as a pure
//! function of a counter-addressed seed, plans truncation horizons and
//! clipping levels from drift constants so that the induced bias stays inside
//! an explicit error budget, and estimates the resulting cycle amplitude
//! either by classical Monte Carlo or by an emulated amplitude-estimation
//! schedule with O(1/eps) oracle queries.
//!
//! Three models are covered:
//! * a single-server FIFO queue driven by the Lindley recursion ([`gg1`]),
//! * a K-queue wireless downlink under MaxWeight scheduling ([`maxweight`]),
//! * a K-server join-the-shortest-queue system in continuous time with
//!   clipped draws and splitting-based regeneration ([`jsq`]).
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `qtail` binary for config-driven runs.

pub mod cli;
pub mod config;
pub mod dist;
pub mod gg1;
pub mod harness;
pub mod jsq;
pub mod maxweight;
pub mod planner;
pub mod qae;
pub mod seed;

pub use dist::{ClipSpec, DistSpec, TailClass};
pub use seed::{SeedStream, UniformDraw};
