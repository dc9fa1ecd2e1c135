//! Cycle-approximate simulator of a cortical-learning accelerator: columns of
//! a cortical learning algorithm distributed over a packet-switched 2-D torus.
//!
//! * [`sdr`]: sparse distributed representations and the seeded scalar encoder.
//! * [`cla`]: sequential reference model of spatial pooling and temporal memory.
//! * [`noc`]: cycle-level torus network with multicast, bubble flow control,
//!   coalescing injection and broom-packet drain barriers.
//! * [`accel`]: the accelerator, mapping columns onto network nodes and
//!   running sequential or pipelined epoch schedules.
//! * [`workload`]: synthetic polynomial series, CSV ingestion and the
//!   learning/anomaly drivers.

pub mod accel;
pub mod cla;
pub mod error;
pub mod noc;
pub mod rng;
pub mod sdr;
pub mod workload;

pub use error::{Error, Result};
