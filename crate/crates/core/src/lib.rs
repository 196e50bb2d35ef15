//! Virtual channel reservation for collaborative cognitive radio networks.
//!
//! Primary users (PUs) own `M` bands of `N` channels each. Secondary users
//! (SUs) need at least `C_min` channels, but under full spectrum utilization
//! (FSU) they share every idle channel and are served proportionally faster.
//! A number `r` of channels is *virtually* reserved: new SUs may not count
//! on them, yet active SUs keep using them until a PU arrival forces a
//! repack.
//!
//! The crate provides:
//!
//! * [`model`]: configuration, the `(n_p, n_s)` state space and its generator,
//! * [`stationary`]: GTH state-reduction solver for the stationary vector,
//! * [`kpi`]: blocking, forced-termination and per-SU throughput,
//! * [`drift`]: embedded-chain drift of the FSU chain vs. a minimum-allocation
//!   baseline,
//! * [`optimizer`]: exhaustive search for the cost-optimal reservation level,
//! * [`sim`]: discrete-event simulation of three SU policies,
//! * [`scenario`] and [`cli`]: scenario files in, CSV tables out.
//!
//! ```
//! use crvirtres::{kpi, model::RawParams};
//!
//! let cfg = RawParams::operating_point().build().unwrap();
//! let report = kpi::compute_kpis(&cfg).unwrap();
//! assert!(report.p_block > 0.0 && report.p_block < 1.0);
//! ```

pub mod cli;
pub mod drift;
pub mod error;
pub mod kpi;
pub mod model;
pub mod optimizer;
pub mod scenario;
pub mod sim;
pub mod stationary;

pub use error::{Error, Result};
pub use model::{GeneratorMatrix, ServiceModel, StateSpace, SystemConfig, SystemState};
