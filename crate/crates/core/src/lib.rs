//! Piecemeal multi-baseline interferometry.
//!
//! An angle `θ` in `[0, θ̄)` is observed through `K` baselines whose lengths
//! double at every step, `L_k = 2^(k-1) L_1` with `L_1 = λ / θ̄`. Each baseline
//! only needs a crude, wrapped estimate of its own phase; the modular
//! iteration in [`modular`] then stitches the estimates together one bit at a
//! time, giving an uncertainty of `θ̄ / 2^(K+1)`.
//!
//! The crate is split along the data flow:
//!
//! * [`modular`]: modular phase arithmetic and the reconstruction itself.
//! * [`interference`]: single-photon click statistics per baseline, detector
//!   flipping, channel drift and phase extraction from counts.
//! * [`monte_carlo`]: full trials, failure probability, photon budgets and sweeps.
//! * [`single_baseline`]: the analytic single-baseline comparison model.
//! * [`reference`]: differential measurement against a reference object.
//! * [`config`] and [`output`]: the run-file format and CSV emission used by
//!   the `piecemeal` binary.

pub mod config;
pub mod error;
pub mod interference;
pub mod modular;
pub mod monte_carlo;
pub mod output;
pub mod reference;
pub mod single_baseline;
pub mod units;

pub use error::{Error, Result};
pub use interference::{DetectionRecord, DriftMode, NoiseModel, PhaseRecovery};
pub use modular::{ArrayConfig, PhaseVector, ReconstructionResult};
pub use monte_carlo::{Distance, SweepResult, SweepRow, TrialOptions, TrialOutcome};
pub use reference::ReferenceScenario;
pub use single_baseline::SingleBaselineModel;
