//! A laboratory for the way trained networks extrapolate: as inputs drift away
//! from the training distribution, predictions tend toward the *optimal constant
//! solution* (OCS), the single output that minimizes training loss when the
//! input is ignored.
//!
//! The crate trains small ReLU networks from scratch and provides everything
//! needed to measure that drift:
//!
//! - [`objectives`]: the three losses, their closed-form OCS, distance-to-OCS.
//! - [`datagen`]: synthetic datasets, IDX ingestion, covariate shifts, FGSM.
//! - [`shiftmeter`]: a discriminator-based OOD score.
//! - [`probe`]: layer-wise representation norms, singular-subspace alignment and
//!   the accumulation of bias constants.
//! - [`decide`]: selective classification with an abstain action.
//! - [`flowlab`]: gradient descent on homogeneous nets and the associated checks.
//! - [`runner`]: config-driven sweeps with CSV/SVG output.

pub mod datagen;
pub mod decide;
pub mod error;
pub mod flowlab;
pub mod netcore;
pub mod numcore;
pub mod objectives;
pub mod probe;
pub mod runner;
pub mod shiftmeter;

pub use error::{Error, Result};
