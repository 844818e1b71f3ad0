//! Sequence-based localization against a reference traverse with a temporal
//! window whose length adapts per frame to the most significant hypothesis.

pub mod adaptive;
pub mod descriptor;
pub mod distribution;
pub mod error;
pub mod eval;
pub mod format;
pub mod image;
pub mod matrix;
pub mod normal;
pub mod rng;
pub mod shuffle;
pub mod store;
pub mod synth;
pub mod wifi;
pub mod window;

pub use adaptive::{adapt_frame, p_of_l, run_adaptive, AdaptiveConfig, AdaptiveTrace, StreamingLocalizer};
pub use descriptor::{raw_difference, Descriptor, DescriptorKind, DiffOp};
pub use distribution::{fit, significance, DistributionFit, Method};
pub use error::{Error, Result};
pub use matrix::{build_row, DifferenceMatrix};
pub use window::{fixed_localize, Hypothesis, LocalizationResult, PrefixField, Status};
