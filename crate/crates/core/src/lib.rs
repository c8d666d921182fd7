//! Neonatal EEG seizure detection, two ways: a 55-feature Gaussian-SVM
//! baseline and a raw-waveform fully convolutional network, sharing the same
//! preprocessing, post-processing, and leave-one-subject-out evaluation
//! harness.
//!
//! Pipeline overview:
//!
//! ```text
//! recording (8 ch, 256 Hz)
//!   ├─ bandpass 0.5-12.8 Hz, zero phase
//!   ├─ decimate to 32 Hz
//!   ├─ 8 s epochs ───────────────┬────────────────────────┐
//!   │                            │                        │
//!   │                   55 features + SVM        standardize + FCNN
//!   │                            │                        │
//!   └─ per-channel probabilities ┴────────────────────────┘
//!        ├─ 61 s moving average
//!        ├─ channel max
//!        └─ threshold + 30 s collar → detections
//! ```
//!
//! Everything is deterministic given a seed; see [`rng::Rng`].

pub mod detect;
pub mod eeg;
pub mod error;
pub mod experiment;
pub mod fcnn;
pub mod features;
pub mod metrics;
pub mod postproc;
pub mod preprocess;
pub mod rng;
pub mod svm;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
