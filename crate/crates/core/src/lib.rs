//! Visual-tracking workbench: a ridge-regression tracker and three ℓ1 sparse
//! trackers sharing one particle filter, plus CLE/TSR evaluation and
//! ANOVA/Tukey significance ranking.

pub mod appearance;
pub mod eval;
pub mod filter;
pub mod imagery;
pub mod io;
pub mod rng;
pub mod solvers;
pub mod synth;
pub mod trackers;

pub use appearance::{TemplateDictionary, UpdateConfig};
pub use filter::{MotionConfig, ParticleSet};
pub use imagery::{AffineState, BoundingBox, Frame};
pub use rng::RngStream;
pub use solvers::{CoefficientVector, Dictionary, SolveDiagnostics};

pub use trackers::{FrameResult, Tracker, TrackerConfig, TrackerKind};
