//! Steerable-needle toolkit: a Cosserat-string model of the forces a needle
//! shaft exerts on tissue, and an anytime planner that minimizes the largest
//! of those forces along the insertion path.

pub mod environment;
pub mod error;
pub mod fit;
pub mod force;
pub mod kinematics;
pub mod planner;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};
pub use force::{ForceProfile, SegmentForceState, TissueParams};
pub use kinematics::{ArcSegment, NeedlePath, Pose};
