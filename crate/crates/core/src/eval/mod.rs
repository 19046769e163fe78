//! Scoring (UAR), significance testing and the cross-validation protocol.

mod curve;
mod cv;
mod ttest;
mod uar;

pub use curve::{build_learning_curve, CurvePoint, LearningCurve};
pub use cv::{run_repeated_cv, run_repeated_cv_many, CVResult, CvRun, CvSetup, FoldLog, SourceSpec, SOURCE_HELDOUT_FOLD};
pub use ttest::*;
pub use uar::*;
