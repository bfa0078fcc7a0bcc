//! Matching windows for pairs of special flows with different jumps.

pub mod audit;
pub mod constants;
pub mod lift;
pub mod presets;
pub mod sets;
pub mod window;

pub use audit::{criterion_audit, AuditConfig, CriterionReport, FailureKind, MatchingSetup, SampleMode, TrialRecord};
pub use constants::{derive_constants, Branch, Mode, ProofConstants};
pub use lift::{lift_to_continuous, LiftReport};
pub use presets::Preset;
pub use sets::{EkSet, ZSet};
pub use window::{find_window, verify_window, CaseLabel, Direction, FlowPair, MatchSample, MatchingWindow, WindowPlan};
