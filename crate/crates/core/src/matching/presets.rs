//! Shipped experiment configurations.

use std::fmt;
use std::str::FromStr;

use crate::diophantine::Frequency;
use crate::error::{Error, Result};
use crate::roof::{RoofFunction, TrigPoly};
use crate::special_flow::FlowParams;

use super::audit::{AuditConfig, MatchingSetup, SampleMode};
use super::constants::{derive_constants, Branch, Mode, DESK_C};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    AcceptanceUnbounded,
    AcceptanceBounded,
    ContrastEqualJumps,
}

pub const PRESET_EPSILON: f64 = 0.05;
pub const PRESET_HORIZON_N: u64 = 50;
pub const PRESET_TRIALS: usize = 200;
/// Smallest denominator used for the scale `q_{n_k}`.
pub const PRESET_MIN_Q: u64 = 1000;

/// `[1, 2, 1, 4, 1, 8, …, 1, 128]`.
pub fn doubling_digits() -> Vec<u64> {
    (0..7).flat_map(|i| [1, 1u64 << (i + 1)]).collect()
}

/// `{x} + 1 + 0.1 sin 2πx`.
pub fn preset_f() -> RoofFunction {
    RoofFunction::new(1.0, TrigPoly::sin(1, 0.1).plus_constant(1.0)).expect("finite roof")
}

/// `2{x} + 1 + 0.1 cos 2πx`.
pub fn preset_g() -> RoofFunction {
    RoofFunction::new(2.0, TrigPoly::cos(1, 0.1).plus_constant(1.0)).expect("finite roof")
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::AcceptanceUnbounded, Preset::AcceptanceBounded, Preset::ContrastEqualJumps];

    pub fn name(self) -> &'static str {
        match self {
            Preset::AcceptanceUnbounded => "acceptance-unbounded",
            Preset::AcceptanceBounded => "acceptance-bounded",
            Preset::ContrastEqualJumps => "contrast-equal-jumps",
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            Preset::AcceptanceBounded => Branch::Bounded,
            _ => Branch::Unbounded,
        }
    }

    pub fn flows(self) -> Result<(FlowParams, FlowParams)> {
        let unbounded = || Frequency::from_digits(&doubling_digits());
        match self {
            Preset::AcceptanceUnbounded => {
                Ok((FlowParams::new(unbounded()?, preset_f())?, FlowParams::new(Frequency::golden(), preset_g())?))
            }
            Preset::AcceptanceBounded => Ok((
                FlowParams::new(Frequency::golden(), preset_f())?,
                FlowParams::new(Frequency::golden(), preset_g())?,
            )),
            Preset::ContrastEqualJumps => {
                let flow = FlowParams::new(unbounded()?, preset_f())?;
                Ok((flow.clone(), flow))
            }
        }
    }

    pub fn setup_with(self, eps: f64, c: f64, mode: Mode) -> Result<MatchingSetup> {
        let (f, g) = self.flows()?;
        let k = derive_constants(
            f.roof(),
            g.roof(),
            f.alpha(),
            g.alpha(),
            eps,
            PRESET_HORIZON_N,
            mode,
            self.branch(),
            Some(c),
        )?;
        MatchingSetup::new(f, g, k, if self.branch() == Branch::Bounded { 1 } else { PRESET_MIN_Q })
    }

    pub fn setup(self) -> Result<MatchingSetup> {
        self.setup_with(PRESET_EPSILON, DESK_C, Mode::DeskScale)
    }

    pub fn audit_config(self, seed: u64) -> AuditConfig {
        let mut cfg = AuditConfig::new(PRESET_TRIALS, seed);
        if self == Preset::ContrastEqualJumps {
            cfg.sample_mode = SampleMode::Diagonal;
        }
        cfg
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {s:?}")))
    }
}
