use std::fmt;
use std::str::FromStr;

use crate::allocation::ObjectiveKind;
use crate::decision::MpConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Allocator {
    Uniform,
    Greedy(ObjectiveKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decider {
    Majority,
    Map,
    OracleMap,
    Lra,
    LraBlocks,
    Mp(MpConfig),
    MpHaldane(MpConfig),
}

/// An allocator paired with a decision rule, written `<allocator>:<decider>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySpec {
    pub allocator: Allocator,
    pub decider: Decider,
}

pub const ALLOCATOR_TOKENS: [&str; 7] = [
    "uniform",
    "greedy-mi",
    "greedy-ep",
    "greedy-chernoff",
    "greedy-maxmin-mi",
    "greedy-maxmin-ep",
    "greedy-maxmin-chernoff",
];

pub const DECIDER_TOKENS: [&str; 7] = ["majority", "map", "omap", "lra", "lra-blocks", "mp", "mp-haldane"];

impl Allocator {
    pub fn token(&self) -> &'static str {
        match self {
            Allocator::Uniform => "uniform",
            Allocator::Greedy(kind) => match kind {
                ObjectiveKind::AvgMutualInfo => "greedy-mi",
                ObjectiveKind::AvgErrorProb => "greedy-ep",
                ObjectiveKind::AvgChernoff => "greedy-chernoff",
                ObjectiveKind::MinMutualInfo => "greedy-maxmin-mi",
                ObjectiveKind::MaxErrorProb => "greedy-maxmin-ep",
                ObjectiveKind::MaxChernoff => "greedy-maxmin-chernoff",
            },
        }
    }
}

impl FromStr for Allocator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => Allocator::Uniform,
            "greedy-mi" => Allocator::Greedy(ObjectiveKind::AvgMutualInfo),
            "greedy-ep" => Allocator::Greedy(ObjectiveKind::AvgErrorProb),
            "greedy-chernoff" => Allocator::Greedy(ObjectiveKind::AvgChernoff),
            "greedy-maxmin-mi" => Allocator::Greedy(ObjectiveKind::MinMutualInfo),
            "greedy-maxmin-ep" => Allocator::Greedy(ObjectiveKind::MaxErrorProb),
            "greedy-maxmin-chernoff" => Allocator::Greedy(ObjectiveKind::MaxChernoff),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown allocator '{s}' (expected one of {})",
                    ALLOCATOR_TOKENS.join(", ")
                )))
            }
        })
    }
}

impl Decider {
    pub fn token(&self) -> &'static str {
        match self {
            Decider::Majority => "majority",
            Decider::Map => "map",
            Decider::OracleMap => "omap",
            Decider::Lra => "lra",
            Decider::LraBlocks => "lra-blocks",
            Decider::Mp(_) => "mp",
            Decider::MpHaldane(_) => "mp-haldane",
        }
    }
}

impl FromStr for Decider {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "majority" => Decider::Majority,
            "map" => Decider::Map,
            "omap" => Decider::OracleMap,
            "lra" => Decider::Lra,
            "lra-blocks" => Decider::LraBlocks,
            "mp" => Decider::Mp(MpConfig::default()),
            "mp-haldane" => Decider::MpHaldane(MpConfig::haldane()),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown decision rule '{s}' (expected one of {})",
                    DECIDER_TOKENS.join(", ")
                )))
            }
        })
    }
}

impl StrategySpec {
    pub fn new(allocator: Allocator, decider: Decider) -> Self {
        Self { allocator, decider }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.allocator.token(), self.decider.token())
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, d) = s.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!("strategy '{s}' is not of the form <allocator>:<decider>"))
        })?;
        Ok(Self::new(a.trim().parse()?, d.trim().parse()?))
    }
}
