//! Closed tag sets shared by datasets, synthesis and the service.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the eight segments of the keypoint click task, `k -> k+1` with the
/// last segment closing the loop (`8-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Direction(u8);

impl Direction {
    pub const COUNT: u8 = 8;

    pub fn new(index: u8) -> Result<Self> {
        if (1..=Self::COUNT).contains(&index) {
            Ok(Direction(index))
        } else {
            Err(Error::Lookup(format!("direction index {index} outside 1..=8")))
        }
    }

    /// 1-based segment index.
    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Direction> {
        (1..=Self::COUNT).map(Direction)
    }

    /// Keypoint indices (1-based) at the start and end of the segment.
    pub fn endpoints(self) -> (u8, u8) {
        (self.0, self.0 % Self::COUNT + 1)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.endpoints();
        write!(f, "{a}-{b}")
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Direction::all().find(|d| d.to_string() == s).ok_or_else(|| Error::Lookup(format!("unknown direction tag '{s}'")))
    }
}

impl TryFrom<String> for Direction {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Direction> for String {
    fn from(d: Direction) -> String {
        d.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Linear,
    Quadratic,
    Exponential,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Linear, ShapeKind::Quadratic, ShapeKind::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Linear => "linear",
            ShapeKind::Quadratic => "quadratic",
            ShapeKind::Exponential => "exponential",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Lookup(format!("unknown shape '{s}'")))
    }
}

/// Velocity-profile family of the function-based generator (VP = 1, 2, 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VpKind {
    Constant,
    Logarithmic,
    Gaussian,
}

impl VpKind {
    pub const ALL: [VpKind; 3] = [VpKind::Constant, VpKind::Logarithmic, VpKind::Gaussian];

    pub fn code(self) -> u8 {
        match self {
            VpKind::Constant => 1,
            VpKind::Logarithmic => 2,
            VpKind::Gaussian => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        VpKind::ALL.into_iter().find(|k| k.code() == code).ok_or_else(|| Error::Lookup(format!("unknown velocity profile code {code}")))
    }
}

/// Where a sample came from: a person, or one of the ten synthetic attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AttackType {
    Human,
    Function(ShapeKind, VpKind),
    Gan,
}

impl AttackType {
    /// The ten bot tags: nine shape/velocity combinations plus the GAN.
    pub fn bots() -> Vec<AttackType> {
        let mut tags: Vec<AttackType> = ShapeKind::ALL.into_iter().flat_map(|s| VpKind::ALL.into_iter().map(move |v| AttackType::Function(s, v))).collect();
        tags.push(AttackType::Gan);
        tags
    }

    pub fn function_bots() -> Vec<AttackType> {
        Self::bots().into_iter().filter(|t| t.is_function()).collect()
    }

    pub fn is_human(self) -> bool {
        self == AttackType::Human
    }

    pub fn is_function(self) -> bool {
        matches!(self, AttackType::Function(..))
    }

    pub fn source(self) -> Source {
        match self {
            AttackType::Human => Source::Human,
            AttackType::Function(..) => Source::Function,
            AttackType::Gan => Source::Gan,
        }
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackType::Human => f.write_str("human"),
            AttackType::Function(s, v) => write!(f, "{}_vp{}", s, v.code()),
            AttackType::Gan => f.write_str("gan"),
        }
    }
}

impl FromStr for AttackType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "human" {
            return Ok(AttackType::Human);
        }
        AttackType::bots().into_iter().find(|t| t.to_string() == s).ok_or_else(|| Error::Lookup(format!("unknown attack type '{s}'")))
    }
}

impl TryFrom<String> for AttackType {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AttackType> for String {
    fn from(t: AttackType) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Function,
    Gan,
}
