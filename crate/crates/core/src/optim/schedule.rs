//! Iteration-dependent coefficient schedules (step size, momentum, observation factor).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One segment of a piecewise-constant schedule, in force from iteration `from` onward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub from: u64,
    pub value: f64,
}

/// A coefficient as a function of the 1-based iteration counter.
///
/// Deserializes either from a bare number (a constant) or from an object
/// `{"kind": "...", "base": ...}`; piecewise schedules carry `pieces` instead of `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "ScheduleRepr")]
pub enum Schedule {
    Constant { base: f64 },
    /// `base / sqrt(t)`
    InvSqrt { base: f64 },
    /// `base / t`
    Inv { base: f64 },
    /// `base / t^2`
    InvSquare { base: f64 },
    Piecewise { pieces: Vec<Piece> },
}

impl Schedule {
    pub fn constant(base: f64) -> Self {
        Schedule::Constant { base }
    }

    /// Builds a schedule from a kind name. Accepts the serialized names
    /// (`constant`, `inv_sqrt`, `inv`, `inv_square`) and the shorthands
    /// `1/sqrt(t)`, `1/t`, `1/t^2`.
    pub fn from_kind(kind: &str, base: f64) -> Result<Self> {
        let s = match kind.trim() {
            "constant" => Schedule::Constant { base },
            "inv_sqrt" | "1/sqrt(t)" | "1/sqrt_t" => Schedule::InvSqrt { base },
            "inv" | "1/t" => Schedule::Inv { base },
            "inv_square" | "1/t^2" | "1/t2" => Schedule::InvSquare { base },
            other => return Err(Error::UnknownSchedule(other.to_string())),
        };
        Ok(s)
    }

    pub fn piecewise(pieces: Vec<Piece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Config("piecewise schedule needs at least one piece".into()));
        };
        if first.from != 1 {
            return Err(Error::Config(format!(
                "piecewise schedule must start at t = 1, starts at {}",
                first.from
            )));
        }
        if pieces.windows(2).any(|w| w[1].from <= w[0].from) {
            return Err(Error::Config("piecewise breakpoints must be strictly increasing".into()));
        }
        Ok(Schedule::Piecewise { pieces })
    }

    /// Value at iteration `t` (1-based).
    pub fn at(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::ZeroIteration);
        }
        let tf = t as f64;
        Ok(match self {
            Schedule::Constant { base } => *base,
            Schedule::InvSqrt { base } => base / tf.sqrt(),
            Schedule::Inv { base } => base / tf,
            Schedule::InvSquare { base } => base / (tf * tf),
            Schedule::Piecewise { pieces } => pieces
                .iter()
                .take_while(|p| p.from <= t)
                .last()
                .map(|p| p.value)
                .ok_or_else(|| Error::Config("piecewise schedule has no piece for t".into()))?,
        })
    }

    /// The value at t = 1 (the `base` of the closed-form kinds).
    pub fn initial(&self) -> f64 {
        match self {
            Schedule::Constant { base }
            | Schedule::InvSqrt { base }
            | Schedule::Inv { base }
            | Schedule::InvSquare { base } => *base,
            Schedule::Piecewise { pieces } => pieces.first().map_or(0.0, |p| p.value),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Schedule::Constant { base } => Schedule::Constant { base: base * factor },
            Schedule::InvSqrt { base } => Schedule::InvSqrt { base: base * factor },
            Schedule::Inv { base } => Schedule::Inv { base: base * factor },
            Schedule::InvSquare { base } => Schedule::InvSquare { base: base * factor },
            Schedule::Piecewise { pieces } => Schedule::Piecewise {
                pieces: pieces
                    .iter()
                    .map(|p| Piece { from: p.from, value: p.value * factor })
                    .collect(),
            },
        }
    }

    /// The same schedule shape with initial value `alpha`; piecewise schedules
    /// are rescaled so their first piece becomes `alpha`.
    pub fn with_base(&self, alpha: f64) -> Result<Self> {
        match self {
            Schedule::Piecewise { pieces } => {
                let first = pieces.first().map_or(0.0, |p| p.value);
                if first == 0.0 {
                    return Err(Error::Config("cannot rebase a piecewise schedule starting at 0".into()));
                }
                Ok(self.scaled(alpha / first))
            }
            Schedule::Constant { .. } => Ok(Schedule::Constant { base: alpha }),
            Schedule::InvSqrt { .. } => Ok(Schedule::InvSqrt { base: alpha }),
            Schedule::Inv { .. } => Ok(Schedule::Inv { base: alpha }),
            Schedule::InvSquare { .. } => Ok(Schedule::InvSquare { base: alpha }),
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match self {
            Schedule::Constant { .. } => true,
            Schedule::InvSqrt { base } | Schedule::Inv { base } | Schedule::InvSquare { base } => {
                *base >= 0.0
            }
            Schedule::Piecewise { pieces } => pieces.windows(2).all(|w| w[1].value <= w[0].value),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Schedule::Constant { .. } => "constant",
            Schedule::InvSqrt { .. } => "inv_sqrt",
            Schedule::Inv { .. } => "inv",
            Schedule::InvSquare { .. } => "inv_square",
            Schedule::Piecewise { .. } => "piecewise",
        }
    }
}

/// Free-function form of [`Schedule::at`].
pub fn evaluate_schedule(schedule: &Schedule, t: u64) -> Result<f64> {
    schedule.at(t)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleRepr {
    Number(f64),
    Object(ScheduleObject),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleObject {
    kind: String,
    #[serde(default)]
    base: Option<f64>,
    #[serde(default)]
    pieces: Option<Vec<Piece>>,
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = Error;

    fn try_from(repr: ScheduleRepr) -> Result<Self> {
        match repr {
            ScheduleRepr::Number(base) => Ok(Schedule::Constant { base }),
            ScheduleRepr::Object(obj) if obj.kind == "piecewise" => {
                if obj.base.is_some() {
                    return Err(Error::Config("piecewise schedule takes `pieces`, not `base`".into()));
                }
                Schedule::piecewise(obj.pieces.unwrap_or_default())
            }
            ScheduleRepr::Object(obj) => {
                if obj.pieces.is_some() {
                    return Err(Error::Config(format!("schedule `{}` does not take `pieces`", obj.kind)));
                }
                let base = obj
                    .base
                    .ok_or_else(|| Error::Config(format!("schedule `{}` needs `base`", obj.kind)))?;
                Schedule::from_kind(&obj.kind, base)
            }
        }
    }
}
