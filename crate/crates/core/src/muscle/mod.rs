//! Muscle activation dynamics and the damped Hill-type musculotendon model.

pub mod curves;
pub mod hill;
pub mod metabolic;

use serde::{Deserialize, Serialize};

pub use curves::{BezierCurve, CurveSet, CurveShapes, QuinticSegment};
pub use hill::{FiberSolution, MuscleParams, MuscleState, SolverSettings};
pub use metabolic::{MetabolicParams, MetabolicRates};

/// The seven sagittal leg muscles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MuscleKind {
    Ta,
    Sol,
    Gas,
    Fem,
    Ham,
    Glu,
    Ili,
}

impl MuscleKind {
    pub const ALL: [MuscleKind; 7] = [
        MuscleKind::Ta,
        MuscleKind::Sol,
        MuscleKind::Gas,
        MuscleKind::Fem,
        MuscleKind::Ham,
        MuscleKind::Glu,
        MuscleKind::Ili,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MuscleKind::Ta => "TA",
            MuscleKind::Sol => "SOL",
            MuscleKind::Gas => "GAS",
            MuscleKind::Fem => "FEM",
            MuscleKind::Ham => "HAM",
            MuscleKind::Glu => "GLU",
            MuscleKind::Ili => "ILI",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(s: &str) -> Option<Self> {
        MuscleKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Right, Side::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Side {
        match self {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::Right => "r",
            Side::Left => "l",
        }
    }
}

/// One of the fourteen muscles of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MuscleId {
    pub side: Side,
    pub kind: MuscleKind,
}

pub const MUSCLE_COUNT: usize = 14;

impl MuscleId {
    pub fn new(side: Side, kind: MuscleKind) -> Self {
        Self { side, kind }
    }

    /// Right-leg muscles first, each leg in `MuscleKind::ALL` order.
    pub fn all() -> impl Iterator<Item = MuscleId> {
        Side::BOTH
            .into_iter()
            .flat_map(|s| MuscleKind::ALL.into_iter().map(move |k| MuscleId::new(s, k)))
    }

    pub fn index(self) -> usize {
        self.side.index() * 7 + self.kind.index()
    }

    pub fn from_index(i: usize) -> Self {
        let side = if i < 7 { Side::Right } else { Side::Left };
        MuscleId::new(side, MuscleKind::ALL[i % 7])
    }

    pub fn label(self) -> String {
        format!("{}_{}", self.kind.name(), self.side.tag())
    }
}

/// Time derivative of activation for excitation `sigma`.
///
/// The time constant depends on whether the muscle is activating
/// (`sigma > a`) or deactivating.
pub fn activation_rate(a: f64, sigma: f64, tau_act: f64, tau_deact: f64) -> f64 {
    let tau = if sigma > a {
        tau_act * (0.5 + 1.5 * a)
    } else {
        tau_deact / (0.5 + 1.5 * a)
    };
    (sigma - a) / tau
}
