//! JSON encodings and the instance-file schema.
//!
//! Complex numbers are `[re, im]` pairs. Coefficient and flow blocks are
//! flat row-major lists whose shapes follow from `n` and `d`; free-standing
//! matrices are lists of rows. Floats round-trip bit-exactly.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coeff::BlockCoefficient;
use crate::error::{Error, Result};
use crate::flow::{FlowGenerator, GeneratorMap};
use crate::fock::Scheme;
use crate::matelem::StepFunction;
use crate::numerics::CMatrix;

fn flat(m: &CMatrix) -> Vec<Complex64> {
    m.as_slice().to_vec()
}

fn unflat(name: &str, data: Vec<Complex64>, rows: usize, cols: usize) -> Result<CMatrix> {
    if data.len() != rows * cols {
        return Err(Error::Instance(format!(
            "\"{name}\" has {} entries, expected {rows}x{cols} = {}",
            data.len(),
            rows * cols
        )));
    }
    CMatrix::new(rows, cols, data)
}

/// `{"n", "d", "K", "L", "M", "W"}`; `W` is the gauge block itself, not
/// `W − I`.
#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
pub(crate) struct CoefficientJson {
    n: usize,
    d: usize,
    K: Vec<Complex64>,
    L: Vec<Complex64>,
    M: Vec<Complex64>,
    W: Vec<Complex64>,
}

impl TryFrom<CoefficientJson> for BlockCoefficient {
    type Error = Error;
    fn try_from(j: CoefficientJson) -> Result<Self> {
        let (n, d) = (j.n, j.d);
        BlockCoefficient::new(
            n,
            d,
            unflat("K", j.K, n, n)?,
            unflat("L", j.L, d * n, n)?,
            unflat("M", j.M, n, d * n)?,
            unflat("W", j.W, d * n, d * n)?,
        )
    }
}

impl From<BlockCoefficient> for CoefficientJson {
    fn from(f: BlockCoefficient) -> Self {
        CoefficientJson {
            n: f.n(),
            d: f.d(),
            K: flat(f.k()),
            L: flat(f.l()),
            M: flat(f.m()),
            W: flat(f.w()),
        }
    }
}

/// `{"n", "d", "h", "l", "W"}`.
#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
pub(crate) struct FlowJson {
    n: usize,
    d: usize,
    h: Vec<Complex64>,
    l: Vec<Complex64>,
    W: Vec<Complex64>,
}

impl TryFrom<FlowJson> for FlowGenerator {
    type Error = Error;
    fn try_from(j: FlowJson) -> Result<Self> {
        let (n, d) = (j.n, j.d);
        if n == 0 || d == 0 {
            return Err(Error::Instance("flow needs n, d >= 1".into()));
        }
        FlowGenerator::new(
            unflat("h", j.h, n, n)?,
            unflat("l", j.l, d * n, n)?,
            unflat("W", j.W, d * n, d * n)?,
        )
    }
}

impl From<FlowGenerator> for FlowJson {
    fn from(g: FlowGenerator) -> Self {
        FlowJson {
            n: g.n(),
            d: g.d(),
            h: flat(g.h()),
            l: flat(g.l()),
            W: flat(g.w()),
        }
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Complex64]> = (0..self.rows())
            .map(|i| &self.as_slice()[i * self.cols()..(i + 1) * self.cols()])
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(de)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("matrix rows have different lengths"));
        }
        Ok(CMatrix::from_rows(&rows))
    }
}

/// `{"theta", "F1", "F2"}`; `theta` may be omitted when the instance has a
/// top-level `flow`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<FlowGenerator>,
    #[serde(rename = "F1")]
    pub f1: BlockCoefficient,
    #[serde(rename = "F2")]
    pub f2: BlockCoefficient,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepFunctionSection {
    pub f: StepFunction,
    pub g: StepFunction,
    pub t: f64,
    /// Argument `a`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CMatrix>,
    /// Split point `r` for the weak-cocycle check; the check runs over
    /// `[0, r + (t − r))` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle_split: Option<f64>,
    /// Multiply by the tail overlap beyond `t`.
    #[serde(default)]
    pub include_tail: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemigroupSection {
    pub times: Vec<f64>,
    /// Arguments `a`; identity when empty.
    #[serde(default)]
    pub arguments: Vec<CMatrix>,
}

/// Quantity compared along the slot ladder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationQuantity {
    /// `E[(Y¹)* j(a) Y²]` against `e^{TG}(a)`.
    #[default]
    FeynmanKac,
    /// `E[V_N]` against `e^{TK}` for the HP coefficient.
    HpVacuum,
    /// Multiplier-cocycle residual at the midpoint split, using `F1`.
    Multiplier,
    /// `‖E[Y_N* Y_N] − I‖` for `F1`.
    Isometry,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSection {
    pub ladder: Vec<usize>,
    pub horizon: f64,
    #[serde(default)]
    pub quantity: SimulationQuantity,
    /// Argument `a`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argument: Option<CMatrix>,
    /// HP coefficient implementing the free flow; derived from `flow` when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hp: Option<BlockCoefficient>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_cap_bytes: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<BlockCoefficient>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowGenerator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepfunctions: Option<StepFunctionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semigroup: Option<SemigroupSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The flow generator for the perturbation: `perturbation.theta`, else
    /// the top-level `flow`.
    pub fn perturbation_flow(&self) -> Option<&FlowGenerator> {
        self.perturbation
            .as_ref()
            .and_then(|p| p.theta.as_ref())
            .or(self.flow.as_ref())
    }

    /// Cross-section dimension checks.
    pub fn validate(&self) -> Result<()> {
        let mut dims: Vec<(&str, usize, usize)> = Vec::new();
        if let Some(f) = &self.flow {
            dims.push(("flow", f.n(), f.d()));
        }
        if let Some(p) = &self.perturbation {
            if let Some(t) = &p.theta {
                dims.push(("perturbation.theta", t.n(), t.d()));
            }
            dims.push(("perturbation.F1", p.f1.n(), p.f1.d()));
            dims.push(("perturbation.F2", p.f2.n(), p.f2.d()));
            if self.perturbation_flow().is_none() && self.simulation.as_ref().and_then(|s| s.hp.as_ref()).is_none() {
                return Err(Error::Instance("perturbation needs \"theta\" or a top-level \"flow\"".into()));
            }
        }
        if let Some(s) = &self.simulation {
            if let Some(hp) = &s.hp {
                dims.push(("simulation.hp", hp.n(), hp.d()));
            }
            if s.ladder.is_empty() {
                return Err(Error::Instance("simulation.ladder is empty".into()));
            }
            if !(s.horizon > 0.0 && s.horizon.is_finite()) {
                return Err(Error::Instance("simulation.horizon must be positive".into()));
            }
        }
        let nd = dims.first().map(|&(_, n, d)| (n, d));
        if let Some((n0, d0)) = nd {
            if let Some((name, n, d)) = dims.iter().find(|&&(_, n, d)| (n, d) != (n0, d0)) {
                return Err(Error::Dimension(format!(
                    "{name} has (n, d) = ({n}, {d}), {} has ({n0}, {d0})",
                    dims[0].0
                )));
            }
            let n = n0;
            for a in self
                .semigroup
                .iter()
                .flat_map(|s| s.arguments.iter())
                .chain(self.stepfunctions.as_ref().and_then(|s| s.a.as_ref()))
                .chain(self.simulation.as_ref().and_then(|s| s.argument.as_ref()))
            {
                if a.shape() != (n, n) {
                    return Err(Error::Dimension(format!("argument is {}x{}, expected {n}x{n}", a.rows(), a.cols())));
                }
            }
            if let Some(s) = &self.stepfunctions {
                if s.f.d() != d0 || s.g.d() != d0 {
                    return Err(Error::Dimension(format!("step functions must take values in C^{d0}")));
                }
            }
        }
        Ok(())
    }
}
