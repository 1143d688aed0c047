//! On-disk problem and report formats.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{OrexError, Result};
use crate::functional::{LevelSpec, TargetSpec};
use crate::instances::{FunctionalInstance, Instance};
use crate::model::{Hyperellipsoid, MultiFidelityProblem, Observation};
use crate::numerics::{from_rows, to_rows, Matrix, Vector};

pub const VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Functional,
    Hilbert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: String,
    pub kind: ProblemKind,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_matrix(m: &Matrix) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), data: to_rows(m) }
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        from_rows(self.rows, self.cols, &self.data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertPayload {
    pub p0: DenseMatrix,
    pub eps0: f64,
    pub p1: DenseMatrix,
    pub eps1: f64,
    pub lambda0: DenseMatrix,
    pub lambda1: DenseMatrix,
    pub q: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertData {
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalPayload {
    pub levels: Vec<LevelSpec>,
    pub target: TargetSpec,
}

/// One data vector per level, in the order of that level's points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalData {
    pub y: Vec<Vec<f64>>,
}

fn schema<E: std::fmt::Display>(e: E) -> OrexError {
    OrexError::InvalidInput(format!("schema: {e}"))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(schema)?;
        if file.version != VERSION {
            return Err(schema(format!("unsupported version {:?}, expected {VERSION:?}", file.version)));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    fn expect(&self, kind: ProblemKind) -> Result<()> {
        if self.kind != kind {
            return Err(schema(format!("expected a {kind:?} problem, found {:?}", self.kind).to_lowercase()));
        }
        Ok(())
    }

    pub fn hilbert(&self) -> Result<(MultiFidelityProblem, Option<Observation>)> {
        self.expect(ProblemKind::Hilbert)?;
        let p: HilbertPayload = serde_json::from_value(self.payload.clone()).map_err(schema)?;
        let problem = MultiFidelityProblem::new(
            Hyperellipsoid::new(p.p0.to_matrix()?, p.eps0)?,
            Hyperellipsoid::new(p.p1.to_matrix()?, p.eps1)?,
            p.lambda0.to_matrix()?,
            p.lambda1.to_matrix()?,
            p.q.to_matrix()?,
        )?;
        let obs = match &self.data {
            None => None,
            Some(v) => {
                let d: HilbertData = serde_json::from_value(v.clone()).map_err(schema)?;
                let obs = Observation::new(Vector::from_vec(d.y0), Vector::from_vec(d.y1));
                obs.check(&problem)?;
                Some(obs)
            }
        };
        Ok((problem, obs))
    }

    pub fn functional(&self) -> Result<(FunctionalInstance, Option<Vec<f64>>)> {
        self.expect(ProblemKind::Functional)?;
        let p: FunctionalPayload = serde_json::from_value(self.payload.clone()).map_err(schema)?;
        let data = match &self.data {
            None => None,
            Some(v) => {
                let d: FunctionalData = serde_json::from_value(v.clone()).map_err(schema)?;
                if d.y.len() != p.levels.len() {
                    return Err(schema(format!("data has {} levels, expected {}", d.y.len(), p.levels.len())));
                }
                for (t, (y, l)) in d.y.iter().zip(&p.levels).enumerate() {
                    if y.len() != l.points.len() {
                        return Err(schema(format!("level {t} data has length {}, expected {}", y.len(), l.points.len())));
                    }
                }
                Some(d.y.concat())
            }
        };
        Ok((FunctionalInstance { levels: p.levels, target: p.target }, data))
    }

    pub fn from_hilbert(p: &MultiFidelityProblem, obs: Option<&Observation>) -> Self {
        let payload = HilbertPayload {
            p0: DenseMatrix::from_matrix(&p.k0.operator),
            eps0: p.k0.radius,
            p1: DenseMatrix::from_matrix(&p.k1.operator),
            eps1: p.k1.radius,
            lambda0: DenseMatrix::from_matrix(&p.lambda0),
            lambda1: DenseMatrix::from_matrix(&p.lambda1),
            q: DenseMatrix::from_matrix(&p.q),
        };
        let data = obs.map(|o| {
            serde_json::to_value(HilbertData { y0: o.y0.iter().copied().collect(), y1: o.y1.iter().copied().collect() })
                .expect("data always serializes")
        });
        Self {
            version: VERSION.into(),
            kind: ProblemKind::Hilbert,
            payload: serde_json::to_value(payload).expect("payload always serializes"),
            data,
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self::from_hilbert(&inst.problem, Some(&inst.obs))
    }

    pub fn from_functional(inst: &FunctionalInstance, y: Option<&[Vec<f64>]>) -> Self {
        let payload = FunctionalPayload { levels: inst.levels.clone(), target: inst.target.clone() };
        Self {
            version: VERSION.into(),
            kind: ProblemKind::Functional,
            payload: serde_json::to_value(payload).expect("payload always serializes"),
            data: y.map(|y| serde_json::to_value(FunctionalData { y: y.to_vec() }).expect("data always serializes")),
        }
    }
}
