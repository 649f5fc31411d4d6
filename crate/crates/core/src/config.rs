//! JSON system definitions and canonical JSON output.
//!
//! Matrices are row-major nested arrays. A density cell is the list of its
//! polynomial coefficients in ascending degree, in the offset from the cell's
//! left breakpoint.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{GldeError, Result};
use crate::function::{BvMatrixFunction, MatrixJump, RegulatedVectorFunction, VectorJump};
use crate::poly::PiecewisePoly;
use crate::system::GldeSystem;

type Rows = Vec<Vec<f64>>;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dimension: usize,
    pub period: f64,
    #[serde(rename = "A")]
    pub a: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<ForcingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(rename = "periodicIncrement", default = "yes")]
    pub periodic_increment: bool,
    pub density: MatrixDensityConfig,
    #[serde(default)]
    pub jumps: Vec<MatrixJumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDensityConfig {
    pub mesh: Vec<f64>,
    pub cells: Vec<Vec<Rows>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJumpConfig {
    pub time: f64,
    pub pre: Rows,
    pub post: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default = "yes")]
    pub periodic: bool,
    #[serde(rename = "baseValue")]
    pub base_value: Vec<f64>,
    pub density: VectorDensityConfig,
    #[serde(default)]
    pub jumps: Vec<VectorJumpConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorDensityConfig {
    pub mesh: Vec<f64>,
    pub cells: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorJumpConfig {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
}

fn matrix(rows: &Rows, n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(GldeError::Config(format!("{what}: expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(GldeError::Config(format!("{what}: expected {n} entries, found {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

fn rows_of(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn config_err(e: GldeError) -> GldeError {
    match e {
        GldeError::Config(_) | GldeError::HViolation { .. } => e,
        other => GldeError::Config(other.to_string()),
    }
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text).map_err(|e| GldeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(GldeError::Config("dimension must be positive".into()));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(GldeError::Config(format!("period must be positive, got {}", self.period)));
        }
        Ok(())
    }

    pub fn to_integrator(&self) -> Result<BvMatrixFunction> {
        self.validate()?;
        let n = self.dimension;
        let d = &self.a.density;
        let cells = d
            .cells
            .iter()
            .map(|cell| cell.iter().map(|c| matrix(c, n, "A density coefficient")).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let poly = PiecewisePoly::new(d.mesh.clone(), cells).map_err(config_err)?;
        if (poly.period() - self.period).abs() > 1e-12 * self.period {
            return Err(GldeError::Config("A density mesh must end at the period".into()));
        }
        let jumps = self
            .a
            .jumps
            .iter()
            .map(|j| Ok(MatrixJump::new(j.time, matrix(&j.pre, n, "A jump")?, matrix(&j.post, n, "A jump")?)))
            .collect::<Result<Vec<_>>>()?;
        BvMatrixFunction::new(self.period, poly, jumps, self.a.periodic_increment).map_err(config_err)
    }

    pub fn to_forcing(&self) -> Result<Option<RegulatedVectorFunction>> {
        self.validate()?;
        let Some(f) = &self.f else { return Ok(None) };
        let n = self.dimension;
        let cells = f
            .density
            .cells
            .iter()
            .map(|cell| {
                cell.iter()
                    .map(|c| vector(c, n, "f density coefficient").map(|v| DMatrix::from_column_slice(n, 1, v.as_slice())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let poly = PiecewisePoly::new(f.density.mesh.clone(), cells).map_err(config_err)?;
        if (poly.period() - self.period).abs() > 1e-12 * self.period {
            return Err(GldeError::Config("f density mesh must end at the period".into()));
        }
        let jumps = f
            .jumps
            .iter()
            .map(|j| Ok(VectorJump::new(j.time, vector(&j.pre, n, "f jump")?, vector(&j.post, n, "f jump")?)))
            .collect::<Result<Vec<_>>>()?;
        let base = vector(&f.base_value, n, "f baseValue")?;
        RegulatedVectorFunction::new(self.period, base, poly, jumps, f.periodic)
            .map(Some)
            .map_err(config_err)
    }

    /// Builds the system; fails with an (H) violation when a jump factor is singular.
    pub fn to_system(&self) -> Result<GldeSystem> {
        GldeSystem::new(self.to_integrator()?, self.to_forcing()?)
    }

    /// Exports a system in the stored representation (jump times already in the mesh).
    pub fn from_system(sys: &GldeSystem) -> Self {
        let a = sys.integrator();
        let d = a.density();
        let a_cfg = IntegratorConfig {
            periodic_increment: a.is_periodic_increment(),
            density: MatrixDensityConfig {
                mesh: d.breakpoints().to_vec(),
                cells: d.cells().iter().map(|c| c.iter().map(rows_of).collect()).collect(),
            },
            jumps: a
                .jumps()
                .iter()
                .map(|j| MatrixJumpConfig { time: j.time, pre: rows_of(&j.pre), post: rows_of(&j.post) })
                .collect(),
        };
        let f_cfg = sys.forcing().map(|f| {
            let d = f.density();
            ForcingConfig {
                periodic: f.is_periodic(),
                base_value: f.base_value().iter().copied().collect(),
                density: VectorDensityConfig {
                    mesh: d.breakpoints().to_vec(),
                    cells: d.cells().iter().map(|c| c.iter().map(|m| m.iter().copied().collect()).collect()).collect(),
                },
                jumps: f
                    .jumps()
                    .iter()
                    .map(|j| VectorJumpConfig {
                        time: j.time,
                        pre: j.pre.iter().copied().collect(),
                        post: j.post.iter().copied().collect(),
                    })
                    .collect(),
            }
        });
        SystemConfig { dimension: sys.dim(), period: sys.period(), a: a_cfg, f: f_cfg }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("config serializes"))
    }
}

/// Compact JSON with sorted object keys and every float written with 17
/// significant digits, followed by a newline.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                write_value(&map[k], out);
            }
            out.push('}');
        }
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}
