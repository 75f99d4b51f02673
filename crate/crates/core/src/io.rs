//! On-disk formats.
//!
//! * Field states and density matrices: `{"n_max": N, "re": [...], "im": [...]}`,
//!   matrices flattened row-major.
//! * Grids: CSV with header `x,y,value`, or
//!   `{"re_range": [min, max], "im_range": [min, max], "step": s, "values": [[...], ...]}`
//!   with one inner array per `y` row.
//! * Probe scans: CSV with header `phi,pg`.
//!
//! Floats are written with Rust's shortest round-trip formatting (exponent
//! form below 1e-4 in magnitude), so equal values always produce identical
//! bytes and parse back exactly.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FieldState, HERMITIAN_TOL, TRACE_TOL};
use crate::homodyne::ProbeScan;
use crate::phase_space::{GridSpec, PhaseSpaceGrid};
use crate::C64;

/// CSV number formatting: shortest round-trip digits, exponent form for
/// small nonzero magnitudes.
#[derive(Clone, Copy, Debug)]
pub struct CsvNum(pub f64);

impl std::fmt::Display for CsvNum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let x = self.0;
        if x != 0.0 && x.abs() < 1e-4 {
            write!(f, "{x:e}")
        } else {
            write!(f, "{x}")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldStateDoc {
    pub n_max: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&FieldState> for FieldStateDoc {
    fn from(s: &FieldState) -> Self {
        Self {
            n_max: s.n_max(),
            re: s.amps().iter().map(|a| a.re).collect(),
            im: s.amps().iter().map(|a| a.im).collect(),
        }
    }
}

impl TryFrom<FieldStateDoc> for FieldState {
    type Error = Error;

    fn try_from(doc: FieldStateDoc) -> Result<Self> {
        if doc.re.len() != doc.n_max + 1 || doc.im.len() != doc.n_max + 1 {
            return Err(Error::Config(format!(
                "field state with n_max = {} needs {} amplitudes, got re: {}, im: {}",
                doc.n_max,
                doc.n_max + 1,
                doc.re.len(),
                doc.im.len()
            )));
        }
        FieldState::from_amplitudes(doc.re.iter().zip(&doc.im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixDoc {
    pub n_max: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&DensityMatrix> for DensityMatrixDoc {
    fn from(rho: &DensityMatrix) -> Self {
        let e = rho.elems();
        let dim = rho.dim();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                re.push(e[(r, c)].re);
                im.push(e[(r, c)].im);
            }
        }
        Self { n_max: rho.n_max(), re, im }
    }
}

impl TryFrom<DensityMatrixDoc> for DensityMatrix {
    type Error = Error;

    fn try_from(doc: DensityMatrixDoc) -> Result<Self> {
        let dim = doc.n_max + 1;
        if doc.re.len() != dim * dim || doc.im.len() != dim * dim {
            return Err(Error::Config(format!("density matrix with n_max = {} needs {} entries", doc.n_max, dim * dim)));
        }
        let m = DMatrix::from_fn(dim, dim, |r, c| C64::new(doc.re[r * dim + c], doc.im[r * dim + c]));
        let rho = DensityMatrix::from_raw(m);
        rho.validate(HERMITIAN_TOL, TRACE_TOL)?;
        Ok(rho)
    }
}

/// Provenance stored next to a prepared state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparationMetadata {
    pub alpha_re: f64,
    pub alpha_im: f64,
    /// Interaction times `gt_i` in units of π.
    pub gts_pi: Vec<f64>,
    pub conditional_probs: Vec<f64>,
    pub joint_prob: f64,
}

impl PreparationMetadata {
    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha_re, self.alpha_im)
    }

    pub fn gts(&self) -> Vec<f64> {
        self.gts_pi.iter().map(|g| g * std::f64::consts::PI).collect()
    }
}

/// A field state file: the state document plus optional metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    #[serde(flatten)]
    pub state: FieldStateDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<PreparationMetadata>,
}

impl StateFile {
    pub fn new(state: &FieldState, metadata: Option<PreparationMetadata>) -> Self {
        Self { state: state.into(), metadata }
    }

    pub fn field_state(&self) -> Result<FieldState> {
        self.state.clone().try_into()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub re_range: [f64; 2],
    pub im_range: [f64; 2],
    pub step: f64,
    pub values: Vec<Vec<f64>>,
}

impl From<&PhaseSpaceGrid> for GridDoc {
    fn from(g: &PhaseSpaceGrid) -> Self {
        Self {
            re_range: [g.spec.re_range.0, g.spec.re_range.1],
            im_range: [g.spec.im_range.0, g.spec.im_range.1],
            step: g.spec.step,
            values: g.values.clone(),
        }
    }
}

impl TryFrom<GridDoc> for PhaseSpaceGrid {
    type Error = Error;

    fn try_from(doc: GridDoc) -> Result<Self> {
        let spec = GridSpec::new((doc.re_range[0], doc.re_range[1]), (doc.im_range[0], doc.im_range[1]), doc.step)?;
        if doc.values.len() != spec.ny() || doc.values.iter().any(|r| r.len() != spec.nx()) {
            return Err(Error::Config(format!("grid values do not match a {}x{} grid", spec.nx(), spec.ny())));
        }
        Ok(PhaseSpaceGrid { spec, values: doc.values })
    }
}

pub fn grid_to_csv(grid: &PhaseSpaceGrid) -> String {
    let mut out = Vec::new();
    grid.write_csv(&mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("CSV is ASCII")
}

pub fn grid_to_json(grid: &PhaseSpaceGrid) -> Result<String> {
    Ok(serde_json::to_string(&GridDoc::from(grid))?)
}

pub fn write_scan_csv<W: Write>(scan: &ProbeScan, mut w: W) -> std::io::Result<()> {
    writeln!(w, "phi,pg")?;
    for (phi, p) in scan.phis.iter().zip(&scan.probs) {
        writeln!(w, "{},{}", CsvNum(*phi), CsvNum(*p))?;
    }
    Ok(())
}

pub fn scan_to_csv(scan: &ProbeScan) -> String {
    let mut out = Vec::new();
    write_scan_csv(scan, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("CSV is ASCII")
}
