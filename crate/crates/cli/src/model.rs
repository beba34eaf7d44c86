//! JSON model files for the general error-correction engine. Matrices are
//! row-major nested arrays of `[re, im]` pairs.

use serde::{Deserialize, Serialize};

use fluxmet_core::dynamics::{theta_model, Derivatives, LindbladModel};
use fluxmet_core::qec::{theta_code, QecCode};
use fluxmet_core::{CMatrix, CVector, C64};

use crate::error::{CliError, Result};

pub type MatrixData = Vec<Vec<[f64; 2]>>;
pub type VectorData = Vec<[f64; 2]>;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dim: usize,
    pub hamiltonian: MatrixData,
    pub lindblads: Vec<MatrixData>,
    pub d_hamiltonian: MatrixData,
    pub d_lindblads: Vec<MatrixData>,
    pub dd_hamiltonian: MatrixData,
    pub dd_lindblads: Vec<MatrixData>,
    pub code_c0: VectorData,
    pub code_c1: VectorData,
}

fn to_matrix(name: &str, dim: usize, data: &MatrixData) -> Result<CMatrix> {
    if data.len() != dim || data.iter().any(|r| r.len() != dim) {
        return Err(CliError::Input(format!(
            "{name}: expected a {dim}x{dim} matrix"
        )));
    }
    let flat = data
        .iter()
        .flatten()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    Ok(CMatrix::from_vec(dim, flat)?)
}

fn to_vector(name: &str, dim: usize, data: &VectorData) -> Result<CVector> {
    if data.len() != dim {
        return Err(CliError::Input(format!("{name}: expected {dim} entries")));
    }
    Ok(CVector::new(
        data.iter().map(|&[re, im]| C64::new(re, im)).collect(),
    ))
}

fn from_matrix(m: &CMatrix) -> MatrixData {
    let n = m.dim();
    (0..n)
        .map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_vector(v: &CVector) -> VectorData {
    v.as_slice().iter().map(|z| [z.re, z.im]).collect()
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data") + "\n"
    }

    pub fn build(&self) -> Result<(LindbladModel, QecCode)> {
        let n = self.lindblads.len();
        if self.d_lindblads.len() != n || self.dd_lindblads.len() != n {
            return Err(CliError::Input(format!(
                "d_lindblads/dd_lindblads: expected {n} entries to match lindblads"
            )));
        }
        let mats = |name: &str, list: &[MatrixData]| {
            list.iter()
                .enumerate()
                .map(|(k, m)| to_matrix(&format!("{name}[{k}]"), self.dim, m))
                .collect::<Result<Vec<_>>>()
        };
        let model = LindbladModel::constant(
            to_matrix("hamiltonian", self.dim, &self.hamiltonian)?,
            mats("lindblads", &self.lindblads)?,
        )?
        .with_derivatives(
            Derivatives {
                hamiltonian: to_matrix("d_hamiltonian", self.dim, &self.d_hamiltonian)?,
                lindblads: mats("d_lindblads", &self.d_lindblads)?,
            },
            Some(Derivatives {
                hamiltonian: to_matrix("dd_hamiltonian", self.dim, &self.dd_hamiltonian)?,
                lindblads: mats("dd_lindblads", &self.dd_lindblads)?,
            }),
        )?;
        let c0 = to_vector("code_c0", self.dim, &self.code_c0)?;
        let c1 = to_vector("code_c1", self.dim, &self.code_c1)?;
        let code = QecCode::new(c0, c1, Vec::new(), None)?;
        Ok((model, code))
    }

    /// The direction model with its code built at the true angle.
    pub fn theta_example(b: f64, gamma: f64, theta: f64) -> Result<Self> {
        let model = theta_model(b, gamma, theta)?;
        let (c0, c1) = theta_code(theta).basis(0.0);
        Ok(Self::from_parts(&model, &c0, &c1))
    }

    /// The direction model paired with the computational code
    /// `{|00⟩, |11⟩}`, which the field's errors do not respect.
    pub fn wrong_code_example(b: f64, gamma: f64, theta: f64) -> Result<Self> {
        let model = theta_model(b, gamma, theta)?;
        Ok(Self::from_parts(
            &model,
            &CVector::basis(4, 0),
            &CVector::basis(4, 3),
        ))
    }

    fn from_parts(model: &LindbladModel, c0: &CVector, c1: &CVector) -> Self {
        let first = model.first_derivs().expect("model with derivatives");
        let second = model.second_derivs().expect("model with derivatives");
        Self {
            dim: model.dim(),
            hamiltonian: from_matrix(&model.hamiltonian(0.0)),
            lindblads: model.lindblads(0.0).iter().map(from_matrix).collect(),
            d_hamiltonian: from_matrix(&first.hamiltonian),
            d_lindblads: first.lindblads.iter().map(from_matrix).collect(),
            dd_hamiltonian: from_matrix(&second.hamiltonian),
            dd_lindblads: second.lindblads.iter().map(from_matrix).collect(),
            code_c0: from_vector(c0),
            code_c1: from_vector(c1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = ModelFile::theta_example(0.1, 0.05, 0.7).unwrap();
        assert_eq!(ModelFile::parse(&m.to_json()).unwrap(), m);
        m.build().unwrap();
    }

    #[test]
    fn shape_errors_name_the_field() {
        let mut m = ModelFile::theta_example(0.1, 0.05, 0.7).unwrap();
        m.d_hamiltonian.pop();
        let err = m.build().unwrap_err();
        assert!(err.to_string().contains("d_hamiltonian"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&ModelFile::theta_example(0.1, 0.05, 0.7).unwrap().to_json())
                .unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(ModelFile::parse(&v.to_string()).is_err());
    }
}
