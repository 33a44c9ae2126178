//! JSON scenario files.
//!
//! ```json
//! {
//!   "n": 2,
//!   "hs": [[1.0, 0.0], [0.5, -0.5]],
//!   "h0": [[0.3, 0.1], [0.0, 0.2]],
//!   "R": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
//!   "epsilon": 0.2,
//!   "p_bar_db": 5.0,
//!   "p_t_db": 0.0
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs; `R` is row-major.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Scenario, UncertaintyModel};
use crate::error::{Error, Result};
use crate::experiments::{db_to_linear, linear_to_db};
use crate::linalg::{CMatrix, CVector, HermitianMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: usize,
    pub hs: Vec<[f64; 2]>,
    pub h0: Vec<[f64; 2]>,
    #[serde(rename = "R")]
    pub r: Vec<[f64; 2]>,
    pub epsilon: f64,
    pub p_bar_db: f64,
    pub p_t_db: f64,
}

fn to_vector(name: &str, entries: &[[f64; 2]], n: usize) -> Result<CVector> {
    if entries.len() != n {
        return Err(Error::Parse(format!("'{name}' has {} entries, expected {n}", entries.len())));
    }
    Ok(CVector::from_iterator(n, entries.iter().map(|[re, im]| C64::new(*re, *im))))
}

fn pairs(it: impl Iterator<Item = C64>) -> Vec<[f64; 2]> {
    it.map(|z| [z.re, z.im]).collect()
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<Scenario> {
        let n = self.n;
        let hs = to_vector("hs", &self.hs, n)?;
        let h0 = to_vector("h0", &self.h0, n)?;
        if self.r.len() != n * n {
            return Err(Error::Parse(format!("'R' has {} entries, expected {}", self.r.len(), n * n)));
        }
        let r = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.r[i * n + j];
            C64::new(re, im)
        });
        let m = UncertaintyModel::new(h0, HermitianMatrix::new(r)?, self.epsilon)?;
        Scenario::new(hs, m, db_to_linear(self.p_bar_db), db_to_linear(self.p_t_db))
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        let n = sc.dim();
        let r = sc.uncertainty().covariance().matrix();
        Self {
            n,
            hs: pairs(sc.hs().iter().copied()),
            h0: pairs(sc.uncertainty().h0().iter().copied()),
            r: pairs((0..n * n).map(|k| r[(k / n, k % n)])),
            epsilon: sc.uncertainty().epsilon(),
            p_bar_db: linear_to_db(sc.p_bar()),
            p_t_db: linear_to_db(sc.p_t()),
        }
    }
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    file.to_scenario()
}

pub fn scenario_to_json(sc: &Scenario) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ScenarioFile::from_scenario(sc))?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    scenario_from_json(&text)
}

pub fn save_scenario(sc: &Scenario, path: &Path) -> Result<()> {
    fs::write(path, scenario_to_json(sc)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
