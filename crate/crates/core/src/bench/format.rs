use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problem::{Block, Instance, PrimalDualPoint, Problem, Sense, SeparableProblem};
use crate::prox::{ObjectiveSpec, SetSpec};

pub const SCHEMA_VERSION: &str = "1";

/// One block of a separable layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub objective: ObjectiveSpec,
    pub set: SetSpec,
    #[serde(rename = "A")]
    pub a: DenseMatrix,
}

/// On-disk problem description. Exactly one of the single-block triple
/// `(objective, set, A)` and `blocks` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    pub sense: Sense,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<DenseMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockSpec>>,
    /// Known saddle point, when the generator could compute one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PrimalDualPoint>,
}

impl ProblemFile {
    pub fn from_instance(instance: &Instance, reference: Option<PrimalDualPoint>) -> Self {
        let mut file = ProblemFile {
            schema_version: SCHEMA_VERSION.to_string(),
            sense: Sense::Equality,
            b: Vec::new(),
            objective: None,
            set: None,
            a: None,
            blocks: None,
            reference,
        };
        match instance {
            Instance::Single(p) => {
                file.sense = p.sense;
                file.b = p.b.clone();
                file.objective = Some(p.objective.clone());
                file.set = Some(p.set.clone());
                file.a = Some(p.a.clone());
            }
            Instance::Separable(p) => {
                file.sense = p.sense;
                file.b = p.b.clone();
                file.blocks = Some(
                    p.blocks()
                        .iter()
                        .map(|b| BlockSpec {
                            objective: b.objective.clone(),
                            set: b.set.clone(),
                            a: b.a.clone(),
                        })
                        .collect(),
                );
            }
        }
        file
    }

    /// Validated instance described by the file.
    pub fn instance(&self) -> Result<Instance> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported schema_version {:?}, expected {SCHEMA_VERSION:?}",
                self.schema_version
            )));
        }
        let single = (&self.objective, &self.set, &self.a);
        let instance: Instance = match (single, &self.blocks) {
            ((Some(obj), Some(set), Some(a)), None) => {
                Problem::new(obj.clone(), set.clone(), a.clone(), self.b.clone(), self.sense)?.into()
            }
            ((None, None, None), Some(blocks)) => {
                let blocks = blocks
                    .iter()
                    .map(|b| Block {
                        objective: b.objective.clone(),
                        set: b.set.clone(),
                        a: b.a.clone(),
                    })
                    .collect();
                SeparableProblem::new(blocks, self.b.clone(), self.sense)?.into()
            }
            _ => {
                return Err(Error::Schema(
                    "expected either objective/set/A or blocks, not both or neither".into(),
                ))
            }
        };
        if let Some(r) = &self.reference {
            use crate::problem::Model;
            instance.check_point(r)?;
        }
        Ok(instance)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
