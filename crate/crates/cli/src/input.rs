//! Region files: JSON with `n` and either `tau` + `theta` or `vectors`.

use std::path::Path;

use isocorr::region::from_boundary_vectors;
use isocorr::{Matching, Region, TolerancePolicy};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionFile {
    pub n: usize,
    #[serde(default)]
    pub tau: Option<Vec<i64>>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub vectors: Option<Vec<[f64; 2]>>,
}

fn check_len<T>(name: &str, v: &[T], size: usize) -> Result<(), CliError> {
    if v.len() != size {
        return Err(CliError::Input(format!(
            "{name} has {} entries; expected 2n = {size}",
            v.len()
        )));
    }
    Ok(())
}

impl RegionFile {
    pub fn into_region(self, policy: &TolerancePolicy) -> Result<Region, CliError> {
        if self.n == 0 {
            return Err(CliError::Input("n must be at least 1".into()));
        }
        let size = 2 * self.n;
        let matching = match &self.tau {
            Some(tau) => {
                check_len("tau", tau, size)?;
                let tau = tau
                    .iter()
                    .map(|&t| {
                        usize::try_from(t).map_err(|_| {
                            CliError::Input(format!("tau entry {t} is out of range 1..={size}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(Matching::from_tau(tau)?)
            }
            None => None,
        };
        match (matching, self.theta, self.vectors) {
            (Some(m), Some(theta), vectors) => {
                check_len("theta", &theta, size)?;
                let r = Region::with_tolerance(m, theta, policy.angle_eps)?;
                if let Some(vs) = vectors {
                    check_len("vectors", &vs, size)?;
                    for (k, (v, w)) in vs.iter().zip(r.boundary_vectors()).enumerate() {
                        if (v[0] - w[0]).hypot(v[1] - w[1]) > policy.angle_eps {
                            return Err(CliError::Input(format!(
                                "vector {} disagrees with theta",
                                k + 1
                            )));
                        }
                    }
                }
                Ok(r)
            }
            (m, None, Some(vs)) => {
                check_len("vectors", &vs, size)?;
                Ok(from_boundary_vectors(&vs, m, policy)?)
            }
            (None, Some(_), _) => Err(CliError::Input("theta requires tau".into())),
            (_, None, None) => Err(CliError::Input(
                "region file needs tau and theta, or vectors".into(),
            )),
        }
    }
}

pub fn read_region(path: &Path, policy: &TolerancePolicy) -> Result<Region, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: RegionFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))?;
    file.into_region(policy)
}
