//! Single-scenario input and solution files.
//!
//! Both are TOML. A complex number is written `[re, im]`; a complex vector
//! is a list of such pairs and a complex matrix is a list of rows
//! (row-major). Users are indexed cell-major (`cell * K + user`) and links
//! are listed as `[[link]]` tables, one per (bs, cell, user) triple.
//!
//! ```toml
//! method = "robust_mcbf"
//! num_cells = 1
//! users_per_cell = 1
//! num_antennas = 2
//! sinr_target = 1.0        # linear; one number or one per user
//! noise_power = 1.0        # watts; one number or one per user
//! power_weights = [1.0]    # optional, one per cell (default 1)
//! interference_cap = 1.0   # watts; SBF designs with several cells only
//! error_radius = 0.1       # default spherical error radius of every link
//!
//! [[link]]
//! bs = 0
//! cell = 0
//! user = 0
//! nominal = [[1.0, 0.0], [0.0, 0.0]]
//! # error_radius = 0.05                                   per-link radius
//! # error_shape = [[[400.0, 0.0], [0.0, 0.0]],
//! #                [[0.0, 0.0], [400.0, 0.0]]]             or a shape matrix C
//! ```
//!
//! Interference caps, when given as a list, are ordered by transmitting
//! BS, then victim cell (skipping the BS's own cell), then user.

use crate::error::{CliError, Result};
use num_complex::Complex64;
use rcbf_core::linalg::{CMatrix, CVector};
use rcbf_core::model::{ChannelSet, ErrorEllipsoid, SystemConfig};
use rcbf_core::problems::{DesignKind, Extraction, SdrSolution};
use serde::{Deserialize, Serialize};

pub type Pair = [f64; 2];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn expand(&self, len: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            OneOrMany::One(v) => Ok(vec![*v; len]),
            OneOrMany::Many(v) if v.len() == len => Ok(v.clone()),
            OneOrMany::Many(v) => Err(CliError::Config(format!("{what}: expected {len} values, got {}", v.len()))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub method: DesignKind,
    pub num_cells: usize,
    pub users_per_cell: usize,
    pub num_antennas: usize,
    pub sinr_target: OneOrMany,
    pub noise_power: OneOrMany,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference_cap: Option<OneOrMany>,
    #[serde(default)]
    pub error_radius: f64,
    #[serde(rename = "link")]
    pub links: Vec<LinkEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub bs: usize,
    pub cell: usize,
    pub user: usize,
    pub nominal: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_shape: Option<Vec<Vec<Pair>>>,
}

/// A parsed scenario ready for the design routines.
pub struct Scenario {
    pub method: DesignKind,
    pub channels: ChannelSet,
    pub config: SystemConfig,
}

pub fn vector_from_pairs(pairs: &[Pair]) -> CVector {
    CVector::from_iterator(pairs.len(), pairs.iter().map(|[re, im]| Complex64::new(*re, *im)))
}

pub fn vector_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn matrix_from_rows(rows: &[Vec<Pair>]) -> Result<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config("matrix rows must form a square matrix".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("malformed scenario: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn build(&self) -> Result<Scenario> {
        let (nc, k, n) = (self.num_cells, self.users_per_cell, self.num_antennas);
        let users = nc * k;
        let caps = match &self.interference_cap {
            Some(c) => Some(c.expand(nc * nc.saturating_sub(1) * k, "interference_cap")?),
            None => None,
        };
        let config = SystemConfig::new(
            nc,
            k,
            n,
            self.power_weights.clone().unwrap_or_else(|| vec![1.0; nc]),
            self.sinr_target.expand(users, "sinr_target")?,
            self.noise_power.expand(users, "noise_power")?,
            caps,
        )?;

        let count = nc * nc * k;
        let mut nominal: Vec<Option<CVector>> = vec![None; count];
        let mut ellipsoids = vec![ErrorEllipsoid::spherical(self.error_radius)?; count];
        for entry in &self.links {
            if entry.bs >= nc || entry.cell >= nc || entry.user >= k {
                return Err(CliError::Config(format!(
                    "link (bs {}, cell {}, user {}) is out of range",
                    entry.bs, entry.cell, entry.user
                )));
            }
            // Link order of `ChannelSet`: user-major, then BS.
            let idx = (entry.cell * k + entry.user) * nc + entry.bs;
            if nominal[idx].is_some() {
                return Err(CliError::Config(format!(
                    "link (bs {}, cell {}, user {}) is listed twice",
                    entry.bs, entry.cell, entry.user
                )));
            }
            if entry.nominal.len() != n {
                return Err(CliError::Config(format!("nominal channel must have {n} entries")));
            }
            nominal[idx] = Some(vector_from_pairs(&entry.nominal));
            ellipsoids[idx] = match (&entry.error_shape, entry.error_radius) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config("give either error_radius or error_shape for a link, not both".into()))
                }
                (Some(rows), None) => ErrorEllipsoid::from_shape(matrix_from_rows(rows)?)?,
                (None, Some(r)) => ErrorEllipsoid::spherical(r)?,
                (None, None) => ellipsoids[idx].clone(),
            };
        }
        let nominal = nominal
            .into_iter()
            .enumerate()
            .map(|(idx, h)| {
                h.ok_or_else(|| {
                    let (bs, user) = (idx % nc, idx / nc);
                    CliError::Config(format!("missing link (bs {bs}, cell {}, user {})", user / k, user % k))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let channels = ChannelSet::new(nc, k, n, nominal, ellipsoids, vec![1.0; count])?;
        channels.check_config(&config)?;
        Ok(Scenario { method: self.method, channels, config })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub method: DesignKind,
    /// `optimal`, `primal-infeasible`, `dual-infeasible` or `numerical-failure`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate_residual: Option<f64>,
    /// `certified`, `sampled-feasible` or `failed`; absent unless optimal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_ratio: Option<f64>,
    #[serde(default, rename = "user", skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<UserSolution>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSolution {
    pub cell: usize,
    pub user: usize,
    pub rank_one_gap: f64,
    pub covariance: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beamformer: Option<Vec<Pair>>,
}

impl SolutionFile {
    pub fn new(sol: &SdrSolution, cfg: &SystemConfig, extraction: Option<&Extraction>) -> Self {
        let optimal = sol.status == rcbf_core::problems::DesignStatus::Optimal;
        let users = sol
            .covariances
            .iter()
            .enumerate()
            .map(|(u, w)| UserSolution {
                cell: u / cfg.users_per_cell,
                user: u % cfg.users_per_cell,
                rank_one_gap: sol.rank_one_gap[u],
                covariance: matrix_to_rows(w),
                beamformer: extraction.map(|ex| vector_to_pairs(&ex.beams.vectors[u])),
            })
            .collect();
        SolutionFile {
            method: sol.kind,
            status: sol.status.to_string(),
            objective: optimal.then_some(sol.objective),
            iterations: sol.iterations,
            certificate_residual: sol.certificate_residual,
            extraction: optimal.then(|| extraction.map_or("failed", |ex| ex.verification.as_str()).to_string()),
            power_ratio: extraction.map(|ex| ex.power_ratio),
            users,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("malformed solution: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("solution serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcbf_core::model::Link;

    const SINGLE: &str = r#"
method = "robust_mcbf"
num_cells = 1
users_per_cell = 1
num_antennas = 2
sinr_target = 1.0
noise_power = 1.0
error_radius = 0.1

[[link]]
bs = 0
cell = 0
user = 0
nominal = [[1.0, 0.0], [0.0, 0.0]]
"#;

    #[test]
    fn parses_single_link() {
        let s = ScenarioFile::parse(SINGLE).unwrap().build().unwrap();
        assert_eq!(s.method, DesignKind::RobustMcbf);
        assert_eq!(s.channels.ellipsoid(Link::new(0, 0, 0)).radius(), Some(0.1));
        assert_eq!(s.config.target(0, 0), 1.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let file = ScenarioFile::parse(SINGLE).unwrap();
        let again = ScenarioFile::parse(&file.to_toml()).unwrap();
        assert_eq!(again.build().unwrap().channels, file.build().unwrap().channels);
    }

    #[test]
    fn rejects_inconsistent_scenarios() {
        let missing =
            SINGLE.replace("[[link]]\nbs = 0\ncell = 0\nuser = 0\nnominal = [[1.0, 0.0], [0.0, 0.0]]\n", "link = []\n");
        let wrong_len = SINGLE.replace("[[1.0, 0.0], [0.0, 0.0]]", "[[1.0, 0.0]]");
        let out_of_range = SINGLE.replace("bs = 0", "bs = 1");
        let targets = SINGLE.replace("sinr_target = 1.0", "sinr_target = [1.0, 2.0]");
        let both = SINGLE.replace(
            "nominal = ",
            "error_radius = 0.1\nerror_shape = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]\nnominal = ",
        );
        for text in [missing, wrong_len, out_of_range, targets, both, SINGLE.replace("method", "methd")] {
            let res = ScenarioFile::parse(&text).and_then(|f| f.build());
            assert_eq!(res.err().map(|e| e.exit_code()), Some(2), "{text}");
        }
    }

    #[test]
    fn shape_matrix_overrides_radius() {
        let text = SINGLE.replace(
            "nominal = ",
            "error_shape = [[[400.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [400.0, 0.0]]]\nnominal = ",
        );
        let s = ScenarioFile::parse(&text).unwrap().build().unwrap();
        assert!((s.channels.ellipsoid(Link::new(0, 0, 0)).outer_radius() - 0.05).abs() < 1e-12);
    }
}
