//! Lower-level OPF builders (DC and linearized AC) and the single-level
//! interdiction MIP.
//!
//! Both builders produce a [`ParametricLp`]: a linear program whose row
//! right-hand sides are affine in the branch status vector `z` (1 = in
//! service). Fixing `z` gives the lower-level LP for one attack; keeping `z`
//! free and dualizing gives the interdiction MIP.

mod ac_check;
mod dc;
mod lac;
mod mip;
pub mod polygon;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::Network;
use crate::interdiction::AttackVector;
use crate::lp::LinearProgram;

pub use ac_check::{evaluate_ac_feasible, exact_flows, AcDispatch, ResidualReport};
pub use dc::dc_parametric;
pub use lac::lac_parametric;
pub use mip::{audit_big_m, build_interdiction_mip, BigMAudit, InterdictionMip, MipConfig};

#[derive(Debug, thiserror::Error)]
pub enum OpfError {
    #[error("invalid LAC configuration: {0}")]
    Config(String),
    #[error("attack references unknown branch id {0}")]
    UnknownBranch(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Dc,
    Lac,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Dc => "dc",
            Model::Lac => "lac",
        })
    }
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dc" => Ok(Model::Dc),
            "lac" => Ok(Model::Lac),
            _ => Err(format!("unknown model `{s}` (expected dc or lac)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LacConfig {
    pub polygon_sides: usize,
    /// Tangent pieces in each convex lower envelope.
    pub pwl_segments: usize,
    /// Half-width of the angle-difference domain, radians.
    pub angle_range: f64,
}

impl Default for LacConfig {
    fn default() -> Self {
        Self {
            polygon_sides: 8,
            pwl_segments: 6,
            angle_range: 0.35,
        }
    }
}

impl LacConfig {
    pub fn validate(&self) -> Result<(), OpfError> {
        if self.polygon_sides < 4 || self.polygon_sides % 2 != 0 {
            return Err(OpfError::Config(format!(
                "polygon sides must be even and >= 4, got {}",
                self.polygon_sides
            )));
        }
        if self.pwl_segments < 2 {
            return Err(OpfError::Config(format!(
                "need at least 2 PWL segments, got {}",
                self.pwl_segments
            )));
        }
        if !(self.angle_range > 0.0 && self.angle_range < std::f64::consts::FRAC_PI_2) {
            return Err(OpfError::Config("angle range must lie in (0, pi/2)".into()));
        }
        Ok(())
    }
}

/// Column of every lower-level symbol instance. Directed quantities are
/// stored per branch position as `[from->to, to->from]`; the DC model has a
/// single signed flow per branch in `p_k[k][0]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpfVariables {
    pub p_d: Vec<usize>,
    pub q_d: Vec<usize>,
    pub p_g: Vec<usize>,
    pub q_g: Vec<usize>,
    pub v: Vec<usize>,
    pub theta: Vec<usize>,
    pub p_k: Vec<Vec<usize>>,
    pub q_k: Vec<Vec<usize>>,
    /// Angle difference across each branch (LAC).
    pub delta: Vec<usize>,
    /// PWL envelope of the squared angle difference per branch (LAC).
    pub s_angle: Vec<usize>,
    /// PWL envelope of the squared voltage deviation per bus (LAC).
    pub s_volt: Vec<usize>,
}

impl OpfVariables {
    /// `(symbol, column)` for every owned column.
    pub fn owned(&self) -> Vec<(&'static str, usize)> {
        let mut out = Vec::new();
        let flat = |name: &'static str, cols: &[usize], out: &mut Vec<(&'static str, usize)>| {
            out.extend(cols.iter().map(|&c| (name, c)));
        };
        flat("p_d", &self.p_d, &mut out);
        flat("q_d", &self.q_d, &mut out);
        flat("p_g", &self.p_g, &mut out);
        flat("q_g", &self.q_g, &mut out);
        flat("v", &self.v, &mut out);
        flat("theta", &self.theta, &mut out);
        for c in &self.p_k {
            flat("p_k", c, &mut out);
        }
        for c in &self.q_k {
            flat("q_k", c, &mut out);
        }
        flat("delta", &self.delta, &mut out);
        flat("s_angle", &self.s_angle, &mut out);
        flat("s_volt", &self.s_volt, &mut out);
        out
    }
}

/// Checks that every column of `lp` belongs to exactly one symbol and that
/// its label names that symbol.
pub fn audit_symbols(lp: &LinearProgram, vars: &OpfVariables) -> Result<(), String> {
    let owned = vars.owned();
    let mut seen = HashSet::new();
    for &(name, col) in &owned {
        if col >= lp.num_vars() {
            return Err(format!("{name} points past the last column ({col})"));
        }
        if !seen.insert(col) {
            return Err(format!(
                "column {col} ({}) has two owners",
                lp.var_labels[col]
            ));
        }
        if !lp.var_labels[col].starts_with(&format!("{name}[")) {
            return Err(format!(
                "column {col} labelled `{}` is owned by {name}",
                lp.var_labels[col]
            ));
        }
    }
    if seen.len() != lp.num_vars() {
        let orphan = (0..lp.num_vars()).find(|c| !seen.contains(c)).unwrap();
        return Err(format!(
            "column {orphan} ({}) has no owner",
            lp.var_labels[orphan]
        ));
    }
    Ok(())
}

/// Lower-level LP with right-hand sides `rhs_r + sum_k F[r][k] * z_k`.
#[derive(Debug, Clone)]
pub struct ParametricLp {
    pub model: Model,
    /// Program at `z = 0` (every branch out of service).
    pub lp: LinearProgram,
    pub vars: OpfVariables,
    /// Per branch position: `(row, F)` entries.
    pub z_terms: Vec<Vec<(usize, f64)>>,
    /// Big-M value of rows that only relax a physical relation when the
    /// branch is out; `None` for all other rows.
    pub big_m: Vec<Option<f64>>,
}

impl ParametricLp {
    pub fn num_branches(&self) -> usize {
        self.z_terms.len()
    }

    /// Lower-level LP with branch statuses `z`.
    pub fn with_status(&self, z: &[f64]) -> LinearProgram {
        let mut lp = self.lp.clone();
        for (k, terms) in self.z_terms.iter().enumerate() {
            for &(r, f) in terms {
                lp.rows[r].rhs += f * z[k];
            }
        }
        lp
    }

    /// Lower-level LP with the given branch positions out of service.
    pub fn with_outages(&self, out: &[usize]) -> LinearProgram {
        let z: Vec<f64> = (0..self.num_branches())
            .map(|k| if out.contains(&k) { 0.0 } else { 1.0 })
            .collect();
        self.with_status(&z)
    }
}

pub fn branch_positions(network: &Network, attack: &AttackVector) -> Result<Vec<usize>, OpfError> {
    attack
        .ids()
        .iter()
        .map(|&id| network.branch_idx(id).ok_or(OpfError::UnknownBranch(id)))
        .collect()
}

/// Lower-level program for one fixed attack.
#[derive(Debug, Clone)]
pub struct OpfModel {
    pub lp: LinearProgram,
    pub vars: OpfVariables,
}

pub fn build_dc(network: &Network, attack: &AttackVector) -> Result<OpfModel, OpfError> {
    let par = dc_parametric(network);
    let out = branch_positions(network, attack)?;
    Ok(OpfModel {
        lp: par.with_outages(&out),
        vars: par.vars,
    })
}

pub fn build_lac(
    network: &Network,
    attack: &AttackVector,
    config: &LacConfig,
) -> Result<OpfModel, OpfError> {
    let par = lac_parametric(network, config)?;
    let out = branch_positions(network, attack)?;
    Ok(OpfModel {
        lp: par.with_outages(&out),
        vars: par.vars,
    })
}

pub fn parametric(
    network: &Network,
    model: Model,
    config: &LacConfig,
) -> Result<ParametricLp, OpfError> {
    match model {
        Model::Dc => Ok(dc_parametric(network)),
        Model::Lac => lac_parametric(network, config),
    }
}

#[cfg(test)]
pub(crate) mod test_grids {
    use crate::grid::{Branch, Bus, Demand, Generator, Network};

    pub fn bus(id: u32) -> Bus {
        Bus {
            id,
            v_min: 0.9,
            v_max: 1.1,
        }
    }

    pub fn line(id: u32, f: u32, t: u32, s_max: f64) -> Branch {
        Branch {
            id,
            from_bus: f,
            to_bus: t,
            g: 1.0,
            b: -10.0,
            b_shunt: 0.0,
            s_max,
            attackable: true,
        }
    }

    pub fn gen(id: u32, bus: u32, p_max: f64) -> Generator {
        Generator {
            id,
            bus,
            p_max,
            q_min: -1.0,
            q_max: 1.0,
            alpha: 1.0,
            external_grid: false,
        }
    }

    pub fn load(id: u32, bus: u32, p: f64) -> Demand {
        Demand {
            id,
            bus,
            p_base: p,
            alpha: 0.2,
        }
    }

    pub fn two_bus(s_max: f64) -> Network {
        Network::new(
            "two",
            100.0,
            vec![bus(1), bus(2)],
            vec![line(1, 1, 2, s_max)],
            vec![gen(1, 1, 2.0)],
            vec![load(1, 2, 1.0)],
        )
        .unwrap()
    }
}
