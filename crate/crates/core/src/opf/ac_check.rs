use serde::{Deserialize, Serialize};

use super::{branch_positions, OpfError, OpfModel, OpfVariables};
use crate::grid::Network;
use crate::interdiction::AttackVector;
use crate::lp::{solve_lp, Cmp};

/// Operating point in network order. `flows`, when present, holds the
/// model's directed `(p, q)` per branch as `[from->to, to->from]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcDispatch {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    pub p_d: Vec<f64>,
    pub q_d: Vec<f64>,
    pub flows: Option<Vec<[(f64, f64); 2]>>,
}

impl AcDispatch {
    pub fn flat(network: &Network) -> Self {
        let nb = network.buses.len();
        Self {
            v: vec![1.0; nb],
            theta: vec![0.0; nb],
            p_g: vec![0.0; network.generators.len()],
            q_g: vec![0.0; network.generators.len()],
            p_d: vec![0.0; network.demands.len()],
            q_d: vec![0.0; network.demands.len()],
            flows: None,
        }
    }

    /// Reads the operating point out of an LAC solution vector.
    pub fn from_lac(vars: &OpfVariables, x: &[f64]) -> Self {
        let pick = |cols: &[usize]| cols.iter().map(|&c| x[c]).collect::<Vec<_>>();
        let flows = (0..vars.p_k.len())
            .map(|k| [0, 1].map(|d| (x[vars.p_k[k][d]], x[vars.q_k[k][d]])))
            .collect::<Vec<_>>();
        Self {
            v: pick(&vars.v),
            theta: pick(&vars.theta),
            p_g: pick(&vars.p_g),
            q_g: pick(&vars.q_g),
            p_d: pick(&vars.p_d),
            q_d: pick(&vars.q_d),
            flows: Some(flows),
        }
    }

    /// LAC operating point with minimal envelope values among all
    /// shed-optimal solutions, so that the loss terms sit on their tangents.
    pub fn lac_tightened(model: &OpfModel) -> Option<Self> {
        let sol = solve_lp(&model.lp);
        if !sol.is_optimal() {
            return None;
        }
        let mut lp = model.lp.clone();
        let shed: Vec<(usize, f64)> = lp
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        lp.add_row(
            "shed_optimal",
            shed,
            Cmp::Le,
            sol.objective - lp.offset + 1e-9,
        );
        lp.objective = vec![0.0; lp.num_vars()];
        lp.offset = 0.0;
        for &c in model.vars.s_angle.iter().chain(&model.vars.s_volt) {
            lp.objective[c] = 1.0;
        }
        let second = solve_lp(&lp);
        second
            .is_optimal()
            .then(|| Self::from_lac(&model.vars, &second.x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Largest |model flow - exact flow| over directed branches (0 if no flows given).
    pub flow: f64,
    pub p_balance: f64,
    pub q_balance: f64,
    pub max: f64,
}

/// Exact directed flows `[(p_ij, q_ij), (p_ji, q_ji)]` per branch; attacked
/// branches carry nothing. Shunt susceptance is taken as zero.
pub fn exact_flows(
    network: &Network,
    out: &[usize],
    v: &[f64],
    theta: &[f64],
) -> Vec<[(f64, f64); 2]> {
    network
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            if out.contains(&k) {
                return [(0.0, 0.0); 2];
            }
            let (f, t) = (network.bus_idx(br.from_bus), network.bus_idx(br.to_bus));
            let one = |i: usize, j: usize| {
                let d = theta[i] - theta[j];
                let vv = v[i] * v[j];
                let p = br.g * v[i] * v[i] - vv * (br.g * d.cos() + br.b * d.sin());
                let q = -br.b * v[i] * v[i] + vv * (br.b * d.cos() - br.g * d.sin());
                (p, q)
            };
            [one(f, t), one(t, f)]
        })
        .collect()
}

/// Residuals of the exact nonconvex branch-flow and bus-balance equations at
/// `dispatch`; balance uses exact flows computed from `v` and `theta`.
pub fn evaluate_ac_feasible(
    network: &Network,
    attack: &AttackVector,
    dispatch: &AcDispatch,
) -> Result<ResidualReport, OpfError> {
    let out = branch_positions(network, attack)?;
    let exact = exact_flows(network, &out, &dispatch.v, &dispatch.theta);
    let mut flow: f64 = 0.0;
    if let Some(model) = &dispatch.flows {
        for (m, e) in model.iter().zip(&exact) {
            for d in 0..2 {
                flow = flow
                    .max((m[d].0 - e[d].0).abs())
                    .max((m[d].1 - e[d].1).abs());
            }
        }
    }
    let nbus = network.buses.len();
    let (mut p, mut q) = (vec![0.0; nbus], vec![0.0; nbus]);
    for (g, gen) in network.generators.iter().enumerate() {
        let i = network.bus_idx(gen.bus);
        p[i] += dispatch.p_g[g];
        q[i] += dispatch.q_g[g];
    }
    for (d, dem) in network.demands.iter().enumerate() {
        let i = network.bus_idx(dem.bus);
        p[i] -= dispatch.p_d[d];
        q[i] -= dispatch.q_d[d];
    }
    for (k, br) in network.branches.iter().enumerate() {
        let (f, t) = (network.bus_idx(br.from_bus), network.bus_idx(br.to_bus));
        p[f] -= exact[k][0].0;
        q[f] -= exact[k][0].1;
        p[t] -= exact[k][1].0;
        q[t] -= exact[k][1].1;
    }
    let p_balance = p.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let q_balance = q.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(ResidualReport {
        flow,
        p_balance,
        q_balance,
        max: flow.max(p_balance).max(q_balance),
    })
}
