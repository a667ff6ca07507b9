use super::{Model, OpfVariables, ParametricLp};
use crate::grid::Network;
use crate::lp::{Cmp, LinearProgram};

/// Angle bound large enough never to bind: any path's angle span is at most
/// the sum of `s_max / |b|` over its branches.
pub(crate) fn dc_angle_bound(network: &Network) -> f64 {
    network
        .branches
        .iter()
        .map(|br| br.s_max / br.b.abs())
        .sum()
}

pub fn dc_parametric(network: &Network) -> ParametricLp {
    let mut lp = LinearProgram::new();
    let mut vars = OpfVariables::default();
    let nb = network.branches.len();
    let reference = network.reference_bus();
    let theta_max = dc_angle_bound(network);

    for d in &network.demands {
        vars.p_d
            .push(lp.add_var(format!("p_d[{}]", d.id), 0.0, d.p_base, -1.0));
    }
    lp.offset = network.total_demand();
    for g in &network.generators {
        vars.p_g
            .push(lp.add_var(format!("p_g[{}]", g.id), 0.0, g.p_max, 0.0));
    }
    for (i, b) in network.buses.iter().enumerate() {
        let (lo, hi) = if i == reference {
            (0.0, 0.0)
        } else {
            (-theta_max, theta_max)
        };
        vars.theta
            .push(lp.add_var(format!("theta[{}]", b.id), lo, hi, 0.0));
    }
    for br in &network.branches {
        vars.p_k.push(vec![lp.add_var(
            format!("p_k[{}]", br.id),
            -br.s_max,
            br.s_max,
            0.0,
        )]);
    }

    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); network.buses.len()];
    for (g, gen) in network.generators.iter().enumerate() {
        balance[network.bus_idx(gen.bus)].push((vars.p_g[g], 1.0));
    }
    for (d, dem) in network.demands.iter().enumerate() {
        balance[network.bus_idx(dem.bus)].push((vars.p_d[d], -1.0));
    }
    for (k, br) in network.branches.iter().enumerate() {
        balance[network.bus_idx(br.from_bus)].push((vars.p_k[k][0], -1.0));
        balance[network.bus_idx(br.to_bus)].push((vars.p_k[k][0], 1.0));
    }
    for (i, terms) in balance.into_iter().enumerate() {
        lp.add_row(
            format!("p_balance[{}]", network.buses[i].id),
            terms,
            Cmp::Eq,
            0.0,
        );
    }

    let mut z_terms = vec![Vec::new(); nb];
    let mut big_m = vec![None; lp.num_rows()];
    for (k, br) in network.branches.iter().enumerate() {
        let p = vars.p_k[k][0];
        let (tf, tt) = (
            vars.theta[network.bus_idx(br.from_bus)],
            vars.theta[network.bus_idx(br.to_bus)],
        );
        let m = br.b.abs() * 2.0 * theta_max;
        let flow = [(p, 1.0), (tf, br.b), (tt, -br.b)];
        // p + b (theta_f - theta_t) within +-M (1 - z)
        let r = lp.add_row(format!("flow_hi[{}]", br.id), flow, Cmp::Le, m);
        z_terms[k].push((r, -m));
        big_m.push(Some(m));
        let r = lp.add_row(format!("flow_lo[{}]", br.id), flow, Cmp::Ge, -m);
        z_terms[k].push((r, m));
        big_m.push(Some(m));
        let r = lp.add_row(format!("cap_hi[{}]", br.id), [(p, 1.0)], Cmp::Le, 0.0);
        z_terms[k].push((r, br.s_max));
        big_m.push(None);
        let r = lp.add_row(format!("cap_lo[{}]", br.id), [(p, 1.0)], Cmp::Ge, 0.0);
        z_terms[k].push((r, -br.s_max));
        big_m.push(None);
    }
    ParametricLp {
        model: Model::Dc,
        lp,
        vars,
        z_terms,
        big_m,
    }
}
