use super::{polygon, LacConfig, Model, OpfError, OpfVariables, ParametricLp};
use crate::grid::Network;
use crate::lp::{Cmp, LinearProgram};

fn interval(lp: &LinearProgram, coeffs: &[(usize, f64)]) -> (f64, f64) {
    coeffs.iter().fold((0.0, 0.0), |(lo, hi), &(j, a)| {
        let (x, y) = (a * lp.lower[j], a * lp.upper[j]);
        (lo + x.min(y), hi + x.max(y))
    })
}

/// Tangent points of an `m`-piece lower envelope of `x^2` on `[lo, hi]`.
fn tangent_points(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| lo + (j as f64 + 0.5) * (hi - lo) / m as f64)
        .collect()
}

/// Linearized AC lower level.
///
/// Around `v = 1`, `theta = 0` the branch flows become
/// `p_ij = G (v_i - v_j) + G (v_i - 1)^2 + G d^2 / 2 - B d` and
/// `q_ij = -B (v_i - v_j) - B (v_i - 1)^2 - B d^2 / 2 - G d`, with `d` the
/// angle difference. The squares are carried by envelope variables bounded
/// below by tangents and above by the chord.
pub fn lac_parametric(network: &Network, config: &LacConfig) -> Result<ParametricLp, OpfError> {
    config.validate()?;
    let mut lp = LinearProgram::new();
    let mut vars = OpfVariables::default();
    let nb = network.branches.len();
    let reference = network.reference_bus();
    let r = config.angle_range;
    let theta_max = r * (network.buses.len().max(2) - 1) as f64;

    for d in &network.demands {
        vars.p_d
            .push(lp.add_var(format!("p_d[{}]", d.id), 0.0, d.p_base, -1.0));
    }
    lp.offset = network.total_demand();
    for d in &network.demands {
        let q = d.alpha * d.p_base;
        vars.q_d
            .push(lp.add_var(format!("q_d[{}]", d.id), q.min(0.0), q.max(0.0), 0.0));
    }
    for g in &network.generators {
        vars.p_g
            .push(lp.add_var(format!("p_g[{}]", g.id), 0.0, g.p_max, 0.0));
    }
    for g in &network.generators {
        vars.q_g
            .push(lp.add_var(format!("q_g[{}]", g.id), g.q_min, g.q_max, 0.0));
    }
    for b in &network.buses {
        vars.v
            .push(lp.add_var(format!("v[{}]", b.id), b.v_min, b.v_max, 0.0));
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
    for b in &network.buses {
        let (lo, hi) = (b.v_min - 1.0, b.v_max - 1.0);
        let floor = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            (lo * lo).min(hi * hi)
        };
        vars.s_volt.push(lp.add_var(
            format!("s_volt[{}]", b.id),
            floor,
            (lo * lo).max(hi * hi),
            0.0,
        ));
    }
    for br in &network.branches {
        let (f, t) = (br.from_bus, br.to_bus);
        let s = br.s_max;
        vars.p_k.push(vec![
            lp.add_var(format!("p_k[{f}->{t}#{}]", br.id), -s, s, 0.0),
            lp.add_var(format!("p_k[{t}->{f}#{}]", br.id), -s, s, 0.0),
        ]);
        vars.q_k.push(vec![
            lp.add_var(format!("q_k[{f}->{t}#{}]", br.id), -s, s, 0.0),
            lp.add_var(format!("q_k[{t}->{f}#{}]", br.id), -s, s, 0.0),
        ]);
        vars.delta
            .push(lp.add_var(format!("delta[{}]", br.id), -r, r, 0.0));
        vars.s_angle
            .push(lp.add_var(format!("s_angle[{}]", br.id), 0.0, r * r, 0.0));
    }

    let nbus = network.buses.len();
    let mut p_bal: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nbus];
    let mut q_bal: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nbus];
    for (g, gen) in network.generators.iter().enumerate() {
        let i = network.bus_idx(gen.bus);
        p_bal[i].push((vars.p_g[g], 1.0));
        q_bal[i].push((vars.q_g[g], 1.0));
    }
    for (d, dem) in network.demands.iter().enumerate() {
        let i = network.bus_idx(dem.bus);
        p_bal[i].push((vars.p_d[d], -1.0));
        q_bal[i].push((vars.q_d[d], -1.0));
    }
    for (k, br) in network.branches.iter().enumerate() {
        let (f, t) = (network.bus_idx(br.from_bus), network.bus_idx(br.to_bus));
        p_bal[f].push((vars.p_k[k][0], -1.0));
        p_bal[t].push((vars.p_k[k][1], -1.0));
        q_bal[f].push((vars.q_k[k][0], -1.0));
        q_bal[t].push((vars.q_k[k][1], -1.0));
    }
    for (i, terms) in p_bal.into_iter().enumerate() {
        lp.add_row(
            format!("p_balance[{}]", network.buses[i].id),
            terms,
            Cmp::Eq,
            0.0,
        );
    }
    for (i, terms) in q_bal.into_iter().enumerate() {
        lp.add_row(
            format!("q_balance[{}]", network.buses[i].id),
            terms,
            Cmp::Eq,
            0.0,
        );
    }
    for (d, dem) in network.demands.iter().enumerate() {
        lp.add_row(
            format!("q_ratio_d[{}]", dem.id),
            [(vars.q_d[d], 1.0), (vars.p_d[d], -dem.alpha)],
            Cmp::Eq,
            0.0,
        );
    }
    for (g, gen) in network.generators.iter().enumerate() {
        lp.add_row(
            format!("q_ratio_g[{}]", gen.id),
            [(vars.q_g[g], 1.0), (vars.p_g[g], -gen.alpha)],
            Cmp::Le,
            0.0,
        );
    }

    let m = config.pwl_segments;
    for (i, b) in network.buses.iter().enumerate() {
        let (lo, hi) = (b.v_min - 1.0, b.v_max - 1.0);
        let (s, v) = (vars.s_volt[i], vars.v[i]);
        for (j, a) in tangent_points(lo, hi, m).into_iter().enumerate() {
            lp.add_row(
                format!("volt_tangent[{}:{j}]", b.id),
                [(s, 1.0), (v, -2.0 * a)],
                Cmp::Ge,
                -2.0 * a - a * a,
            );
        }
        lp.add_row(
            format!("volt_chord[{}]", b.id),
            [(s, 1.0), (v, -(lo + hi))],
            Cmp::Le,
            -(lo + hi) - lo * hi,
        );
    }
    for (k, br) in network.branches.iter().enumerate() {
        let (s, d) = (vars.s_angle[k], vars.delta[k]);
        for (j, a) in tangent_points(-r, r, m).into_iter().enumerate() {
            lp.add_row(
                format!("angle_tangent[{}:{j}]", br.id),
                [(s, 1.0), (d, -2.0 * a)],
                Cmp::Ge,
                -a * a,
            );
        }
    }

    let mut z_terms = vec![Vec::new(); nb];
    let mut big_m = vec![None; lp.num_rows()];
    let mut relax =
        |lp: &mut LinearProgram, k: usize, label: String, coeffs: Vec<(usize, f64)>, scale: f64| {
            let (lo, hi) = interval(lp, &coeffs);
            let mm = lo.abs().max(hi.abs()) * scale;
            let coeffs: Vec<(usize, f64)> =
                coeffs.into_iter().map(|(j, a)| (j, a * scale)).collect();
            let row = lp.add_row(format!("{label}_hi"), coeffs.clone(), Cmp::Le, mm);
            z_terms[k].push((row, -mm));
            big_m.push(Some(mm));
            let row = lp.add_row(format!("{label}_lo"), coeffs, Cmp::Ge, -mm);
            z_terms[k].push((row, mm));
            big_m.push(Some(mm));
        };
    for (k, br) in network.branches.iter().enumerate() {
        let (f, t) = (network.bus_idx(br.from_bus), network.bus_idx(br.to_bus));
        let (g, b) = (br.g, br.b);
        // theta_f - theta_t - delta within +-M (1 - z), scaled by |b|
        relax(
            &mut lp,
            k,
            format!("angle_link[{}]", br.id),
            vec![
                (vars.theta[f], 1.0),
                (vars.theta[t], -1.0),
                (vars.delta[k], -1.0),
            ],
            b.abs(),
        );
        for (dir, (i, j, sign)) in [(f, t, 1.0), (t, f, -1.0)].into_iter().enumerate() {
            let (p, q) = (vars.p_k[k][dir], vars.q_k[k][dir]);
            let (vi, vj, si, sa, dl) = (
                vars.v[i],
                vars.v[j],
                vars.s_volt[i],
                vars.s_angle[k],
                vars.delta[k],
            );
            let tag = format!("{}->{}#{}", network.buses[i].id, network.buses[j].id, br.id);
            relax(
                &mut lp,
                k,
                format!("p_flow[{tag}]"),
                vec![
                    (p, 1.0),
                    (vi, -g),
                    (vj, g),
                    (si, -g),
                    (sa, -0.5 * g),
                    (dl, sign * b),
                ],
                1.0,
            );
            relax(
                &mut lp,
                k,
                format!("q_flow[{tag}]"),
                vec![
                    (q, 1.0),
                    (vi, b),
                    (vj, -b),
                    (si, b),
                    (sa, 0.5 * b),
                    (dl, sign * g),
                ],
                1.0,
            );
        }
    }
    let n = config.polygon_sides;
    let normals = polygon::normals(n);
    for (k, br) in network.branches.iter().enumerate() {
        let s = br.s_max;
        for dir in 0..2 {
            let (p, q) = (vars.p_k[k][dir], vars.q_k[k][dir]);
            for (x, label) in [(p, "p"), (q, "q")] {
                let row = lp.add_row(
                    format!("cap_{label}_hi[{}:{dir}]", br.id),
                    [(x, 1.0)],
                    Cmp::Le,
                    0.0,
                );
                z_terms[k].push((row, s));
                big_m.push(None);
                let row = lp.add_row(
                    format!("cap_{label}_lo[{}:{dir}]", br.id),
                    [(x, 1.0)],
                    Cmp::Ge,
                    0.0,
                );
                z_terms[k].push((row, -s));
                big_m.push(None);
            }
            for (j, &(c, sn)) in normals.iter().enumerate() {
                lp.add_row(
                    format!("polygon[{}:{dir}:{j}]", br.id),
                    [(p, c), (q, sn)],
                    Cmp::Le,
                    polygon::rhs(s, n),
                );
                big_m.push(None);
            }
        }
    }
    Ok(ParametricLp {
        model: Model::Lac,
        lp,
        vars,
        z_terms,
        big_m,
    })
}
