mod common;

use common::{close, toy, TOYS};
use grid_interdict::interdiction::{brute_force_cavs, AttackVector, SolverConfig};
use grid_interdict::lp::solve_lp;
use grid_interdict::milp::{solve_mip, MipOptions, MipStatus};
use grid_interdict::opf::*;

const TOY5_LAC_RESIDUAL: f64 = 0.0205;

fn shed(model: Model, net: &grid_interdict::grid::Network, ids: &[u32]) -> f64 {
    let attack = AttackVector::new(ids.iter().copied());
    let m = match model {
        Model::Dc => build_dc(net, &attack).unwrap(),
        Model::Lac => build_lac(net, &attack, &LacConfig::default()).unwrap(),
    };
    let sol = solve_lp(&m.lp);
    assert!(sol.is_optimal());
    sol.objective
}

#[test]
fn intact_toys_shed_nothing() {
    for name in TOYS {
        let net = toy(name);
        for model in [Model::Dc, Model::Lac] {
            assert!(shed(model, &net, &[]).abs() < 1e-9, "{name} {model}");
        }
    }
}

#[test]
fn cutting_the_radial_line_sheds_its_load() {
    let net = toy("toy5_meshed");
    let k = net.branch_idx(6).unwrap();
    let feeds = net.branches[k].to_bus;
    let load: f64 = net
        .demands
        .iter()
        .filter(|d| d.bus == feeds)
        .map(|d| d.p_base)
        .sum();
    assert_eq!(load, 0.3);
    assert!((shed(Model::Dc, &net, &[6]) - 0.3).abs() < 1e-9);
}

#[test]
fn symbol_audit_passes_on_bundled_grids() {
    for name in TOYS {
        let net = toy(name);
        let dc = build_dc(&net, &AttackVector::empty()).unwrap();
        audit_symbols(&dc.lp, &dc.vars).unwrap();
        let lac = build_lac(&net, &AttackVector::empty(), &LacConfig::default()).unwrap();
        audit_symbols(&lac.lp, &lac.vars).unwrap();
        let r = net.reference_bus();
        for m in [&dc, &lac] {
            let c = m.vars.theta[r];
            assert_eq!((m.lp.lower[c], m.lp.upper[c]), (0.0, 0.0));
        }
    }
}

#[test]
fn mip_with_fixed_attack_matches_the_lower_level() {
    let net = toy("toy5_meshed");
    for model in [Model::Dc, Model::Lac] {
        let im =
            build_interdiction_mip(&net, model, 1, &LacConfig::default(), &MipConfig::default())
                .unwrap();
        for (i, &k) in im.attackable.iter().enumerate() {
            let mut lp = im.mip.lp.clone();
            for (j, &c) in im.z_cols.iter().enumerate() {
                let v = if i == j { 0.0 } else { 1.0 };
                lp.lower[c] = v;
                lp.upper[c] = v;
            }
            let sol = solve_lp(&lp);
            assert!(sol.is_optimal());
            let id = net.branches[k].id;
            let direct = shed(model, &net, &[id]);
            assert!(close(-sol.objective, direct, 1e-7), "{model} {id}");
        }
    }
}

#[test]
fn budget_zero_mip_is_the_intact_solve() {
    for name in TOYS {
        let net = toy(name);
        for model in [Model::Dc, Model::Lac] {
            let im = build_interdiction_mip(
                &net,
                model,
                0,
                &LacConfig::default(),
                &MipConfig::default(),
            )
            .unwrap();
            let sol = solve_mip(&im.mip, &MipOptions::default());
            assert_eq!(sol.status, MipStatus::Optimal);
            assert!(im.shed(&sol).abs() < 1e-7, "{name} {model}");
        }
    }
}

#[test]
fn unlimited_budget_matches_the_full_oracle() {
    let net = toy("toy5_meshed");
    let all = net.attackable_branches().len();
    let im = build_interdiction_mip(
        &net,
        Model::Dc,
        all,
        &LacConfig::default(),
        &MipConfig::default(),
    )
    .unwrap();
    let sol = solve_mip(&im.mip, &MipOptions::default());
    let oracle = brute_force_cavs(&net, Model::Dc, all, 1, &SolverConfig::default()).unwrap();
    assert!(close(im.shed(&sol), oracle.entries[0].zeta_pu, 1e-6));
}

#[test]
fn lac_dispatch_residual_regression() {
    let net = toy("toy5_meshed");
    let m = build_lac(&net, &AttackVector::empty(), &LacConfig::default()).unwrap();
    let d = AcDispatch::lac_tightened(&m).unwrap();
    let r = evaluate_ac_feasible(&net, &AttackVector::empty(), &d).unwrap();
    assert!(r.max <= 0.05, "{r:?}");
    assert!((r.max - TOY5_LAC_RESIDUAL).abs() < 5e-3, "{r:?}");
}

#[test]
fn lac_is_never_below_dc_on_the_reactive_toy_single_attacks() {
    let net = toy("toy6_reactive");
    for br in &net.branches {
        let dc = shed(Model::Dc, &net, &[br.id]);
        let lac = shed(Model::Lac, &net, &[br.id]);
        assert!(lac >= dc - 1e-7, "branch {}: lac {lac} dc {dc}", br.id);
    }
}

#[test]
fn polygon_is_inside_the_disc() {
    common::polygon_check::check(100_000, 11).unwrap();
}

proptest::proptest! {
    #[test]
    fn polygon_vertices_lie_on_the_circle(k in 0usize..16, half in 2usize..10, s in 0.01f64..10.0) {
        let n = 2 * half;
        let a = (2.0 * k as f64 + 1.0) * std::f64::consts::PI / n as f64;
        let (p, q) = (s * a.cos(), s * a.sin());
        proptest::prop_assert!(grid_interdict::opf::polygon::contains(p * (1.0 - 1e-9), q * (1.0 - 1e-9), s, n));
        proptest::prop_assert!(!grid_interdict::opf::polygon::contains(p * (1.0 + 1e-6), q * (1.0 + 1e-6), s, n));
    }
}
