mod common;

use common::{close, toy, TOYS};
use grid_interdict::interdiction::*;
use grid_interdict::milp::{solve_mip, MipStatus};
use grid_interdict::opf::{audit_big_m, build_interdiction_mip, Model};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn same_lists(a: &CavList, b: &CavList) -> bool {
    a.entries.len() == b.entries.len()
        && a.entries
            .iter()
            .zip(&b.entries)
            .all(|(x, y)| x.attack == y.attack && close(x.zeta_pu, y.zeta_pu, 1e-6))
}

fn check_invariants(list: &CavList) {
    for w in list.entries.windows(2) {
        assert!(w[0].zeta_pu >= w[1].zeta_pu);
    }
    for (i, e) in list.entries.iter().enumerate() {
        assert_eq!(e.n, i + 1);
        assert!(e.attack.len() <= list.budget && !e.attack.is_empty());
        if e.attack.len() < list.budget {
            for later in &list.entries[i + 1..] {
                assert!(!e.attack.is_subset_of(&later.attack));
            }
        }
    }
}

#[test]
fn dc_enumeration_matches_brute_force() {
    for name in TOYS {
        let net = toy(name);
        for budget in 1..=3 {
            let e = enumerate_cavs(
                &net,
                Model::Dc,
                budget,
                1,
                &EnumerationLimits::exhaustive(),
                &cfg(),
            )
            .unwrap();
            let b = brute_force_cavs(&net, Model::Dc, budget, 1, &cfg()).unwrap();
            assert!(same_lists(&e, &b), "{name} Z={budget}\n{e:?}\n{b:?}");
            assert_eq!(e.stop, StopReason::Exhausted);
            check_invariants(&e);
        }
    }
}

#[test]
fn lac_single_attack_enumeration_matches_brute_force() {
    for name in TOYS {
        let net = toy(name);
        let e = enumerate_cavs(
            &net,
            Model::Lac,
            1,
            1,
            &EnumerationLimits::exhaustive(),
            &cfg(),
        )
        .unwrap();
        let b = brute_force_cavs(&net, Model::Lac, 1, 1, &cfg()).unwrap();
        assert!(same_lists(&e, &b), "{name}");
        assert!(e.entries.len() <= net.attackable_branches().len());
    }
}

#[test]
fn dc_mip_matches_oracle_and_passes_the_big_m_audit() {
    for name in TOYS {
        let net = toy(name);
        for budget in 1..=3 {
            let im =
                build_interdiction_mip(&net, Model::Dc, budget, &cfg().lac, &cfg().mip).unwrap();
            let sol = solve_mip(&im.mip, &cfg().branch_and_bound);
            assert_eq!(sol.status, MipStatus::Optimal);
            let oracle = brute_force_cavs(&net, Model::Dc, budget, 1, &cfg()).unwrap();
            let best = oracle
                .entries
                .first()
                .map_or(oracle.no_attack_pu, |e| e.zeta_pu);
            assert!(close(im.shed(&sol), best, 1e-6), "{name} Z={budget}");
            let audit = audit_big_m(&im, &im.attacked(&sol.x), im.shed(&sol), 1e-6, 1e-6);
            assert!(audit.passed, "{name} Z={budget}: {audit:?}");

            let worst = solve_worst_case(&net, Model::Dc, budget, 1, &cfg()).unwrap();
            assert!(close(worst.zeta_pu, best, 1e-6));
            if let Some(first) = oracle.entries.first() {
                assert_eq!(worst.attack, first.attack);
            }
        }
    }
}

#[test]
fn five_bus_single_attack_is_the_radial_line() {
    let net = toy("toy5_meshed");
    let w = solve_worst_case(&net, Model::Dc, 1, 1, &cfg()).unwrap();
    assert_eq!(w.attack, AttackVector::new([6]));
    assert!((w.zeta_pu - 0.3).abs() < 1e-9);
    assert!((w.zeta_mw - 30.0).abs() < 1e-6);
}

#[test]
fn radial_feeder_head_is_the_single_worst_attack() {
    let net = toy("toy7_radial");
    let head = net
        .branches
        .iter()
        .find(|b| net.generators.iter().any(|g| g.bus == b.from_bus))
        .unwrap();
    for model in [Model::Dc, Model::Lac] {
        let w = solve_worst_case(&net, model, 1, 1, &cfg()).unwrap();
        assert_eq!(w.attack, AttackVector::new([head.id]), "{model}");
        assert!((w.zeta_pu - net.total_demand()).abs() < 1e-7);
    }
}

#[test]
fn zero_budget_reports_the_intact_shed() {
    let net = toy("toy6_reactive");
    let w = solve_worst_case(&net, Model::Lac, 0, 1, &cfg()).unwrap();
    assert!(w.attack.is_empty());
    assert_eq!(w.zeta_pu, 0.0);
}

#[test]
fn dc_worst_case_grows_with_budget() {
    for name in TOYS {
        let net = toy(name);
        let mut last = 0.0;
        for budget in 0..=3 {
            let z = solve_worst_case(&net, Model::Dc, budget, 1, &cfg())
                .unwrap()
                .zeta_pu;
            assert!(z >= last - 1e-9, "{name} Z={budget}");
            last = z;
        }
    }
}

#[test]
fn count_limit_with_full_threshold_stops_at_n() {
    let net = toy("toy5_meshed");
    let limits = EnumerationLimits {
        max_solutions: Some(3),
        threshold: 1.0,
    };
    let l = enumerate_cavs(&net, Model::Dc, 2, 1, &limits, &cfg()).unwrap();
    assert_eq!(l.entries.len(), 3);
    assert_eq!(l.stop, StopReason::CountLimit);
}

#[test]
fn deep_threshold_keeps_going_past_n() {
    let net = toy("toy5_meshed");
    let limits = EnumerationLimits {
        max_solutions: Some(2),
        threshold: 0.1,
    };
    let l = enumerate_cavs(&net, Model::Dc, 2, 1, &limits, &cfg()).unwrap();
    let n = l.entries.len();
    assert!(n > 2);
    assert!(
        l.entries[n - 1].zeta_pu < 0.1 * l.entries[0].zeta_pu || l.stop == StopReason::Exhausted
    );
    assert!(l.entries[n - 2].zeta_pu >= 0.1 * l.entries[0].zeta_pu);
}

#[test]
fn real_list_round_trips_through_jsonl() {
    let net = toy("toy5_meshed");
    let l = enumerate_cavs(
        &net,
        Model::Dc,
        3,
        4,
        &EnumerationLimits::exhaustive(),
        &cfg(),
    )
    .unwrap();
    let text = l.to_jsonl();
    assert_eq!(text.lines().count(), l.entries.len());
    assert_eq!(entries_from_jsonl(&text).unwrap(), l.entries);
    assert!(l
        .entries
        .iter()
        .all(|e| e.t == 4 && e.a == Model::Dc && e.budget == 3));
}
