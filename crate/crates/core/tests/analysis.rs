mod common;

use common::streams::{list, list_of, random_list};
use grid_interdict::analysis::*;
use grid_interdict::interdiction::AttackVector;
use grid_interdict::opf::Model;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bar_decomposition_of_a_constructed_step() {
    // Five LAC attacks; two are missing from DC (8 + 6.9 MW), and the three
    // matches are underestimated by 1.5 + 2 + 0.5 = 4 MW.
    let lac = list(
        Model::Lac,
        7,
        &[
            (&[1], 0.20),
            (&[2, 3], 0.12),
            (&[4], 0.08),
            (&[5], 0.069),
            (&[6], 0.05),
        ],
    );
    let dc = list(
        Model::Dc,
        7,
        &[(&[1], 0.185), (&[9], 0.15), (&[2, 3], 0.10), (&[6], 0.045)],
    );
    let r = compare_formulations(&lac, &dc).unwrap();
    assert_eq!(r.undetected, 2);
    assert_eq!(r.n_reference, 5);
    assert_eq!(r.u, 0.4);
    assert!((r.undetected_mw - 14.9).abs() < 1e-9);
    assert!((r.underestimated_mw - 4.0).abs() < 1e-9);
    assert!((r.psi_abs_mw - 4.0 / 5.0).abs() < 1e-9);
    let rel = 1.5 / 20.0 + 2.0 / 12.0 + 0.5 / 5.0;
    assert!((r.psi_rel - rel / 5.0).abs() < 1e-12);
    assert!((r.psi_rel_detected.unwrap() - rel / 3.0).abs() < 1e-12);
    let ranks: Vec<Option<usize>> = r.entries.iter().map(|e| e.dc_rank).collect();
    assert_eq!(ranks, vec![Some(1), Some(3), None, None, Some(4)]);
    assert_eq!(r.psi_averaging, PSI_AVERAGING);

    let csv = comparison_summary_csv(&[r.clone()]).unwrap();
    assert!(csv.starts_with("t,budget,n_reference,undetected,u,undetected_mw"));
    assert_eq!(r.to_csv().unwrap().lines().count(), 6);
}

#[test]
fn rare_first_rank_scores_like_steady_third_rank() {
    let t = 9;
    let lists: Vec<_> = (1..=t)
        .map(|s| {
            let mut items: Vec<(&[u32], f64)> = Vec::new();
            if s % 3 == 0 {
                items.push((&[20], 1.0));
            }
            items.push((&[11], 0.9));
            items.push((&[12], 0.8));
            if s % 3 != 0 {
                items.push((&[13], 0.7));
            }
            let mut l = list(Model::Dc, s, &items);
            // x at rank 3 in every step.
            let pos = l
                .entries
                .iter()
                .position(|e| e.attack == AttackVector::new([13]))
                .unwrap_or(l.entries.len());
            if pos != 2 {
                l = list(Model::Dc, s, &[(&[20], 1.0), (&[11], 0.9), (&[13], 0.7)]);
            }
            l
        })
        .collect();
    let s = score_across_timesteps(&lists).unwrap();
    assert_eq!(s.row("13").unwrap().phi_rank, 3.0);
    assert_eq!(s.row("20").unwrap().phi_rank, 3.0);
}

fn stream(seed: u64, steps: usize) -> Vec<grid_interdict::interdiction::CavList> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=steps)
        .map(|t| random_list(&mut rng, Model::Dc, t, 5))
        .collect()
}

proptest! {
    #[test]
    fn objective_score_times_steps_is_the_objective_sum(seed in any::<u64>(), steps in 1usize..12) {
        let s = score_across_timesteps(&stream(seed, steps)).unwrap();
        for r in &s.rows {
            prop_assert!((r.phi_obj_pu * steps as f64 - r.objective_sum_pu).abs()
                <= 1e-12 * r.objective_sum_pu.abs().max(1.0));
            prop_assert!(r.count <= steps);
            prop_assert_eq!(r.phi_rank, r.rank_sum as f64 * steps as f64 / (r.count * r.count) as f64);
        }
    }

    #[test]
    fn scoring_ignores_step_order(seed in any::<u64>(), steps in 1usize..10) {
        let lists = stream(seed, steps);
        let mut shuffled = lists.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        prop_assert_eq!(
            score_across_timesteps(&lists).unwrap(),
            score_across_timesteps(&shuffled).unwrap()
        );
    }

    #[test]
    fn undetected_share_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lac = random_list(&mut rng, Model::Lac, 1, 4);
        let dc = random_list(&mut rng, Model::Dc, 1, 4);
        let r = compare_formulations(&lac, &dc).unwrap();
        prop_assert_eq!(r.u * r.n_reference as f64, r.undetected as f64);
        if r.n_reference > 0 {
            prop_assert_eq!(r.u, r.undetected as f64 / r.n_reference as f64);
        }
        for e in &r.entries {
            prop_assert_eq!(e.detected, e.delta_abs_pu.is_some());
            prop_assert_eq!(e.detected, e.dc_rank.is_some());
            if let Some(m) = e.dc_rank {
                prop_assert_eq!(Some(dc.entries[m - 1].zeta_pu), e.dc_zeta_pu);
            }
        }
        let sum: f64 = r.entries.iter().filter_map(|e| e.delta_abs_pu).sum();
        let expect = if r.n_reference == 0 { 0.0 } else { sum / r.n_reference as f64 };
        prop_assert!((r.psi_abs_pu - expect).abs() < 1e-12);
    }
}

#[test]
fn score_table_serializes() {
    let lists = vec![
        list_of(Model::Lac, 1, 2, vec![(AttackVector::new([1]), 0.5)]),
        list_of(Model::Lac, 2, 2, vec![]),
    ];
    let s = score_across_timesteps(&lists).unwrap();
    let back: ScoreTable = serde_json::from_str(&s.to_json()).unwrap();
    assert_eq!(back, s);
    assert_eq!(s.by_objective, vec!["1".to_string()]);
}

const TOY6_BLIND_SPOT_U: f64 = 1.0 / 3.0;

#[test]
fn dc_misses_reactive_attacks_on_toy6() {
    use grid_interdict::interdiction::{enumerate_cavs, EnumerationLimits, SolverConfig};
    let net = common::toy("toy6_reactive");
    let cfg = SolverConfig::default();
    let lac = enumerate_cavs(
        &net,
        Model::Lac,
        1,
        1,
        &EnumerationLimits::for_model(Model::Lac),
        &cfg,
    )
    .unwrap();
    let dc = enumerate_cavs(
        &net,
        Model::Dc,
        1,
        1,
        &EnumerationLimits::for_model(Model::Dc),
        &cfg,
    )
    .unwrap();
    let r = compare_formulations(&lac, &dc).unwrap();
    assert!(r.undetected >= 1);
    assert!(r.u > 0.0);
    assert!((r.u - TOY6_BLIND_SPOT_U).abs() < 1e-12, "u = {}", r.u);
    let missed: Vec<_> = r.entries.iter().filter(|e| !e.detected).collect();
    assert!(missed.iter().all(|e| e.zeta_pu > 0.0));
}
