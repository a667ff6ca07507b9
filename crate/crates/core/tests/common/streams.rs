//! Synthetic CAV lists for scoring and comparison tests.

use grid_interdict::interdiction::{AttackVector, CavEntry, CavList, StopReason};
use grid_interdict::opf::Model;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn list(a: Model, t: usize, items: &[(&[u32], f64)]) -> CavList {
    let owned: Vec<(AttackVector, f64)> = items
        .iter()
        .map(|(ids, z)| (AttackVector::new(ids.iter().copied()), *z))
        .collect();
    list_of(a, t, 2, owned)
}

/// Entries ranked in the given order; `zeta_mw` uses a 100 MVA base.
pub fn list_of(a: Model, t: usize, budget: usize, items: Vec<(AttackVector, f64)>) -> CavList {
    CavList {
        t,
        a,
        budget,
        entries: items
            .into_iter()
            .enumerate()
            .map(|(i, (attack, z))| CavEntry {
                t,
                a,
                budget,
                n: i + 1,
                attack,
                zeta_pu: z,
                zeta_mw: z * 100.0,
                gap: 0.0,
                solver_limit: false,
            })
            .collect(),
        stop: StopReason::Exhausted,
        no_attack_pu: 0.0,
    }
}

/// A random ranked list drawn from a pool of `pool` single and double attacks.
pub fn random_list<R: Rng>(rng: &mut R, a: Model, t: usize, pool: u32) -> CavList {
    let mut cands: Vec<AttackVector> = (1..=pool).map(|i| AttackVector::new([i])).collect();
    for i in 1..=pool {
        for j in i + 1..=pool {
            cands.push(AttackVector::new([i, j]));
        }
    }
    cands.shuffle(rng);
    let len = rng.gen_range(0..=cands.len().min(8));
    let mut zs: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..2.0)).collect();
    zs.sort_by(|a, b| b.total_cmp(a));
    if len > 0 && rng.gen_bool(0.2) {
        zs[len - 1] = 0.0;
    }
    list_of(a, t, 2, cands.into_iter().take(len).zip(zs).collect())
}
