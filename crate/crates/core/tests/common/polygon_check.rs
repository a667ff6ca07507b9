use std::f64::consts::PI;

use grid_interdict::lp::{solve_lp, Cmp, LinearProgram};
use grid_interdict::opf::polygon;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples the box around the disc and checks that every polygon point lies
/// inside it, then checks the LP reach along a face normal.
pub fn check(samples: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0usize;
    for _ in 0..samples {
        let n = 2 * rng.gen_range(2..=12);
        let s = rng.gen_range(0.05..5.0);
        let p = rng.gen_range(-1.05 * s..1.05 * s);
        let q = rng.gen_range(-1.05 * s..1.05 * s);
        if polygon::contains(p, q, s, n) {
            inside += 1;
            if p * p + q * q > s * s {
                return Err(format!("n={n} s={s} ({p}, {q}) outside the disc"));
            }
        }
    }
    if inside == 0 {
        return Err("no sample fell inside a polygon".into());
    }
    for s in [0.3, 1.0, 2.5] {
        let reach = face_reach(s, 8);
        let want = s * (PI / 8.0).cos();
        if (reach - want).abs() > 1e-9 {
            return Err(format!("face reach {reach} != {want} for s={s}"));
        }
    }
    Ok(())
}

/// Largest `p` inside the polygon, found with the LP solver.
pub fn face_reach(s: f64, n: usize) -> f64 {
    let mut lp = LinearProgram::new();
    let p = lp.add_var("p", -2.0 * s, 2.0 * s, -1.0);
    let q = lp.add_var("q", -2.0 * s, 2.0 * s, 0.0);
    for (j, (c, sn)) in polygon::normals(n).into_iter().enumerate() {
        lp.add_row(
            format!("face[{j}]"),
            [(p, c), (q, sn)],
            Cmp::Le,
            polygon::rhs(s, n),
        );
    }
    let sol = solve_lp(&lp);
    assert!(sol.is_optimal());
    sol.x[p]
}
