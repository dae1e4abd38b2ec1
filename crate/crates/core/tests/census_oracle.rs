//! Cube census against a brute-force classifier.

use acfb::census::{census, CensusConfig};
use acfb::grid::{GridSpec, VectorField};
use acfb::{Exec, Potential};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common {
    pub mod brute_census;
}
use common::brute_census::{brute_census, Grid, Oracle};

const NODES: usize = 64;
const H: f64 = 0.5;
const ORIGIN: f64 = -16.0;
const THETA: f64 = 0.9;

fn brute(vals: &[f64], wells: &[Vec<f64>], side: usize, k: usize, eps: f64) -> Oracle {
    let c = ((0.0 - ORIGIN) / H).round() as usize;
    let g = Grid {
        vals,
        ny: NODES,
        m: 2,
        h: H,
    };
    brute_census(&g, wells, THETA, side, k, eps, c, c)
}

/// Sectors of three wells around a random point, with jitter of random size
/// and some nodes replaced by the well centroid.
fn random_field(seed: u64, wells: &[[f64; 2]]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px: f64 = rng.gen_range(-12.0..12.0);
    let py: f64 = rng.gen_range(-12.0..12.0);
    let rot: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let jitter: f64 = rng.gen_range(0.0..0.8);
    let blank: f64 = rng.gen_range(0.0..0.3);
    let mut v = vec![0.0; 2 * NODES * NODES];
    for i in 0..NODES {
        for j in 0..NODES {
            let x = ORIGIN + i as f64 * H;
            let y = ORIGIN + j as f64 * H;
            let t = ((y - py).atan2(x - px) - rot).rem_euclid(std::f64::consts::TAU);
            let w = wells[(t / (std::f64::consts::TAU / 3.0)) as usize % 3];
            let o = 2 * (i * NODES + j);
            if rng.gen::<f64>() < blank {
                continue;
            }
            let r = jitter * rng.gen::<f64>();
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            v[o] = w[0] + r * phi.cos();
            v[o + 1] = w[1] + r * phi.sin();
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn census_matches_brute_force(
        seed in any::<u64>(),
        k in 1usize..=4,
        side_frac in 0.0f64..1.0,
        eps in prop::sample::select(vec![0.02, 0.05, 0.1, 0.2]),
    ) {
        let max_side = 32 / k;
        let side = 1 + ((max_side - 1) as f64 * side_frac) as usize;
        let wells3 = Potential::unit_circle_wells(3);
        let wells: Vec<[f64; 2]> = wells3.iter().map(|w| [w[0], w[1]]).collect();
        let p = Potential::with_constant_g(wells3.clone(), 1.0, 1.0).unwrap();
        let vals = random_field(seed, &wells);
        let spec = GridSpec::new(vec![NODES, NODES], H, vec![ORIGIN, ORIGIN]).unwrap();
        let mut f = VectorField::zeros(spec, 2);
        f.values.clone_from(&vals);
        let cfg = CensusConfig { l: side as f64 * H, k, theta: THETA, epsilon: eps, center: vec![0.0, 0.0] };
        let lib = census(&f, &p, &cfg, Exec::Sequential).unwrap();
        let oracle = brute(&vals, &wells3, side, k, eps);
        prop_assert_eq!(lib.cubes.len(), oracle.class.len());
        let mut totals = [0usize; 5];
        for cube in &lib.cubes {
            let at = cube.coords[0] + 2 * k * cube.coords[1];
            prop_assert_eq!(cube.class.slot() as u8 + 1, oracle.class[at], "cube {:?}", cube.coords);
            prop_assert_eq!(&cube.sigma, &oracle.sigma[at]);
            totals[oracle.class[at] as usize - 1] += 1;
        }
        prop_assert_eq!(lib.totals, totals);
    }
}

#[test]
fn oracle_sees_every_class() {
    // guards against a generator that never exercises some branch
    let wells3 = Potential::unit_circle_wells(3);
    let wells: Vec<[f64; 2]> = wells3.iter().map(|w| [w[0], w[1]]).collect();
    let mut seen = [false; 5];
    for seed in 0..200 {
        for (k, side) in [(2, 8), (4, 4), (3, 6)] {
            let o = brute(&random_field(seed, &wells), &wells3, side, k, 0.05);
            for c in o.class {
                seen[c as usize - 1] = true;
            }
        }
    }
    assert_eq!(seen, [true; 5]);
}
