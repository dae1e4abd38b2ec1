//! Discrete gradient against central finite differences of an energy written
//! out independently of the library.

use std::sync::Arc;

use acfb::grid::{GridSpec, VectorField};
use acfb::minimizer::{energy, gradient};
use acfb::potential::{Potential, QuadraticBump};
use acfb::SingularityPolicy;
use proptest::prelude::*;

const N: usize = 9;
const H: f64 = 0.125;

fn wells() -> Vec<[f64; 2]> {
    (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            [t.cos(), t.sin()]
        })
        .collect()
}

fn w_ref(u: &[f64], alpha: f64, amp: f64) -> f64 {
    let g = 1.0 + amp * (u[0] * u[0] + u[1] * u[1]);
    wells()
        .iter()
        .map(|a| ((u[0] - a[0]).powi(2) + (u[1] - a[1]).powi(2)).sqrt().powf(alpha))
        .product::<f64>()
        * g
}

/// Trapezoid energy on an `N x N` grid: half weights on boundary edges and
/// nodes, quarter weights at corners.
fn energy_ref(v: &[f64], alpha: f64, amp: f64) -> f64 {
    let at = |i: usize, j: usize| &v[2 * (i * N + j)..2 * (i * N + j) + 2];
    let edge = |k: usize| if k == 0 || k == N - 1 { 0.5 } else { 1.0 };
    let sq = |a: &[f64], b: &[f64]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut e = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i + 1 < N {
                e += 0.5 * edge(j) * sq(at(i, j), at(i + 1, j));
            }
            if j + 1 < N {
                e += 0.5 * edge(i) * sq(at(i, j), at(i, j + 1));
            }
            e += H * H * edge(i) * edge(j) * w_ref(at(i, j), alpha, amp);
        }
    }
    e
}

/// Nodes closer than 0.01 to a well are pushed out to distance 0.05.
fn keep_off_wells(mut v: Vec<f64>) -> Vec<f64> {
    for u in v.chunks_mut(2) {
        for a in wells() {
            let d = ((u[0] - a[0]).powi(2) + (u[1] - a[1]).powi(2)).sqrt();
            if d < 0.01 {
                u[0] = a[0] + 0.05;
                u[1] = a[1];
            }
        }
    }
    v
}

fn field_strategy() -> impl Strategy<Value = (Vec<f64>, f64, f64)> {
    (
        prop::collection::vec(-1.5f64..1.5, 2 * N * N).prop_map(keep_off_wells),
        prop::sample::select(vec![0.5, 0.8, 1.0, 1.3, 1.5]),
        0.0f64..0.8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences((vals, alpha, amp) in field_strategy()) {
        let p = Potential::new(
            wells().iter().map(|a| a.to_vec()).collect(),
            alpha,
            Arc::new(QuadraticBump { base: 1.0, amplitude: amp, center: vec![0.0, 0.0] }),
            1.0,
        )
        .unwrap();
        let spec = GridSpec::new(vec![N, N], H, vec![0.0, 0.0]).unwrap();
        let mut f = VectorField::zeros(spec, 2);
        f.values.clone_from(&vals);

        let e_lib = energy(&f, &p);
        let e_ref = energy_ref(&vals, alpha, amp);
        prop_assert!((e_lib - e_ref).abs() <= 1e-12 * e_ref.abs().max(1.0), "{} vs {}", e_lib, e_ref);

        let g = gradient(&f, &p, SingularityPolicy::SubgradientZero);
        let step = 1e-6;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        let mut v = vals.clone();
        for k in 0..v.len() {
            let x = v[k];
            v[k] = x + step;
            let ep = energy_ref(&v, alpha, amp);
            v[k] = x - step;
            let em = energy_ref(&v, alpha, amp);
            v[k] = x;
            let fd = (ep - em) / (2.0 * step);
            err = err.max((g.values[k] - fd).abs());
            scale = scale.max(g.values[k].abs());
        }
        prop_assert!(err <= 1e-6 * scale, "relative error {}", err / scale);
    }
}
