//! Structural properties of the energy, interface measures, contours and
//! census on random and minimized fields.

use acfb::census::{census, CensusConfig, CubeClass};
use acfb::grid::{init_field, GridSpec, InitMode, VectorField};
use acfb::interface::{boundary_length, contact_labels, delta_field, interface_measures, LabelGrid};
use acfb::minimizer::{energy, minimize, MinimizeConfig};
use acfb::{Exec, Potential};
use proptest::prelude::*;

fn random_field(nodes: usize, h: f64, vals: &[f64]) -> VectorField {
    let half = 0.5 * (nodes - 1) as f64 * h;
    let spec = GridSpec::new(vec![nodes, nodes], h, vec![-half, -half]).unwrap();
    let mut f = VectorField::zeros(spec, 2);
    f.values.copy_from_slice(vals);
    f
}

/// Random field where a share of nodes sits exactly on a well.
fn mixed_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    let wells = Potential::unit_circle_wells(3);
    prop::collection::vec((0usize..5, -1.5f64..1.5, -1.5f64..1.5), n).prop_map(move |v| {
        v.into_iter()
            .flat_map(|(pick, x, y)| if pick < 3 { wells[pick].clone() } else { vec![x, y] })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_and_delta_ignore_well_order(vals in mixed_values(17 * 17), alpha in 0.3f64..1.9) {
        let w = Potential::unit_circle_wells(3);
        let p = Potential::with_constant_g(w.clone(), alpha, 1.0).unwrap();
        let q = Potential::with_constant_g(vec![w[2].clone(), w[0].clone(), w[1].clone()], alpha, 1.0).unwrap();
        let f = random_field(17, 0.25, &vals);
        let (ep, eq) = (energy(&f, &p), energy(&f, &q));
        prop_assert!((ep - eq).abs() <= 1e-12 * ep.abs().max(1.0));
        let (dp, dq) = (delta_field(&f, &p), delta_field(&f, &q));
        prop_assert_eq!(&dp.delta, &dq.delta);
        let relabel = [1usize, 2, 0];
        for (a, b) in dp.nearest_well.iter().zip(&dq.nearest_well) {
            prop_assert_eq!(relabel[*a], *b);
        }
    }

    #[test]
    fn interface_sets_are_nested(vals in mixed_values(33 * 33)) {
        let p = Potential::with_constant_g(Potential::unit_circle_wells(3), 1.0, 1.0).unwrap();
        let f = random_field(33, 0.25, &vals);
        let d = delta_field(&f, &p);
        let gammas = [0.05, 0.1, 0.3, 0.6];
        let radii = [0.5, 1.0, 2.0, 3.0, 4.0];
        let rep = interface_measures(&d, &[0.0, 0.0], &radii, &gammas).unwrap();
        for row in &rep.rows {
            prop_assert!(row.measure_igamma[0] <= row.measure_i0);
            for g in 1..gammas.len() {
                prop_assert!(row.measure_igamma[g] <= row.measure_igamma[g - 1]);
            }
            let total = row.measure_i0 + row.contact.iter().sum::<f64>();
            let nodes = (total / 0.0625).round();
            prop_assert!((total - nodes * 0.0625).abs() < 1e-9);
        }
        for w in rep.rows.windows(2) {
            prop_assert!(w[1].measure_i0 >= w[0].measure_i0);
            for g in 0..gammas.len() {
                prop_assert!(w[1].measure_igamma[g] >= w[0].measure_igamma[g]);
            }
        }
    }

    #[test]
    fn census_partitions_the_cube_grid(vals in mixed_values(41 * 41), k in 1usize..=4, eps in 0.01f64..0.45) {
        let p = Potential::with_constant_g(Potential::unit_circle_wells(3), 1.0, 1.0).unwrap();
        let f = random_field(41, 0.5, &vals);
        let side = 20 / k;
        let cfg = CensusConfig { l: side as f64 * 0.5, k, theta: 0.9, epsilon: eps, center: vec![0.0, 0.0] };
        let c = census(&f, &p, &cfg, Exec::Sequential).unwrap();
        let per = 2 * k;
        prop_assert_eq!(c.totals.iter().sum::<usize>(), per * per);
        prop_assert_eq!(c.count(CubeClass::T1), per * per - (per - 2) * (per - 2));
    }

    #[test]
    fn straight_contour_length_tracks_the_chord(angle in 0.0f64..std::f64::consts::PI, offset in -0.5f64..0.5) {
        let nodes = 81;
        let h = 0.25;
        let half = 0.5 * (nodes - 1) as f64 * h;
        let spec = GridSpec::new(vec![nodes, nodes], h, vec![-half, -half]).unwrap();
        let (nx, ny) = (angle.cos(), angle.sin());
        let labels: Vec<u32> = (0..spec.num_nodes())
            .map(|idx| {
                let x = spec.coords(idx);
                u32::from(nx * x[0] + ny * x[1] >= offset)
            })
            .collect();
        let lg = LabelGrid::new(spec, labels, 1).unwrap();
        let radii = [2.5, 5.0, 7.5];
        let lens = boundary_length(&lg, &[0.0, 0.0], &radii);
        for (r, l) in radii.iter().zip(&lens) {
            let chord = 2.0 * (r * r - offset * offset).sqrt();
            let ratio = l / chord;
            // midpoint marching squares overestimates oblique lines by up to ~8%
            prop_assert!((0.95..=1.1).contains(&ratio), "r {} ratio {}", r, ratio);
        }
    }
}

#[test]
fn deep_cores_fill_t4_cubes() {
    let p = Potential::with_constant_g(Potential::unit_circle_wells(3), 1.0, 1.0).unwrap();
    let spec = GridSpec::centered(2, 129, 16.0).unwrap();
    let mut f = init_field(
        spec,
        &p,
        &InitMode::SectorWells {
            center: None,
            offset_deg: 0.0,
        },
    )
    .unwrap();
    f.freeze_boundary();
    let r = minimize(&f, &p, &MinimizeConfig::new(1e-7, 20000)).unwrap();
    assert!(r.converged, "{:?}", r.stop_reason);
    let l = 4.0;
    let cfg = CensusConfig {
        l,
        k: 3,
        theta: 0.9,
        epsilon: 0.05,
        center: vec![0.0, 0.0],
    };
    let c = census(&r.field, &p, &cfg, Exec::Sequential).unwrap();
    let t4: Vec<_> = c.cubes.iter().filter(|q| q.class == CubeClass::T4).collect();
    assert!(!t4.is_empty());
    let floor = 0.9 * std::f64::consts::PI * (l / 4.0).powi(2);
    for q in t4 {
        assert!(q.contact >= floor, "cube {:?}: contact {}", q.coords, q.contact);
        assert!(q.max_dev < 0.9);
    }
    let labels = contact_labels(&delta_field(&r.field, &p));
    assert!(labels.labels.iter().any(|&l| l != 0));
}
