use std::collections::{BTreeMap, BTreeSet};

use approx::assert_relative_eq;
use proptest::prelude::*;

use msi_core::estimate::{detect_scale_intervals, hurst_from_ratio, scale_from_breakpoints};
use msi_core::io::{model_from_json, model_to_json, rect_sums};
use msi_core::lamperti::{inverse_lamperti_image, lamperti_image, LatticeFunction};
use msi_core::markov::{check_stats_periodicity, mmsi_cov, AxisStats, FirstScaleStats};
use msi_core::predict::{mape, predict_rect, prediction_factor, RectangleTotals};
use msi_core::simulate::{rectangle_index, sfbs_cov, SfbsMode};
use msi_core::spectral::{lag_window, q_from_r, r_from_q, LagTable, PeriodLattice};
use msi_core::{Axis, Breakpoints, GridField, MsiModel, StripSeries};

fn model_strategy() -> impl Strategy<Value = MsiModel> {
    (
        (1.05f64..2.5, 1.05f64..2.5),
        (0.1f64..2.0, 0.1f64..2.0),
        prop::collection::vec(0.05f64..0.95, 1..4),
        prop::collection::vec(0.05f64..0.95, 1..4),
    )
        .prop_map(|(l, h, hp1, hp2)| {
            let cuts = |n: usize| Breakpoints::from_indices(&(0..=n).map(|i| 10 * i).collect::<Vec<_>>()).unwrap();
            MsiModel {
                lambda: [l.0, l.1],
                hurst: [h.0, h.1],
                breakpoints_a: cuts(hp1.len()),
                breakpoints_b: cuts(hp2.len()),
                hprime1: hp1,
                hprime2: hp2,
            }
        })
}

fn totals_strategy() -> impl Strategy<Value = RectangleTotals> {
    (1usize..4, 1usize..4)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(1.0f64..1e4, 4), r * c).prop_map(move |rows| (rows, c)))
        .prop_map(|(rows, c)| RectangleTotals::from_rows(&rows, c).unwrap())
}

fn cut_strategy(extent: usize) -> impl Strategy<Value = Breakpoints> {
    prop::collection::btree_set(1usize..4 * extent, 0..4).prop_map(move |inner| {
        let mut p = vec![0.0];
        p.extend(inner.into_iter().map(|q| q as f64 / 4.0));
        p.push(extent as f64);
        Breakpoints::new(p).unwrap()
    })
}

fn overlap(cell: usize, lo: f64, hi: f64) -> f64 {
    ((cell as f64 + 1.0).min(hi) - (cell as f64).max(lo)).max(0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pc_covariance_survives_the_dft_round_trip(
        u1 in 1usize..4,
        u2 in 1usize..4,
        m in 0i64..3,
        seed in prop::collection::vec(-5.0f64..5.0, 36 * 25),
    ) {
        let lattice = PeriodLattice::new(u1, u2).unwrap();
        let lags = lag_window(m, m);
        let nl = lags.len();
        let lag_pos: BTreeMap<[i64; 2], usize> = lags.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let q = LagTable::from_fn(lattice, lags, |n, tau| seed[(n[0] * 3 + n[1]) * nl + lag_pos[&tau]]).unwrap();
        let back = q_from_r(&r_from_q(&q)).unwrap();
        for (n, tau, v) in q.iter() {
            let w = back.get([n[0] as i64, n[1] as i64], tau).unwrap();
            prop_assert!((v - w).abs() <= 1e-12 * (1.0 + v.abs()), "{n:?} {tau:?}: {v} vs {w}");
        }
    }

    #[test]
    fn hurst_is_log_linear_in_the_ratio(r1 in 0.1f64..50.0, r2 in 0.1f64..50.0, lambda in 1.05f64..4.0) {
        let h = |r| hurst_from_ratio(r, lambda).unwrap();
        assert_relative_eq!(h(r1 * r2), h(r1) + h(r2), epsilon = 1e-12, max_relative = 1e-12);
        assert_relative_eq!(h(lambda * lambda), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scale_ratios_ignore_affine_relabelling(
        lengths in prop::collection::vec(1usize..40, 2..6),
        shift in -100.0f64..100.0,
        stretch in 0.1f64..10.0,
    ) {
        let mut p = vec![0.0];
        for l in &lengths {
            p.push(p.last().unwrap() + *l as f64);
        }
        let moved: Vec<f64> = p.iter().map(|x| stretch * x + shift).collect();
        let a = scale_from_breakpoints(&Breakpoints::new(p).unwrap()).unwrap();
        let b = scale_from_breakpoints(&Breakpoints::new(moved).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_relative_eq!(*x, *y, max_relative = 1e-12);
        }
    }

    #[test]
    fn detected_intervals_ignore_affine_value_transforms(
        lengths in prop::collection::vec(6usize..14, 3),
        coeffs in prop::collection::vec((-5i32..5, -20i32..20, -50i32..50), 3),
        slope in prop::sample::select(vec![0.25f64, 0.5, 2.0, 8.0]),
        offset in -1000i32..1000,
    ) {
        let mut values = Vec::new();
        let mut cuts = vec![0usize];
        for (k, (&len, &(a, b, c))) in lengths.iter().zip(&coeffs).enumerate() {
            // successive pieces jump by a clear step so the split is unique
            let jump = 400.0 * k as f64;
            values.extend((0..len).map(|x| {
                let x = x as f64;
                jump + a as f64 * x * x + b as f64 * x + c as f64
            }));
            cuts.push(cuts.last().unwrap() + len);
        }
        let expected = Breakpoints::from_indices(&cuts).unwrap();
        let base = StripSeries::new(Axis::Vertical, values.clone()).unwrap();
        let moved = StripSeries::new(
            Axis::Vertical,
            values.iter().map(|v| slope * v + offset as f64).collect(),
        ).unwrap();
        prop_assert_eq!(&detect_scale_intervals(&base, 3).unwrap(), &expected);
        prop_assert_eq!(&detect_scale_intervals(&moved, 3).unwrap(), &expected);
    }

    #[test]
    fn prediction_is_scale_equivariant(model in model_strategy(), y in totals_strategy(), c in 0.01f64..100.0) {
        let p = predict_rect(&y, &model, (1, 1)).unwrap();
        let q = predict_rect(&y.scaled(c), &model, (1, 1)).unwrap();
        for (k, v) in &p {
            assert_relative_eq!(c * v, q[k], max_relative = 1e-12);
        }
    }

    #[test]
    fn prediction_factor_separates_by_axis(
        model in model_strategy(),
        k1 in 1usize..5, k2 in 1usize..5, d1 in 0usize..5, d2 in 0usize..5,
    ) {
        let to = (k1 + d1, k2 + d2);
        let joint = prediction_factor(&model, (k1, k2), to).unwrap();
        let along1 = prediction_factor(&model, (k1, k2), (to.0, k2)).unwrap();
        let along2 = prediction_factor(&model, (k1, k2), (k1, to.1)).unwrap();
        assert_relative_eq!(joint, along1 * along2, max_relative = 1e-12);
        let expected = model.lambda[0].powf(d1 as f64 * model.hurst[0]) * model.lambda[1].powf(d2 as f64 * model.hurst[1]);
        assert_relative_eq!(joint, expected, max_relative = 1e-12);
    }

    #[test]
    fn predicted_totals_equal_summed_predicted_subs(model in model_strategy(), y in totals_strategy()) {
        let totals = predict_rect(&y, &model, (1, 1)).unwrap();
        for key in y.keys() {
            let subs = msi_core::predict::predict_subs(&y, &model, (1, 1), key).unwrap();
            assert_relative_eq!(subs.iter().sum::<f64>(), totals[&key], max_relative = 1e-12);
        }
    }

    #[test]
    fn mape_is_nonnegative_and_vanishes_only_on_exact_predictions(
        actual in prop::collection::vec(1.0f64..1e5, 2..10),
        noise in prop::collection::vec(-0.5f64..0.5, 10),
    ) {
        let a: BTreeMap<_, _> = actual.iter().enumerate().map(|(i, &v)| ((1, i + 1), v)).collect();
        let p: BTreeMap<_, _> = actual.iter().enumerate().map(|(i, &v)| ((1, i + 1), v * (1.0 + noise[i]))).collect();
        let none = BTreeSet::new();
        let gamma = mape(&a, &p, &none).unwrap();
        prop_assert!(gamma >= 0.0);
        let moved = noise[..actual.len()].iter().any(|e| *e != 0.0);
        prop_assert_eq!(gamma == 0.0, !moved);
        prop_assert_eq!(mape(&a, &a, &none).unwrap(), 0.0);
    }

    #[test]
    fn rectangle_sums_match_cellwise_overlap(
        (g, a, b) in (1usize..8, 1usize..8).prop_flat_map(|(rows, cols)| (
            prop::collection::vec(0.0f64..100.0, rows * cols)
                .prop_map(move |cells| GridField::new(rows, cols, cells).unwrap()),
            cut_strategy(rows),
            cut_strategy(cols),
        )),
    ) {
        let (rows, cols) = (g.rows(), g.cols());
        let whole = rect_sums(&g, &a, &b, false).unwrap();
        let split = rect_sums(&g, &a, &b, true).unwrap();
        for (k1, ra) in a.points().windows(2).enumerate() {
            for (k2, rb) in b.points().windows(2).enumerate() {
                let mut oracle = 0.0;
                for r in 0..rows {
                    for c in 0..cols {
                        oracle += overlap(r, ra[0], ra[1]) * overlap(c, rb[0], rb[1]) * g.get(r, c);
                    }
                }
                let key = (k1 + 1, k2 + 1);
                let w = whole.total(key).unwrap();
                prop_assert!((w - oracle).abs() <= 1e-12 * oracle.max(1.0));
                prop_assert!((split.total(key).unwrap() - w).abs() <= 1e-12 * w.max(1.0));
                prop_assert_eq!(split.subs(key).unwrap().len(), 4);
            }
        }
    }

    #[test]
    fn model_files_round_trip_bit_for_bit(model in model_strategy()) {
        let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
        prop_assert_eq!(back, model);
    }

    #[test]
    fn lamperti_transform_inverts(
        base in (1.1f64..3.0, 1.1f64..3.0),
        hurst in (-1.5f64..1.5, -1.5f64..1.5),
        values in prop::collection::vec(-10.0f64..10.0, 25),
    ) {
        let mut y = LatticeFunction::new([base.0, base.1]).unwrap();
        for (i, v) in values.iter().enumerate() {
            y.insert((i as i64 / 5 - 2, i as i64 % 5 - 2), *v).unwrap();
        }
        let h = [hurst.0, hurst.1];
        let back = inverse_lamperti_image(&lamperti_image(&y, h), h);
        for (n, v) in y.iter() {
            assert_relative_eq!(back.get(n).unwrap(), v, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn per_rectangle_sheets_are_independent(
        model in model_strategy(),
        u in (0.0f64..1.0, 0.0f64..1.0),
        v in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        // spread both points over the rectangles the model covers
        let place = |w: (f64, f64)| (
            model.lambda[0].powf(w.0 * model.hprime1.len() as f64),
            model.lambda[1].powf(w.1 * model.hprime2.len() as f64),
        );
        let (t, s) = (place(u), place(v));
        let key = |p: (f64, f64)| (rectangle_index(p.0, model.lambda[0]), rectangle_index(p.1, model.lambda[1]));
        let c = sfbs_cov([t.0, t.1], [s.0, s.1], &model, SfbsMode::PerRectangle).unwrap();
        if key(t) != key(s) {
            prop_assert_eq!(c, 0.0);
        } else {
            let v = sfbs_cov([t.0, t.1], [t.0, t.1], &model, SfbsMode::PerRectangle).unwrap();
            let w = sfbs_cov([s.0, s.1], [s.0, s.1], &model, SfbsMode::PerRectangle).unwrap();
            prop_assert!(c.abs() <= (v * w).sqrt() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn markov_covariance_is_scale_invariant(
        period in 1usize..4,
        var in prop::collection::vec(0.1f64..10.0, 3),
        rho in prop::collection::vec(prop_oneof![-0.95f64..-0.05, 0.05f64..0.95], 6),
        hurst in (0.1f64..1.5, 0.1f64..1.5),
        alpha in (1.1f64..2.5, 1.1f64..2.5),
        n in (0i64..4, 0i64..4),
        lag in (-3i64..4, -3i64..4),
    ) {
        let axis = |off: usize, h: f64, a: f64| {
            let v = var[..period].to_vec();
            let next = |j: usize| if j + 1 < period { v[j + 1] } else { a.powf(2.0 * period as f64 * h) * v[0] };
            let c = (0..period).map(|j| rho[off + j] * (v[j] * next(j)).sqrt()).collect();
            AxisStats::new(period, v.clone(), c, h, a).unwrap()
        };
        let stats = FirstScaleStats::new(axis(0, hurst.0, alpha.0), axis(3, hurst.1, alpha.1));
        prop_assert!(check_stats_periodicity(&stats));
        let t = period as i64;
        prop_assume!(n.0 + lag.0 >= 0 && n.1 + lag.1 >= 0);
        let base = mmsi_cov(&stats, [n.0, n.1], [lag.0, lag.1]).unwrap();
        let later = mmsi_cov(&stats, [n.0 + t, n.1 + t], [lag.0, lag.1]).unwrap();
        let factor = alpha.0.powf(2.0 * t as f64 * hurst.0) * alpha.1.powf(2.0 * t as f64 * hurst.1);
        assert_relative_eq!(later, factor * base, max_relative = 1e-9);
    }
}
