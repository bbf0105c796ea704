use arss_core::gst::{gst_scalar, scalar_objective, ShrinkageParams};
use arss_core::numkit::scale_cols_inv;
use arss_core::{rank_rows, spd_solve, DiagonalWeights, Matrix};
use proptest::prelude::*;

fn grid_min(c: f64, p: f64, lambda: f64) -> f64 {
    let points = 200_001;
    let (lo, hi) = (-12.0, 12.0);
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = scalar_objective(0.0, c, p, lambda);
    for i in 0..points {
        let f = scalar_objective(lo + step * i as f64, c, p, lambda);
        if f < best {
            best = f;
        }
    }
    best
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0f64..5.0, rows * cols)
        .prop_map(move |v| Matrix::from_col_major(rows, cols, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gst_beats_grid(c in -10.0f64..10.0, lambda in 0.01f64..5.0, pi in 0usize..4) {
        let p = [0.2, 0.5, 0.8, 1.0][pi];
        let y = gst_scalar(c, &ShrinkageParams::new(p, lambda));
        prop_assert!(scalar_objective(y, c, p, lambda) <= grid_min(c, p, lambda) + 1e-6);
    }
}

proptest! {
    #[test]
    fn gst_odd_and_shrinking(c in -50.0f64..50.0, lambda in 0.0f64..5.0, p in 0.1f64..=1.0) {
        let params = ShrinkageParams::new(p, lambda);
        let y = gst_scalar(c, &params);
        prop_assert_eq!(gst_scalar(-c, &params), -y);
        prop_assert!(y.abs() <= c.abs());
    }

    #[test]
    fn gst_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, lambda in 0.01f64..5.0, p in 0.2f64..=1.0) {
        let (c1, c2) = if a < b { (a, b) } else { (b, a) };
        let params = ShrinkageParams::new(p, lambda);
        prop_assert!(gst_scalar(c1, &params) <= gst_scalar(c2, &params) + 1e-12);
    }

    #[test]
    fn gst_p1_is_soft_threshold(c in -10.0f64..10.0, lambda in 0.0f64..5.0) {
        let y = gst_scalar(c, &ShrinkageParams::new(1.0, lambda));
        let soft = c.signum() * (c.abs() - lambda).max(0.0);
        prop_assert!((y - soft).abs() <= 1e-12);
    }

    #[test]
    fn ranking_scale_invariant(a in matrix(6, 5), c in 1e-3f64..1e3) {
        let base = rank_rows(&a);
        let scaled = rank_rows(&a.scale(c));
        prop_assert_eq!(&base.order, &scaled.order);
        prop_assert!(base.scores.iter().all(|&s| s >= 0.0));
        for w in base.order.windows(2) {
            prop_assert!(base.scores[w[0]] >= base.scores[w[1]]);
        }
    }

    #[test]
    fn zero_row_scores_zero(a in matrix(5, 4), row in 0usize..5) {
        let mut a = a;
        for j in 0..4 {
            a.col_mut(j)[row] = 0.0;
        }
        prop_assert_eq!(rank_rows(&a).scores[row], 0.0);
    }

    #[test]
    fn scaling_is_linear(x in matrix(3, 4), d in prop::collection::vec(0.1f64..10.0, 4), alpha in -10.0f64..10.0) {
        let d = DiagonalWeights::new(d).unwrap();
        let lhs = scale_cols_inv(&x.scale(alpha), &d).unwrap();
        let rhs = scale_cols_inv(&x, &d).unwrap().scale(alpha);
        for (u, v) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn spd_identity_exact(b in matrix(4, 3)) {
        prop_assert_eq!(spd_solve(&Matrix::identity(4), &b).unwrap(), b);
    }
}
