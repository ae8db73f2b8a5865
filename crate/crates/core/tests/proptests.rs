//! Property-based invariants across the core numeric kernels.

use proptest::prelude::*;

use catseg::haar::{haar_transform, inverse_haar};
use catseg::matrix::project_column_to_simplex;
use catseg::seq::prefix_counts;
use catseg::{CategorySequence, Matrix, Partition};

fn matrix_strategy() -> impl Strategy<Value = Matrix> {
    (1usize..=4, 0u32..=6).prop_flat_map(|(r, levels)| {
        let n = 1usize << levels;
        proptest::collection::vec(-1.0f64..1.0, r * n).prop_map(move |data| {
            let mut m = Matrix::zeros(r, n);
            for i in 0..n {
                for l in 0..r {
                    m.set(l, i, data[i * r + l]);
                }
            }
            m
        })
    })
}

fn simplex_point(r: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1e-3f64..1.0, r).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn haar_round_trip_and_parseval(t in matrix_strategy()) {
        let h = haar_transform(&t).unwrap();
        let back = inverse_haar(&h);
        prop_assert!(t.dist_sq(&back).unwrap().sqrt() < 1e-9);
        prop_assert!((t.norm_sq() - h.norm_sq()).abs() < 1e-9);
    }

    #[test]
    fn simplex_projection_is_nonexpansive(
        r in 2usize..=5,
        raw_a in proptest::collection::vec(-2.0f64..2.0, 5),
        raw_b in proptest::collection::vec(-2.0f64..2.0, 5),
    ) {
        let a = &raw_a[..r];
        let b = &raw_b[..r];
        let pa = project_column_to_simplex(a);
        let pb = project_column_to_simplex(b);
        let d = |x: &[f64], y: &[f64]| -> f64 {
            x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
        };
        prop_assert!(d(&pa, &pb) <= d(a, b) + 1e-12);
    }

    #[test]
    fn simplex_projection_fixes_simplex_points(
        p in (2usize..=5).prop_flat_map(simplex_point),
        raw in proptest::collection::vec(-2.0f64..2.0, 5),
    ) {
        // Projecting any point never moves it further from a fixed
        // simplex element than it started (the fixed element projects to
        // itself).
        let v = &raw[..p.len()];
        let pv = project_column_to_simplex(v);
        let pp = project_column_to_simplex(&p);
        for (x, y) in pp.iter().zip(&p) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let d = |x: &[f64], y: &[f64]| -> f64 {
            x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
        };
        prop_assert!(d(&pv, &p) <= d(v, &p) + 1e-12);
    }

    #[test]
    fn segment_costs_add_up_to_matrix_residual(
        seed in any::<u64>(),
        levels in 2u32..=8,
        r in 2usize..=4,
        cut_mask in any::<u64>(),
    ) {
        // Any partition, not just selected ones: the closed-form segment
        // costs must sum to the squared residual of the projection.
        let n = 1usize << levels;
        let values: Vec<u32> = (0..n as u64)
            .map(|i| {
                let x = (i ^ seed).wrapping_mul(0x9e3779b97f4a7c15).rotate_left(31);
                (x % r as u64) as u32 + 1
            })
            .collect();
        let seq = CategorySequence::new(values, r).unwrap();
        let pc = prefix_counts(&seq);
        let mut breakpoints = vec![1usize];
        for i in 2..=n {
            if cut_mask & (1 << (i % 64)) != 0 {
                breakpoints.push(i);
            }
        }
        breakpoints.push(n + 1);
        breakpoints.dedup();
        let m = Partition::new(breakpoints).unwrap();
        let segment_sum: f64 = m
            .segments()
            .map(|(a, b)| pc.segment_cost(a, b).unwrap())
            .sum();
        let x = seq.indicator_matrix();
        let mut projected = Matrix::zeros(r, n);
        for (a, b) in m.segments() {
            let mean = pc.segment_mean(a, b).unwrap();
            for i in (a - 1)..(b - 1) {
                projected.column_mut(i).copy_from_slice(&mean);
            }
        }
        let residual = x.dist_sq(&projected).unwrap();
        prop_assert!((segment_sum - residual).abs() < 1e-9);
    }
}
