use proptest::prelude::*;
use randla::elementwise::{perturbation_check, quantize, sparsify, SparsifyScheme};
use randla::io::{read_edge_list_str, read_matrix_market_str, write_array_string, write_coordinate_dense, write_edge_list_string};
use randla::laplacian::{edge_incidence, effective_resistances, laplacian_pinv, sparsify_graph, spectral_defect};
use randla::leverage::leverage_exact;
use randla::linalg::{factorize, orthonormality_defect, pinv, singular_values, spectral_norm, svd, FactorKind, Factors};
use randla::lowrank::{factor_from_basis, projection_residual, range_finder, BasisTarget};
use randla::lstsq::{check_conditions, ls_sketch, solve_exact, solve_precond, solve_with_operator, SketchStrategy};
use randla::sketch::make_sketch;
use randla::{Graph, LsMethod, Matrix, RngSeed, SketchKind};

fn gaussian(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = RngSeed::from_seed(seed).rng();
    Matrix::from_fn(m, n, |_, _| rng.normal())
}

fn dims(lo: usize, hi: usize) -> impl Strategy<Value = (usize, usize, u64)> {
    (lo..=hi, lo..=hi, any::<u64>())
}

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = RngSeed::from_seed(seed).rng();
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|v| (rng.index(v), v, 0.5 + rng.uniform())).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.bernoulli(p) {
                edges.push((u, v, 0.5 + rng.uniform()));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn singular_values_of_transpose_agree((m, n, seed) in dims(1, 12)) {
        let a = gaussian(m, n, seed);
        let s1 = singular_values(&a);
        let s2 = singular_values(&a.transpose());
        prop_assert_eq!(s1.len(), s2.len());
        for (x, y) in s1.iter().zip(&s2) {
            prop_assert!((x - y).abs() <= 1e-10 * s1[0].max(1.0));
        }
        let f = factorize(&a, FactorKind::Svd, None).unwrap();
        if let Factors::Svd { sigma, .. } = &f.factors {
            for (x, y) in sigma.iter().zip(&s1) {
                prop_assert!((x - y).abs() <= 1e-10 * s1[0].max(1.0));
            }
        }
    }

    #[test]
    fn hoffman_wielandt((m, n, seed) in dims(1, 10), scale in 1e-3f64..10.0) {
        let a = gaussian(m, n, seed);
        let e = gaussian(m, n, seed ^ 0xabcd).scale(scale);
        let sa = singular_values(&a);
        let sb = singular_values(&(&a + &e));
        let lhs: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum();
        prop_assert!(lhs <= e.frobenius_norm_sq() * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn pinv_is_left_inverse((n, extra, seed) in (1usize..6, 0usize..6, any::<u64>())) {
        let a = gaussian(n + extra, n, seed);
        let p = pinv(&a, None);
        prop_assert!(p.matmul(&a).max_abs_diff(&Matrix::identity(n)) <= 1e-8);
    }

    #[test]
    fn leverage_sums_to_rank_and_ignores_basis((m, n, seed) in (8usize..30, 1usize..6, any::<u64>())) {
        let a = gaussian(m, n, seed);
        let lev = leverage_exact(&a).unwrap();
        prop_assert!((lev.scores.iter().sum::<f64>() - n as f64).abs() <= 1e-6);
        prop_assert!(lev.scores.iter().all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));
        // same column span: right-multiply by a unit upper-triangular matrix
        let mut rng = RngSeed::new(seed, 1).rng();
        let t = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i < j { rng.normal() } else { 0.0 });
        let lev2 = leverage_exact(&a.matmul(&t)).unwrap();
        for (x, y) in lev.scores.iter().zip(&lev2.scores) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn appending_columns_never_increases_residual((m, n, seed) in dims(3, 12), order in any::<u64>()) {
        let a = gaussian(m, n, seed);
        let mut rng = RngSeed::from_seed(order).rng();
        let picks: Vec<usize> = (0..n).map(|_| rng.index(n)).collect();
        let mut last = a.frobenius_norm();
        for t in 1..=picks.len() {
            let r = projection_residual(&a, &a.select_cols(&picks[..t])).frobenius_norm();
            prop_assert!(r <= last + 1e-10 * a.frobenius_norm());
            last = r;
        }
    }

    #[test]
    fn power_steps_with_shared_start_do_not_hurt((m, n, seed) in dims(8, 20), k in 1usize..4) {
        let a = gaussian(m, n, seed);
        let s = RngSeed::new(seed, 7);
        let mut prev = f64::INFINITY;
        for q in 0..3 {
            let basis = range_finder(&a, k, 1, q, s).unwrap();
            let err = spectral_norm(&basis.residual(&a));
            prop_assert!(err <= prev + 1e-10 * spectral_norm(&a));
            prev = err;
        }
    }

    #[test]
    fn partial_svd_interlaces((m, n, seed) in dims(6, 16), k in 1usize..4) {
        let a = gaussian(m, n, seed);
        let basis = range_finder(&a, k, 2, 0, RngSeed::from_seed(seed)).unwrap();
        let f = factor_from_basis(&a, &basis, BasisTarget::PartialSvd).unwrap();
        let Factors::Svd { u, sigma, .. } = &f.factors else { unreachable!() };
        prop_assert!(orthonormality_defect(u) <= 1e-10);
        let full = singular_values(&a);
        for (s, t) in sigma.iter().zip(&full) {
            prop_assert!(*s <= t * (1.0 + 1e-10) + 1e-12);
        }
        let direct = spectral_norm(&basis.residual(&a));
        let via = spectral_norm(&(&a - &f.reconstruct()));
        prop_assert!((direct - via).abs() <= 1e-10 * spectral_norm(&a).max(1.0));
    }

    #[test]
    fn sketches_are_pure_functions_of_seed(kind_ix in 0usize..6, seed in any::<u64>()) {
        let kinds = [SketchKind::ColumnSample, SketchKind::Gaussian, SketchKind::Rademacher, SketchKind::SparseAchlioptas, SketchKind::Srht, SketchKind::AcFjlt];
        let a = gaussian(24, 3, seed);
        let op = make_sketch::<f64>(kinds[kind_ix], 24, 8, RngSeed::from_seed(seed)).unwrap();
        let op2 = make_sketch::<f64>(kinds[kind_ix], 24, 8, RngSeed::from_seed(seed)).unwrap();
        prop_assert_eq!(op.apply_left(&a).unwrap(), op.apply_left(&a).unwrap());
        prop_assert_eq!(op.apply_left(&a).unwrap(), op2.apply_left(&a).unwrap());
    }

    #[test]
    fn passing_conditions_imply_sketched_bounds(seed in any::<u64>(), r in 20usize..80) {
        let (m, d) = (128, 4);
        let a = gaussian(m, d, seed);
        let noise = gaussian(m, 1, seed ^ 1).into_vec();
        let b: Vec<f64> = a.matvec(&[1.0, -2.0, 0.5, 3.0]).iter().zip(&noise).map(|(x, e)| x + e).collect();
        let op = ls_sketch(&a, SketchStrategy::LeverageSample, r, RngSeed::from_seed(seed)).unwrap();
        let report = check_conditions(&a, &b, &op).unwrap();
        let exact = solve_exact(&a, &b).unwrap();
        let sol = solve_with_operator(&a, &b, &op, LsMethod::Sketched(SketchStrategy::LeverageSample)).unwrap();
        let z = report.z;
        // smallest eps for which condition two holds on this realization
        let eps = (2.0 * report.cross_term / (z * z)).max(1e-12);
        if report.condition_one() && eps <= 1.0 {
            prop_assert!(report.holds(eps * (1.0 + 1e-12)));
            prop_assert!(sol.residual_norm <= (1.0 + eps) * z * (1.0 + 1e-10));
            let smin = *singular_values(&a).last().unwrap();
            let dx = sol.x.iter().zip(&exact.x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dx <= eps.sqrt() / smin * z * (1.0 + 1e-10));
        }
    }

    #[test]
    fn precond_residual_close_to_exact(seed in any::<u64>()) {
        let a = gaussian(256, 6, seed);
        let b = gaussian(256, 1, seed ^ 5).into_vec();
        let tol = 1e-12;
        let exact = solve_exact(&a, &b).unwrap();
        let sol = solve_precond(&a, &b, 4.0, tol, RngSeed::from_seed(seed)).unwrap();
        let s = singular_values(&a);
        let kappa = s[0] / s[s.len() - 1];
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(sol.residual_norm <= exact.residual_norm + tol * bn * kappa);
    }

    #[test]
    fn perturbation_inequalities_hold((m, n, seed) in dims(4, 14), scheme in 0usize..3, p in 0.05f64..1.0, k in 1usize..4) {
        let a = gaussian(m, n, seed);
        let k = k.min(m.min(n));
        let s = RngSeed::new(seed, 3);
        let sample = match scheme {
            0 => sparsify(&a, p, SparsifyScheme::UniformP, s).unwrap(),
            1 => sparsify(&a, p, SparsifyScheme::Magnitude, s).unwrap(),
            _ => quantize(&a, s).unwrap(),
        };
        let check = perturbation_check(&a, &sample.to_dense(), k).unwrap();
        prop_assert!(check.holds(1e-8), "{:?}", check);
    }

    #[test]
    fn matrix_market_round_trip((m, n, seed) in dims(1, 9), zeros in 0.0f64..0.7) {
        let mut rng = RngSeed::new(seed, 9).rng();
        let a = gaussian(m, n, seed);
        let a = Matrix::from_fn(m, n, |i, j| if rng.bernoulli(zeros) { 0.0 } else { a.get(i, j) * 1e3f64.powi(i as i32 - 3) });
        let back: Matrix = read_matrix_market_str(&write_array_string(&a)).unwrap();
        prop_assert_eq!(&back, &a);
        let back: Matrix = read_matrix_market_str(&write_coordinate_dense(&a)).unwrap();
        prop_assert_eq!(&back, &a);
    }

    #[test]
    fn edge_list_round_trip(n in 2usize..20, seed in any::<u64>()) {
        let g = random_graph(n, 0.3, seed);
        let back = read_edge_list_str::<f64>(&write_edge_list_string(&g)).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn resistances_are_weighted_leverage(n in 3usize..18, seed in any::<u64>()) {
        let g = random_graph(n, 0.3, seed);
        let res = effective_resistances(&g).unwrap();
        let (b, w) = edge_incidence(&g);
        // leverage of W^{1/2} B, an independent route through a QR basis
        let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let lev = leverage_exact(&b.scale_rows(&sw)).unwrap();
        for ((r, l), we) in res.iter().zip(&lev.scores).zip(&w) {
            prop_assert!((r - l / we).abs() <= 1e-10 * (1.0 + r.abs()));
        }
        let total: f64 = res.iter().zip(&w).map(|(r, we)| r * we).sum();
        prop_assert!((total - (n - 1) as f64).abs() <= 1e-8);
        let lp = laplacian_pinv(&g).unwrap();
        prop_assert!(lp.matmul(&g.laplacian()).matmul(&lp).max_abs_diff(&lp) <= 1e-9);
    }

    #[test]
    fn sparsifier_cuts_within_measured_defect(n in 6usize..24, seed in any::<u64>()) {
        let g = random_graph(n, 0.5, seed);
        let h = sparsify_graph(&g, 6 * n, RngSeed::from_seed(seed)).unwrap();
        let defect = match spectral_defect(&g, &h) {
            Ok(d) => d,
            Err(_) => return Ok(()),
        };
        let mut rng = RngSeed::new(seed, 4).rng();
        for _ in 0..50 {
            let s: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.5)).collect();
            let cg = g.cut_weight(&s);
            let ch = h.cut_weight(&s);
            let slack = 1e-9 * (1.0 + cg);
            prop_assert!(ch >= (1.0 - defect) * cg - slack && ch <= (1.0 + defect) * cg + slack);
        }
    }
}

#[test]
fn svd_reconstructs() {
    let a = gaussian(9, 6, 3);
    let s = svd(&a);
    assert!(s.truncate(6).max_abs_diff(&a) <= 1e-10);
}
