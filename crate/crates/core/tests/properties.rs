//! Structural invariants as property tests.

use empiproc_core::chaining::{schedule, verify_sandwich, ChainIndex, ChainingSystem};
use empiproc_core::empirical::{
    approx_process, build_partition, check_approx_sandwich, empirical_process, phi_j,
    sup_deviations,
};
use empiproc_core::foundation::{
    compactify, decompactify, holder_norm, modulus_of_continuity, DistributionModel,
    EvaluationGrid, GridFunction, Marginal, Point,
};
use empiproc_core::generators::{cat_map, FiniteMarkovModel, IidUniform, SamplePath};
use empiproc_core::limit::{estimate_gamma, psd_factor, Taper};
use empiproc_core::mixing::cutoff_n0;
use proptest::prelude::*;

fn uniform_path(n: usize, d: usize, seed: u64) -> SamplePath {
    IidUniform::new(d).unwrap().simulate(n, seed, 0).unwrap()
}

fn psi_in_unit_interval(sys: &ChainingSystem, idx: &ChainIndex, x: &[f64]) -> bool {
    (0..=sys.depth()).all(|k| {
        let v = sys.psi(k, &idx.cell, &idx.levels[k as usize], x).unwrap();
        (0.0..=1.0).contains(&v)
    })
}

fn models() -> Vec<DistributionModel> {
    let normal = Marginal::Normal { mean: 0.5, sd: 2.0 };
    let uni = Marginal::Uniform { lo: -1.0, hi: 3.0 };
    let pts: Vec<f64> = (0..200)
        .map(|k| ((k * 37) % 101) as f64 / 101.0 + (k % 7) as f64)
        .collect();
    vec![
        DistributionModel::uniform_cube(2).unwrap(),
        DistributionModel::product(vec![normal, uni]).unwrap(),
        DistributionModel::empirical(pts, 2, None).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compactify_is_monotone_and_invertible(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(compactify(lo) < compactify(hi));
        for t in [lo, hi] {
            let back = decompactify(compactify(t));
            prop_assert!((back - t).abs() <= 1e-12 * t.abs().max(1.0), "{t} -> {back}");
        }
    }

    #[test]
    fn compactify_keeps_the_lower_tail(t in -1e12f64..-1.0) {
        let back = decompactify(compactify(t));
        prop_assert!((back - t).abs() <= 1e-12 * t.abs(), "{t} -> {back}");
    }

    #[test]
    fn cdf_is_monotone(which in 0usize..3, t in prop::array::uniform2(-4.0f64..8.0), s in prop::array::uniform2(0.0f64..3.0)) {
        let m = &models()[which];
        let lo = Point::new(t.to_vec()).unwrap();
        let hi = Point::new(vec![t[0] + s[0], t[1] + s[1]]).unwrap();
        let (a, b) = (m.cdf(&lo).unwrap(), m.cdf(&hi).unwrap());
        prop_assert!(a <= b && (0.0..=1.0).contains(&a) && b <= 1.0);
    }

    #[test]
    fn quantile_cdf_galois(which in 0usize..3, axis in 0usize..2, r in 0.0f64..1.0) {
        let m = &models()[which];
        let q = m.quantile(axis, r).unwrap();
        if q.is_finite() {
            prop_assert!(m.marginal_cdf(axis, q) >= r - 1e-12);
            for s in [q - 1e-9, q - 1e-3, q - 1.0] {
                prop_assert!(m.marginal_cdf(axis, s) <= r + 1e-12);
            }
        }
    }

    #[test]
    fn holder_norm_is_a_norm(a in prop::collection::vec(-1.0f64..1.0, 12), b in prop::collection::vec(-1.0f64..1.0, 12),
                            c in -3.0f64..3.0, alpha in 0.2f64..1.0) {
        let grid = EvaluationGrid::new(vec![(0..10).map(|k| k as f64 / 9.0).collect()]).unwrap();
        let f = GridFunction::new(grid.clone(), a.clone()).unwrap();
        let g = GridFunction::new(grid.clone(), b.clone()).unwrap();
        let sum = GridFunction::new(grid.clone(), a.iter().zip(&b).map(|(x, y)| x + y).collect()).unwrap();
        let scaled = GridFunction::new(grid, a.iter().map(|x| c * x).collect()).unwrap();
        let (nf, ng) = (holder_norm(&f, alpha).unwrap().value, holder_norm(&g, alpha).unwrap().value);
        prop_assert!(holder_norm(&sum, alpha).unwrap().value <= nf + ng + 1e-12);
        let ns = holder_norm(&scaled, alpha).unwrap().value;
        prop_assert!((ns - c.abs() * nf).abs() <= 1e-12 * (1.0 + ns));
    }

    #[test]
    fn modulus_is_nondecreasing(which in 0usize..3, deltas in prop::collection::vec(1e-4f64..2.0, 2..6)) {
        let est = modulus_of_continuity(&models()[which], &deltas).unwrap();
        let mut pairs = est.pairs.clone();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn empirical_process_identity(n in 1usize..300, seed in any::<u64>()) {
        let p = uniform_path(n, 2, seed);
        let model = DistributionModel::uniform_cube(2).unwrap();
        let grid = EvaluationGrid::new(vec![vec![0.1, 0.5, 0.9], vec![0.3, 0.7]]).unwrap();
        let f = empirical_process(&p, &grid, &model).unwrap();
        let root = (n as f64).sqrt();
        for v in 0..grid.vertex_count() {
            let (a, b, u) = (f.fn_values.values()[v], f.f_values.values()[v], f.un.values()[v]);
            prop_assert_eq!(u, root * (a - b));
            let t = grid.vertex_coords(v);
            if t.iter().any(|x| *x == f64::NEG_INFINITY) {
                prop_assert_eq!(a, 0.0);
            }
            if t.iter().all(|x| *x == f64::INFINITY) {
                prop_assert_eq!(a, 1.0);
            }
        }
        let shape = grid.shape();
        for i in 0..shape[0] {
            for j in 1..shape[1] {
                prop_assert!(f.fn_values.at(&[i, j - 1]) <= f.fn_values.at(&[i, j]));
            }
        }
    }

    #[test]
    fn approximation_is_piecewise_constant_and_sandwiched(n in 1usize..400, seed in any::<u64>(), m in 2usize..9,
                                                            a in prop::array::uniform2(0.0f64..1.0), frac in 0.0f64..1.0) {
        let p = uniform_path(n, 2, seed);
        let model = DistributionModel::uniform_cube(2).unwrap();
        let part = build_partition(&model, m).unwrap();
        let field = approx_process(&p, &part, &model).unwrap();
        prop_assert_eq!(check_approx_sandwich(&p, &field).unwrap().violations, 0);
        // A second point of the same rectangle.
        let h = 1.0 / m as f64;
        let b: Vec<f64> = a.iter().map(|x| {
            let lo = (x / h).floor() * h;
            (lo + frac * (x - lo)).min(*x)
        }).collect();
        if field.cell_of(&a) == field.cell_of(&b) {
            prop_assert_eq!(field.un_at(&a), field.un_at(&b));
        }
    }

    #[test]
    fn sup_deviation_matches_candidate_brute_force(n in 1usize..12, seed in any::<u64>(), m in 2usize..6) {
        let p = uniform_path(n, 2, seed);
        let model = DistributionModel::uniform_cube(2).unwrap();
        let part = build_partition(&model, m).unwrap();
        let field = approx_process(&p, &part, &model).unwrap();
        let exact = sup_deviations(&p, &model, &[&field]).unwrap()[0];
        // Every sample coordinate and breakpoint, approached from both sides.
        let coords = |i: usize| {
            let mut c: Vec<f64> = p.column(i);
            c.extend((0..=m).map(|j| j as f64 / m as f64));
            c.iter().flat_map(|x| [x - 1e-9, *x, x + 1e-9]).chain([-0.5, 1.5]).collect::<Vec<f64>>()
        };
        let root = (n as f64).sqrt();
        let mut brute = 0.0f64;
        for &t0 in &coords(0) {
            for &t1 in &coords(1) {
                let fnv = p.rows().filter(|x| x[0] <= t0 && x[1] <= t1).count() as f64 / n as f64;
                let u = root * (fnv - t0.clamp(0.0, 1.0) * t1.clamp(0.0, 1.0));
                brute = brute.max((u - field.un_at(&[t0, t1])).abs());
            }
        }
        prop_assert!(exact >= brute - 1e-7 && exact <= brute + 1e-7, "exact {} brute {}", exact, brute);
    }

    #[test]
    fn chain_sandwich_and_consistency(seed in any::<u64>(), d in 1usize..4, m_pow in 2u32..4, depth in 1u32..7,
                                      ts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..40)) {
        let m = 1usize << m_pow;
        let model = DistributionModel::uniform_cube(d).unwrap();
        let sys = ChainingSystem::new(&model, build_partition(&model, m).unwrap(), depth, 1.0, 0.5).unwrap();
        let path = uniform_path(50, d, seed);
        let points: Vec<Point> = ts.iter().map(|t| Point::new(t[..d].to_vec()).unwrap()).collect();
        let rep = verify_sandwich(&sys, &path, &points).unwrap();
        prop_assert_eq!(rep.total_violations(), 0);
        for t in &points {
            let idx = sys.chain_index(t).unwrap();
            for k in 1..=depth as usize {
                for i in 0..d {
                    prop_assert_eq!(idx.levels[k - 1][i], idx.levels[k][i] / 2);
                }
            }
            // Oracle on the identity CDF with dyadic m: l = floor(t m 2^k) - (j - 1) 2^k, exact in binary.
            for k in 0..=depth as usize {
                for i in 0..d {
                    let scaled = (t.coords()[i] * (m as f64) * (1u64 << k) as f64).floor() as u64;
                    prop_assert_eq!(idx.levels[k][i], scaled - (idx.cell[i] as u64 - 1) * (1u64 << k));
                }
            }
            let x: Vec<f64> = t.coords().iter().map(|v| (v * 1.37 + 0.11) % 1.0).collect();
            prop_assert_eq!(sys.psi(0, &idx.cell, &idx.levels[0], &x).unwrap(), phi_j(sys.partition(), &idx.cell, &x));
            prop_assert!(psi_in_unit_interval(&sys, &idx, &x));
        }
    }

    #[test]
    fn k_window(n in 1usize..1_000_000, m in 2usize..64, eps in 1e-3f64..4.0, d in 1usize..6) {
        let h = 1.0 / m as f64;
        let s = schedule(n, h, eps, d).unwrap();
        let scale = d as f64 * (n as f64).sqrt() * h;
        if !s.clamped {
            let v = scale / 2f64.powi(s.k as i32);
            prop_assert!(eps / 16.0 <= v && v <= eps / 8.0, "K={} v={v}", s.k);
        }
        prop_assert!(s.eps_sum < eps / 4.0);
    }

    #[test]
    fn gamma_symmetry_refinement_and_factor(seed in any::<u64>(), lag in 0usize..4) {
        let paths: Vec<SamplePath> = (0..3).map(|r| IidUniform::new(2).unwrap().simulate(60, seed, r).unwrap()).collect();
        let coarse = EvaluationGrid::new(vec![vec![0.5], vec![0.25, 0.75]]).unwrap();
        let fine = EvaluationGrid::new(vec![vec![0.2, 0.5, 0.8], vec![0.25, 0.5, 0.75]]).unwrap();
        let gc = estimate_gamma(&paths, &coarse, lag, Taper::Flat).unwrap();
        let gf = estimate_gamma(&paths, &fine, lag, Taper::Flat).unwrap();
        let v = gc.vertices();
        for a in 0..v {
            for b in 0..v {
                prop_assert_eq!(gc.gamma_raw[a * v + b], gc.gamma_raw[b * v + a]);
                let fa = gf.grid.locate(&coarse.vertex_coords(a)).unwrap();
                let fb = gf.grid.locate(&coarse.vertex_coords(b)).unwrap();
                prop_assert_eq!(gc.gamma_raw[a * v + b], gf.gamma_raw[fa * gf.vertices() + fb]);
            }
        }
        let (repaired, _, _, factor, err) = psd_factor(&gc.gamma_raw, v).unwrap();
        prop_assert!(err <= 1e-10);
        let norm: f64 = repaired.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut diff = 0.0;
        for a in 0..v {
            for b in 0..v {
                let llt: f64 = (0..v).map(|c| factor[a * v + c] * factor[b * v + c]).sum();
                diff += (llt - repaired[a * v + b]).powi(2);
            }
        }
        prop_assert!(diff.sqrt() <= 1e-10 * norm.max(1e-300) + 1e-15);
    }

    #[test]
    fn cutoff_is_the_first_admissible_index(norm in 1.0f64..1e6, theta in 0.01f64..0.99) {
        let n0 = cutoff_n0(norm, theta).unwrap();
        prop_assert!(theta.powi(n0 as i32) * norm <= 1.0 + 1e-12);
        if n0 > 1 {
            prop_assert!(theta.powi(n0 as i32 - 1) * norm > 1.0 - 1e-12);
        }
    }

    #[test]
    fn markov_rows_and_stationarity(raw in prop::collection::vec(0.05f64..1.0, 9)) {
        let rows: Vec<Vec<f64>> = raw.chunks(3).map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        }).collect();
        let emb = vec![vec![0.0], vec![1.0], vec![2.0]];
        let model = FiniteMarkovModel::new(rows, emb, None).unwrap();
        let p = model.transition();
        let nu = model.stationary();
        for i in 0..3 {
            prop_assert!((p[i * 3..i * 3 + 3].iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let image: f64 = (0..3).map(|s| nu[s] * p[s * 3 + i]).sum();
            prop_assert!((image - nu[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn paths_are_reproducible(seed in any::<u64>(), rep in 0u64..1000) {
        let a = cat_map().simulate(40, seed, rep, 1 << 20).unwrap();
        let b = cat_map().simulate(40, seed, rep, 1 << 20).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert!(a.values().iter().all(|v| (0.0..1.0).contains(v)));
        let bits = cat_map().precision_bits(40);
        let doubled = cat_map().simulate_with_precision(40, seed, rep, 2 * bits).unwrap();
        prop_assert_eq!(a.values(), doubled.values());
    }
}
