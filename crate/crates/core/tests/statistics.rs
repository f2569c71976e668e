//! Monte Carlo checks with fixed seeds.

use empiproc_core::empirical::empirical_process;
use empiproc_core::foundation::{DistributionModel, EvaluationGrid, Point};
use empiproc_core::generators::{
    cat_map, FiniteMarkovModel, IidUniform, LinearProcessModel, LipschitzIterationModel,
    ProcessGenerator, SamplePath, UniformInnovation,
};
use empiproc_core::limit::{
    estimate_gamma, fidi_normality, gamma_at_points, process_at_points, sample_w, Taper,
};
use empiproc_core::mixing::{
    block_covariance, fit_mixing_envelope, lag_covariances, moment_relation, spectral_gap_check,
    BlockSpec, DegreeChoice, EnsembleMoments, MarkovMoments, MixingStatus, MomentBudget,
    Observable,
};
use empiproc_core::stats::{ks_pvalue, ks_two_sample, ks_uniform, mean, std_err, variance};

fn ensemble(g: &ProcessGenerator, n: usize, reps: u64, seed: u64) -> Vec<SamplePath> {
    (0..reps).map(|r| g.simulate(n, seed, r).unwrap()).collect()
}

fn generators() -> Vec<ProcessGenerator> {
    vec![
        ProcessGenerator::Iid(IidUniform::new(2).unwrap()),
        ProcessGenerator::torus(cat_map()),
        ProcessGenerator::Linear(LinearProcessModel::geometric(2, 0.5, None).unwrap()),
        ProcessGenerator::Lipschitz(LipschitzIterationModel::default_model(2).unwrap()),
        ProcessGenerator::markov(FiniteMarkovModel::two_state(0.75).unwrap()),
    ]
}

#[test]
fn marginal_mean_is_stationary() {
    for g in generators() {
        let paths = ensemble(&g, 64, 400, 17);
        for axis in 0..g.dimension() {
            let first: Vec<f64> = paths.iter().map(|p| p.row(0)[axis]).collect();
            let last: Vec<f64> = paths.iter().map(|p| p.row(63)[axis]).collect();
            let se = (std_err(&first).powi(2) + std_err(&last).powi(2)).sqrt();
            let gap = (mean(&first) - mean(&last)).abs();
            assert!(gap <= 3.0 * se, "{} axis {axis}: {gap} > 3 * {se}", g.id());
        }
    }
}

#[test]
fn torus_orbit_equidistributes() {
    let orbit = cat_map().simulate(16_384, 3, 0, 1 << 20).unwrap();
    let ks: Vec<f64> = [256usize, 1024, 4096, 16_384]
        .iter()
        .map(|&n| {
            let pit: Vec<f64> = orbit.values()[..2 * n].iter().step_by(2).copied().collect();
            ks_uniform(&pit).unwrap()
        })
        .collect();
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
}

#[test]
fn identity_linear_process_is_iid() {
    let lin = LinearProcessModel::new(
        3,
        vec![vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]],
        0.5,
        UniformInnovation { half_width: 0.5 },
    )
    .unwrap();
    let iid = IidUniform::new(3).unwrap();
    for axis in 0..3 {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in 0..200 {
            a.extend(
                lin.simulate(10_000, 5, r)
                    .unwrap()
                    .column(axis)
                    .iter()
                    .map(|v| v + 0.5),
            );
            b.extend(iid.simulate(10_000, 6, r).unwrap().column(axis));
        }
        let d = ks_two_sample(&a, &b).unwrap();
        let n_eff = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
        assert!(ks_pvalue(d, n_eff) > 0.01, "axis {axis}: D = {d}");
    }
}

#[test]
fn iid_process_variance_matches_bernoulli() {
    let g = IidUniform::new(2).unwrap();
    let model = DistributionModel::uniform_cube(2).unwrap();
    let grid = EvaluationGrid::new(vec![vec![0.3, 0.5], vec![0.5, 0.8]]).unwrap();
    let fields: Vec<Vec<f64>> = (0..500)
        .map(|r| {
            empirical_process(&g.simulate(4096, 9, r).unwrap(), &grid, &model)
                .unwrap()
                .un
                .values()
                .to_vec()
        })
        .collect();
    for v in 0..grid.vertex_count() {
        let f = model.cdf(&grid.vertex(v)).unwrap();
        let xs: Vec<f64> = fields.iter().map(|u| u[v]).collect();
        let target = f * (1.0 - f);
        let s2 = variance(&xs);
        // Var(s^2) = (mu4 - s^4) / R with mu4 of a centered Bernoulli sum scaled by 1/sqrt(n), up to O(1/n).
        let se = ((3.0 * target * target + target * (1.0 - 6.0 * target) / 4096.0
            - target * target)
            / 500.0)
            .sqrt();
        assert!(
            (s2 - target).abs() <= 3.0 * se + 1e-12,
            "vertex {v}: {s2} vs {target}"
        );
    }
}

#[test]
fn iid_block_covariances_vanish() {
    let g = ProcessGenerator::Iid(IidUniform::new(2).unwrap());
    let paths = ensemble(&g, 512, 200, 23);
    let values = Observable::cosine(0).evaluate(&paths).unwrap();
    for est in lag_covariances(&values, &(1..=8).collect::<Vec<_>>()).unwrap() {
        assert!(est.estimate.abs() <= 3.0 * est.stderr, "{est:?}");
    }
    let spec = BlockSpec {
        left: vec![0, 1],
        gap: 3,
        right: vec![0],
    };
    let est = block_covariance(&values, &spec).unwrap();
    assert!(est.estimate.abs() <= 3.0 * est.stderr, "{est:?}");
    let var = block_covariance(&values, &BlockSpec::pair(0)).unwrap();
    assert!((var.estimate - 0.5).abs() <= 3.0 * var.stderr);
}

#[test]
fn markov_block_covariances_match_matrix_algebra() {
    let chain = FiniteMarkovModel::new(
        vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.3, 0.3, 0.4],
        ],
        vec![vec![0.0], vec![1.0], vec![2.0]],
        None,
    )
    .unwrap();
    let f = Observable::markov_state(&chain, vec![1.0, -0.5, 0.2]).unwrap();
    let exact = MarkovMoments::new(&chain, &f).unwrap();
    let g = ProcessGenerator::markov(chain);
    let values = f.evaluate(&ensemble(&g, 400, 300, 31)).unwrap();
    for spec in [
        BlockSpec::pair(1),
        BlockSpec::pair(3),
        BlockSpec {
            left: vec![0, 1],
            gap: 2,
            right: vec![0],
        },
        BlockSpec {
            left: vec![0],
            gap: 1,
            right: vec![0, 2],
        },
    ] {
        let mc = block_covariance(&values, &spec).unwrap();
        let truth = exact.block_covariance(&spec);
        assert!(
            (mc.estimate - truth).abs() <= 3.0 * mc.stderr,
            "{spec:?}: {} vs {truth}",
            mc.estimate
        );
    }
}

#[test]
fn moment_relation_holds_on_estimates() {
    let g = ProcessGenerator::Linear(LinearProcessModel::geometric(1, 0.5, None).unwrap());
    let values = Observable::odd_coordinate(0)
        .evaluate(&ensemble(&g, 64, 200, 41))
        .unwrap();
    let est = EnsembleMoments::new(&values, 32).unwrap();
    for p in 1..=3 {
        let rel = moment_relation(&est, 8, p, MomentBudget::default()).unwrap();
        assert!(rel.holds, "p = {p}: {rel:?}");
    }
}

#[test]
fn odd_moments_are_small_for_symmetric_innovations() {
    let g = ProcessGenerator::Linear(LinearProcessModel::geometric(1, 0.5, None).unwrap());
    let f = Observable::odd_coordinate(0);
    let sums: Vec<f64> = (0..2000)
        .map(|r| {
            f.evaluate(&[g.simulate(2048, 43, r).unwrap()]).unwrap()[0]
                .iter()
                .sum()
        })
        .collect();
    let m2 = sums.iter().map(|s| s * s).sum::<f64>() / sums.len() as f64;
    let m3 = sums.iter().map(|s| s * s * s).sum::<f64>() / sums.len() as f64;
    let skew = m3.abs() / m2.powf(1.5);
    assert!(skew <= 0.1, "{skew}");
}

#[test]
fn observables_center_under_their_law() {
    let model = DistributionModel::uniform_cube(2).unwrap();
    let f = Observable::ramp_product(&model, vec![0.5, 0.5], vec![0.25, 0.25]).unwrap();
    assert!(f.sup_norm() <= 1.0);
    let g = ProcessGenerator::Iid(IidUniform::new(2).unwrap());
    let xs: Vec<f64> = f.evaluate(&ensemble(&g, 1000, 50, 47)).unwrap().concat();
    assert!(mean(&xs).abs() <= 3.0 * std_err(&xs));
}

#[test]
fn limit_field_samples_reproduce_gamma() {
    let g = ProcessGenerator::Iid(IidUniform::new(1).unwrap());
    let paths = ensemble(&g, 2000, 20, 53);
    let grid = EvaluationGrid::new(vec![vec![0.25, 0.5, 0.75]]).unwrap();
    let lm = estimate_gamma(&paths, &grid, 2, Taper::Bartlett).unwrap();
    let v = lm.vertices();
    let count = 100_000;
    let draws = sample_w(&lm, count, 59);
    let mut dist = 0.0;
    for a in 0..v {
        for b in 0..v {
            let c = draws.iter().map(|w| w[a] * w[b]).sum::<f64>() / count as f64;
            dist += (c - lm.gamma[a * v + b]).powi(2);
        }
    }
    let norm: f64 = lm.gamma.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(
        dist.sqrt() <= 5.0 * norm / (count as f64).sqrt(),
        "{} vs {norm}",
        dist.sqrt()
    );
    // Indicator variances are at most 1/4 up to the lag terms.
    assert!((0..v).all(|a| lm.gamma[a * v + a] <= 0.25 + 0.05));
}

#[test]
fn fidi_for_independent_uniforms() {
    let g = ProcessGenerator::Iid(IidUniform::new(1).unwrap());
    let model = DistributionModel::uniform_cube(1).unwrap();
    let points = vec![Point::new(vec![0.5]).unwrap()];
    let paths = ensemble(&g, 4096, 1000, 61);
    let samples: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| process_at_points(p, &model, &points).unwrap())
        .collect();
    let report = fidi_normality(&samples, &points, &[vec![1.0], vec![0.0]], &[0.25], 0.01).unwrap();
    let ratio = report.results[0].variance_ratio.unwrap();
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    assert!(report.results[1].skipped.is_some());
}

#[test]
fn fidi_for_the_cat_map() {
    let g = ProcessGenerator::torus(cat_map());
    let model = DistributionModel::uniform_cube(2).unwrap();
    let points = vec![
        Point::new(vec![0.3, 0.6]).unwrap(),
        Point::new(vec![0.7, 0.4]).unwrap(),
    ];
    let paths = ensemble(&g, 4096, 500, 67);
    let samples: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| process_at_points(p, &model, &points).unwrap())
        .collect();
    let gamma = gamma_at_points(&paths, &points, 20, Taper::Bartlett).unwrap();
    let report = fidi_normality(
        &samples,
        &points,
        &[vec![0.8, 0.6], vec![-0.3, 1.0]],
        &gamma,
        0.01,
    )
    .unwrap();
    for r in &report.results {
        assert!(
            r.ad_pvalue.unwrap() > 0.005 && r.ks_pvalue.unwrap() > 0.005,
            "{r:?}"
        );
    }
}

#[test]
fn mixing_fit_recovers_the_autoregressive_rate() {
    let g = ProcessGenerator::Linear(LinearProcessModel::geometric(1, 0.5, None).unwrap());
    let values = Observable::odd_coordinate(0)
        .evaluate(&ensemble(&g, 64, 2000, 71))
        .unwrap();
    let gaps: Vec<usize> = (1..=12).collect();
    let covs = lag_covariances(&values, &gaps).unwrap();
    let report = fit_mixing_envelope(&gaps, &covs, DegreeChoice::Fixed(0)).unwrap();
    assert_eq!(report.status, MixingStatus::Fitted);
    assert!((report.theta.unwrap() - 0.5).abs() <= 0.05, "{report:?}");
    assert!(report.decays);
}

#[test]
fn exact_markov_decay_matches_second_eigenvalue() {
    let chain = FiniteMarkovModel::two_state(0.75).unwrap();
    let report = spectral_gap_check(&chain, &[vec![1.0, -1.0]], 30).unwrap();
    assert!((report.theta.unwrap() - 0.5).abs() <= 0.05);
    assert!(report.agrees);
}

#[test]
fn cat_map_ramp_covariances_are_short_lived() {
    let model = DistributionModel::uniform_cube(2).unwrap();
    let f = Observable::ramp_product(&model, vec![0.6, 0.7], vec![0.2, 0.3]).unwrap();
    let g = ProcessGenerator::torus(cat_map());
    let values = f.evaluate(&ensemble(&g, 64, 2000, 73)).unwrap();
    let gaps: Vec<usize> = (1..=16).collect();
    let covs = lag_covariances(&values, &gaps).unwrap();
    // Unlike characters, a ramp has correlations, but they die out within a few iterates.
    assert!(
        covs[..2].iter().all(|c| c.estimate.abs() > 3.0 * c.stderr),
        "{covs:?}"
    );
    assert!(
        covs[2..].iter().all(|c| c.estimate.abs() <= 3.0 * c.stderr),
        "{covs:?}"
    );
    let report = fit_mixing_envelope(&gaps, &covs, DegreeChoice::Fixed(0)).unwrap();
    assert_eq!(report.used, vec![1, 2]);
}
