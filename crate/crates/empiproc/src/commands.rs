//! Subcommand bodies. Each returns `Some(message)` when a statistical check fails.

use std::path::{Path, PathBuf};

use empiproc_core::chaining::{
    holder_growth_check, increment_norm_check, top_increment_check, verify_sandwich, ChainingSystem,
};
use empiproc_core::empirical::{
    approx_process, build_partition, check_approx_sandwich, empirical_process, sup_deviations,
};
use empiproc_core::foundation::{DistributionModel, Point};
use empiproc_core::generators::{validate_torus, ProcessGenerator, SamplePath};
use empiproc_core::limit::MIN_FIDI_REPLICATES;
use empiproc_core::limit::{
    default_lag, estimate_gamma, fidi_normality, gamma_at_points, process_at_points, sample_w,
};
use empiproc_core::mixing::{
    fit_mixing_envelope, lag_covariances, partial_sum_moments, summarize, BoundShape, DegreeChoice,
    MixingReport, MixingStatus, MIN_GAPS, MIN_MOMENT_REPLICATES,
};
use empiproc_core::rng::{lane, stream};
use empiproc_core::stats::{median, variance};
use serde::Serialize;
use serde_json::json;

use crate::cli::Context;
use crate::config::{observable, GeneratorSpec};
use crate::ensemble::{evaluate_ensemble, map_replicates, simulate_ensemble};
use crate::error::{AppError, AppResult};
use crate::io::{self, Sidecar};
use crate::number::g17;

type Outcome = AppResult<Option<String>>;

/// Deltas for the modulus fit: a geometric grid from 1e-6 to 0.5.
const MODULUS_DELTAS: [f64; 12] = [
    1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.5,
];

fn sidecar(
    ctx: &Context,
    artifact: &Path,
    kind: &str,
    details: serde_json::Value,
) -> AppResult<()> {
    let name = artifact
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    io::write_sidecar(
        artifact,
        &Sidecar {
            artifact: name,
            kind: kind.into(),
            config_hash: ctx.hash.clone(),
            seed: ctx.cfg.seed,
            details,
        },
    )
}

fn emit<T: Serialize>(ctx: &Context, name: &str, kind: &str, value: &T) -> AppResult<PathBuf> {
    let path = ctx.cfg.out.join(name);
    io::write_json(&path, value)?;
    sidecar(ctx, &path, kind, serde_json::Value::Null)?;
    Ok(path)
}

fn ensemble(ctx: &Context, generator: &ProcessGenerator) -> AppResult<Vec<SamplePath>> {
    let cfg = &ctx.cfg;
    match &cfg.input {
        Some(dir) => {
            let files = io::list_paths(dir)?;
            let paths: Vec<SamplePath> = files
                .iter()
                .enumerate()
                .map(|(r, f)| io::read_path(f, generator.id(), cfg.seed, r as u64))
                .collect::<AppResult<_>>()?;
            if let Some(p) = paths.iter().find(|p| p.dim() != generator.dimension()) {
                return Err(AppError::Format {
                    path: dir.clone(),
                    message: format!(
                        "path dimension {} differs from generator dimension {}",
                        p.dim(),
                        generator.dimension()
                    ),
                });
            }
            Ok(paths)
        }
        None => Ok(simulate_ensemble(
            generator,
            cfg.n,
            cfg.replicates,
            cfg.seed,
        )?),
    }
}

fn model_for(ctx: &Context, generator: &ProcessGenerator) -> AppResult<DistributionModel> {
    Ok(generator.calibrated_model(ctx.cfg.calibration_size, ctx.cfg.seed)?)
}

/// Decay rate of the configured observable, when the envelope fit finds one.
fn mixing_report(
    ctx: &Context,
    generator: &ProcessGenerator,
    values: &[Vec<f64>],
) -> AppResult<MixingReport> {
    let len = values.iter().map(Vec::len).min().unwrap_or(0);
    let gaps: Vec<usize> = ctx.cfg.gaps.iter().copied().filter(|g| *g < len).collect();
    if gaps.len() < MIN_GAPS {
        return Err(AppError::Config(format!(
            "mixing needs at least {MIN_GAPS} gaps below the path length"
        )));
    }
    let covs = lag_covariances(values, &gaps)?;
    let degree = match generator {
        ProcessGenerator::Torus { automorphism, .. } => {
            DegreeChoice::Fixed(automorphism.jordan_exponent)
        }
        _ => DegreeChoice::Select,
    };
    Ok(fit_mixing_envelope(&gaps, &covs, degree)?)
}

fn fitted_theta(r: &MixingReport) -> Option<f64> {
    r.theta
        .filter(|_| r.status == MixingStatus::Fitted && r.decays)
}

pub fn validate_matrix(ctx: &Context, matrix: Option<&str>) -> Outcome {
    let m: Vec<Vec<i64>> = match matrix {
        Some(text) => {
            serde_json::from_str(text).map_err(|e| AppError::Usage(format!("--matrix: {e}")))?
        }
        None => match &ctx.cfg.generator {
            GeneratorSpec::Torus { matrix, .. } => matrix.clone(),
            GeneratorSpec::CatMap {} => vec![vec![2, 1], vec![1, 1]],
            _ => {
                return Err(AppError::Usage(
                    "validate-matrix needs --matrix or a torus generator".into(),
                ))
            }
        },
    };
    let t = validate_torus(&m)?;
    let out = json!({
        "matrix": t.matrix,
        "ergodic": t.is_ergodic,
        "hyperbolic": t.is_ergodic && t.class == empiproc_core::generators::TorusClass::Hyperbolic,
        "class": t.class.to_string(),
        "det_sign": t.det_sign,
        "eigen_moduli": t.eigen_moduli,
        "cyclotomic_factors": t.cyclotomic_factors,
        "jordan_exponent": t.jordan_exponent,
        "jordan_exact": t.jordan_exact,
        "expansion_rate": t.expansion_rate,
    });
    println!("{}", serde_json::to_string(&out).expect("json"));
    emit(ctx, "validate.json", "validate-matrix", &out)?;
    Ok(None)
}

pub fn simulate(ctx: &Context) -> Outcome {
    let g = ctx.cfg.generator()?;
    let paths = simulate_ensemble(&g, ctx.cfg.n, ctx.cfg.replicates, ctx.cfg.seed)?;
    let dir = ctx.cfg.out.join("paths");
    io::ensure_dir(&dir)?;
    let mut files = Vec::with_capacity(paths.len());
    for p in &paths {
        let file = dir.join(format!(
            "path_{:05}.{}",
            p.replicate_id,
            ctx.cfg.format.extension()
        ));
        io::write_path(&file, p, ctx.cfg.format)?;
        sidecar(
            ctx,
            &file,
            "path",
            json!({ "generator": g.id(), "n": p.len(), "d": p.dim(), "replicate": p.replicate_id, "metadata": p.metadata }),
        )?;
        files.push(
            file.file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string(),
        );
    }
    emit(
        ctx,
        "simulate.json",
        "simulate",
        &json!({ "generator": g, "n": ctx.cfg.n, "replicates": paths.len(), "files": files }),
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct EmpiricalRow {
    replicate: u64,
    sup_un_grid: f64,
    sup_un_minus_unm: f64,
    sandwich_violations: u64,
}

pub fn empirical(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg;
    let g = cfg.generator()?;
    let model = model_for(ctx, &g)?;
    let grid = cfg.grid.build(g.dimension())?;
    let partition = build_partition(&model, cfg.m)?;
    let paths = ensemble(ctx, &g)?;
    let rows: Vec<EmpiricalRow> = map_replicates(&paths, |p| {
        let field = empirical_process(p, &grid, &model)?;
        let approx = approx_process(p, &partition, &model)?;
        let sandwich = check_approx_sandwich(p, &approx)?;
        let dev = sup_deviations(p, &model, &[&approx])?;
        Ok(EmpiricalRow {
            replicate: p.replicate_id,
            sup_un_grid: field.un.sup_abs(),
            sup_un_minus_unm: dev[0],
            sandwich_violations: sandwich.violations as u64,
        })
    })?;
    let first = empirical_process(&paths[0], &grid, &model)?;
    let field_path = cfg.out.join("field_00000.csv");
    io::write_grid_csv(
        &field_path,
        &grid,
        &[
            ("Fn", first.fn_values.values()),
            ("F", first.f_values.values()),
            ("Un", first.un.values()),
        ],
    )?;
    sidecar(
        ctx,
        &field_path,
        "empirical-field",
        json!({ "n": first.n, "seed": cfg.seed, "model": model.kind(), "m": cfg.m }),
    )?;
    let devs: Vec<f64> = rows.iter().map(|r| r.sup_un_minus_unm).collect();
    let violations: u64 = rows.iter().map(|r| r.sandwich_violations).sum();
    emit(
        ctx,
        "empirical.json",
        "empirical",
        &json!({
            "m": cfg.m,
            "h": partition.h(),
            "model": model.kind(),
            "replicates": rows,
            "median_sup_un_minus_unm": median(&devs),
            "sandwich_violations": violations,
        }),
    )?;
    if violations > 0 {
        return Err(AppError::Check(format!(
            "{violations} partition sandwich violations"
        )));
    }
    Ok(None)
}

pub fn chain_check(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg;
    let g = cfg.generator()?;
    let (model, modulus) = model_for(ctx, &g)?.fit_modulus(&MODULUS_DELTAS)?;
    let partition = build_partition(&model, cfg.m)?;
    let paths = ensemble(ctx, &g)?;
    let n = paths[0].len();
    let (sys, schedule) =
        ChainingSystem::for_sample_size(&model, partition, n, cfg.alpha, cfg.epsilon)?;
    if let Some(w) = schedule.warning() {
        eprintln!("warning: {w}");
    }
    let d = g.dimension();
    let mut ts: Vec<Point> = paths[0]
        .rows()
        .map(|r| Point::new(r.to_vec()))
        .collect::<Result<_, _>>()?;
    let mut rng = stream(cfg.seed, 1, lane::MONTE_CARLO);
    let mut x = vec![0.0; d];
    for _ in 0..cfg.t_samples {
        model.sample_into(&mut rng, &mut x);
        ts.push(Point::new(x.clone())?);
    }
    let sandwich = verify_sandwich(&sys, &paths[0], &ts)?;
    let m = cfg.m;
    let mut increments = Vec::new();
    for k in 1..=sys.depth() {
        let per = 1u64 << k;
        let picks: [(Vec<usize>, Vec<u64>); 3] = [
            (vec![2.min(m); d], vec![per / 2; d]),
            (vec![1; d], vec![1; d]),
            (vec![m; d], vec![per + 1; d]),
        ];
        for (cell, l) in picks {
            for r in [1.0, 2.0] {
                increments.push(increment_norm_check(
                    &sys,
                    &model,
                    k,
                    &cell,
                    &l,
                    r,
                    cfg.increment_draws,
                    cfg.seed,
                )?);
            }
        }
    }
    let top = sys.depth();
    let top_l = vec![(1u64 << top) / 2; d];
    for r in [1.0, 2.0] {
        increments.push(top_increment_check(
            &sys,
            &model,
            &vec![2.min(m); d],
            &top_l,
            r,
            cfg.increment_draws,
            cfg.seed,
        )?);
    }
    let growth = (0..=sys.depth())
        .map(|k| holder_growth_check(&sys, k))
        .collect::<Result<Vec<_>, _>>()?;
    let failed = increments.iter().filter(|r| !r.pass).count();
    emit(
        ctx,
        "chain_check.json",
        "chain-check",
        &json!({
            "schedule": schedule,
            "modulus": modulus,
            "sandwich": {
                "check": "sandwich",
                "parameters": { "depth": sys.depth(), "m": m, "t_points": sandwich.t_points, "x_points": sandwich.x_points },
                "violations": sandwich.total_violations(),
                "worst_slack": sandwich.worst_slack,
                "detail": sandwich,
            },
            "increments": increments,
            "growth": growth,
        }),
    )?;
    if sandwich.total_violations() > 0 {
        return Err(AppError::Check(format!(
            "{} chain sandwich violations",
            sandwich.total_violations()
        )));
    }
    Ok((failed > 0).then(|| format!("{failed} increment-norm checks above bound + 3 stderr")))
}

pub fn mixing(ctx: &Context) -> Outcome {
    let g = ctx.cfg.generator()?;
    let model = model_for(ctx, &g)?;
    let f = observable(&ctx.cfg, &g, &model)?;
    let paths = ensemble(ctx, &g)?;
    let values = evaluate_ensemble(&f, &paths)?;
    let report = mixing_report(ctx, &g, &values)?;
    let rows: Vec<Vec<String>> = report
        .gaps
        .iter()
        .zip(report.estimates.iter().zip(&report.stderrs))
        .map(|(k, (e, s))| vec![k.to_string(), g17(*e), g17(*s)])
        .collect();
    let table = ctx.cfg.out.join("mixing.csv");
    io::write_table(&table, &["gap", "estimate", "stderr"], &rows)?;
    sidecar(ctx, &table, "mixing-table", serde_json::Value::Null)?;
    emit(
        ctx,
        "mixing.json",
        "mixing",
        &json!({ "observable": f, "report": report }),
    )?;
    let failed = report.status == MixingStatus::Fitted && !report.decays;
    Ok(failed.then(|| "fitted decay rate is not below 1 at 95%".to_string()))
}

pub fn moments(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg;
    if cfg.input.is_none() && cfg.replicates < MIN_MOMENT_REPLICATES {
        return Err(AppError::Config(format!(
            "moments needs at least {MIN_MOMENT_REPLICATES} replicates"
        )));
    }
    let g = cfg.generator()?;
    let model = model_for(ctx, &g)?;
    let f = observable(cfg, &g, &model)?;
    let paths = ensemble(ctx, &g)?;
    let values = evaluate_ensemble(&f, &paths)?;
    let len = paths[0].len();
    let n_grid: Vec<usize> = cfg.n_grid.iter().copied().filter(|n| *n <= len).collect();
    let theta = mixing_report(ctx, &g, &values)
        .ok()
        .as_ref()
        .and_then(fitted_theta);
    let r_norm = summarize(&values, cfg.r)?.r_norm;
    let shape = theta.map(|theta| BoundShape {
        norm: f.norm(),
        r_norm,
        theta,
    });
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &p in &cfg.p {
        let rep = partial_sum_moments(&values, &n_grid, p, shape)?;
        for (i, n) in rep.n_grid.iter().enumerate() {
            let bound = rep
                .bound_shape
                .as_ref()
                .map(|b| g17(b[i]))
                .unwrap_or_default();
            rows.push(vec![
                n.to_string(),
                p.to_string(),
                g17(rep.even[i].estimate),
                g17(rep.even[i].stderr),
                bound,
            ]);
        }
        reports.push(rep);
    }
    let table = cfg.out.join("moments.csv");
    io::write_table(&table, &["n", "p", "estimate", "stderr", "bound"], &rows)?;
    sidecar(ctx, &table, "moments-table", serde_json::Value::Null)?;
    emit(
        ctx,
        "moments.json",
        "moments",
        &json!({ "observable": f, "theta": theta, "r_norm": r_norm, "reports": reports }),
    )?;
    let bad: Vec<u32> = reports
        .iter()
        .filter(|r| !r.growth_ok)
        .map(|r| r.p)
        .collect();
    Ok((!bad.is_empty()).then(|| format!("moment growth above p + tolerance for p in {bad:?}")))
}

fn lag_for(
    ctx: &Context,
    g: &ProcessGenerator,
    model: &DistributionModel,
    paths: &[SamplePath],
) -> AppResult<usize> {
    if let Some(l) = ctx.cfg.lag {
        return Ok(l);
    }
    let f = observable(&ctx.cfg, g, model)?;
    let values = evaluate_ensemble(&f, paths)?;
    let theta = mixing_report(ctx, g, &values)
        .ok()
        .as_ref()
        .and_then(fitted_theta);
    Ok(default_lag(paths[0].len(), theta))
}

pub fn limit(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg;
    let g = cfg.generator()?;
    let model = model_for(ctx, &g)?;
    let grid = cfg.grid.build(g.dimension())?;
    let paths = ensemble(ctx, &g)?;
    let lag = lag_for(ctx, &g, &model, &paths)?;
    let lm = estimate_gamma(&paths, &grid, lag, cfg.taper)?;
    let gamma_path = cfg.out.join("gamma.csv");
    io::write_gamma_csv(&gamma_path, &lm)?;
    sidecar(
        ctx,
        &gamma_path,
        "gamma",
        json!({ "vertices": lm.vertices(), "lag": lag }),
    )?;
    emit(
        ctx,
        "gamma.json",
        "gamma-header",
        &json!({
            "grid": lm.grid,
            "vertices": lm.vertices(),
            "lag": lm.lag,
            "taper": lm.taper,
            "replicates": lm.replicates,
            "n": lm.n,
            "min_eigenvalue": lm.min_eigenvalue,
            "psd_repair": lm.psd_repair,
            "factor_error": lm.factor_error,
        }),
    )?;
    for (i, w) in sample_w(&lm, cfg.w_samples, cfg.seed).iter().enumerate() {
        let p = cfg.out.join(format!("w_{i:05}.csv"));
        io::write_grid_csv(&p, &grid, &[("W", w)])?;
        sidecar(ctx, &p, "limit-field", json!({ "index": i }))?;
    }
    Ok(None)
}

pub fn fidi(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg;
    if cfg.input.is_none() && cfg.replicates < MIN_FIDI_REPLICATES {
        return Err(AppError::Config(format!(
            "fidi needs at least {MIN_FIDI_REPLICATES} replicates"
        )));
    }
    let g = cfg.generator()?;
    let model = model_for(ctx, &g)?;
    let points: Vec<Point> = cfg
        .fidi_points(&model)?
        .into_iter()
        .map(Point::new)
        .collect::<Result<_, _>>()?;
    let directions = cfg.fidi_directions(points.len())?;
    let paths = ensemble(ctx, &g)?;
    let lag = lag_for(ctx, &g, &model, &paths)?;
    let samples = map_replicates(&paths, |p| process_at_points(p, &model, &points))?;
    let gamma = gamma_at_points(&paths, &points, lag, cfg.taper)?;
    let report = fidi_normality(&samples, &points, &directions, &gamma, cfg.level)?;
    let k = points.len();
    let point_variance: Vec<f64> = (0..k)
        .map(|i| variance(&samples.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect();
    emit(
        ctx,
        "fidi.json",
        "fidi",
        &json!({ "lag": lag, "gamma": gamma, "point_variance": point_variance, "report": report }),
    )?;
    Ok((!report.pass).then(|| "normality rejected after Bonferroni correction".to_string()))
}

pub fn report(ctx: &Context) -> Outcome {
    let dir = &ctx.cfg.out;
    if !dir.is_dir() {
        return Err(AppError::MissingInput(dir.clone()));
    }
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".json") && !name.ends_with(".meta.json") && name != "summary.json"
        })
        .collect();
    names.sort();
    let mut artifacts = serde_json::Map::new();
    for p in &names {
        let text = io::read_to_string(p)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| AppError::Format {
                path: p.clone(),
                message: e.to_string(),
            })?;
        let stem = p
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        artifacts.insert(stem, value);
    }
    emit(
        ctx,
        "summary.json",
        "report",
        &json!({ "config": ctx.cfg, "config_hash": ctx.hash, "artifacts": artifacts }),
    )?;
    Ok(None)
}
