//! One function per subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;
use uc_screen_core::experiments::{metrics_csv, predictions_csv, solve_region_samples, METRICS_HEADER};
use uc_screen_core::lp::to_lp_format;
use uc_screen_core::milp::{solve_milp_with, MilpOptions};
use uc_screen_core::screening::reduce_instance;
use uc_screen_core::{
    build_formulation, knn_screen, load_case, mlp_train, run_pga, screen_all_or_keep, CostBound,
    Dataset, Error, ExperimentSpec, KnnRule, LoadRegion, LoadVector, MlpModel, NetworkCase, PgaConfig,
    ScreeningContext, ScreeningReport, UcInstance, UcSolution,
};

use crate::config::{CostBoundArg, ModeArg, RunConfig};
use crate::manifest::Manifest;
use crate::{usage, CaseAction, Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let merge = |flags: RunConfig| flags.over(file.clone());
    match cli.command {
        Command::Case {
            action: CaseAction::Validate { path },
        } => case_validate(&path),
        Command::Datagen(f) => datagen(merge(f)),
        Command::Train(f) => train(merge(f)),
        Command::PgaBound(f) => pga_bound(merge(f)),
        Command::Screen(f) => screen(merge(f)),
        Command::Solve(f) => solve(merge(f)),
        Command::Eval(f) => eval(merge(f)),
        Command::Report(f) => report(merge(f)),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Parse(format!("{what} {}: {e}", path.display())).into())
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn need<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value.clone().ok_or_else(|| usage(format!("missing required option --{flag}")))
}

fn case_from(path: &Path) -> Result<NetworkCase> {
    load_case(&read(path)?).with_context(|| format!("case {}", path.display()))
}

fn region_from(cfg: &RunConfig, case: &NetworkCase) -> Result<LoadRegion> {
    let level = cfg.level.unwrap_or_else(|| case.nominal_load.total());
    Ok(LoadRegion::new(case.nominal_load.clone(), cfg.range.unwrap_or(0.0), level)?)
}

fn load_from(cfg: &RunConfig, case: &NetworkCase) -> Result<LoadVector> {
    match &cfg.load {
        Some(path) => {
            let values: Vec<f64> = read_json(path, "load")?;
            Ok(LoadVector::new(values)?)
        }
        None => Ok(case.nominal_load.clone()),
    }
}

fn manifest(command: &str, cfg: &RunConfig, seeds: serde_json::Value) -> Result<Manifest> {
    let mut m = Manifest::new(command, cfg, seeds)?;
    for path in [&cfg.case, &cfg.data, &cfg.model, &cfg.load, &cfg.screen, &cfg.spec, &cfg.results]
        .into_iter()
        .flatten()
    {
        m = m.input(path)?;
    }
    Ok(m)
}

fn case_validate(path: &Path) -> Result<()> {
    let case = case_from(path)?;
    println!("OK, n={} m={}", case.n_buses(), case.n_lines());
    Ok(())
}

fn datagen(cfg: RunConfig) -> Result<()> {
    let case = case_from(&need(&cfg.case, "case")?)?;
    let out = need(&cfg.out, "out")?;
    let count = need(&cfg.count, "count")?;
    let seed = cfg.seed.unwrap_or(0);
    let region = region_from(&cfg, &case)?;
    let form = build_formulation(&case)?;
    let samples = solve_region_samples(&form, &region, count, seed)?
        .into_iter()
        .map(|s| s.sample)
        .collect();
    let ds = Dataset {
        samples,
        seed: Some(seed),
        region: Some(region),
    };
    write(&out, &ds.to_jsonl())?;
    manifest("datagen", &cfg, json!({ "seed": seed }))?.write(&[&out])?;
    println!("wrote {} samples to {}", ds.len(), out.display());
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let samples = Dataset::parse_jsonl(&read(path)?).with_context(|| format!("dataset {}", path.display()))?;
    Ok(Dataset::from_samples(samples))
}

fn train(cfg: RunConfig) -> Result<()> {
    let ds = read_dataset(&need(&cfg.data, "data")?)?;
    let out = need(&cfg.out, "out")?;
    let mut tc = cfg.train.clone().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        tc.seed = seed;
    }
    let (model, report) = mlp_train(&ds, &tc)?;
    write(&out, &(serde_json::to_string(&model)? + "\n"))?;
    let report_path = sibling(&out, "report.json");
    write(&report_path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    manifest("train", &cfg, json!({ "seed": tc.seed }))?.write(&[&out, &report_path])?;
    println!(
        "trained on {} samples; held-out mean relative error {:.4}% after {} epochs",
        report.n_train,
        100.0 * report.val_relative_error,
        report.epochs
    );
    Ok(())
}

/// `results.csv` + `predictions.csv` → `results.predictions.csv`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn read_model(path: &Path) -> Result<MlpModel> {
    let model: MlpModel = read_json(path, "model")?;
    model.check()?;
    Ok(model)
}

fn pga_config(cfg: &RunConfig) -> PgaConfig {
    let mut pc = cfg.pga.clone().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        pc.seed = seed;
    }
    pc
}

fn pga_bound(cfg: RunConfig) -> Result<()> {
    let case = case_from(&need(&cfg.case, "case")?)?;
    let model = read_model(&need(&cfg.model, "model")?)?;
    let out = need(&cfg.out, "out")?;
    let region = region_from(&cfg, &case)?;
    let pc = pga_config(&cfg);
    let result = run_pga(&model, &region, &pc)?;
    write(&out, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    manifest("pga-bound", &cfg, json!({ "seed": pc.seed }))?.write(&[&out])?;
    println!("cost bound {:.6} after {} iterates", result.bound, result.iterates);
    Ok(())
}

fn screen(cfg: RunConfig) -> Result<()> {
    let case = case_from(&need(&cfg.case, "case")?)?;
    let out = need(&cfg.out, "out")?;
    let form = build_formulation(&case)?;
    let mode = cfg.mode.unwrap_or(ModeArg::Aware);
    let epsilon = cfg.epsilon.unwrap_or(0.0);

    if let Some(k) = cfg.k {
        if mode != ModeArg::Aware {
            return Err(usage("--k screens a single load; use --mode aware"));
        }
        let ds = read_dataset(&need(&cfg.data, "data")?)?;
        let load = load_from(&cfg, &case)?;
        let kept = knn_screen(&ds, load.as_slice(), k, KnnRule::Union)?;
        let body = json!({ "load": load, "k": k, "kept": kept });
        write(&out, &(serde_json::to_string_pretty(&body)? + "\n"))?;
        manifest("screen", &cfg, json!({}))?.write(&[&out])?;
        println!("knn{k}: kept {} of {} bound-sides", kept.iter().filter(|k| **k).count(), kept.len());
        return Ok(());
    }

    let mut seeds = json!({});
    let ctx = match mode {
        ModeArg::Aware => {
            let load = load_from(&cfg, &case)?;
            let mut ctx = ScreeningContext::sample_aware(load.clone());
            if cfg.cost_bound == Some(CostBoundArg::Nn) {
                let model = read_model(&need(&cfg.model, "model")?)?;
                let pred = model.predict(load.as_slice())?.max(0.0);
                ctx = ctx.with_cost_bound(CostBound::new(pred, epsilon)?);
            }
            ctx
        }
        ModeArg::Agnostic => {
            let region = region_from(&cfg, &case)?;
            let mut ctx = ScreeningContext::sample_agnostic(region.clone());
            if cfg.cost_bound == Some(CostBoundArg::Nn) {
                let model = read_model(&need(&cfg.model, "model")?)?;
                let pc = pga_config(&cfg);
                seeds = json!({ "pga": pc.seed });
                let bound = run_pga(&model, &region, &pc)?.bound.max(0.0);
                ctx = ctx.with_cost_bound(CostBound::new(bound, epsilon)?);
            }
            ctx
        }
    };
    let rep = screen_all_or_keep(&form, &ctx)?;
    write(&out, &(serde_json::to_string_pretty(&rep)? + "\n"))?;
    manifest("screen", &cfg, seeds)?.write(&[&out])?;
    println!(
        "removed {:.2}% of bound-sides ({} lines fully removed){}",
        100.0 * rep.pct_reduced,
        rep.verdicts.iter().filter(|v| v.upper_redundant && v.lower_redundant).count(),
        if rep.fallback_lines().is_empty() {
            String::new()
        } else {
            format!("; kept infeasible lines {:?}", rep.fallback_lines())
        }
    );
    Ok(())
}

fn solve(cfg: RunConfig) -> Result<()> {
    let case = case_from(&need(&cfg.case, "case")?)?;
    let form = build_formulation(&case)?;
    let load = load_from(&cfg, &case)?;
    let instance = UcInstance::new(form.clone(), load)?;
    let problem = match &cfg.screen {
        Some(path) => {
            let rep: ScreeningReport = read_json(path, "screening report")?;
            reduce_instance(&instance, &rep)?
        }
        None => instance.assemble()?,
    };
    if let Some(path) = &cfg.lp_export {
        write(path, &to_lp_format(&problem.base, &problem.binary_vars))?;
    }
    let opts = MilpOptions {
        node_limit: cfg.node_limit.unwrap_or(MilpOptions::default().node_limit),
    };
    let (milp_sol, stats) = solve_milp_with(&problem, &opts)?;
    let sol = UcSolution::from_milp(&form, &milp_sol);
    if !sol.is_optimal() {
        return Err(anyhow::anyhow!("no feasible commitment: {:?}", sol.status));
    }
    println!(
        "cost {:.6}; {} units on; {} nodes in {:.3}s",
        sol.cost,
        sol.u.iter().filter(|u| **u).count(),
        stats.nodes_explored,
        stats.wall_time
    );
    let mut outputs: Vec<PathBuf> = Vec::new();
    if let Some(out) = &cfg.out {
        let body = json!({
            "solution": sol,
            "line_flows": form.line_flows(&sol.f),
            "nodes_explored": stats.nodes_explored,
        });
        write(out, &(serde_json::to_string_pretty(&body)? + "\n"))?;
        outputs.push(out.clone());
    }
    if let Some(path) = &cfg.lp_export {
        outputs.push(path.clone());
    }
    if !outputs.is_empty() {
        let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
        manifest("solve", &cfg, json!({}))?.write(&refs)?;
    }
    Ok(())
}

fn eval(cfg: RunConfig) -> Result<()> {
    let spec_path = need(&cfg.spec, "spec")?;
    let out = need(&cfg.out, "out")?;
    let mut spec: ExperimentSpec = read_json(&spec_path, "experiment spec")?;
    if let Some(eps) = cfg.epsilon {
        spec.epsilon = eps;
    }
    if let Some(level) = cfg.level {
        spec.load_level = Some(level);
    }
    if let Some(train) = &cfg.train {
        spec.train = train.clone();
    }
    if let Some(pga) = &cfg.pga {
        spec.pga = pga.clone();
    }
    spec.check()?;
    let case_path = match &cfg.case {
        Some(p) => p.clone(),
        None => spec_path.parent().unwrap_or(Path::new(".")).join(&spec.case),
    };
    let case = case_from(&case_path)?;
    let model = cfg.model.as_deref().map(read_model).transpose()?;
    let ev = uc_screen_core::experiments::evaluate_with_model(&case, &spec, model)?;

    write(&out, &metrics_csv(&ev.rows, true))?;
    let pred = sibling(&out, "predictions.csv");
    write(&pred, &predictions_csv(&ev.predictions))?;
    let details = sibling(&out, "details.json");
    write(&details, &(serde_json::to_string(&ev)? + "\n"))?;
    let mut m = manifest("eval", &cfg, serde_json::to_value(&spec.seeds)?)?;
    m.config = json!({ "flags": m.config, "spec": spec });
    m.config_hash = crate::manifest::sha256_hex(serde_json::to_string(&m.config)?.as_bytes());
    m.input(&case_path)?.write(&[&out, &pred, &details])?;
    print!("{}", render_table(&metrics_csv(&ev.rows, true))?);
    Ok(())
}

fn render_table(csv_text: &str) -> Result<String> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != METRICS_HEADER {
        return Err(Error::Parse(format!("unexpected metrics header {:?}", header.join(","))).into());
    }
    let mut rows = vec![header];
    for rec in reader.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r.get(c).map_or(0, String::len)).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
            out.push('\n');
        }
    }
    Ok(out)
}

fn report(cfg: RunConfig) -> Result<()> {
    let results = need(&cfg.results, "results")?;
    let table = render_table(&read(&results)?).with_context(|| format!("results {}", results.display()))?;
    match &cfg.out {
        Some(out) => {
            write(out, &table)?;
            manifest("report", &cfg, json!({}))?.write(&[out])?;
        }
        None => print!("{table}"),
    }
    Ok(())
}
