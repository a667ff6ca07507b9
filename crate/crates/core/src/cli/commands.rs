use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::store::{budget_dir, budgets, layout_path, read_cav_dir, CavIndexEntry};
use super::{
    parse_timesteps, write_file, CliError, CompareArgs, Output, ReportArgs, RunConfig, ScoreArgs,
};
use crate::analysis::{
    compare_formulations, comparison_summary_csv, score_across_timesteps, ComparisonReport,
    ScoreTable,
};
use crate::grid::{apply_case, load_network, load_timeseries, LoadCase, Network};
use crate::interdiction::{enumerate_cavs, solve_worst_case, CavEntry, CavList};
use crate::opf::{build_interdiction_mip, parametric, Model};

/// Network of every selected step, in step order.
fn steps(cfg: &RunConfig) -> Result<Vec<(usize, Network)>, CliError> {
    let base = load_network(&cfg.grid)?;
    let cases = match &cfg.timeseries {
        Some(path) => load_timeseries(path, &base)?,
        None => vec![LoadCase::unit(&base, 1)],
    };
    let chosen = match &cfg.timesteps {
        Some(spec) => parse_timesteps(spec)?,
        None => (1..=cases.len()).collect(),
    };
    chosen
        .into_iter()
        .map(|t| {
            let case = cases.get(t - 1).ok_or_else(|| {
                CliError::Config(format!(
                    "time step {t} is out of range (the series has {} steps)",
                    cases.len()
                ))
            })?;
            Ok((t, apply_case(&base, case)?))
        })
        .collect()
}

fn pool<T: Send>(cfg: &RunConfig, work: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(work))
}

fn dump_models(cfg: &RunConfig, nets: &[(usize, Network)]) -> Result<(), CliError> {
    let dir = cfg.out.join("models");
    for (t, net) in nets {
        let stem = format!("{}_Z{}_t{t}", cfg.model, cfg.budget);
        let im =
            build_interdiction_mip(net, cfg.model, cfg.budget, &cfg.solver.lac, &cfg.solver.mip)
                .map_err(|e| CliError::Config(e.to_string()))?;
        let binaries: Vec<&str> = im
            .mip
            .binaries
            .iter()
            .map(|&c| im.mip.lp.var_labels[c].as_str())
            .collect();
        let text = format!("binary {}\n{}", binaries.join(" "), im.mip.lp.to_text());
        write_file(&dir.join(format!("{stem}_mip.txt")), &text)?;
        let lower = parametric(net, cfg.model, &cfg.solver.lac)
            .map_err(|e| CliError::Config(e.to_string()))?
            .with_outages(&[]);
        write_file(&dir.join(format!("{stem}_intact.txt")), &lower.to_text())?;
    }
    Ok(())
}

fn begin(cfg: &RunConfig) -> Result<Vec<(usize, Network)>, CliError> {
    let nets = steps(cfg)?;
    write_file(&cfg.out.join("run.json"), &cfg.to_json())?;
    if cfg.dump_models {
        dump_models(cfg, &nets)?;
    }
    Ok(nets)
}

pub fn solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let nets = begin(cfg)?;
    let results: Vec<Result<CavEntry, CliError>> = pool(cfg, || {
        nets.par_iter()
            .map(|(t, net)| {
                info!("solving t={t} ({} Z={})", cfg.model, cfg.budget);
                solve_worst_case(net, cfg.model, cfg.budget, *t, &cfg.solver)
                    .map_err(|source| CliError::Solve { t: *t, source })
            })
            .collect()
    })?;
    let entries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let dir = budget_dir(&cfg.out, cfg.model, cfg.budget);
    let mut limited = Vec::new();
    for e in &entries {
        let mut text = serde_json::to_string_pretty(e).expect("entry serializes");
        text.push('\n');
        write_file(&dir.join(format!("t{}.worst.json", e.t)), &text)?;
        if e.solver_limit {
            limited.push(e.t);
        }
    }
    let mut stdout = serde_json::to_string_pretty(&entries).expect("entries serialize");
    stdout.push('\n');
    Ok(Output { stdout, limited })
}

pub fn enumerate(cfg: &RunConfig) -> Result<Output, CliError> {
    let nets = begin(cfg)?;
    let results: Vec<Result<CavList, CliError>> = pool(cfg, || {
        nets.par_iter()
            .map(|(t, net)| {
                info!("enumerating t={t} ({} Z={})", cfg.model, cfg.budget);
                enumerate_cavs(net, cfg.model, cfg.budget, *t, &cfg.limits, &cfg.solver)
                    .map_err(|source| CliError::Solve { t: *t, source })
            })
            .collect()
    })?;
    let lists = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut index = Vec::new();
    let mut stdout = String::new();
    let mut limited = Vec::new();
    for l in &lists {
        write_file(&layout_path(&cfg.out, l.a, l.budget, l.t), &l.to_jsonl())?;
        let row = CavIndexEntry {
            t: l.t,
            stop: l.stop,
            no_attack_pu: l.no_attack_pu,
            entries: l.entries.len(),
            solver_limit: l.any_solver_limit(),
        };
        if row.solver_limit {
            limited.push(l.t);
        }
        stdout.push_str(&format!(
            "t={} {} Z={} entries={} stop={:?}",
            l.t,
            l.a,
            l.budget,
            l.entries.len(),
            l.stop
        ));
        if let Some(top) = l.entries.first() {
            stdout.push_str(&format!(
                " top={} zeta_mw={}",
                top.attack.key(),
                top.zeta_mw
            ));
        }
        stdout.push('\n');
        index.push(row);
    }
    let mut text = serde_json::to_string_pretty(&index).expect("index serializes");
    text.push('\n');
    write_file(
        &budget_dir(&cfg.out, cfg.model, cfg.budget).join("index.json"),
        &text,
    )?;
    Ok(Output { stdout, limited })
}

fn step_filter(spec: &Option<String>) -> Result<Option<Vec<usize>>, CliError> {
    spec.as_deref().map(parse_timesteps).transpose()
}

fn compare_budget(
    out: &Path,
    budget: usize,
    steps: Option<&[usize]>,
) -> Result<Vec<ComparisonReport>, CliError> {
    let lac = read_cav_dir(out, Model::Lac, budget, steps)?;
    let chosen: Vec<usize> = lac.iter().map(|l| l.t).collect();
    let dc = read_cav_dir(out, Model::Dc, budget, Some(&chosen))?;
    let reports = lac
        .iter()
        .zip(&dc)
        .map(|(l, d)| compare_formulations(l, d))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = out.join("reports").join(format!("compare_Z{budget}"));
    for r in &reports {
        write_file(&dir.join(format!("t{}.json", r.t)), &(r.to_json() + "\n"))?;
        write_file(&dir.join(format!("t{}.csv", r.t)), &r.to_csv()?)?;
    }
    write_file(
        &out.join("reports")
            .join(format!("compare_Z{budget}_summary.csv")),
        &comparison_summary_csv(&reports)?,
    )?;
    Ok(reports)
}

fn common_budgets(out: &Path) -> Vec<usize> {
    let dc = budgets(out, Model::Dc);
    budgets(out, Model::Lac)
        .into_iter()
        .filter(|b| dc.contains(b))
        .collect()
}

pub fn compare(args: &CompareArgs) -> Result<Output, CliError> {
    let steps = step_filter(&args.timesteps)?;
    let chosen = match args.budget {
        Some(b) => vec![b],
        None => common_budgets(&args.out),
    };
    if chosen.is_empty() {
        return Err(CliError::Config(format!(
            "no budget under {} has both lac and dc lists",
            args.out.display()
        )));
    }
    let mut stdout = String::new();
    for b in chosen {
        let reports = compare_budget(&args.out, b, steps.as_deref())?;
        stdout.push_str(&comparison_summary_csv(&reports)?);
    }
    Ok(Output::text(stdout))
}

fn score_one(
    out: &Path,
    model: Model,
    budget: usize,
    steps: Option<&[usize]>,
    top: usize,
) -> Result<(ScoreTable, String), CliError> {
    let lists = read_cav_dir(out, model, budget, steps)?;
    let table = score_across_timesteps(&lists)?;
    let reports = out.join("reports");
    write_file(
        &reports.join(format!("score_{model}_Z{budget}.json")),
        &(table.to_json() + "\n"),
    )?;
    let csv = table.top_by_objective_csv(Some(top))?;
    write_file(&reports.join(format!("top_{model}_Z{budget}.csv")), &csv)?;
    Ok((table, csv))
}

pub fn score(args: &ScoreArgs) -> Result<Output, CliError> {
    let steps = step_filter(&args.timesteps)?;
    let (_, csv) = score_one(
        &args.out,
        args.model,
        args.budget,
        steps.as_deref(),
        args.top,
    )?;
    Ok(Output::text(csv))
}

#[derive(Serialize)]
struct ComparisonKpis {
    budget: usize,
    steps: usize,
    n_reference: usize,
    undetected: usize,
    mean_u: f64,
    undetected_mw: f64,
    underestimated_mw: f64,
}

#[derive(Serialize)]
struct ScoreKpis {
    model: Model,
    budget: usize,
    steps: usize,
    attacks: usize,
    top_by_objective: Vec<String>,
    top_by_rank: Vec<String>,
}

#[derive(Serialize)]
struct Summary {
    comparisons: Vec<ComparisonKpis>,
    scores: Vec<ScoreKpis>,
}

pub fn report(args: &ReportArgs) -> Result<Output, CliError> {
    let mut summary = Summary {
        comparisons: Vec::new(),
        scores: Vec::new(),
    };
    for b in common_budgets(&args.out) {
        let reports = compare_budget(&args.out, b, None)?;
        let steps = reports.len();
        summary.comparisons.push(ComparisonKpis {
            budget: b,
            steps,
            n_reference: reports.iter().map(|r| r.n_reference).sum(),
            undetected: reports.iter().map(|r| r.undetected).sum(),
            mean_u: if steps == 0 {
                0.0
            } else {
                reports.iter().map(|r| r.u).sum::<f64>() / steps as f64
            },
            undetected_mw: reports.iter().map(|r| r.undetected_mw).sum(),
            underestimated_mw: reports.iter().map(|r| r.underestimated_mw).sum(),
        });
    }
    for model in [Model::Dc, Model::Lac] {
        for b in budgets(&args.out, model) {
            let (table, _) = score_one(&args.out, model, b, None, args.top)?;
            summary.scores.push(ScoreKpis {
                model,
                budget: b,
                steps: table.steps,
                attacks: table.rows.len(),
                top_by_objective: table.by_objective.iter().take(args.top).cloned().collect(),
                top_by_rank: table.by_rank.iter().take(args.top).cloned().collect(),
            });
        }
    }
    if summary.comparisons.is_empty() && summary.scores.is_empty() {
        return Err(CliError::Config(format!(
            "no enumeration output under {}",
            args.out.display()
        )));
    }
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_file(&args.out.join("reports").join("summary.json"), &text)?;
    Ok(Output::text(text))
}
