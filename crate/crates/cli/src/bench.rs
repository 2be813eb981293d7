use std::io::{self, Write};

use anyhow::{anyhow, bail, Result};
use serde::Serialize;

use symstat::oracle::{aggregate, run_trials, RoundingSummary, Summary, TrialConfig};
use symstat::{GroupSpec, Metric, Mode, RoundingParams};

use crate::{write_json, BenchArgs};

#[derive(Debug, Serialize)]
struct Row {
    group: String,
    metric: Metric,
    mode: Mode,
    n: usize,
    completed: usize,
    failures: usize,
    first_failure: Option<String>,
    summary: Option<Summary>,
}

#[derive(Debug, Serialize)]
struct Report {
    table: u8,
    trials: usize,
    seed: u64,
    m: usize,
    c: f64,
    sweep: Vec<(usize, f64)>,
    rows: Vec<Row>,
}

const ALL_GROUPS: [GroupSpec; 7] = [
    GroupSpec::Cyclic(2),
    GroupSpec::Cyclic(7),
    GroupSpec::Dihedral(2),
    GroupSpec::Dihedral(7),
    GroupSpec::Tetrahedral,
    GroupSpec::Octahedral,
    GroupSpec::Icosahedral,
];

fn parse_sweep(items: &[String]) -> Result<Vec<RoundingParams>> {
    let items: Vec<String> = if items.is_empty() {
        ["12:0.99", "4:0.99", "20:0.5", "20:0"].iter().map(|s| s.to_string()).collect()
    } else {
        items.to_vec()
    };
    items
        .iter()
        .map(|s| {
            let (m, c) = s
                .split_once(':')
                .ok_or_else(|| anyhow!("sweep point `{s}` is not of the form m:c"))?;
            Ok(RoundingParams::new(m.trim().parse()?, c.trim().parse()?)?)
        })
        .collect()
}

fn pct(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{:.1}%", 100.0 * v))
}

fn pair(r: Option<&RoundingSummary>) -> String {
    r.map_or("-".into(), |r| {
        format!("({:.1}%, {:.2}%)", 100.0 * r.accuracy, 100.0 * r.max_rcg)
    })
}

pub fn run(a: &BenchArgs) -> Result<()> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let rounding = a.tuning.rounding()?;
    let solver = a.tuning.solver()?;
    let table = a.table;
    let sweep = if table == 4 { parse_sweep(&a.sweep)? } else { Vec::new() };
    let groups: Vec<GroupSpec> = match (a.group.is_empty(), table) {
        (false, _) => a.group.clone(),
        (true, 3) => vec![GroupSpec::Cyclic(2), GroupSpec::Cyclic(7)],
        (true, _) => ALL_GROUPS.to_vec(),
    };
    for g in &groups {
        g.validate()?;
        if table == 3 && !g.is_cyclic() {
            bail!("eigenvector rounding needs cyclic groups, got {g}");
        }
    }
    let metrics = match (a.metric.is_empty(), table) {
        (false, _) => a.metric.clone(),
        (true, 1 | 4) => vec![Metric::Arithmetic],
        (true, _) => vec![Metric::Arithmetic, Metric::Geometric],
    };
    let modes = match (a.mode.is_empty(), table) {
        (false, _) => a.mode.clone(),
        (true, 1 | 4) => vec![Mode::Rotation],
        (true, _) => vec![Mode::Rotation, Mode::Projection],
    };

    let mut rows = Vec::new();
    for &group in &groups {
        for &metric in &metrics {
            for &mode in &modes {
                let mut cfg = TrialConfig::new(group, metric, mode);
                cfg.rounding = rounding;
                cfg.solver = solver;
                cfg.n = a.n;
                match table {
                    1 => cfg.exact_loss = true,
                    3 => cfg.singer = true,
                    4 => cfg.extra_rounding = sweep.clone(),
                    5 => {
                        cfg.skip_brute_force = true;
                        cfg.n = Some(a.n.unwrap_or(10));
                    }
                    _ => {}
                }
                log::info!("running {group} {metric} {mode}");
                let results = run_trials(&cfg, a.seed, a.trials)?;
                let mut ok = Vec::new();
                let mut errors = Vec::new();
                for r in results {
                    match r {
                        Ok(rep) => ok.push(rep),
                        Err(e) => errors.push(e.to_string()),
                    }
                }
                let n = ok.first().map_or(cfg.n.unwrap_or(0), |r| r.n);
                rows.push(Row {
                    group: group.to_string(),
                    metric,
                    mode,
                    n,
                    completed: ok.len(),
                    failures: errors.len(),
                    first_failure: errors.into_iter().next(),
                    summary: if ok.is_empty() { None } else { Some(aggregate(&ok)?) },
                });
            }
        }
    }

    let report = Report {
        table,
        trials: a.trials,
        seed: a.seed,
        m: rounding.m,
        c: rounding.c,
        sweep: sweep.iter().map(|p| (p.m, p.c)).collect(),
        rows,
    };
    if let Some(path) = &a.output {
        write_json(path, &report)?;
    }
    print_text(&report)?;
    Ok(())
}

fn print_text(r: &Report) -> Result<()> {
    let mut s = io::stdout().lock();
    writeln!(s, "table {}  trials {}  seed {}  m {}  c {}", r.table, r.trials, r.seed, r.m, r.c)?;
    let header = match r.table {
        1 => "RoE      RCG<0.01  RCG<0.1".to_string(),
        2 => "(Accuracy, max RCG-NUG)  identical".to_string(),
        3 => "greedy                 eigenvector".to_string(),
        4 => r
            .sweep
            .iter()
            .map(|(m, c)| format!("m={m},c={c}"))
            .collect::<Vec<_>>()
            .join("  "),
        _ => "mean seconds".to_string(),
    };
    writeln!(s, "{:<5} {:<6} {:<11} {:>3}  {}", "group", "metric", "mode", "N", header)?;
    for row in &r.rows {
        let body = match &row.summary {
            None => "no completed trials".to_string(),
            Some(sm) => match r.table {
                1 => format!(
                    "{:<8} {:<9} {}",
                    pct(sm.roe),
                    pct(sm.ratio_rcg_below_001),
                    pct(sm.ratio_rcg_below_01)
                ),
                2 => format!(
                    "{:<24} {}",
                    pair(sm.nug.as_ref()),
                    pct(sm.nug.as_ref().map(|n| n.identical))
                ),
                3 => format!("{:<22} {}", pair(sm.nug.as_ref()), pair(sm.singer.as_ref())),
                4 => sm
                    .extra
                    .iter()
                    .map(|e| pair(e.as_ref()))
                    .collect::<Vec<_>>()
                    .join("  "),
                _ => format!("{:.4}", sm.mean_solve_seconds),
            },
        };
        write!(s, "{:<5} {:<6} {:<11} {:>3}  {}", row.group, row.metric.to_string(), row.mode.to_string(), row.n, body)?;
        if row.failures > 0 {
            write!(s, "  [{} failed]", row.failures)?;
        }
        if let Some(sm) = &row.summary {
            if sm.unconverged > 0 {
                write!(s, "  [{} unconverged]", sm.unconverged)?;
            }
        }
        writeln!(s)?;
    }
    Ok(())
}
