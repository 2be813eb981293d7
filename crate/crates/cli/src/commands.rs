use std::io::{self, Write};
use std::time::Instant;

use anyhow::{bail, Result};
use serde_json::{json, Value};

use symstat::cluster::{
    gen_synthetic, kmeans_fundamental_baseline, kmeans_quotient_with, ClusterConfig, Init,
    SyntheticSpec,
};
use symstat::io::{read_dataset, read_labeled, write_labeled};
use symstat::{build_group, estimate, irreps, EstimateOptions, MeanPoint};

use crate::{create, open, write_json, Baseline, ClusterArgs, GenArgs, InitArg, MeanvarArgs};

pub fn meanvar(a: &MeanvarArgs) -> Result<()> {
    let total = Instant::now();
    let opts = EstimateOptions {
        rounding: a.tuning.rounding()?,
        solver: a.tuning.solver()?,
    };
    let group = build_group(a.group)?;
    let data = read_dataset(open(&a.input)?, a.mode)?;
    if data.is_empty() {
        bail!("{} contains no records", a.input.display());
    }
    let reps = irreps(&group)?;

    let start = Instant::now();
    let est = estimate(&data, &group, &reps, a.metric, &opts)?;
    let solve_seconds = start.elapsed().as_secs_f64();

    let mean = match est.result.mean {
        MeanPoint::Rotation(q) => {
            let m = q.to_matrix();
            let m = m.matrix();
            json!({
                "quaternion": q.as_array(),
                "matrix": (0..3).map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]).collect::<Vec<_>>(),
            })
        }
        MeanPoint::Direction(d) => json!({ "direction": d.as_array() }),
    };
    let out = json!({
        "group": group.name(),
        "metric": a.metric,
        "mode": a.mode,
        "n": data.len(),
        "assignment": est.result.assignment,
        "mean": mean,
        "variance": est.result.variance,
        "variance_lower_bound": est.variance_lower_bound,
        "sdp_objective": est.sdp_objective,
        "rounded_cost": est.result.approx_cost,
        "diagnostics": est.diagnostics,
        "m": opts.rounding.m,
        "c": opts.rounding.c,
        "timing": {
            "solve_round_seconds": solve_seconds,
            "total_seconds": total.elapsed().as_secs_f64(),
        },
    });
    if let Some(path) = &a.output {
        write_json(path, &out)?;
    }

    let mut s = io::stdout().lock();
    writeln!(s, "group {}  metric {}  mode {}  N {}", group.name(), a.metric, a.mode, data.len())?;
    writeln!(s, "mean         {}", out["mean"])?;
    writeln!(s, "variance     {:.10}", est.result.variance)?;
    if let Some(lb) = est.variance_lower_bound {
        writeln!(s, "lower bound  {lb:.10}")?;
    }
    writeln!(s, "SDP bound    {:.10}", est.sdp_objective)?;
    writeln!(s, "rounded cost {:.10}", est.result.approx_cost)?;
    writeln!(
        s,
        "solver       {} iterations, {}",
        est.diagnostics.iterations,
        if est.diagnostics.converged { "converged" } else { "NOT converged" }
    )?;
    writeln!(s, "time         {solve_seconds:.3}s")?;
    Ok(())
}

fn palette(label: usize) -> &'static str {
    const COLORS: [&str; 10] = [
        "#e6194b", "#ffe119", "#42d4f4", "#bfef45", "#f032e6", "#4363d8", "#f58231", "#911eb4",
        "#469990", "#9a6324",
    ];
    COLORS[label % COLORS.len()]
}

pub fn cluster(a: &ClusterArgs) -> Result<()> {
    let mut config = match a.baseline {
        Baseline::Quotient => ClusterConfig::new(a.k, a.group, a.seed),
        Baseline::Fundamental => ClusterConfig::classical(a.k, a.group, a.seed),
    };
    config.metric = a.metric;
    config.subsample = a.subsample;
    config.max_iterations = a.iterations;
    config.rounding = a.tuning.rounding()?;
    if let Some(init) = a.init {
        config.init = match init {
            InitArg::Random => Init::Random,
            InitArg::PlusPlus => Init::PlusPlus,
        };
    }
    if let Some(r) = a.restarts {
        config.restarts = r;
    }
    config.validate()?;
    if a.baseline == Baseline::Fundamental && !a.group.is_cyclic() {
        bail!("the fundamental-domain baseline needs a cyclic group, got {}", a.group);
    }

    let (points, truth) = read_labeled(open(&a.input)?)?;
    let result = match a.baseline {
        Baseline::Quotient => {
            let group = build_group(a.group)?;
            let reps = irreps(&group)?;
            kmeans_quotient_with(&points, truth.as_deref(), &config, &group, &reps)?
        }
        Baseline::Fundamental => kmeans_fundamental_baseline(&points, truth.as_deref(), &config)?,
    };

    if let Some(path) = &a.output {
        let out: Value = json!({
            "group": a.group.to_string(),
            "metric": a.metric,
            "k": a.k,
            "seed": a.seed,
            "method": match a.baseline { Baseline::Quotient => "quotient", Baseline::Fundamental => "fundamental" },
            "result": result,
        });
        write_json(path, &out)?;
    }
    if let Some(path) = &a.plot {
        let mut w = create(path)?;
        writeln!(w, "# x y z color cluster")?;
        for (p, &l) in points.iter().zip(&result.labels) {
            let [x, y, z] = p.as_array();
            writeln!(w, "{x:.9} {y:.9} {z:.9} {} {l}", palette(l))?;
        }
        w.flush()?;
    }

    let mut s = io::stdout().lock();
    writeln!(
        s,
        "{} points, k {}, {} iterations{}",
        points.len(),
        a.k,
        result.iterations,
        if result.converged { "" } else { " (iteration cap reached)" }
    )?;
    if let Some(obj) = result.objective.last() {
        writeln!(s, "objective {obj:.6}")?;
    }
    if let Some(acc) = result.accuracy {
        writeln!(s, "accuracy {:.1}%", 100.0 * acc)?;
    }
    Ok(())
}

pub fn gen(a: &GenArgs) -> Result<()> {
    let group = build_group(a.group)?;
    let mut spec = SyntheticSpec::five_class_c3();
    for c in &mut spec.classes {
        c.radius = a.radius;
        c.count = a.count;
    }
    spec.validate()?;
    let points = gen_synthetic(&spec, &group, a.scramble)?;
    match &a.output {
        Some(path) => {
            let mut w = create(path)?;
            write_labeled(&mut w, &points)?;
            w.flush()?;
        }
        None => write_labeled(io::stdout().lock(), &points)?,
    }
    Ok(())
}
