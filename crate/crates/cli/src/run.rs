use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use fracext_core::harness::{run_study_with, ConvergenceTable};
use fracext_core::problems::{builtin_problems, Problem};
use fracext_core::solvers::builtin_solvers;
use fracext_core::{DiscreteOperator, ExtensionConfig};
use serde_json::Value;

use crate::config::{Command, RunConfig, Step, DEFAULT_H, DEFAULT_M};
use crate::output::{Cell, Table};

fn core_err(e: fracext_core::Error) -> anyhow::Error {
    anyhow!("{e}")
}

pub fn execute(cfg: &RunConfig) -> Result<Table> {
    match cfg.command {
        Command::Solve | Command::Extend => profiles(cfg),
        Command::Study => study(cfg),
    }
}

fn extension_config(cfg: &RunConfig) -> Result<ExtensionConfig> {
    let s = cfg.s();
    let m = cfg.m.unwrap_or(DEFAULT_M);
    match cfg.step {
        Some(Step::Cells(n)) => ExtensionConfig::new(s, m, n),
        Some(Step::Width(h)) => ExtensionConfig::with_step(s, m, h),
        None => ExtensionConfig::with_step(s, m, DEFAULT_H),
    }
    .map_err(core_err)
}

fn coordinate_columns(op: &DiscreteOperator) -> Vec<String> {
    match op.layout().spatial_dims() {
        2 => vec!["x".into(), "y".into()],
        _ => vec!["x".into()],
    }
}

fn profiles(cfg: &RunConfig) -> Result<Table> {
    let problems = builtin_problems();
    let solvers = builtin_solvers();
    let problem: &dyn Problem = problems.get(&cfg.problem).map_err(core_err)?;
    let solver = solvers.get(&cfg.solver).map_err(core_err)?;
    let op = problem
        .build(&cfg.discretization(problem.default_discretization()))
        .map_err(core_err)?;
    let ext = extension_config(cfg)?;
    let f = problem.forcing(&op, cfg.s()).map_err(core_err)?;
    let coords = op.layout().coordinates();

    let mut metadata = BTreeMap::new();
    metadata.insert("problem".into(), Value::from(cfg.problem.clone()));
    metadata.insert("solver".into(), Value::from(cfg.solver.clone()));
    metadata.insert("s".into(), Value::from(ext.s()));
    metadata.insert("M".into(), Value::from(ext.m()));
    metadata.insert("N".into(), Value::from(ext.n()));
    metadata.insert("h".into(), Value::from(ext.h()));
    metadata.insert("unknowns".into(), Value::from(op.dimension()));
    metadata.insert("mu".into(), Value::from(op.mu_estimate()));

    let mut columns = coordinate_columns(&op);
    let mut rows = Vec::new();
    let command = if cfg.command == Command::Solve {
        let u = solver.solve(&op, &f, &ext).map_err(core_err)?;
        columns.push("u".into());
        for (c, v) in coords.iter().zip(u.values()) {
            let mut row: Vec<Cell> = c.iter().map(|x| Cell::Float(*x)).collect();
            row.push(Cell::Float(*v));
            rows.push(row);
        }
        "solve"
    } else {
        let vs = solver
            .extend(&op, &f, &ext, &cfg.t_values)
            .map_err(core_err)?;
        columns.insert(0, "t".into());
        columns.push("v".into());
        for (t, v) in cfg.t_values.iter().zip(&vs) {
            for (c, x) in coords.iter().zip(v.values()) {
                let mut row = vec![Cell::Float(*t)];
                row.extend(c.iter().map(|y| Cell::Float(*y)));
                row.push(Cell::Float(*x));
                rows.push(row);
            }
        }
        "extend"
    };
    Ok(Table {
        command,
        metadata,
        columns,
        rows,
    })
}

/// Label used in study column names, e.g. `err_s=0.9`.
pub fn s_label(s: f64) -> String {
    format!("{s}")
}

pub fn study_table(t: &ConvergenceTable) -> Table {
    let mut columns = vec!["level".to_string(), "mesh".to_string()];
    for s in &t.s_values {
        columns.push(format!("err_s={}", s_label(*s)));
        columns.push(format!("rate_s={}", s_label(*s)));
    }
    let rows = t
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![Cell::Index(r.level), Cell::Float(r.mesh)];
            for c in &r.cells {
                row.push(Cell::opt(c.error));
                row.push(Cell::opt(c.rate));
            }
            row
        })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("problem".into(), Value::from(t.problem.clone()));
    metadata.insert("solver".into(), Value::from(t.solver.clone()));
    metadata.insert("vary".into(), Value::from(t.vary.as_str()));
    metadata.insert("mode".into(), Value::from(t.mode.as_str()));
    metadata.insert("M".into(), t.m.map_or(Value::Null, Value::from));
    metadata.insert("h".into(), t.h.map_or(Value::Null, Value::from));
    metadata.insert("norm".into(), Value::from(t.norm.clone()));
    Table {
        command: "study",
        metadata,
        columns,
        rows,
    }
}

/// Runs the configured study through the built-in registries.
pub fn run_configured_study(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let problems = builtin_problems();
    let problem = problems.get(&cfg.problem).map_err(core_err)?;
    let spec = cfg.study_spec(problem.default_discretization())?;
    run_study_with(&spec, &problems, &builtin_solvers()).map_err(core_err)
}

fn study(cfg: &RunConfig) -> Result<Table> {
    let t = run_configured_study(cfg)?;
    for r in &t.rows {
        let cells: Vec<String> = r
            .cells
            .iter()
            .zip(&t.s_values)
            .map(|(c, s)| {
                let err = c.error.map_or("-".into(), |e| format!("{e:.3e}"));
                let rate = c.rate.map_or("-".into(), |r| format!("{r:.4}"));
                format!("s={s}: err {err} rate {rate}")
            })
            .collect();
        eprintln!("level {} (mesh {}): {}", r.level, r.mesh, cells.join("; "));
    }
    Ok(study_table(&t))
}
