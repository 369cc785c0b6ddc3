use std::io::Write;

use rayon::prelude::*;

use super::{generate, Case, InstanceSpec};
use crate::error::{CrsError, Result};
use crate::model::Variant;
use crate::solvers::{solve_crs, Method, SolveOptions, SolverConfig, Status};

pub const CSV_HEADER: [&str; 12] = [
    "method", "case", "n", "K", "param", "trial", "status", "fval_opt", "iter", "matvecs", "time",
    "time_eig",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    pub method: Method,
    pub variant: Variant,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        format!("{}({})", self.method, self.variant)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub grid: Vec<InstanceSpec>,
    pub methods: Vec<MethodSpec>,
    pub trials: usize,
    pub solver: SolverConfig,
    /// Runs stop once the recovered objective is below `-1 + target_gap`.
    pub target_gap: f64,
    pub sp_epsilon: f64,
    pub delta: f64,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            methods: Vec::new(),
            trials: 1,
            solver: SolverConfig {
                max_iter: 20_000,
                tol: 1e-12,
                ..SolverConfig::default()
            },
            target_gap: 1e-6,
            sp_epsilon: 1e-6,
            delta: 0.01,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub method: MethodSpec,
    pub case: Case,
    pub n: usize,
    pub block: usize,
    pub param: f64,
    /// `None` on the per-method mean row.
    pub trial: Option<usize>,
    pub status: String,
    pub fval_opt: f64,
    pub iter: f64,
    pub matvecs: f64,
    pub time: f64,
    pub time_eig: f64,
}

impl ExperimentRow {
    pub fn record(&self) -> [String; 12] {
        [
            self.method.label(),
            self.case.to_string(),
            self.n.to_string(),
            self.block.to_string(),
            format!("{:e}", self.param),
            self.trial.map_or_else(|| "mean".to_string(), |t| t.to_string()),
            self.status.clone(),
            format!("{:.6e}", self.fval_opt),
            if self.trial.is_some() { format!("{}", self.iter) } else { format!("{:.1}", self.iter) },
            if self.trial.is_some() { format!("{}", self.matvecs) } else { format!("{:.1}", self.matvecs) },
            format!("{:.6}", self.time),
            format!("{:.6}", self.time_eig),
        ]
    }
}

fn run_cell(cfg: &ExperimentConfig, spec: &InstanceSpec, trial: usize) -> Result<Vec<ExperimentRow>> {
    let mut spec = spec.clone();
    spec.seed = spec.seed.wrapping_add(trial as u64);
    let inst = generate(&spec)?;
    cfg.methods
        .iter()
        .map(|m| {
            let opts = SolveOptions {
                method: m.method,
                variant: m.variant,
                eig_tol: spec.eig_tolerance(),
                sp_epsilon: cfg.sp_epsilon,
                delta: cfg.delta,
                eig_max_iter: None,
                solver: SolverConfig { seed: spec.seed, ..cfg.solver.clone() },
                start: None,
                target: Some(inst.f_star + cfg.target_gap),
            };
            let rep = solve_crs(&inst.problem, &opts)?;
            Ok(ExperimentRow {
                method: *m,
                case: spec.case,
                n: spec.n,
                block: spec.block,
                param: spec.param(),
                trial: Some(trial),
                status: rep.status.to_string(),
                fval_opt: rep.fval - inst.f_star,
                iter: rep.iterations as f64,
                matvecs: rep.matvecs as f64,
                time: rep.total_time().as_secs_f64(),
                time_eig: rep.eig_time.as_secs_f64(),
            })
        })
        .collect()
}

fn mean_row(rows: &[ExperimentRow]) -> ExperimentRow {
    let k = rows.len() as f64;
    let avg = |f: fn(&ExperimentRow) -> f64| rows.iter().map(f).sum::<f64>() / k;
    let converged = rows
        .iter()
        .filter(|r| r.status == Status::Converged.to_string())
        .count();
    ExperimentRow {
        trial: None,
        status: format!("{converged}/{}", rows.len()),
        fval_opt: avg(|r| r.fval_opt),
        iter: avg(|r| r.iter),
        matvecs: avg(|r| r.matvecs),
        time: avg(|r| r.time),
        time_eig: avg(|r| r.time_eig),
        ..rows[0].clone()
    }
}

/// Runs every method on `trials` instances of each grid point (trial `t`
/// uses seed `spec.seed + t`). For each grid point and method, the rows of
/// the individual trials are followed by their mean.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if cfg.trials == 0 {
        return Err(CrsError::InvalidArgument("trials must be at least 1".into()));
    }
    let cells: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let run = |&(g, t): &(usize, usize)| run_cell(cfg, &cfg.grid[g], t);
    let results: Vec<Vec<ExperimentRow>> = if cfg.parallel {
        cells.par_iter().map(run).collect::<Result<_>>()?
    } else {
        cells.iter().map(run).collect::<Result<_>>()?
    };

    let mut out = Vec::new();
    for g in 0..cfg.grid.len() {
        let block = &results[g * cfg.trials..(g + 1) * cfg.trials];
        for m in 0..cfg.methods.len() {
            let rows: Vec<ExperimentRow> = block.iter().map(|cell| cell[m].clone()).collect();
            let mean = mean_row(&rows);
            out.extend(rows);
            out.push(mean);
        }
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CrsError::Internal(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.record()).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CrsError::Internal(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn methods() -> Vec<MethodSpec> {
        vec![
            MethodSpec { method: Method::Apg, variant: Variant::Sp },
            MethodSpec { method: Method::Bbm, variant: Variant::Sp },
        ]
    }

    #[test]
    fn row_count() {
        let cfg = ExperimentConfig {
            grid: vec![InstanceSpec::easy(20, 5, 10.0, 1), InstanceSpec::easy(20, 5, 100.0, 1)],
            methods: methods(),
            trials: 3,
            ..Default::default()
        };
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3 + 2 * 2);
        assert_eq!(rows.iter().filter(|r| r.trial.is_none()).count(), 4);
        assert!(rows[3].trial.is_none());
        assert_eq!(rows[3].method, methods()[0]);
    }

    #[test]
    fn easy_runs_reach_the_target() {
        let cfg = ExperimentConfig {
            grid: vec![InstanceSpec::easy(50, 10, 10.0, 3)],
            methods: methods(),
            trials: 2,
            ..Default::default()
        };
        for r in run_experiment(&cfg).unwrap() {
            assert!(r.fval_opt <= 1e-5, "{r:?}");
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let cfg = ExperimentConfig {
            grid: vec![InstanceSpec::hard(10, 5, 1e-2, 2)],
            methods: methods()[..1].to_vec(),
            trials: 1,
            ..Default::default()
        };
        let rows = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("APG(SP),hard,10,5,"));
    }
}
