//! Executes a plan and writes its CSV files and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};
use stokes_mg::costmodel::{count_ops, predict_costs, BlockCount};
use stokes_mg::lfa::{two_grid_factor, TwoGridLfa};
use stokes_mg::multigrid::measure_convergence;
use stokes_mg::*;

use crate::checks::{self, PropertyRow};
use crate::config::{Experiment, LfaRequest};
use crate::suites::SuitePlan;
use crate::{HarnessError, Result};

/// One row per measured experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub experiment: String,
    pub smoother: String,
    pub ordering: String,
    pub bc: String,
    pub omega: f64,
    pub nu1: usize,
    pub nu2: usize,
    pub n: usize,
    pub cycle: String,
    pub cycles: usize,
    pub rho_final_ratio: f64,
    pub rho_geomean: f64,
    /// Final over initial norm of the measured quantity.
    pub reduction: f64,
    pub diverged: bool,
    pub norm_u: f64,
    pub norm_v: f64,
    pub norm_p: f64,
}

/// Per-family norms after each cycle; cycle 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryRow {
    pub experiment: String,
    pub cycle: usize,
    pub norm_u: f64,
    pub norm_v: f64,
    pub norm_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LfaRow {
    pub experiment: String,
    pub smoother: String,
    pub nu1: usize,
    pub nu2: usize,
    pub sample_density: usize,
    pub omega: f64,
    pub sup_rho: f64,
    pub argmax_theta1: f64,
    pub argmax_theta2: f64,
    pub excluded_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub smoother: String,
    pub ordering: String,
    /// `predicted-n2`, `predicted-interior` or `instrumented`.
    pub source: String,
    pub n: u64,
    pub arithmetic_ops: u64,
    pub communication_steps: u64,
    pub colors: u64,
    pub sync_phases: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub convergence: Vec<ConvergenceRow>,
    pub history: Vec<HistoryRow>,
    pub lfa: Vec<LfaRow>,
    pub costs: Vec<CostRow>,
    pub properties: Vec<PropertyRow>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub sample_density: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, plan: &mut SuitePlan) {
        for e in &mut plan.experiments {
            if let Some(s) = self.seed {
                e.seed = s;
            }
            if let (Some(m), Some(l)) = (self.sample_density, e.lfa.as_mut()) {
                l.sample_density = m;
            }
        }
    }
}

fn bc_name(bc: BoundaryKind) -> &'static str {
    match bc {
        BoundaryKind::Periodic => "periodic",
        BoundaryKind::Dirichlet => "dirichlet",
    }
}

pub fn lfa_rows(e: &Experiment, req: &LfaRequest) -> Result<Vec<LfaRow>> {
    let m = req.sample_density;
    let eps = std::f64::consts::PI / m as f64 / 2.0;
    req.omegas
        .iter()
        .map(|&omega| {
            let mut smoother = e.cycle.smoother;
            smoother.omega = omega;
            let cfg = TwoGridLfa {
                interpolation: e.cycle.transfer.interpolation,
                coarse: e.cycle.transfer.coarse,
                h: e.mesh.h(),
                ..TwoGridLfa::new(smoother, e.cycle.nu1, e.cycle.nu2)
            };
            let sweep = two_grid_factor(&cfg, m, eps)?;
            let arg = sweep
                .samples
                .iter()
                .max_by(|a, b| a.rho.total_cmp(&b.rho))
                .map(|s| s.theta)
                .unwrap_or((0.0, 0.0));
            Ok(LfaRow {
                experiment: e.id.clone(),
                smoother: format!("{:?}", smoother.kind),
                nu1: e.cycle.nu1,
                nu2: e.cycle.nu2,
                sample_density: m,
                omega,
                sup_rho: sweep.rho,
                argmax_theta1: arg.0,
                argmax_theta2: arg.1,
                excluded_count: m * m - sweep.samples.len(),
            })
        })
        .collect()
}

struct ExperimentOutput {
    convergence: Option<ConvergenceRow>,
    history: Vec<HistoryRow>,
    lfa: Vec<LfaRow>,
}

fn run_experiment(e: &Experiment) -> Result<ExperimentOutput> {
    let lfa = match &e.lfa {
        Some(req) => lfa_rows(e, req)?,
        None => Vec::new(),
    };
    if !e.measure {
        return Ok(ExperimentOutput {
            convergence: None,
            history: Vec::new(),
            lfa,
        });
    }
    let report = measure_convergence(e.mesh, e.cycle, e.protocol())?;
    let first = report.history.first().copied().unwrap_or([0.0; 3]);
    let last = report.history.last().copied().unwrap_or([0.0; 3]);
    let total = |h: [f64; 3]| h.iter().map(|x| x * x).sum::<f64>().sqrt();
    let reduction = if total(first) > 0.0 {
        total(last) / total(first)
    } else {
        0.0
    };
    let history = report
        .history
        .iter()
        .enumerate()
        .map(|(k, h)| HistoryRow {
            experiment: e.id.clone(),
            cycle: k,
            norm_u: h[0],
            norm_v: h[1],
            norm_p: h[2],
        })
        .collect();
    let s = e.cycle.smoother;
    Ok(ExperimentOutput {
        convergence: Some(ConvergenceRow {
            experiment: e.id.clone(),
            smoother: format!("{:?}", s.kind),
            ordering: format!("{:?}", s.ordering),
            bc: bc_name(e.mesh.bc).to_string(),
            omega: s.omega,
            nu1: e.cycle.nu1,
            nu2: e.cycle.nu2,
            n: e.mesh.n,
            cycle: format!("{:?}", e.cycle.kind),
            cycles: report.factors.len(),
            rho_final_ratio: report.rho,
            rho_geomean: report.rho_mean,
            reduction,
            diverged: report.diverged,
            norm_u: last[0],
            norm_v: last[1],
            norm_p: last[2],
        }),
        history,
        lfa,
    })
}

/// Cost rows at `n = 32`: both closed forms and one instrumented sweep.
pub fn cost_rows(n: usize) -> Result<Vec<CostRow>> {
    let specs = [
        SmootherSpec::new(SmootherKind::Vanka, 0.7),
        SmootherSpec::new(SmootherKind::Vanka, 0.7).with_ordering(Ordering::NineColor),
        SmootherSpec::new(SmootherKind::TriadGS, 0.7),
        SmootherSpec::new(SmootherKind::TriadModified, 0.7),
    ];
    let mut rows = Vec::new();
    for spec in specs {
        let reports = [
            (
                "predicted-n2",
                predict_costs(&spec, n as u64, BlockCount::Square)?,
            ),
            (
                "predicted-interior",
                predict_costs(&spec, n as u64, BlockCount::InteriorSquare)?,
            ),
            ("instrumented", count_ops(&spec, n)?),
        ];
        for (source, r) in reports {
            rows.push(CostRow {
                smoother: format!("{:?}", spec.kind),
                ordering: format!("{:?}", spec.ordering),
                source: source.to_string(),
                n: r.n,
                arithmetic_ops: r.arithmetic_ops,
                communication_steps: r.communication_steps,
                colors: r.colors,
                sync_phases: r.sync_phases,
            });
        }
    }
    Ok(rows)
}

/// Runs every experiment, concurrently, and gathers rows in plan order.
pub fn execute(plan: &SuitePlan) -> Result<Outcome> {
    let exps = &plan.experiments;
    let slots: Vec<Mutex<Option<Result<ExperimentOutput>>>> =
        exps.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(exps.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, AtomicOrdering::Relaxed);
                let Some(e) = exps.get(k) else { break };
                *slots[k].lock().unwrap() = Some(run_experiment(e));
            });
        }
    });
    let mut out = Outcome::default();
    for slot in slots {
        let r = slot.into_inner().unwrap().expect("every experiment ran")?;
        out.convergence.extend(r.convergence);
        out.history.extend(r.history);
        out.lfa.extend(r.lfa);
    }
    if plan.costs {
        out.costs = cost_rows(32)?;
    }
    if plan.properties {
        out.properties = checks::run_all();
    }
    Ok(out)
}

/// SHA-256 of the resolved plan.
pub fn config_hash(plan: &SuitePlan) -> String {
    let text = format!(
        "{:?}|costs={}|properties={}",
        plan.experiments, plan.costs, plan.properties
    );
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

/// What the manifest records besides the file list.
#[derive(Debug, Clone)]
pub struct ManifestInfo {
    pub command: String,
    pub sources: Vec<String>,
    pub config_hash: String,
    pub overrides: Overrides,
}

/// Writes one CSV per non-empty report kind, then the manifest. Returns the
/// file names written.
pub fn write_outputs(dir: &Path, out: &Outcome, info: &ManifestInfo) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Option<Vec<u8>>| -> Result<()> {
        if let Some(b) = bytes {
            write_atomic(dir, name, &b)?;
            files.push(name.to_string());
        }
        Ok(())
    };
    fn nonempty<T: Serialize>(rows: &[T]) -> Result<Option<Vec<u8>>> {
        if rows.is_empty() {
            Ok(None)
        } else {
            csv_bytes(rows).map(Some)
        }
    }
    emit("convergence.csv", nonempty(&out.convergence)?)?;
    emit("history.csv", nonempty(&out.history)?)?;
    emit("lfa.csv", nonempty(&out.lfa)?)?;
    emit("costs.csv", nonempty(&out.costs)?)?;
    emit("properties.csv", nonempty(&out.properties)?)?;
    let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
    let manifest = format!(
        "command = {}\nsources = {}\nharness_version = {}\nsolver_version = {}\nconfig_sha256 = {}\nseed_override = {}\nsample_density_override = {}\nfiles = {}\n",
        info.command,
        info.sources.join(", "),
        env!("CARGO_PKG_VERSION"),
        stokes_mg::VERSION,
        info.config_hash,
        opt(info.overrides.seed.map(|s| s.to_string())),
        opt(info.overrides.sample_density.map(|s| s.to_string())),
        files.join(", "),
    );
    write_atomic(dir, "manifest.txt", manifest.as_bytes())?;
    files.push("manifest.txt".into());
    Ok(files)
}
