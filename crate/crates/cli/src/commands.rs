//! The four subcommands. Each reads a merged [`RunConfig`], writes its files
//! under the output directory and returns what it wrote for the caller.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use reserve_core::ab::{empirical_treatment_sweep, sweep_theoretical, SweepResult};
use reserve_core::dist::{sample_log, ContinuousDist};
use reserve_core::reserve_opt::{
    eager_coordinate_ascent, monopoly_reserves, optimal_eager_exact, optimal_lazy, OptimizationResult,
};
use reserve_core::{total_revenue, total_welfare, BidLog, ExactSum, Mechanism, ReserveVector};
use serde_json::json;

use crate::config::{
    InputSource, MechanismChoice, RunConfig, SweepMode, Task, DEFAULT_ASSIGNMENTS, DEFAULT_FRACTIONS,
    DEFAULT_MAX_PRODUCT_SIZE, DEFAULT_MAX_ROUNDS, DEFAULT_TRIALS,
};
use crate::logio::{parse_log, parse_reserves, quantize_log, write_log, write_reserves, LogFormat};
use crate::{CliError, CliResult};

pub const RESERVES_FILE: &str = "reserves.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REVENUE_LIFT_FILE: &str = "revenue_lift.tsv";
pub const WELFARE_LOSS_FILE: &str = "welfare_loss.tsv";
pub const SWEEP_FILE: &str = "sweep.tsv";

/// A named log; lift tables get one row per slot.
#[derive(Debug, Clone)]
pub struct Slot {
    pub name: String,
    pub log: BidLog,
}

/// Reads every input file, or samples the generator (bids rounded to micro
/// precision so in-memory and on-disk runs agree).
pub fn load_slots(cfg: &RunConfig) -> CliResult<Vec<Slot>> {
    match cfg.input_source()? {
        InputSource::Files(files) => files
            .into_iter()
            .map(|(path, format)| {
                let name = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into());
                Ok(Slot {
                    name,
                    log: parse_log(&path, format)?,
                })
            })
            .collect(),
        InputSource::Generator { spec, count, seed } => {
            let name = cfg.generator.clone().unwrap_or_default();
            let gen = spec.build().map_err(|e| CliError::Config(e.to_string()))?;
            let log = sample_log(&gen, count, seed).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(vec![Slot {
                name,
                log: quantize_log(&log)?,
            }])
        }
    }
}

fn single_slot(cfg: &RunConfig) -> CliResult<Slot> {
    let mut slots = load_slots(cfg)?;
    if slots.len() != 1 {
        return Err(CliError::Config(format!(
            "this command takes one input log, got {}",
            slots.len()
        )));
    }
    Ok(slots.remove(0))
}

fn out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub result: OptimizationResult,
    pub revenue_zero_reserve: f64,
    pub reserves_path: PathBuf,
    pub summary_path: PathBuf,
}

pub fn run_task(task: Task, log: &BidLog, cfg: &RunConfig) -> CliResult<OptimizationResult> {
    Ok(match task {
        Task::Lazy => optimal_lazy(log)?,
        Task::Monopoly => monopoly_reserves(log)?,
        Task::EagerExact => {
            let bound = cfg.max_product_size.unwrap_or(DEFAULT_MAX_PRODUCT_SIZE);
            optimal_eager_exact(log, u128::from(bound))?
        }
        Task::EagerLocal => {
            let init = optimal_lazy(log)?.reserves;
            eager_coordinate_ascent(log, &init, cfg.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS))?
        }
    })
}

/// Optimizes reserves, writing `reserves.csv` and `summary.json`.
pub fn cmd_optimize(cfg: &RunConfig) -> CliResult<OptimizeReport> {
    let task = cfg
        .task
        .ok_or_else(|| CliError::Config("optimize needs --task".into()))?;
    let slot = single_slot(cfg)?;
    let dir = out_dir(cfg)?;
    let started = Instant::now();
    let result = run_task(task, &slot.log, cfg)?;
    let runtime = started.elapsed().as_secs_f64();
    let zero = reserve_core::empirical_revenue(&slot.log, &ReserveVector::zero(), result.mechanism)?;

    let reserves_path = dir.join(RESERVES_FILE);
    write_reserves(&result.reserves, slot.log.bidders(), &reserves_path)?;
    let summary = json!({
        "task": task.as_str(),
        "mechanism": result.mechanism.as_str(),
        "slot": slot.name,
        "auctions": slot.log.len(),
        "bidders": slot.log.bidders().len(),
        "revenue_zero_reserve": zero,
        "revenue": result.expected_revenue,
        "total_revenue": result.total_revenue,
        "runtime_seconds": runtime,
        "parameters": {
            "seed": cfg.seed(),
            "max_product_size": cfg.max_product_size.unwrap_or(DEFAULT_MAX_PRODUCT_SIZE),
            "max_rounds": cfg.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS),
            "input": cfg.input,
            "generator": cfg.generator,
            "params": cfg.params,
            "count": cfg.count,
        },
        "per_bidder": result.per_bidder,
    });
    let summary_path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?;
    write_text(&summary_path, &(text + "\n"))?;
    Ok(OptimizeReport {
        result,
        revenue_zero_reserve: zero,
        reserves_path,
        summary_path,
    })
}

/// The four lift quantities of one slot, in table column order:
/// lazy and eager with the optimal lazy reserves, then lazy and eager with
/// the monopoly reserves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deltas(pub [f64; 4]);

impl Deltas {
    /// Divided by the first column, or `None` when it is zero.
    pub fn normalized(&self) -> Option<[f64; 4]> {
        let base = self.0[0];
        (base != 0.0).then(|| self.0.map(|v| v / base))
    }
}

/// Exact totals over the log for the zero-reserve baseline followed by the
/// four settings of [`Deltas`].
#[derive(Debug, Clone)]
pub struct Totals(pub [ExactSum; 5]);

#[derive(Debug, Clone)]
pub struct LiftRow {
    pub slot: String,
    pub auctions: usize,
    /// Revenue minus zero-reserve revenue, per auction.
    pub revenue_lift: Deltas,
    /// Zero-reserve welfare minus welfare, per auction.
    pub welfare_loss: Deltas,
    pub revenue_totals: Totals,
    pub welfare_totals: Totals,
    pub lazy_reserves: ReserveVector,
    pub monopoly_reserves: ReserveVector,
}

const SETTINGS: [(usize, Mechanism); 4] = [
    (0, Mechanism::Lazy),
    (0, Mechanism::Eager),
    (1, Mechanism::Lazy),
    (1, Mechanism::Eager),
];

fn mean_difference(a: &ExactSum, b: &ExactSum, n: usize) -> f64 {
    let mut d = a.clone();
    d -= b;
    d.value() / n as f64
}

pub fn lift_row(slot: &Slot) -> CliResult<LiftRow> {
    let log = &slot.log;
    if log.is_empty() {
        return Err(CliError::Data(format!("slot {} is empty", slot.name)));
    }
    let lazy = optimal_lazy(log)?.reserves;
    let mono = monopoly_reserves(log)?.reserves;
    let vectors = [&lazy, &mono];
    let zero = ReserveVector::zero();
    let n = log.len();

    let rev0 = total_revenue(log, &zero, Mechanism::Lazy);
    let wel0 = total_welfare(log, &zero, Mechanism::Lazy);
    let revs: Vec<ExactSum> = SETTINGS
        .iter()
        .map(|&(v, m)| total_revenue(log, vectors[v], m))
        .collect();
    let wels: Vec<ExactSum> = SETTINGS
        .iter()
        .map(|&(v, m)| total_welfare(log, vectors[v], m))
        .collect();

    let revenue_lift = Deltas(std::array::from_fn(|j| mean_difference(&revs[j], &rev0, n)));
    let welfare_loss = Deltas(std::array::from_fn(|j| mean_difference(&wel0, &wels[j], n)));
    let totals = |base: &ExactSum, rest: &[ExactSum]| {
        Totals(std::array::from_fn(|j| {
            if j == 0 {
                base.clone()
            } else {
                rest[j - 1].clone()
            }
        }))
    };
    Ok(LiftRow {
        slot: slot.name.clone(),
        auctions: n,
        revenue_lift,
        welfare_loss,
        revenue_totals: totals(&rev0, &revs),
        welfare_totals: totals(&wel0, &wels),
        lazy_reserves: lazy,
        monopoly_reserves: mono,
    })
}

fn lift_table(rows: &[LiftRow], pick: impl Fn(&LiftRow) -> Deltas, prefix: &str, note: &str) -> String {
    let names = ["rstarL_lazy", "rstarL_eager", "rM_lazy", "rM_eager"];
    let mut out = format!("# {note}\nslot\tauctions");
    for n in names {
        let _ = write!(out, "\t{prefix}_{n}");
    }
    for n in names {
        let _ = write!(out, "\traw_{prefix}_{n}");
    }
    out.push_str("\tnormalized\n");
    for r in rows {
        let d = pick(r);
        let _ = write!(out, "{}\t{}", r.slot, r.auctions);
        match d.normalized() {
            Some(v) => v.iter().for_each(|x| {
                let _ = write!(out, "\t{x}");
            }),
            None => out.push_str(&"\tNA".repeat(4)),
        }
        for x in d.0 {
            let _ = write!(out, "\t{x}");
        }
        out.push_str(if d.normalized().is_some() { "\tyes\n" } else { "\tno\n" });
    }
    out
}

pub fn revenue_lift_tsv(rows: &[LiftRow]) -> String {
    lift_table(
        rows,
        |r| r.revenue_lift,
        "delta",
        "revenue lift over zero reserves, normalized so that the lazy lift at the optimal lazy reserves is 1",
    )
}

pub fn welfare_loss_tsv(rows: &[LiftRow]) -> String {
    lift_table(
        rows,
        |r| r.welfare_loss,
        "wdelta",
        "welfare loss against zero reserves, normalized so that the lazy loss at the optimal lazy reserves is 1",
    )
}

#[derive(Debug, Clone)]
pub struct LiftReport {
    pub rows: Vec<LiftRow>,
    pub revenue_path: PathBuf,
    pub welfare_path: PathBuf,
}

pub fn cmd_lift_tables(cfg: &RunConfig) -> CliResult<LiftReport> {
    let slots = load_slots(cfg)?;
    let dir = out_dir(cfg)?;
    let rows = slots.iter().map(lift_row).collect::<CliResult<Vec<_>>>()?;
    let revenue_path = dir.join(REVENUE_LIFT_FILE);
    let welfare_path = dir.join(WELFARE_LOSS_FILE);
    write_text(&revenue_path, &revenue_lift_tsv(&rows))?;
    write_text(&welfare_path, &welfare_loss_tsv(&rows))?;
    Ok(LiftReport {
        rows,
        revenue_path,
        welfare_path,
    })
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub result: SweepResult,
    pub path: PathBuf,
}

fn sweep_mode(cfg: &RunConfig) -> SweepMode {
    cfg.mode.unwrap_or(if cfg.input.is_empty() && cfg.generator.is_none() {
        SweepMode::Theoretical
    } else {
        SweepMode::Empirical
    })
}

pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepReport> {
    let seed = cfg.seed();
    let mechanisms = cfg.mechanism.unwrap_or(MechanismChoice::Both).mechanisms();
    let mut rows = Vec::new();
    match sweep_mode(cfg) {
        SweepMode::Theoretical => {
            let dist = match cfg.dist {
                Some(d) => d.validated().map_err(|e| CliError::Config(e.to_string()))?,
                None => ContinuousDist::uniform(0.0, 1.0).expect("valid"),
            };
            let n = cfg.n.unwrap_or(5);
            let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
            for m in mechanisms {
                rows.extend(sweep_theoretical(&dist, n, m, trials, seed)?.rows);
            }
        }
        SweepMode::Empirical => {
            let slot = single_slot(cfg)?;
            let reserves = match &cfg.reserves {
                Some(p) => parse_reserves(p)?,
                None => optimal_lazy(&slot.log)?.reserves,
            };
            let fractions = cfg.fractions.clone().unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
            let assignments = cfg.assignments.unwrap_or(DEFAULT_ASSIGNMENTS);
            for m in mechanisms {
                rows.extend(empirical_treatment_sweep(&slot.log, &reserves, &fractions, m, assignments, seed)?.rows);
            }
        }
    }
    let result = SweepResult { seed, rows };
    let dir = out_dir(cfg)?;
    let path = dir.join(SWEEP_FILE);
    write_text(&path, &result.to_tsv())?;
    Ok(SweepReport { result, path })
}

/// Materializes the configured generator as `log.csv` or `log.jsonl`.
pub fn cmd_gen(cfg: &RunConfig) -> CliResult<PathBuf> {
    if cfg.generator.is_none() {
        return Err(CliError::Config("gen needs --generator".into()));
    }
    let slot = single_slot(cfg)?;
    let format = cfg.format.unwrap_or(LogFormat::Csv);
    let dir = out_dir(cfg)?;
    let path = dir.join(format!("log.{}", format.extension()));
    write_log(&slot.log, &path, format)?;
    Ok(path)
}
