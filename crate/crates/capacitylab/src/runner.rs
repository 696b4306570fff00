//! Executes the tasks of a parsed config and assembles the run report.
//!
//! Tasks run in declaration order (or concurrently under `--parallel`; the
//! report is assembled in declaration order either way, so the two modes
//! produce identical reports). One task's failure never aborts the others.

use crate::config::{
    parse_path, ExperimentConfig, HandleDecl, KernelDecl, LevelDecl, TaskKind, TowerDecl,
};
use crate::games;
use crate::hausdorff;
use crate::join;
use crate::norms::{DerivedCapacity, GoodNorm, NormTower};
use crate::potential::{DiscretePotentialSpace, Kernel, PotentialOperator, SolverOptions};
use crate::report::{config_digest, real, reals, task_seed, RunReport, TaskReport, TaskStatus, TaskTiming};
use crate::space::{NodePath, PointSet, ProductTreeSpace, TreeMetric};
use crate::submeasure::SubmeasureHandle;
use crate::verify;
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("failed to build '{name}': {message}")]
    Build { name: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub parallel: bool,
    pub seed_override: Option<u64>,
    /// Restrict execution to tasks of one kind (the `verify` and `game`
    /// subcommands).
    pub kind_filter: Option<String>,
}

/// Concrete objects instantiated from a config's declarations.
pub struct BuiltObjects {
    pub spaces: BTreeMap<String, (ProductTreeSpace, TreeMetric)>,
    pub towers: BTreeMap<String, DerivedCapacity>,
    pub exact_weights: BTreeMap<String, Vec<Vec<BigRational>>>,
    pub handles: BTreeMap<String, SubmeasureHandle>,
    pub sets: BTreeMap<String, PointSet>,
}

fn parse_big_ratio(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        Some(BigRational::new(num, den))
    } else if let Ok(int) = text.parse::<BigInt>() {
        Some(BigRational::from_integer(int))
    } else {
        // decimal like 0.25
        let value: f64 = text.parse().ok()?;
        let scaled = (value * 1e12).round() as i64;
        Some(BigRational::new(BigInt::from(scaled), BigInt::from(10i64.pow(12))))
    }
}

fn build_tower(
    decl: &TowerDecl,
    space: &ProductTreeSpace,
) -> Result<(DerivedCapacity, Option<Vec<Vec<BigRational>>>), String> {
    let mut levels = Vec::new();
    let mut exact: Option<Vec<Vec<BigRational>>> = Some(Vec::new());
    for (i, level) in decl.levels.iter().enumerate() {
        match level {
            LevelDecl::Max => {
                levels.push(GoodNorm::max(space.arities()[i]));
                exact = None;
            }
            LevelDecl::WeightedP { p, weights } => {
                let parsed: Vec<f64> = weights
                    .iter()
                    .map(|w| crate::space::parse_ratio(w).ok_or_else(|| format!("bad weight {w}")))
                    .collect::<Result<_, _>>()?;
                levels.push(GoodNorm::weighted_p(parsed, *p).map_err(|e| e.to_string())?);
                if *p == 1.0 {
                    if let Some(acc) = &mut exact {
                        match weights.iter().map(|w| parse_big_ratio(w)).collect() {
                            Some(rationals) => acc.push(rationals),
                            None => exact = None,
                        }
                    }
                } else {
                    exact = None;
                }
            }
        }
    }
    let tower = NormTower::new(space.clone(), levels).map_err(|e| e.to_string())?;
    Ok((DerivedCapacity::new(tower), exact))
}

pub fn build(config: &ExperimentConfig) -> Result<BuiltObjects, RunnerError> {
    let fail = |name: &str, message: String| RunnerError::Build {
        name: name.to_string(),
        message,
    };
    let mut spaces = BTreeMap::new();
    for (name, decl) in &config.spaces {
        let space = ProductTreeSpace::new(decl.arities.clone())
            .map_err(|e| fail(name, e.to_string()))?;
        let metric = TreeMetric::parse(&decl.base).map_err(|e| fail(name, e.to_string()))?;
        spaces.insert(name.clone(), (space, metric));
    }
    let mut towers = BTreeMap::new();
    let mut exact_weights = BTreeMap::new();
    for (name, decl) in &config.towers {
        let (space, _) = &spaces[&decl.space];
        let (capacity, exact) = build_tower(decl, space).map_err(|m| fail(name, m))?;
        towers.insert(name.clone(), capacity);
        if let Some(exact) = exact {
            exact_weights.insert(name.clone(), exact);
        }
    }
    let mut handles = BTreeMap::new();
    for (name, decl) in &config.handles {
        let handle = match decl {
            HandleDecl::Tower { tower } => {
                SubmeasureHandle::from_capacity(name.clone(), towers[tower].clone())
            }
            HandleDecl::Uniform { space } => {
                SubmeasureHandle::uniform(name.clone(), &spaces[space].0)
            }
            HandleDecl::PointMass { space, leaf } => {
                let (space_obj, _) = &spaces[space];
                let coords = parse_path(leaf, space_obj.arities())
                    .ok_or_else(|| fail(name, format!("bad leaf {leaf}")))?;
                let index = space_obj
                    .leaf_index(&NodePath::new(coords))
                    .map_err(|e| fail(name, e.to_string()))?;
                SubmeasureHandle::point_mass(name.clone(), index)
            }
            HandleDecl::Table { space, values } => {
                let (space_obj, _) = &spaces[space];
                let leaves = space_obj.leaf_count();
                if leaves > 20 || values.len() != 1 << leaves {
                    return Err(fail(
                        name,
                        format!("table needs 2^{leaves} values, got {}", values.len()),
                    ));
                }
                SubmeasureHandle::from_table(name.clone(), leaves, values.clone())
            }
        };
        handles.insert(name.clone(), handle);
    }
    let mut sets = BTreeMap::new();
    for (name, decl) in &config.sets {
        let (space, _) = &spaces[&decl.space];
        let mut set = space.empty_set();
        for leaf in &decl.leaves {
            let coords = parse_path(leaf, space.arities())
                .ok_or_else(|| fail(name, format!("bad leaf {leaf}")))?;
            let index = space
                .leaf_index(&NodePath::new(coords))
                .map_err(|e| fail(name, e.to_string()))?;
            set.insert(index);
        }
        let paths: Vec<NodePath> = decl
            .paths
            .iter()
            .map(|p| {
                parse_path(p, space.arities())
                    .map(NodePath::new)
                    .ok_or_else(|| fail(name, format!("bad path {p}")))
            })
            .collect::<Result<_, _>>()?;
        let from_paths = space
            .set_from_paths(paths.iter())
            .map_err(|e| fail(name, e.to_string()))?;
        set = set.union(&from_paths);
        sets.insert(name.clone(), set);
    }
    Ok(BuiltObjects {
        spaces,
        towers,
        exact_weights,
        handles,
        sets,
    })
}

fn build_kernel(decl: &KernelDecl) -> Result<Kernel, String> {
    Ok(match decl {
        KernelDecl::Riesz {
            alpha,
            dim,
            gamma,
            cap,
        } => {
            let mut kernel = Kernel::riesz(*alpha, *dim, *gamma).map_err(|e| e.to_string())?;
            if let Kernel::Riesz {
                singularity_cap, ..
            } = &mut kernel
            {
                *singularity_cap = *cap;
            }
            kernel
        }
        KernelDecl::Bessel { alpha, dim, a } => {
            Kernel::bessel(*alpha, *dim, *a).map_err(|e| e.to_string())?
        }
        KernelDecl::Constant { value } => Kernel::Constant { value: *value },
        KernelDecl::Diagonal => Kernel::Diagonal,
        KernelDecl::Matrix { rows } => Kernel::ExplicitMatrix {
            values: rows.clone(),
        },
    })
}

fn leaf_names(space: &ProductTreeSpace, set: &PointSet) -> Vec<String> {
    set.iter()
        .map(|i| space.leaf_at(i).expect("index in range").to_string())
        .collect()
}

struct TaskOutput {
    report: TaskReport,
    artifacts: Vec<(String, String)>,
    wall_ms: f64,
}

fn run_task(
    config: &ExperimentConfig,
    built: &BuiltObjects,
    task: &crate::config::TaskDecl,
    global_seed: u64,
) -> TaskOutput {
    let start = Instant::now();
    let (status, error, outputs, artifacts) = execute(config, built, task, global_seed);
    TaskOutput {
        report: TaskReport {
            id: task.id.clone(),
            kind: task.kind.kind_name().to_string(),
            status,
            error,
            outputs,
        },
        artifacts,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

type Executed = (TaskStatus, Option<String>, Value, Vec<(String, String)>);

fn execute(
    config: &ExperimentConfig,
    built: &BuiltObjects,
    task: &crate::config::TaskDecl,
    global_seed: u64,
) -> Executed {
    let ok = |outputs: Value| (TaskStatus::Ok, None, outputs, Vec::new());
    let err = |message: String| (TaskStatus::Error, Some(message), Value::Null, Vec::new());
    match &task.kind {
        TaskKind::Capacity { tower, set } => {
            let capacity = &built.towers[tower];
            let points = &built.sets[set];
            let value = capacity.eval(points);
            let mut outputs = json!({
                "operation": "capacity",
                "set": set,
                "set_size": points.len(),
                "value": real(value),
            });
            if let Some(weights) = built.exact_weights.get(tower) {
                if let Some(exact) = capacity.eval_exact(points, weights) {
                    outputs["value_exact"] = json!(exact.to_string());
                }
            }
            ok(outputs)
        }
        TaskKind::Join {
            handles,
            set,
            greedy,
            restarts,
        } => {
            let handle_refs: Vec<&SubmeasureHandle> =
                handles.iter().map(|h| &built.handles[h]).collect();
            let space_name = config.handle_space(&handles[0]).expect("validated");
            let (space, _) = &built.spaces[space_name];
            let points = &built.sets[set];
            let result = if *greedy {
                join::join_greedy(
                    &handle_refs,
                    space,
                    points,
                    *restarts,
                    task_seed(global_seed, &task.id),
                )
            } else {
                join::join_exact(&handle_refs, space, points)
            };
            match result {
                Err(e) => err(e.to_string()),
                Ok(result) => {
                    let partition: Vec<Vec<String>> = result
                        .witness_partition
                        .iter()
                        .map(|part| leaf_names(space, part))
                        .collect();
                    let null_witness = if result.value.abs() <= 1e-12 {
                        Some(&partition)
                    } else {
                        None
                    };
                    ok(json!({
                        "operation": "join",
                        "method": if *greedy { "greedy" } else { "exact" },
                        "value": real(result.value),
                        "partition": partition,
                        "null_decomposition": null_witness,
                    }))
                }
            }
        }
        TaskKind::Tilde {
            tower,
            set,
            epsilons,
        } => {
            let capacity = &built.towers[tower];
            let points = &built.sets[set];
            let grid = epsilons
                .clone()
                .unwrap_or_else(DerivedCapacity::default_epsilon_grid);
            match capacity.tilde(points, &grid) {
                Err(e) => err(e.to_string()),
                Ok(result) => ok(json!({
                    "operation": "tilde",
                    "set": set,
                    "capacity_of_set": real(capacity.eval(points)),
                    "capacity_of_tilde": real(capacity.eval(&result.set)),
                    "tilde_leaves": leaf_names(capacity.space(), &result.set),
                    "stabilized": result.stabilized,
                    "epsilon_grid": reals(&grid),
                })),
            }
        }
        TaskKind::Hausdorff { set, s, deltas } => {
            let set_decl = &config.sets[set];
            let (space, metric) = &built.spaces[&set_decl.space];
            let points = &built.sets[set];
            match hausdorff::premeasure_profile(space, metric, points, *s, deltas) {
                Err(e) => err(e.to_string()),
                Ok(profile) => {
                    let mut csv = String::from("delta,value,cover_size\n");
                    for (delta, result) in deltas.iter().zip(&profile) {
                        csv.push_str(&format!(
                            "{},{},{}\n",
                            crate::report::round_real(*delta),
                            crate::report::round_real(result.value),
                            result.optimal_cover.opens.len()
                        ));
                    }
                    let values: Vec<f64> = profile.iter().map(|r| r.value).collect();
                    let outputs = json!({
                        "operation": "min_weight_cover_profile",
                        "set": set,
                        "s": real(*s),
                        "deltas": reals(deltas),
                        "values": reals(&values),
                        "cover_sizes": profile.iter().map(|r| r.optimal_cover.opens.len()).collect::<Vec<_>>(),
                    });
                    (
                        TaskStatus::Ok,
                        None,
                        outputs,
                        vec![(format!("{}.csv", task.id), csv)],
                    )
                }
            }
        }
        TaskKind::Game {
            handle,
            set,
            epsilon,
            dump_strategy,
        } => {
            let handle_obj = &built.handles[handle];
            let space_name = config.handle_space(handle).expect("validated");
            let (space, _) = &built.spaces[space_name];
            let game = games::TruncatedGame {
                space,
                capacity: handle_obj,
                target: built.sets[set].clone(),
                epsilon: *epsilon,
            };
            match games::solve_minimax(&game) {
                Err(e) => err(e.to_string()),
                Ok(outcome) => {
                    let replay_ok = games::replay_strategy(&game, &outcome);
                    let winner = match outcome.winner {
                        games::Winner::PlayerOne => "player_one",
                        games::Winner::PlayerTwo => "player_two",
                    };
                    let outputs = json!({
                        "operation": "solve_minimax",
                        "target": set,
                        "epsilon": real(*epsilon),
                        "capacity_of_target": real(handle_obj.eval(&built.sets[set])),
                        "winner": winner,
                        "min_winning_capacity": real(outcome.min_winning_capacity),
                        "positions_explored": outcome.positions_explored,
                        "strategy_moves": outcome.strategy.moves.len(),
                        "replay_ok": replay_ok,
                    });
                    let mut artifacts = Vec::new();
                    if *dump_strategy {
                        let moves: Vec<Value> = outcome
                            .strategy
                            .moves
                            .iter()
                            .map(|(key, mv)| {
                                json!({
                                    "round": key.round,
                                    "prefix_start": key.prefix_start,
                                    "cover_mask": key.cover_mask,
                                    "move": match mv {
                                        games::StrategyMove::Extend(m) => json!({"extend": m}),
                                        games::StrategyMove::Coordinate(c) => json!({"coordinate": c}),
                                    },
                                })
                            })
                            .collect();
                        let dump = serde_json::to_string_pretty(&json!({
                            "winner": winner,
                            "moves": moves,
                        }))
                        .expect("strategy serializes");
                        artifacts.push((format!("{}_strategy.json", task.id), dump));
                    }
                    let status = if replay_ok {
                        TaskStatus::Ok
                    } else {
                        TaskStatus::Failed
                    };
                    (status, None, outputs, artifacts)
                }
            }
        }
        TaskKind::Verify {
            handle,
            properties,
            randomized,
            tolerance,
        } => {
            let handle_obj = &built.handles[handle];
            let space_name = config.handle_space(handle).expect("validated");
            let (space, _) = &built.spaces[space_name];
            let mode = match randomized {
                None => verify::Mode::Exhaustive,
                Some((trials, seed)) => verify::Mode::Randomized {
                    trials: *trials,
                    seed: seed.unwrap_or_else(|| task_seed(global_seed, &task.id)),
                },
            };
            let specs: Vec<verify::PropertySpec> = if properties.is_empty() {
                verify::default_axiom_suite()
                    .into_iter()
                    .map(|mut spec| {
                        spec.mode = mode;
                        spec.tolerance = *tolerance;
                        spec
                    })
                    .collect()
            } else {
                properties
                    .iter()
                    .map(|p| verify::PropertySpec {
                        name: verify::PropertyName::parse(p).expect("validated"),
                        mode,
                        tolerance: *tolerance,
                    })
                    .collect()
            };
            let report = verify::run_suite(handle_obj, space, &specs);
            let status = if report.all_passed() {
                TaskStatus::Ok
            } else {
                TaskStatus::Failed
            };
            // wall time is reported through the timing block, not here
            let outputs = json!({
                "operation": "run_suite",
                "handle": handle,
                "outcomes": serde_json::to_value(&report.outcomes).expect("serializes"),
                "passed": report.passed,
                "failed": report.failed,
                "skipped": report.skipped,
                "unknown": report.unknown,
            });
            (status, None, outputs, Vec::new())
        }
        TaskKind::Potential {
            pspace,
            kernel,
            p,
            e,
            tol,
            trace,
            qp_check,
            tilde,
            stability_b,
        } => {
            let pdecl = &config.pspaces[pspace];
            let kdecl = &config.kernels[kernel];
            let space = match DiscretePotentialSpace::new(
                pdecl.m_points.clone(),
                pdecl.nu.clone(),
                pdecl.eval_points.clone(),
            ) {
                Ok(s) => s,
                Err(e) => return err(e.to_string()),
            };
            let kernel_obj = match build_kernel(kdecl) {
                Ok(k) => k,
                Err(m) => return err(m),
            };
            let operator = match PotentialOperator::new(space, &kernel_obj) {
                Ok(op) => op,
                Err(e) => return err(e.to_string()),
            };
            let options = SolverOptions {
                tol: *tol,
                trace: *trace,
                ..SolverOptions::default()
            };
            let result = match operator.capacity(*p, e, &options) {
                Ok(r) => r,
                Err(e) => return err(e.to_string()),
            };
            let mut outputs = json!({
                "operation": "capacity_gp",
                "p": real(*p),
                "e": e,
                "value": real(result.value),
                "kkt_residual": real(result.certificate.residual),
                "duality_gap": real(result.certificate.duality_gap),
                "newton_iterations": result.certificate.newton_iterations,
                "capped_kernel_entries": operator.capped_entries(),
            });
            let mut status = TaskStatus::Ok;
            if *qp_check {
                if *p == 2.0 {
                    match operator.capacity_qp2(e) {
                        Err(e) => return err(e.to_string()),
                        Ok(qp_value) => {
                            let agrees = (qp_value - result.value).abs() <= 1e-6;
                            outputs["qp_value"] = real(qp_value);
                            outputs["qp_agrees"] = json!(agrees);
                            if !agrees {
                                status = TaskStatus::Failed;
                            }
                        }
                    }
                } else {
                    outputs["qp_value"] = Value::Null;
                }
            }
            if *tilde {
                match operator.tilde(*p, e, *tol, &options) {
                    Err(e) => return err(e.to_string()),
                    Ok(t) => outputs["tilde"] = json!(t),
                }
            }
            if let Some(b) = stability_b {
                match operator.stability(*p, e, b, *tol, &options) {
                    Err(e) => return err(e.to_string()),
                    Ok(v) => {
                        if !v.passed() {
                            status = TaskStatus::Failed;
                        }
                        outputs["stability"] = json!({
                            "c_a": real(v.c_a),
                            "c_b": real(v.c_b),
                            "c_b_minus_tilde": real(v.c_b_minus_tilde),
                            "equal_direction": v.equal_direction,
                            "growth_direction": v.growth_direction,
                        });
                    }
                }
            }
            let mut artifacts = Vec::new();
            if *trace {
                let mut csv = String::from("iteration,objective,barrier,kkt_residual\n");
                for row in &result.trace {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        row.iteration,
                        crate::report::round_real(row.objective),
                        crate::report::round_real(row.barrier),
                        crate::report::round_real(row.kkt_residual)
                    ));
                }
                artifacts.push((format!("{}_trace.csv", task.id), csv));
            }
            (status, None, outputs, artifacts)
        }
    }
}

/// Runs every task and writes `report.json` plus per-task artifacts under
/// the output directory.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunReport, RunnerError> {
    let built = build(config)?;
    let seed = options.seed_override.unwrap_or(config.seed);

    let selected: Vec<&crate::config::TaskDecl> = config
        .tasks
        .iter()
        .filter(|t| {
            options
                .kind_filter
                .as_deref()
                .map(|k| t.kind.kind_name() == k)
                .unwrap_or(true)
        })
        .collect();

    let outputs: Vec<TaskOutput> = if options.parallel {
        selected
            .par_iter()
            .map(|task| run_task(config, &built, task, seed))
            .collect()
    } else {
        selected
            .iter()
            .map(|task| run_task(config, &built, task, seed))
            .collect()
    };

    let mut report = RunReport::new(config_digest(config), seed, config.warnings.clone());
    let mut artifacts = Vec::new();
    for output in outputs {
        report.timing.push(TaskTiming {
            id: output.report.id.clone(),
            wall_ms: output.wall_ms,
        });
        report.tasks.push(output.report);
        artifacts.extend(output.artifacts);
    }

    write_outputs(&options.out_dir, &report, &artifacts)?;
    Ok(report)
}

fn write_outputs(
    out_dir: &Path,
    report: &RunReport,
    artifacts: &[(String, String)],
) -> Result<(), RunnerError> {
    let io_err = |path: &Path, source: std::io::Error| RunnerError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, report.to_json_pretty()).map_err(|e| io_err(&report_path, e))?;
    for (name, contents) in artifacts {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const CONFIG: &str = "
seed = 11

[space t22]
arities = 2,2

[tower u22]
space = t22
level = wp p=1 w=1/2,1/2
level = wp p=1 w=1/2,1/2

[handle hu22]
kind = tower
tower = u22

[handle pm]
kind = pointmass
space = t22
leaf = 00

[set half]
space = t22
paths = 0

[set corner]
space = t22
leaves = 00

[task cap1]
kind = capacity
tower = u22
set = half

[task join1]
kind = join
handles = hu22,pm
set = corner

[task ver1]
kind = verify
handle = hu22

[task game1]
kind = game
handle = hu22
set = half
epsilon = 1/2

[task hd1]
kind = hausdorff
set = half
s = 1
deltas = 1,0.5,0.25
";

    #[test]
    fn full_pipeline_runs_and_reports() {
        let config = parse_config(CONFIG).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run(
            &config,
            &RunOptions {
                out_dir: dir.path().to_path_buf(),
                parallel: false,
                seed_override: None,
                kind_filter: None,
            },
        )
        .unwrap();
        assert!(report.exit_ok(), "{}", report.to_json_pretty());
        assert_eq!(report.tasks.len(), 5);
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("hd1.csv").exists());
        // capacity of the half space is exactly 1/2
        let cap_task = &report.tasks[0];
        assert_eq!(cap_task.outputs["value"], serde_json::json!(0.5));
        assert_eq!(cap_task.outputs["value_exact"], serde_json::json!("1/2"));
    }

    #[test]
    fn reports_are_byte_identical_across_runs_and_parallelism() {
        let config = parse_config(CONFIG).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let base = RunOptions {
            out_dir: dir.path().to_path_buf(),
            parallel: false,
            seed_override: None,
            kind_filter: None,
        };
        let a = run(&config, &base).unwrap();
        let b = run(&config, &base).unwrap();
        let c = run(
            &config,
            &RunOptions {
                parallel: true,
                ..base.clone()
            },
        )
        .unwrap();
        assert_eq!(a.timing_excluded_json(), b.timing_excluded_json());
        assert_eq!(a.timing_excluded_json(), c.timing_excluded_json());
    }

    #[test]
    fn kind_filter_selects_tasks() {
        let config = parse_config(CONFIG).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run(
            &config,
            &RunOptions {
                out_dir: dir.path().to_path_buf(),
                parallel: false,
                seed_override: None,
                kind_filter: Some("verify".into()),
            },
        )
        .unwrap();
        assert_eq!(report.tasks.len(), 1);
        assert_eq!(report.tasks[0].kind, "verify");
    }

    #[test]
    fn planted_violation_fails_the_run_with_witness() {
        let config_text = "
[space t2]
arities = 2

[handle bad]
kind = table
space = t2
values = 0,0.9,0.3,0.5

[task ver_bad]
kind = verify
handle = bad
properties = monotone
";
        let config = parse_config(config_text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run(
            &config,
            &RunOptions {
                out_dir: dir.path().to_path_buf(),
                parallel: false,
                seed_override: None,
                kind_filter: None,
            },
        )
        .unwrap();
        assert!(!report.exit_ok());
        let outputs = &report.tasks[0].outputs;
        let witness = &outputs["outcomes"][0]["verdict"]["witness"];
        assert!(witness["operands"].is_array(), "witness missing: {outputs}");
    }

    #[test]
    fn empty_task_list_gives_empty_ok_report() {
        let config = parse_config("[space t2]\narities = 2\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = run(
            &config,
            &RunOptions {
                out_dir: dir.path().to_path_buf(),
                parallel: false,
                seed_override: None,
                kind_filter: None,
            },
        )
        .unwrap();
        assert!(report.exit_ok());
        assert!(report.tasks.is_empty());
    }
}
