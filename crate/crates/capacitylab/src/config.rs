//! Line-oriented experiment configuration.
//!
//! A config is a sequence of `[kind name]` sections holding `key = value`
//! entries, with `#` comments. Parsing validates everything and reports the
//! full list of problems, not just the first: unknown kinds, bad numbers,
//! out-of-range parameters, and dangling references all carry line numbers.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceDecl {
    pub arities: Vec<usize>,
    pub base: String,
}

#[derive(Debug, Clone, Serialize)]
pub enum LevelDecl {
    Max,
    WeightedP { p: f64, weights: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct TowerDecl {
    pub space: String,
    pub levels: Vec<LevelDecl>,
}

#[derive(Debug, Clone, Serialize)]
pub enum HandleDecl {
    Tower { tower: String },
    Uniform { space: String },
    PointMass { space: String, leaf: String },
    Table { space: String, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub enum KernelDecl {
    Riesz {
        alpha: f64,
        dim: usize,
        gamma: f64,
        cap: Option<f64>,
    },
    Bessel {
        alpha: f64,
        dim: usize,
        a: f64,
    },
    Constant {
        value: f64,
    },
    Diagonal,
    Matrix {
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct PspaceDecl {
    pub m_points: Vec<Vec<f64>>,
    pub nu: Vec<f64>,
    pub eval_points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetDecl {
    pub space: String,
    pub leaves: Vec<String>,
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub enum TaskKind {
    Capacity {
        tower: String,
        set: String,
    },
    Join {
        handles: Vec<String>,
        set: String,
        greedy: bool,
        restarts: usize,
    },
    Tilde {
        tower: String,
        set: String,
        epsilons: Option<Vec<f64>>,
    },
    Hausdorff {
        set: String,
        s: f64,
        deltas: Vec<f64>,
    },
    Game {
        handle: String,
        set: String,
        epsilon: f64,
        dump_strategy: bool,
    },
    Verify {
        handle: String,
        properties: Vec<String>,
        randomized: Option<(usize, Option<u64>)>,
        tolerance: f64,
    },
    Potential {
        pspace: String,
        kernel: String,
        p: f64,
        e: Vec<usize>,
        tol: f64,
        trace: bool,
        qp_check: bool,
        tilde: bool,
        stability_b: Option<Vec<usize>>,
    },
}

impl TaskKind {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TaskKind::Capacity { .. } => "capacity",
            TaskKind::Join { .. } => "join",
            TaskKind::Tilde { .. } => "tilde",
            TaskKind::Hausdorff { .. } => "hausdorff",
            TaskKind::Game { .. } => "game",
            TaskKind::Verify { .. } => "verify",
            TaskKind::Potential { .. } => "potential",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskDecl {
    pub id: String,
    pub kind: TaskKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub tolerance: f64,
    pub spaces: BTreeMap<String, SpaceDecl>,
    pub towers: BTreeMap<String, TowerDecl>,
    pub handles: BTreeMap<String, HandleDecl>,
    pub kernels: BTreeMap<String, KernelDecl>,
    pub pspaces: BTreeMap<String, PspaceDecl>,
    pub sets: BTreeMap<String, SetDecl>,
    pub tasks: Vec<TaskDecl>,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    /// Space a handle is declared over.
    pub fn handle_space(&self, handle: &str) -> Option<&str> {
        match self.handles.get(handle)? {
            HandleDecl::Tower { tower } => Some(self.towers.get(tower)?.space.as_str()),
            HandleDecl::Uniform { space }
            | HandleDecl::PointMass { space, .. }
            | HandleDecl::Table { space, .. } => Some(space.as_str()),
        }
    }
}

struct RawSection {
    kind: String,
    name: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl RawSection {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
    }

    fn get_all(&self, key: &str) -> Vec<(usize, &str)> {
        self.entries
            .iter()
            .filter(|(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
            .collect()
    }
}

fn lex(text: &str) -> Result<(Vec<(usize, String, String)>, Vec<RawSection>), Vec<ConfigIssue>> {
    let mut issues = Vec::new();
    let mut top = Vec::new();
    let mut sections: Vec<RawSection> = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                issues.push(ConfigIssue {
                    line: line_no,
                    message: "unterminated section header".into(),
                });
                continue;
            };
            let mut parts = inner.split_whitespace();
            let (Some(kind), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
                issues.push(ConfigIssue {
                    line: line_no,
                    message: format!("section header must be '[kind name]', got '[{inner}]'"),
                });
                continue;
            };
            sections.push(RawSection {
                kind: kind.to_string(),
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
        } else if let Some((key, value)) = line.split_once('=') {
            let entry = (line_no, key.trim().to_string(), value.trim().to_string());
            match sections.last_mut() {
                Some(section) => section.entries.push(entry),
                None => top.push(entry),
            }
        } else {
            issues.push(ConfigIssue {
                line: line_no,
                message: format!("expected 'key = value' or '[kind name]', got '{line}'"),
            });
        }
    }
    if issues.is_empty() {
        Ok((top, sections))
    } else {
        Err(issues)
    }
}

struct Builder {
    issues: Vec<ConfigIssue>,
    warnings: Vec<String>,
}

impl Builder {
    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn parse_f64(&mut self, line: usize, key: &str, value: &str) -> Option<f64> {
        match crate::space::parse_ratio(value) {
            Some(v) => Some(v),
            None => {
                self.err(line, format!("{key}: expected a number, got '{value}'"));
                None
            }
        }
    }

    fn parse_usize(&mut self, line: usize, key: &str, value: &str) -> Option<usize> {
        match value.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.err(line, format!("{key}: expected an integer, got '{value}'"));
                None
            }
        }
    }

    fn parse_f64_list(&mut self, line: usize, key: &str, value: &str) -> Option<Vec<f64>> {
        value
            .split(',')
            .map(|part| self.parse_f64(line, key, part.trim()))
            .collect()
    }

    fn parse_usize_list(&mut self, line: usize, key: &str, value: &str) -> Option<Vec<usize>> {
        if value.trim().is_empty() {
            return Some(Vec::new());
        }
        value
            .split(',')
            .map(|part| self.parse_usize(line, key, part.trim()))
            .collect()
    }

    fn require<'a>(&mut self, section: &'a RawSection, key: &str) -> Option<(usize, &'a str)> {
        let found = section.get(key);
        if found.is_none() {
            self.err(
                section.line,
                format!("[{} {}] is missing '{key}'", section.kind, section.name),
            );
        }
        found
    }
}

/// Parses and fully validates a config, returning either the config or the
/// complete list of problems.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let (top, sections) = lex(text)?;
    let mut b = Builder {
        issues: Vec::new(),
        warnings: Vec::new(),
    };

    let mut seed = 0u64;
    let mut tolerance = 1e-9;
    for (line, key, value) in &top {
        match key.as_str() {
            "seed" => match value.parse() {
                Ok(v) => seed = v,
                Err(_) => b.err(*line, format!("seed: expected an integer, got '{value}'")),
            },
            "tolerance" => {
                if let Some(v) = b.parse_f64(*line, "tolerance", value) {
                    tolerance = v;
                }
            }
            "version" => {}
            other => b.err(*line, format!("unknown top-level key '{other}'")),
        }
    }

    let mut config = ExperimentConfig {
        seed,
        tolerance,
        spaces: BTreeMap::new(),
        towers: BTreeMap::new(),
        handles: BTreeMap::new(),
        kernels: BTreeMap::new(),
        pspaces: BTreeMap::new(),
        sets: BTreeMap::new(),
        tasks: Vec::new(),
        warnings: Vec::new(),
    };

    for section in &sections {
        match section.kind.as_str() {
            "space" => build_space(&mut b, section, &mut config),
            "tower" => build_tower(&mut b, section, &mut config),
            "handle" => build_handle(&mut b, section, &mut config),
            "kernel" => build_kernel(&mut b, section, &mut config),
            "pspace" => build_pspace(&mut b, section, &mut config),
            "set" => build_set(&mut b, section, &mut config),
            "task" => build_task(&mut b, section, &mut config),
            other => b.err(section.line, format!("unknown section kind '{other}'")),
        }
    }

    let section_lines: std::collections::BTreeMap<(String, String), usize> = sections
        .iter()
        .map(|s| ((s.kind.clone(), s.name.clone()), s.line))
        .collect();
    validate_references(&mut b, &config, &section_lines);

    config.warnings = b.warnings;
    if b.issues.is_empty() {
        Ok(config)
    } else {
        Err(b.issues)
    }
}

fn build_space(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    let Some((line, arities_text)) = b.require(section, "arities") else {
        return;
    };
    let Some(arities) = b.parse_usize_list(line, "arities", arities_text) else {
        return;
    };
    if arities.is_empty() || arities.contains(&0) {
        b.err(line, "arities must be a nonempty list of positive integers");
        return;
    }
    let base = section
        .get("base")
        .map(|(_, v)| v.to_string())
        .unwrap_or_else(|| "1/2".to_string());
    if crate::space::TreeMetric::parse(&base).is_err() {
        b.err(section.line, format!("base '{base}' is not in (0, 1)"));
        return;
    }
    if config
        .spaces
        .insert(section.name.clone(), SpaceDecl { arities, base })
        .is_some()
    {
        b.err(section.line, format!("duplicate space '{}'", section.name));
    }
}

fn build_tower(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    let Some((_, space)) = b.require(section, "space") else {
        return;
    };
    let mut levels = Vec::new();
    for (line, value) in section.get_all("level") {
        if value == "max" {
            levels.push(LevelDecl::Max);
            continue;
        }
        let Some(rest) = value.strip_prefix("wp") else {
            b.err(line, format!("level must be 'max' or 'wp p=<real> w=<list>', got '{value}'"));
            continue;
        };
        let mut p = None;
        let mut weights: Option<Vec<String>> = None;
        for token in rest.split_whitespace() {
            if let Some(pv) = token.strip_prefix("p=") {
                p = b.parse_f64(line, "p", pv);
            } else if let Some(wv) = token.strip_prefix("w=") {
                weights = Some(wv.split(',').map(|s| s.trim().to_string()).collect());
            } else {
                b.err(line, format!("unknown level token '{token}'"));
            }
        }
        match (p, weights) {
            (Some(p), Some(weights)) => {
                if !(p >= 1.0) {
                    b.err(line, format!("level exponent p must be >= 1, got {p}"));
                }
                let mut sum = 0.0;
                let mut ok = true;
                for w in &weights {
                    match crate::space::parse_ratio(w) {
                        Some(v) if v >= 0.0 => sum += v,
                        _ => {
                            b.err(line, format!("bad weight '{w}'"));
                            ok = false;
                        }
                    }
                }
                if ok && (sum - 1.0).abs() > 1e-9 {
                    b.err(line, format!("weights must sum to 1, got {sum}"));
                } else if ok {
                    if weights.iter().any(|w| crate::space::parse_ratio(w) == Some(0.0)) {
                        b.warnings.push(format!(
                            "tower {}: zero weight at a level makes the norm non-strict",
                            section.name
                        ));
                    }
                    levels.push(LevelDecl::WeightedP { p, weights });
                }
            }
            _ => b.err(line, "wp level needs both p= and w="),
        }
    }
    if levels.is_empty() {
        b.err(section.line, "tower needs at least one level");
        return;
    }
    if config
        .towers
        .insert(
            section.name.clone(),
            TowerDecl {
                space: space.to_string(),
                levels,
            },
        )
        .is_some()
    {
        b.err(section.line, format!("duplicate tower '{}'", section.name));
    }
}

fn build_handle(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    let Some((kind_line, kind)) = b.require(section, "kind") else {
        return;
    };
    let decl = match kind {
        "tower" => b
            .require(section, "tower")
            .map(|(_, tower)| HandleDecl::Tower {
                tower: tower.to_string(),
            }),
        "uniform" => b
            .require(section, "space")
            .map(|(_, space)| HandleDecl::Uniform {
                space: space.to_string(),
            }),
        "pointmass" => match (b.require(section, "space"), b.require(section, "leaf")) {
            (Some((_, space)), Some((_, leaf))) => Some(HandleDecl::PointMass {
                space: space.to_string(),
                leaf: leaf.to_string(),
            }),
            _ => None,
        },
        "table" => match (b.require(section, "space"), b.require(section, "values")) {
            (Some((_, space)), Some((line, values))) => {
                b.parse_f64_list(line, "values", values)
                    .map(|values| HandleDecl::Table {
                        space: space.to_string(),
                        values,
                    })
            }
            _ => None,
        },
        other => {
            b.err(kind_line, format!("unknown handle kind '{other}'"));
            None
        }
    };
    if let Some(decl) = decl {
        if config.handles.insert(section.name.clone(), decl).is_some() {
            b.err(section.line, format!("duplicate handle '{}'", section.name));
        }
    }
}

fn build_kernel(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    let Some((type_line, kind)) = b.require(section, "type") else {
        return;
    };
    let decl = match kind {
        "riesz" => {
            let alpha = b
                .require(section, "alpha")
                .and_then(|(l, v)| b.parse_f64(l, "alpha", v));
            let dim = b
                .require(section, "dim")
                .and_then(|(l, v)| b.parse_usize(l, "dim", v));
            let gamma = section
                .get("gamma")
                .and_then(|(l, v)| b.parse_f64(l, "gamma", v))
                .unwrap_or(1.0);
            let cap = match section.get("cap") {
                Some((_, "none")) => None,
                Some((l, v)) => b.parse_f64(l, "cap", v),
                None => Some(crate::potential::DEFAULT_SINGULARITY_CAP),
            };
            match (alpha, dim) {
                (Some(alpha), Some(dim)) => {
                    if !(alpha > 0.0 && alpha < dim as f64) {
                        b.err(type_line, format!("riesz needs 0 < alpha < dim, got {alpha}/{dim}"));
                        None
                    } else {
                        Some(KernelDecl::Riesz {
                            alpha,
                            dim,
                            gamma,
                            cap,
                        })
                    }
                }
                _ => None,
            }
        }
        "bessel" => {
            let alpha = b
                .require(section, "alpha")
                .and_then(|(l, v)| b.parse_f64(l, "alpha", v));
            let dim = b
                .require(section, "dim")
                .and_then(|(l, v)| b.parse_usize(l, "dim", v));
            let a = section
                .get("a")
                .and_then(|(l, v)| b.parse_f64(l, "a", v))
                .unwrap_or(1.0);
            match (alpha, dim) {
                (Some(alpha), Some(dim)) if alpha > 0.0 && a > 0.0 => {
                    Some(KernelDecl::Bessel { alpha, dim, a })
                }
                (Some(_), Some(_)) => {
                    b.err(type_line, "bessel needs alpha > 0 and a > 0");
                    None
                }
                _ => None,
            }
        }
        "constant" => b
            .require(section, "value")
            .and_then(|(l, v)| b.parse_f64(l, "value", v))
            .map(|value| KernelDecl::Constant { value }),
        "diagonal" => Some(KernelDecl::Diagonal),
        "matrix" => b.require(section, "rows").and_then(|(line, text)| {
            let rows: Option<Vec<Vec<f64>>> = text
                .split(';')
                .map(|row| b.parse_f64_list(line, "rows", row.trim()))
                .collect();
            let rows = rows?;
            if rows.iter().any(|r| r.len() != rows[0].len()) {
                b.err(line, "matrix rows must all have the same length");
                return None;
            }
            if rows.iter().flatten().any(|&v| v < 0.0) {
                b.err(line, "kernel matrix entries must be nonnegative");
                return None;
            }
            Some(KernelDecl::Matrix { rows })
        }),
        other => {
            b.err(type_line, format!("unknown kernel type '{other}'"));
            None
        }
    };
    if let Some(decl) = decl {
        if config.kernels.insert(section.name.clone(), decl).is_some() {
            b.err(section.line, format!("duplicate kernel '{}'", section.name));
        }
    }
}

fn parse_points(b: &mut Builder, line: usize, key: &str, text: &str) -> Option<Vec<Vec<f64>>> {
    text.split(';')
        .map(|point| b.parse_f64_list(line, key, point.trim()))
        .collect()
}

fn build_pspace(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    let m_points = b
        .require(section, "m_points")
        .and_then(|(l, v)| parse_points(b, l, "m_points", v));
    let nu = b
        .require(section, "nu")
        .and_then(|(l, v)| b.parse_f64_list(l, "nu", v));
    let eval_points = b
        .require(section, "eval_points")
        .and_then(|(l, v)| parse_points(b, l, "eval_points", v));
    let (Some(m_points), Some(nu), Some(eval_points)) = (m_points, nu, eval_points) else {
        return;
    };
    if m_points.len() != nu.len() {
        b.err(
            section.line,
            format!("{} m_points but {} nu weights", m_points.len(), nu.len()),
        );
        return;
    }
    if nu.iter().any(|&w| !(w > 0.0)) {
        b.err(section.line, "nu weights must be positive");
        return;
    }
    if config
        .pspaces
        .insert(
            section.name.clone(),
            PspaceDecl {
                m_points,
                nu,
                eval_points,
            },
        )
        .is_some()
    {
        b.err(section.line, format!("duplicate pspace '{}'", section.name));
    }
}

fn build_set(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    let Some((_, space)) = b.require(section, "space") else {
        return;
    };
    let split = |v: &str| -> Vec<String> {
        if v.trim().is_empty() {
            Vec::new()
        } else {
            v.split(',').map(|s| s.trim().to_string()).collect()
        }
    };
    let leaves = section.get("leaves").map(|(_, v)| split(v)).unwrap_or_default();
    let paths = section.get("paths").map(|(_, v)| split(v)).unwrap_or_default();
    if config
        .sets
        .insert(
            section.name.clone(),
            SetDecl {
                space: space.to_string(),
                leaves,
                paths,
            },
        )
        .is_some()
    {
        b.err(section.line, format!("duplicate set '{}'", section.name));
    }
}

fn build_task(b: &mut Builder, section: &RawSection, config: &mut ExperimentConfig) {
    if config.tasks.iter().any(|t| t.id == section.name) {
        b.err(section.line, format!("duplicate task '{}'", section.name));
        return;
    }
    let Some((kind_line, kind)) = b.require(section, "kind") else {
        return;
    };
    let kind = match kind {
        "capacity" => match (b.require(section, "tower"), b.require(section, "set")) {
            (Some((_, tower)), Some((_, set))) => Some(TaskKind::Capacity {
                tower: tower.to_string(),
                set: set.to_string(),
            }),
            _ => None,
        },
        "join" => match (b.require(section, "handles"), b.require(section, "set")) {
            (Some((_, handles)), Some((_, set))) => {
                let greedy = matches!(section.get("mode"), Some((_, "greedy")));
                let restarts = section
                    .get("restarts")
                    .and_then(|(l, v)| b.parse_usize(l, "restarts", v))
                    .unwrap_or(5);
                Some(TaskKind::Join {
                    handles: handles.split(',').map(|s| s.trim().to_string()).collect(),
                    set: set.to_string(),
                    greedy,
                    restarts,
                })
            }
            _ => None,
        },
        "tilde" => match (b.require(section, "tower"), b.require(section, "set")) {
            (Some((_, tower)), Some((_, set))) => {
                let epsilons = section
                    .get("epsilons")
                    .and_then(|(l, v)| b.parse_f64_list(l, "epsilons", v));
                if let Some(eps) = &epsilons {
                    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                        b.err(section.line, "epsilons must lie in (0, 1)");
                    }
                }
                Some(TaskKind::Tilde {
                    tower: tower.to_string(),
                    set: set.to_string(),
                    epsilons,
                })
            }
            _ => None,
        },
        "hausdorff" => {
            let set = b.require(section, "set");
            let s = b
                .require(section, "s")
                .and_then(|(l, v)| b.parse_f64(l, "s", v));
            let deltas = b
                .require(section, "deltas")
                .and_then(|(l, v)| b.parse_f64_list(l, "deltas", v));
            match (set, s, deltas) {
                (Some((_, set)), Some(s), Some(deltas)) => {
                    if !(s > 0.0) {
                        b.err(kind_line, format!("s must be positive, got {s}"));
                    }
                    if deltas.windows(2).any(|w| w[1] >= w[0]) {
                        b.err(kind_line, "deltas must be strictly decreasing");
                    }
                    Some(TaskKind::Hausdorff {
                        set: set.to_string(),
                        s,
                        deltas,
                    })
                }
                _ => None,
            }
        }
        "game" => {
            let handle = b.require(section, "handle");
            let set = b.require(section, "set");
            let epsilon = b
                .require(section, "epsilon")
                .and_then(|(l, v)| b.parse_f64(l, "epsilon", v));
            match (handle, set, epsilon) {
                (Some((_, handle)), Some((_, set)), Some(epsilon)) => {
                    if !(epsilon > 0.0) {
                        b.err(kind_line, format!("epsilon must be positive, got {epsilon}"));
                    }
                    Some(TaskKind::Game {
                        handle: handle.to_string(),
                        set: set.to_string(),
                        epsilon,
                        dump_strategy: matches!(section.get("dump_strategy"), Some((_, "true"))),
                    })
                }
                _ => None,
            }
        }
        "verify" => b.require(section, "handle").map(|(_, handle)| {
            let properties = section
                .get("properties")
                .map(|(_, v)| v.split(',').map(|s| s.trim().to_string()).collect())
                .unwrap_or_default();
            let randomized = section.get("trials").and_then(|(l, v)| {
                b.parse_usize(l, "trials", v).map(|trials| {
                    let seed = section
                        .get("rng_seed")
                        .and_then(|(l2, v2)| match v2.parse() {
                            Ok(s) => Some(s),
                            Err(_) => {
                                b.err(l2, format!("rng_seed: expected an integer, got '{v2}'"));
                                None
                            }
                        });
                    (trials, seed)
                })
            });
            let tolerance = section
                .get("tolerance")
                .and_then(|(l, v)| b.parse_f64(l, "tolerance", v))
                .unwrap_or(1e-9);
            TaskKind::Verify {
                handle: handle.to_string(),
                properties,
                randomized,
                tolerance,
            }
        }),
        "potential" => {
            let pspace = b.require(section, "pspace");
            let kernel = b.require(section, "kernel");
            let p = b
                .require(section, "p")
                .and_then(|(l, v)| b.parse_f64(l, "p", v));
            let e = b
                .require(section, "e")
                .and_then(|(l, v)| b.parse_usize_list(l, "e", v));
            match (pspace, kernel, p, e) {
                (Some((_, pspace)), Some((_, kernel)), Some(p), Some(e)) => {
                    if p < 1.0 {
                        b.err(kind_line, format!("p must be >= 1, got {p}"));
                    } else if p == 1.0 {
                        b.warnings.push(format!(
                            "task {}: p = 1 voids the uniqueness contract (capacity values only)",
                            section.name
                        ));
                    }
                    let stability_b = section
                        .get("stability_b")
                        .and_then(|(l, v)| b.parse_usize_list(l, "stability_b", v));
                    Some(TaskKind::Potential {
                        pspace: pspace.to_string(),
                        kernel: kernel.to_string(),
                        p,
                        e: e.clone(),
                        tol: section
                            .get("tol")
                            .and_then(|(l, v)| b.parse_f64(l, "tol", v))
                            .unwrap_or(1e-6),
                        trace: matches!(section.get("trace"), Some((_, "true"))),
                        qp_check: matches!(section.get("qp_check"), Some((_, "true"))),
                        tilde: matches!(section.get("tilde"), Some((_, "true"))),
                        stability_b,
                    })
                }
                _ => None,
            }
        }
        other => {
            b.err(kind_line, format!("unknown task kind '{other}'"));
            None
        }
    };
    if let Some(kind) = kind {
        config.tasks.push(TaskDecl {
            id: section.name.clone(),
            kind,
        });
    }
}

fn check_set_coordinates(
    b: &mut Builder,
    config: &ExperimentConfig,
    name: &str,
    decl: &SetDecl,
    line: usize,
) {
    let Some(space) = config.spaces.get(&decl.space) else {
        b.err(line, format!("set '{name}' references undeclared space '{}'", decl.space));
        return;
    };
    for leaf in &decl.leaves {
        match parse_path(leaf, &space.arities) {
            Some(coords) if coords.len() == space.arities.len() => {}
            _ => b.err(line, format!("set '{name}': '{leaf}' is not a leaf of '{}'", decl.space)),
        }
    }
    for path in &decl.paths {
        if parse_path(path, &space.arities).is_none() {
            b.err(line, format!("set '{name}': '{path}' is not a path of '{}'", decl.space));
        }
    }
}

/// Parses a path token: `root` for the empty path, a digit string when all
/// arities are below ten, a dash-separated list otherwise.
pub fn parse_path(token: &str, arities: &[usize]) -> Option<Vec<u32>> {
    if token == "root" {
        return Some(Vec::new());
    }
    let coords: Vec<u32> = if token.contains('-') {
        token
            .split('-')
            .map(|part| part.parse().ok())
            .collect::<Option<Vec<u32>>>()?
    } else {
        token
            .chars()
            .map(|c| c.to_digit(10))
            .collect::<Option<Vec<u32>>>()?
    };
    if coords.len() > arities.len() {
        return None;
    }
    for (i, &c) in coords.iter().enumerate() {
        if c as usize >= arities[i] {
            return None;
        }
    }
    Some(coords)
}

fn validate_references(
    b: &mut Builder,
    config: &ExperimentConfig,
    section_lines: &std::collections::BTreeMap<(String, String), usize>,
) {
    let line_of = |kind: &str, name: &str| -> usize {
        section_lines
            .get(&(kind.to_string(), name.to_string()))
            .copied()
            .unwrap_or(0)
    };
    for (name, tower) in &config.towers {
        match config.spaces.get(&tower.space) {
            None => b.err(
                line_of("tower", name),
                format!("tower '{name}' references undeclared space '{}'", tower.space),
            ),
            Some(space) => {
                if tower.levels.len() != space.arities.len() {
                    b.err(
                        line_of("tower", name),
                        format!(
                            "tower '{name}' has {} levels but space '{}' has depth {}",
                            tower.levels.len(),
                            tower.space,
                            space.arities.len()
                        ),
                    );
                } else {
                    for (i, level) in tower.levels.iter().enumerate() {
                        if let LevelDecl::WeightedP { weights, .. } = level {
                            if weights.len() != space.arities[i] {
                                b.err(
                                    line_of("tower", name),
                                    format!(
                                        "tower '{name}' level {i} has {} weights, arity is {}",
                                        weights.len(),
                                        space.arities[i]
                                    ),
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    for (name, handle) in &config.handles {
        match handle {
            HandleDecl::Tower { tower } => {
                if !config.towers.contains_key(tower) {
                    b.err(
                        line_of("handle", name),
                        format!("handle '{name}' references undeclared tower '{tower}'"),
                    );
                }
            }
            HandleDecl::Uniform { space } | HandleDecl::Table { space, .. } => {
                if !config.spaces.contains_key(space) {
                    b.err(
                        line_of("handle", name),
                        format!("handle '{name}' references undeclared space '{space}'"),
                    );
                }
            }
            HandleDecl::PointMass { space, leaf } => match config.spaces.get(space) {
                None => b.err(
                    line_of("handle", name),
                    format!("handle '{name}' references undeclared space '{space}'"),
                ),
                Some(decl) => {
                    if parse_path(leaf, &decl.arities)
                        .map(|c| c.len() != decl.arities.len())
                        .unwrap_or(true)
                    {
                        b.err(
                            line_of("handle", name),
                            format!("handle '{name}': '{leaf}' is not a leaf of '{space}'"),
                        );
                    }
                }
            },
        }
    }
    for (name, decl) in &config.sets {
        check_set_coordinates(b, config, name, decl, line_of("set", name));
    }

    let check_set = |b: &mut Builder, line: usize, task: &str, set: &str| {
        if !config.sets.contains_key(set) {
            b.err(line, format!("task '{task}' references undeclared set '{set}'"));
            false
        } else {
            true
        }
    };
    let check_same_space =
        |b: &mut Builder, line: usize, task: &str, set: &str, space: Option<&str>| {
            if let (Some(set_decl), Some(space)) = (config.sets.get(set), space) {
                if set_decl.space != space {
                    b.err(
                        line,
                        format!(
                            "task '{task}': set '{set}' lives on '{}', expected '{space}'",
                            set_decl.space
                        ),
                    );
                }
            }
        };

    for task in &config.tasks {
        let id = &task.id;
        let line = line_of("task", id);
        match &task.kind {
            TaskKind::Capacity { tower, set } | TaskKind::Tilde { tower, set, .. } => {
                if !config.towers.contains_key(tower) {
                    b.err(line, format!("task '{id}' references undeclared tower '{tower}'"));
                }
                if check_set(b, line, id, set) {
                    check_same_space(
                        b,
                        line,
                        id,
                        set,
                        config.towers.get(tower).map(|t| t.space.as_str()),
                    );
                }
            }
            TaskKind::Join { handles, set, .. } => {
                let mut spaces = Vec::new();
                for handle in handles {
                    match config.handle_space(handle) {
                        None => b.err(
                            line,
                            format!("task '{id}' references undeclared handle '{handle}'"),
                        ),
                        Some(space) => spaces.push(space),
                    }
                }
                spaces.dedup();
                if spaces.len() > 1 {
                    b.err(line, format!("task '{id}': join handles live on different spaces"));
                }
                if check_set(b, line, id, set) {
                    check_same_space(b, line, id, set, spaces.first().copied());
                }
            }
            TaskKind::Hausdorff { set, .. } => {
                check_set(b, line, id, set);
            }
            TaskKind::Game { handle, set, .. } => {
                let space = config.handle_space(handle);
                if space.is_none() {
                    b.err(line, format!("task '{id}' references undeclared handle '{handle}'"));
                }
                if check_set(b, line, id, set) {
                    check_same_space(b, line, id, set, space);
                }
            }
            TaskKind::Verify {
                handle, properties, ..
            } => {
                if config.handle_space(handle).is_none() {
                    b.err(line, format!("task '{id}' references undeclared handle '{handle}'"));
                }
                for property in properties {
                    if crate::verify::PropertyName::parse(property).is_none() {
                        b.err(line, format!("task '{id}': unknown property '{property}'"));
                    }
                }
            }
            TaskKind::Potential {
                pspace,
                kernel,
                e,
                stability_b,
                ..
            } => {
                let pdecl = config.pspaces.get(pspace);
                if pdecl.is_none() {
                    b.err(line, format!("task '{id}' references undeclared pspace '{pspace}'"));
                }
                if !config.kernels.contains_key(kernel) {
                    b.err(line, format!("task '{id}' references undeclared kernel '{kernel}'"));
                }
                if let Some(pdecl) = pdecl {
                    let n = pdecl.eval_points.len();
                    for &x in e {
                        if x >= n {
                            b.err(
                                line,
                                format!("task '{id}': eval index {x} out of range (n = {n})"),
                            );
                        }
                    }
                    if let Some(bset) = stability_b {
                        for &x in bset {
                            if x >= n {
                                b.err(
                                    line,
                                    format!("task '{id}': eval index {x} out of range (n = {n})"),
                                );
                            }
                        }
                        if !e.iter().all(|x| bset.contains(x)) {
                            b.err(line, format!("task '{id}': stability needs e ⊆ stability_b"));
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
seed = 7

[space t22]
arities = 2,2

[tower u22]
space = t22
level = wp p=1 w=1/2,1/2
level = wp p=1 w=1/2,1/2

[set half]
space = t22
paths = 0

[task cap1]
kind = capacity
tower = u22
set = half
";

    #[test]
    fn minimal_config_parses() {
        let config = parse_config(MINIMAL).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.tasks.len(), 1);
        assert_eq!(config.tasks[0].kind.kind_name(), "capacity");
        assert!(config.warnings.is_empty());
    }

    #[test]
    fn dangling_reference_is_named() {
        let text = MINIMAL.replace("set = half", "set = B7");
        let issues = parse_config(&text).unwrap_err();
        assert!(issues.iter().any(|i| i.message.contains("B7")), "{issues:?}");
    }

    #[test]
    fn p_equal_one_warns_but_parses() {
        let text = format!(
            "{MINIMAL}
[pspace ps]
m_points = 0;1
nu = 0.5,0.5
eval_points = 0;1

[kernel diag]
type = diagonal

[task pot1]
kind = potential
pspace = ps
kernel = diag
p = 1
e = 0,1
"
        );
        let config = parse_config(&text).unwrap();
        assert!(config
            .warnings
            .iter()
            .any(|w| w.contains("uniqueness contract")));
    }

    #[test]
    fn all_errors_are_collected_not_just_the_first() {
        let text = "
[space bad]
arities = 0,2

[tower t]
space = nowhere
level = wp p=0.5 w=1/2,1/2

[task x]
kind = unknown_kind
";
        let issues = parse_config(text).unwrap_err();
        assert!(issues.len() >= 3, "{issues:?}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "seed = 1\nnot a valid line\n[space s]\narities = 2";
        let issues = parse_config(text).unwrap_err();
        assert_eq!(issues[0].line, 2);
    }

    #[test]
    fn tower_level_arity_mismatch_is_caught() {
        let text = MINIMAL.replace("w=1/2,1/2\nlevel = wp p=1 w=1/2,1/2", "w=1/3,1/3,1/3\nlevel = wp p=1 w=1/2,1/2");
        let issues = parse_config(&text).unwrap_err();
        assert!(issues.iter().any(|i| i.message.contains("weights")));
    }

    #[test]
    fn path_tokens_parse_in_both_notations() {
        assert_eq!(parse_path("root", &[2, 2]), Some(vec![]));
        assert_eq!(parse_path("01", &[2, 2]), Some(vec![0, 1]));
        assert_eq!(parse_path("0-11", &[2, 12]), Some(vec![0, 11]));
        assert_eq!(parse_path("2", &[2]), None);
        assert_eq!(parse_path("000", &[2, 2]), None);
    }
}
