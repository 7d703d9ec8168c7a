//! Line-based `key = value` run configuration.
//!
//! The grammar is deliberately flat: one `key = value` per line, `#` starts
//! a comment, no sections, no nesting. Unknown keys are rejected with the
//! offending line number, as are duplicates.

use std::collections::BTreeMap;
use std::path::PathBuf;

use henle_core::layers::LimitInit;
use henle_core::Params;

/// Which system(s) a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Full,
    Reduced,
    Both,
}

impl ModelChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelChoice::Full => "full",
            ModelChoice::Reduced => "reduced",
            ModelChoice::Both => "both",
        }
    }
}

/// Named data preset or external files.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Preset { name: String },
    File { data: PathBuf, ub: Option<PathBuf> },
}

/// Fixed-point solver settings (used by cross-validate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    /// Window length override; the solver default is half the contraction
    /// bound.
    pub window: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub literal_q2_coupling: bool,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub n: usize,
    pub model: ModelChoice,
    pub data: DataSpec,
    /// Constant level of the `constant` preset.
    pub constant_value: f64,
    /// Seed of the `random-bv` preset.
    pub seed: u64,
    /// Relaxation parameters for sweep commands, strictly decreasing.
    pub eps_list: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub snapshot_stride: usize,
    pub regularize: bool,
    /// Cutoff/mollification scale used when `regularize` is on.
    pub delta: f64,
    pub limit_init: LimitInit,
    pub picard: PicardSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::default(),
            n: 200,
            model: ModelChoice::Full,
            data: DataSpec::Preset { name: "constant".into() },
            constant_value: 1.0,
            seed: 0,
            eps_list: Vec::new(),
            out_dir: None,
            snapshot_stride: 1,
            regularize: false,
            delta: 0.05,
            limit_init: LimitInit::Average,
            picard: PicardSettings {
                window: None,
                tol: 1e-10,
                max_iter: 60,
                literal_q2_coupling: false,
            },
        }
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "k1",
    "k2",
    "eps",
    "vm",
    "km",
    "length",
    "t_final",
    "n",
    "model",
    "preset",
    "constant_value",
    "seed",
    "data_file",
    "ub_file",
    "eps_list",
    "out_dir",
    "snapshot_stride",
    "regularize",
    "delta",
    "limit_init",
    "picard_window",
    "picard_tol",
    "picard_max_iter",
    "literal_q2_coupling",
];

pub const PRESETS: &[&str] = &["constant", "step", "bump", "random-bv"];

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64, String> {
    v.parse::<f64>()
        .map_err(|_| format!("line {line}: {key} expects a number, got '{v}'"))
}

fn parse_usize(v: &str, line: usize, key: &str) -> Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("line {line}: {key} expects a nonnegative integer, got '{v}'"))
}

fn parse_bool(v: &str, line: usize, key: &str) -> Result<bool, String> {
    match v {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(format!("line {line}: {key} expects on/off, got '{v}'")),
    }
}

/// Parses a comma-separated list of relaxation parameters.
pub fn parse_eps_list(v: &str) -> Result<Vec<f64>, String> {
    let list: Result<Vec<f64>, _> = v
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad eps value '{s}'")))
        .collect();
    let list = list?;
    if list.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err("eps values must be positive".into());
    }
    if list.windows(2).any(|w| w[0] <= w[1]) {
        return Err("eps_list must be strictly decreasing".into());
    }
    Ok(list)
}

/// Parses the configuration text, filling defaults for absent keys and
/// validating the result. Errors name the offending line.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let stripped = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(format!("line {lineno}: expected 'key = value', got '{stripped}'"));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(format!("line {lineno}: unknown key '{key}'"));
        }
        if let Some((first, _)) = raw.get(&key) {
            return Err(format!(
                "line {lineno}: duplicate key '{key}' (first set on line {first})"
            ));
        }
        raw.insert(key, (lineno, value));
    }

    let mut cfg = RunConfig::default();
    let mut p = cfg.params;
    let mut data_file: Option<PathBuf> = None;
    let mut ub_file: Option<PathBuf> = None;
    let mut preset: Option<String> = None;

    for (key, (line, value)) in &raw {
        let line = *line;
        match key.as_str() {
            "alpha" => p.alpha = parse_f64(value, line, key)?,
            "k1" => p.k1 = parse_f64(value, line, key)?,
            "k2" => p.k2 = parse_f64(value, line, key)?,
            "eps" => p.eps = parse_f64(value, line, key)?,
            "vm" => p.vm = parse_f64(value, line, key)?,
            "km" => p.km = parse_f64(value, line, key)?,
            "length" => p.length = parse_f64(value, line, key)?,
            "t_final" => p.t_final = parse_f64(value, line, key)?,
            "n" => cfg.n = parse_usize(value, line, key)?,
            "model" => {
                cfg.model = match value.as_str() {
                    "full" => ModelChoice::Full,
                    "reduced" => ModelChoice::Reduced,
                    "both" => ModelChoice::Both,
                    _ => {
                        return Err(format!(
                            "line {line}: model must be full, reduced or both, got '{value}'"
                        ))
                    }
                }
            }
            "preset" => {
                if !PRESETS.contains(&value.as_str()) {
                    return Err(format!(
                        "line {line}: unknown preset '{value}' (expected one of {})",
                        PRESETS.join(", ")
                    ));
                }
                preset = Some(value.clone());
            }
            "constant_value" => cfg.constant_value = parse_f64(value, line, key)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| format!("line {line}: seed expects an integer, got '{value}'"))?
            }
            "data_file" => data_file = Some(PathBuf::from(value)),
            "ub_file" => ub_file = Some(PathBuf::from(value)),
            "eps_list" => {
                cfg.eps_list =
                    parse_eps_list(value).map_err(|e| format!("line {line}: {e}"))?
            }
            "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
            "snapshot_stride" => cfg.snapshot_stride = parse_usize(value, line, key)?,
            "regularize" => cfg.regularize = parse_bool(value, line, key)?,
            "delta" => cfg.delta = parse_f64(value, line, key)?,
            "limit_init" => {
                cfg.limit_init = match value.as_str() {
                    "average" => LimitInit::Average,
                    "sum" => LimitInit::LiteralSum,
                    _ => {
                        return Err(format!(
                            "line {line}: limit_init must be average or sum, got '{value}'"
                        ))
                    }
                }
            }
            "picard_window" => cfg.picard.window = Some(parse_f64(value, line, key)?),
            "picard_tol" => cfg.picard.tol = parse_f64(value, line, key)?,
            "picard_max_iter" => cfg.picard.max_iter = parse_usize(value, line, key)?,
            "literal_q2_coupling" => {
                cfg.picard.literal_q2_coupling = parse_bool(value, line, key)?
            }
            _ => unreachable!("key filtered above"),
        }
    }

    cfg.params =
        Params::new(p.alpha, p.k1, p.k2, p.eps, p.vm, p.km, p.length, p.t_final)
            .map_err(|e| e.to_string())?;

    cfg.data = match (preset, data_file) {
        (Some(_), Some(_)) => {
            return Err("preset and data_file are mutually exclusive".into());
        }
        (None, Some(data)) => DataSpec::File { data, ub: ub_file },
        (maybe_preset, None) => {
            if ub_file.is_some() {
                return Err("ub_file requires data_file".into());
            }
            DataSpec::Preset { name: maybe_preset.unwrap_or_else(|| "constant".into()) }
        }
    };

    if cfg.n < 2 {
        return Err("n must be at least 2".into());
    }
    if cfg.snapshot_stride == 0 {
        return Err("snapshot_stride must be at least 1".into());
    }
    if cfg.delta.is_nan() || cfg.delta <= 0.0 {
        return Err("delta must be positive".into());
    }
    if cfg.picard.tol.is_nan() || cfg.picard.tol <= 0.0 {
        return Err("picard_tol must be positive".into());
    }
    if cfg.picard.max_iter == 0 {
        return Err("picard_max_iter must be at least 1".into());
    }
    Ok(cfg)
}

/// Serializes the fully resolved configuration (defaults included) back into
/// the config grammar, with a fixed key order so identical runs produce
/// identical bytes.
pub fn manifest(cfg: &RunConfig) -> String {
    use crate::csv::fmt_f64;
    let p = &cfg.params;
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("alpha", fmt_f64(p.alpha));
    push("k1", fmt_f64(p.k1));
    push("k2", fmt_f64(p.k2));
    push("eps", fmt_f64(p.eps));
    push("vm", fmt_f64(p.vm));
    push("km", fmt_f64(p.km));
    push("length", fmt_f64(p.length));
    push("t_final", fmt_f64(p.t_final));
    push("n", cfg.n.to_string());
    push("model", cfg.model.as_str().to_string());
    match &cfg.data {
        DataSpec::Preset { name } => push("preset", name.clone()),
        DataSpec::File { data, ub } => {
            push("data_file", data.display().to_string());
            if let Some(ub) = ub {
                push("ub_file", ub.display().to_string());
            }
        }
    }
    push("constant_value", fmt_f64(cfg.constant_value));
    push("seed", cfg.seed.to_string());
    if !cfg.eps_list.is_empty() {
        let joined: Vec<String> = cfg.eps_list.iter().map(|e| fmt_f64(*e)).collect();
        push("eps_list", joined.join(","));
    }
    push("snapshot_stride", cfg.snapshot_stride.to_string());
    push("regularize", if cfg.regularize { "on" } else { "off" }.to_string());
    push("delta", fmt_f64(cfg.delta));
    push(
        "limit_init",
        match cfg.limit_init {
            LimitInit::Average => "average",
            LimitInit::LiteralSum => "sum",
        }
        .to_string(),
    );
    if let Some(w) = cfg.picard.window {
        push("picard_window", fmt_f64(w));
    }
    push("picard_tol", fmt_f64(cfg.picard.tol));
    push("picard_max_iter", cfg.picard.max_iter.to_string());
    push(
        "literal_q2_coupling",
        if cfg.picard.literal_q2_coupling { "on" } else { "off" }.to_string(),
    );
    out
}
