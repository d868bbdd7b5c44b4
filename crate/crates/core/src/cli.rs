//! Command-line surface: settings, validation and the five commands.
//!
//! Every setting can come from a flag or from a TOML `--config` file using
//! the same names (`power-iters = 50000`); flags win. Each command checks all
//! of its settings before doing any work and reports every problem at once.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flm::{all_pairs, build_hypothesis, component_f, estimate_sigma, f_global, DesignSpec, HypothesisKind};
use crate::fourier::decompose;
use crate::io::{layout_from_meta, load_curves, load_meta, write_table_to, OutputHeader, Table};
use crate::montecarlo::{cutoff, power, run_test, StatKind, StatSpec, MIN_NULL_ITERATIONS};
use crate::numerics::{derive_seed, f_sf};
use crate::rates::{boundary_rate_scan, dyadic_grid, rate_probe, s_tilde, DeltaRule, PRule};
use crate::simstudy::{calibrate_lambda, run_figure4, smooth_theta, spiked_theta, Figure4Config};
use crate::teststats::{make_weights, WeightScheme};

#[derive(Debug, Parser)]
#[command(name = "fdtest", version, about = "Global hypothesis tests for functional data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fourier coefficients of every curve: columns (replicate, j, unit, coefficient)
    Decompose(Settings),
    /// Weighted global F test of a group hypothesis on curve data
    Test(Settings),
    /// Simulated power of one statistic at one alternative
    Power(Settings),
    /// Power curves over the spiked and smooth alternative classes
    Figure4(Settings),
    /// Rates-of-testing diagnostics over a dyadic grid of sample sizes
    Rates(Settings),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose(_) => "decompose",
            Command::Test(_) => "test",
            Command::Power(_) => "power",
            Command::Figure4(_) => "figure4",
            Command::Rates(_) => "rates",
        }
    }

    pub fn settings(&self) -> &Settings {
        match self {
            Command::Decompose(s) | Command::Test(s) | Command::Power(s) | Command::Figure4(s) | Command::Rates(s) => s,
        }
    }

    /// Settings each command reads.
    fn accepted(&self) -> &'static [&'static str] {
        match self {
            Command::Decompose(_) => &["input", "out", "p"],
            Command::Test(_) => &["input", "meta", "out", "seed", "iters", "alpha", "p", "weights", "hypothesis", "pairs"],
            Command::Power(_) => &[
                "out",
                "seed",
                "iters",
                "power_iters",
                "alpha",
                "p",
                "n",
                "weights",
                "stat",
                "alternative",
                "lambda",
                "target_power",
            ],
            Command::Figure4(_) => &["out", "seed", "iters", "power_iters", "alpha", "p", "n", "target_power", "grid_points"],
            Command::Rates(_) => &["out", "weights", "s", "m", "p_rule", "delta_rule", "n_min_log2", "n_max_log2"],
        }
    }
}

/// All settings. Each command uses a subset; see `--help` of the command.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// TOML file with default settings
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Wide curve CSV: time column, one column per unit
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Unit metadata CSV with columns unit, group, covariate
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Output CSV (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo iterations for null distributions
    #[arg(long)]
    pub iters: Option<usize>,
    /// Monte Carlo iterations per power point (defaults to --iters)
    #[arg(long)]
    pub power_iters: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of frequencies
    #[arg(long)]
    pub p: Option<usize>,
    /// Sample size of the discrete model
    #[arg(long)]
    pub n: Option<usize>,
    /// opt | uwq | cvm | fzz:s=<v>
    #[arg(long)]
    pub weights: Option<String>,
    /// Weights as above, or an | ht:s=<v> | htbar:lo=<a>,hi=<b>
    #[arg(long)]
    pub stat: Option<String>,
    /// same-slope | common-trend
    #[arg(long)]
    pub hypothesis: Option<String>,
    /// all, or group label pairs such as north:south,north:east
    #[arg(long)]
    pub pairs: Option<String>,
    /// spiked:j0=<k> | smooth:b=<v>
    #[arg(long)]
    pub alternative: Option<String>,
    /// Signal energy sum theta^2 (calibrated when omitted)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Power of the unweighted test used to calibrate lambda
    #[arg(long)]
    pub target_power: Option<f64>,
    /// Smoothness for rates diagnostics
    #[arg(long)]
    pub s: Option<f64>,
    /// Sobolev radius for rates diagnostics
    #[arg(long)]
    pub m: Option<f64>,
    /// adaptive | minimax | fixed:<p> | power:<exponent>
    #[arg(long)]
    pub p_rule: Option<String>,
    /// adaptive | minimax | power:<exponent>
    #[arg(long)]
    pub delta_rule: Option<String>,
    /// Smallest sample size is 2^this
    #[arg(long)]
    pub n_min_log2: Option<u32>,
    /// Largest sample size is 2^this
    #[arg(long)]
    pub n_max_log2: Option<u32>,
    /// Alternatives per class
    #[arg(long)]
    pub grid_points: Option<usize>,
}

macro_rules! with_settings_fields {
    ($mac:ident ! ($($args:tt)*)) => {
        $mac!($($args)*; input, meta, out, seed, iters, power_iters, alpha, p, n, weights, stat, hypothesis,
            pairs, alternative, lambda, target_power, s, m, p_rule, delta_rule, n_min_log2, n_max_log2, grid_points)
    };
}

macro_rules! merge_settings {
    ($primary:ident, $fallback:ident; $($f:ident),*) => {
        Settings {
            config: $primary.config.clone(),
            $($f: $primary.$f.clone().or($fallback.$f.clone()),)*
        }
    };
}

macro_rules! provided_settings {
    ($s:ident; $($f:ident),*) => {{
        let mut names: Vec<&'static str> = Vec::new();
        $(if $s.$f.is_some() {
            names.push(stringify!($f));
        })*
        names
    }};
}

impl Settings {
    /// Flags override values from the `--config` file.
    pub fn resolve(&self) -> Result<Settings> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(format!("reading {}", path.display())))?;
        let file: Settings = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(vec![format!("{}: {}", path.display(), e.message())]))?;
        let cli = self;
        Ok(with_settings_fields!(merge_settings!(cli, file)))
    }

    fn provided(&self) -> Vec<&'static str> {
        let s = self;
        with_settings_fields!(provided_settings!(s))
    }
}

fn flag(name: &str) -> String {
    format!("--{}", name.replace('_', "-"))
}

/// Collects violations so they can be reported together.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    /// Records a parse failure and returns the parsed value if any.
    fn take<T>(&mut self, r: std::result::Result<T, String>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(e);
                None
            }
        }
    }

    fn finish(self) -> Result<()> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(self.0))
        }
    }
}

fn parse_key_value(spec: &str, body: &str, key: &str) -> std::result::Result<f64, String> {
    body.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| format!("cannot read {key}=<number> from '{spec}'"))
}

/// `opt`, `uwq`, `cvm` or `fzz:s=<v>`.
pub fn parse_weights(spec: &str) -> std::result::Result<WeightScheme, String> {
    match spec.trim() {
        "opt" => Ok(WeightScheme::Opt),
        "uwq" => Ok(WeightScheme::Uwq),
        "cvm" => Ok(WeightScheme::Cvm),
        other => match other.split_once(':') {
            Some(("fzz", body)) => {
                let s = parse_key_value(spec, body, "s")?;
                if s > 0.5 {
                    Ok(WeightScheme::Fzz { s })
                } else {
                    Err(format!("fzz needs s > 1/2, got {s}"))
                }
            }
            _ => Err(format!("unknown weights '{spec}' (expected opt, uwq, cvm or fzz:s=<v>)")),
        },
    }
}

/// A weight scheme, `an`, `ht:s=<v>` or `htbar:lo=<a>,hi=<b>`.
pub fn parse_stat(spec: &str, alpha: f64) -> std::result::Result<StatKind, String> {
    let trimmed = spec.trim();
    if trimmed == "an" {
        return Ok(StatKind::AdaptiveNeyman);
    }
    match trimmed.split_once(':') {
        Some(("ht", body)) => Ok(StatKind::Ht {
            s: parse_key_value(spec, body, "s")?,
        }),
        Some(("htbar", body)) => {
            let (lo, hi) = body
                .split_once(',')
                .ok_or_else(|| format!("htbar needs lo=<a>,hi=<b>, got '{spec}'"))?;
            Ok(StatKind::HtBar {
                s_lo: parse_key_value(spec, lo, "lo")?,
                s_hi: parse_key_value(spec, hi, "hi")?,
                alpha,
            })
        }
        _ => parse_weights(spec).map(StatKind::Quadratic).map_err(|_| {
            format!("unknown statistic '{spec}' (expected opt, uwq, cvm, fzz:s=<v>, an, ht:s=<v> or htbar:lo=<a>,hi=<b>)")
        }),
    }
}

/// An alternative of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alternative {
    Spiked { j0: usize },
    Smooth { b: f64 },
}

impl Alternative {
    pub fn label(&self) -> String {
        match self {
            Alternative::Spiked { j0 } => format!("spiked:j0={j0}"),
            Alternative::Smooth { b } => format!("smooth:b={b}"),
        }
    }

    pub fn theta(&self, lambda: f64, p: usize) -> Result<Vec<f64>> {
        match *self {
            Alternative::Spiked { j0 } => spiked_theta(j0, lambda, p),
            Alternative::Smooth { b } => smooth_theta(b, lambda, p),
        }
    }
}

pub fn parse_alternative(spec: &str) -> std::result::Result<Alternative, String> {
    match spec.trim().split_once(':') {
        Some(("spiked", body)) => {
            let j0 = parse_key_value(spec, body, "j0")?;
            if j0 >= 1.0 && j0.fract() == 0.0 {
                Ok(Alternative::Spiked { j0: j0 as usize })
            } else {
                Err(format!("j0 must be a positive integer, got {j0}"))
            }
        }
        Some(("smooth", body)) => {
            let b = parse_key_value(spec, body, "b")?;
            if b > 0.0 && b < 1.0 {
                Ok(Alternative::Smooth { b })
            } else {
                Err(format!("b must lie in (0, 1), got {b}"))
            }
        }
        _ => Err(format!("unknown alternative '{spec}' (expected spiked:j0=<k> or smooth:b=<v>)")),
    }
}

pub fn parse_hypothesis(spec: &str) -> std::result::Result<HypothesisKind, String> {
    match spec.trim() {
        "same-slope" => Ok(HypothesisKind::SameSlope),
        "common-trend" => Ok(HypothesisKind::CommonTrend),
        _ => Err(format!("unknown hypothesis '{spec}' (expected same-slope or common-trend)")),
    }
}

/// `all`, or comma-separated `a:b` pairs of group labels; zero-based output.
pub fn parse_pairs(spec: &str, groups: &[String]) -> std::result::Result<Vec<(usize, usize)>, String> {
    if spec.trim() == "all" {
        return Ok(all_pairs(groups.len()));
    }
    let find = |label: &str| {
        groups
            .iter()
            .position(|g| g == label.trim())
            .ok_or_else(|| format!("unknown group '{}' in --pairs (groups: {})", label.trim(), groups.join(", ")))
    };
    spec.split(',')
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| format!("pair '{pair}' must look like <group>:<group>"))?;
            Ok((find(a)?, find(b)?))
        })
        .collect()
}

pub fn parse_p_rule(spec: &str) -> std::result::Result<PRule, String> {
    match spec.trim() {
        "adaptive" => Ok(PRule::AdaptiveTaper),
        "minimax" => Ok(PRule::Minimax),
        other => match other.split_once(':') {
            Some(("fixed", v)) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|p| *p >= 1)
                .map(PRule::Fixed)
                .ok_or_else(|| format!("fixed p must be a positive integer, got '{v}'")),
            Some(("power", v)) => v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|e| *e > 0.0)
                .map(PRule::Power)
                .ok_or_else(|| format!("p exponent must be positive, got '{v}'")),
            _ => Err(format!("unknown p rule '{spec}' (expected adaptive, minimax, fixed:<p> or power:<e>)")),
        },
    }
}

pub fn parse_delta_rule(spec: &str) -> std::result::Result<DeltaRule, String> {
    match spec.trim() {
        "adaptive" => Ok(DeltaRule::AdaptiveTaper),
        "minimax" => Ok(DeltaRule::Minimax),
        other => match other.split_once(':') {
            Some(("power", v)) => v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|e| *e > 0.0)
                .map(DeltaRule::Power)
                .ok_or_else(|| format!("delta exponent must be positive, got '{v}'")),
            _ => Err(format!("unknown delta rule '{spec}' (expected adaptive, minimax or power:<e>)")),
        },
    }
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_ALPHA: f64 = 0.05;
const DATA_P: usize = 65;
const SIM_P: usize = 127;
const SIM_N: usize = 64;
const TEST_ITERATIONS: usize = 100_000;
const SIM_ITERATIONS: usize = 20_000;
const DEFAULT_TARGET_POWER: f64 = 0.4;

fn check_alpha(problems: &mut Problems, alpha: f64) {
    if !(alpha > 0.0 && alpha < 1.0) {
        problems.push(format!("--alpha must lie in (0, 1), got {alpha}"));
    }
}

fn check_iterations(problems: &mut Problems, name: &str, iters: usize, min: usize) {
    if iters < min {
        problems.push(format!("{} must be at least {min}, got {iters}", flag(name)));
    }
}

fn require<'a, T>(problems: &mut Problems, value: &'a Option<T>, name: &str) -> Option<&'a T> {
    if value.is_none() {
        problems.push(format!("{} is required", flag(name)));
    }
    value.as_ref()
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

/// Writes the frequencies of every curve as `(replicate, j, unit, coefficient)`.
pub fn cmd_decompose(s: &Settings) -> Result<Table> {
    let mut problems = Problems::default();
    let input = require(&mut problems, &s.input, "input");
    let p = s.p.unwrap_or(DATA_P);
    if p == 0 {
        problems.push("--p must be at least 1");
    }
    problems.finish()?;
    let input = input.expect("checked above");

    let loaded = load_curves(input, None)?;
    let coeffs = decompose(&loaded.curves, p)?;
    let mut rows = Vec::with_capacity(coeffs.coeffs.len());
    for i in 0..coeffs.n_rep {
        for j in 0..p {
            for (k, unit) in loaded.units.iter().enumerate() {
                rows.push(vec![(i + 1).to_string(), (j + 1).to_string(), unit.clone(), fmt_f(coeffs.get(i, j, k))]);
            }
        }
    }
    let mut header = OutputHeader::new("decompose");
    header
        .push("input", input.display())
        .push("p", p)
        .push("grid", format!("({}, {}] with r = {}", loaded.curves.grid.a(), loaded.curves.grid.b(), loaded.curves.grid.len()))
        .push("interpolated", loaded.interpolated);
    Ok(Table {
        header,
        columns: ["replicate", "j", "unit", "coefficient"].map(String::from).to_vec(),
        rows,
    })
}

/// Per-frequency F statistics and the weighted global test of a group hypothesis.
pub fn cmd_test(s: &Settings) -> Result<Table> {
    let mut problems = Problems::default();
    let input = require(&mut problems, &s.input, "input");
    let meta = require(&mut problems, &s.meta, "meta");
    let p = s.p.unwrap_or(DATA_P);
    if p == 0 {
        problems.push("--p must be at least 1");
    }
    let alpha = s.alpha.unwrap_or(DEFAULT_ALPHA);
    check_alpha(&mut problems, alpha);
    let iters = s.iters.unwrap_or(TEST_ITERATIONS);
    check_iterations(&mut problems, "iters", iters, MIN_NULL_ITERATIONS);
    let weights = problems.take(parse_weights(s.weights.as_deref().unwrap_or("opt")));
    let kind = problems.take(parse_hypothesis(s.hypothesis.as_deref().unwrap_or("same-slope")));
    let pairs_spec = s.pairs.clone().unwrap_or_else(|| "all".into());
    problems.finish()?;
    let (input, meta, weights, kind) = (
        input.expect("checked"),
        meta.expect("checked"),
        weights.expect("checked"),
        kind.expect("checked"),
    );
    let seed = s.seed.unwrap_or(DEFAULT_SEED);

    let loaded = load_curves(input, None)?;
    let units_meta = load_meta(meta)?;
    let (layout, groups) = layout_from_meta(&loaded.units, &units_meta)?;
    let pairs = parse_pairs(&pairs_spec, &groups).map_err(|e| Error::InvalidConfig(vec![e]))?;
    let l = build_hypothesis(kind, &pairs, &layout)?;
    let design = DesignSpec::new(layout.essence_matrix(), l)?;
    let coeffs = decompose(&loaded.curves, p)?;
    let f = component_f(&coeffs, &design).map_err(|e| e.context("per-frequency F statistics"))?;
    let (_, df2) = estimate_sigma(&coeffs, design.x())?;
    let n = coeffs.n_rep;
    let nu = design.nu();
    let w = make_weights(&weights, p, n)?;
    let global = f_global(&f, &w)?;
    let spec = StatSpec::new(StatKind::FGlobal { weights: weights.clone(), df2 }, p, n, nu);
    let outcome = run_test(&spec, global, alpha, iters, seed).map_err(|e| e.context("simulating the global null"))?;

    let mut rows = Vec::with_capacity(p);
    for (j, (fj, wj)) in f.iter().zip(&w).enumerate() {
        rows.push(vec![
            (j + 1).to_string(),
            fmt_f(*wj),
            fmt_f(*fj),
            fmt_f(f_sf(nu as f64, df2 as f64, *fj)?),
        ]);
    }
    let pair_labels: Vec<String> = pairs.iter().map(|(a, b)| format!("{}:{}", groups[*a], groups[*b])).collect();
    let mut header = OutputHeader::new("test");
    header
        .push("input", input.display())
        .push("meta", meta.display())
        .push("statistic", format!("F_global = sum_{{j=1}}^{{{p}}} w_j F_j"))
        .push("weights", weights.label())
        .push("hypothesis", s.hypothesis.as_deref().unwrap_or("same-slope"))
        .push("pairs", pair_labels.join(","))
        .push("groups", groups.join(","))
        .push("p", p)
        .push("nu", nu)
        .push("df2", df2)
        .push("interpolated", loaded.interpolated)
        .push("seed", seed)
        .push("iterations", iters)
        .push("alpha", alpha)
        .push("f_global", fmt_f(global))
        .push("cutoff", fmt_f(outcome.cutoff))
        .push("p_value", fmt_f(outcome.p_value))
        .push("reject", outcome.reject);
    Ok(Table {
        header,
        columns: ["j", "weight", "f", "p_value"].map(String::from).to_vec(),
        rows,
    })
}

/// Power of one statistic at one alternative.
pub fn cmd_power(s: &Settings) -> Result<Table> {
    let mut problems = Problems::default();
    let p = s.p.unwrap_or(SIM_P);
    let n = s.n.unwrap_or(SIM_N);
    if p == 0 || n == 0 {
        problems.push("--p and --n must be positive");
    }
    let alpha = s.alpha.unwrap_or(DEFAULT_ALPHA);
    check_alpha(&mut problems, alpha);
    let iters = s.iters.unwrap_or(SIM_ITERATIONS);
    check_iterations(&mut problems, "iters", iters, MIN_NULL_ITERATIONS);
    let power_iters = s.power_iters.unwrap_or(iters);
    check_iterations(&mut problems, "power_iters", power_iters, 1);
    let stat_spec = s.stat.clone().or_else(|| s.weights.clone()).unwrap_or_else(|| "uwq".into());
    let kind = problems.take(parse_stat(&stat_spec, alpha));
    let alternative = require(&mut problems, &s.alternative, "alternative").and_then(|a| problems.take(parse_alternative(a)));
    if let Some(Alternative::Spiked { j0 }) = alternative {
        if j0 > p {
            problems.push(format!("j0 = {j0} exceeds p = {p}"));
        }
    }
    if let Some(l) = s.lambda {
        if !(l >= 0.0) || !l.is_finite() {
            problems.push(format!("--lambda must be finite and >= 0, got {l}"));
        }
    }
    let target = s.target_power.unwrap_or(DEFAULT_TARGET_POWER);
    if !(target >= alpha && target < 1.0) {
        problems.push(format!("--target-power must lie in [alpha, 1), got {target}"));
    }
    problems.finish()?;
    let (kind, alternative) = (kind.expect("checked"), alternative.expect("checked"));
    let seed = s.seed.unwrap_or(DEFAULT_SEED);

    let lambda = match s.lambda {
        Some(l) => l,
        None => calibrate_lambda(p, n, 1, alpha, target)?,
    };
    let theta = alternative.theta(lambda, p)?;
    let label = kind.label();
    let prepared = StatSpec::new(kind, p, n, 1).prepare(iters, derive_seed(seed, &[1]))?;
    let c = cutoff(&prepared.null_sample(iters, derive_seed(seed, &[2]))?, alpha)?;
    let est = power(&prepared, &theta, c, n, power_iters, derive_seed(seed, &[3]))?;

    let mut header = OutputHeader::new("power");
    header
        .push("p", p)
        .push("n", n)
        .push("alpha", alpha)
        .push("seed", seed)
        .push("null_iterations", iters)
        .push("power_iterations", power_iters)
        .push("lambda_calibrated", s.lambda.is_none());
    Ok(Table {
        header,
        columns: ["statistic", "alternative", "lambda", "cutoff", "power", "std_error"].map(String::from).to_vec(),
        rows: vec![vec![label, alternative.label(), fmt_f(lambda), fmt_f(c), fmt_f(est.power), fmt_f(est.std_error)]],
    })
}

/// Power curves of six statistics over both alternative classes.
pub fn cmd_figure4(s: &Settings) -> Result<Table> {
    let mut config = Figure4Config::default();
    if let Some(p) = s.p {
        config.p = p;
    }
    if let Some(n) = s.n {
        config.n = n;
    }
    if let Some(a) = s.alpha {
        config.alpha = a;
    }
    if let Some(t) = s.target_power {
        config.target_power = t;
    }
    if let Some(i) = s.iters {
        config.null_iterations = i;
        config.power_iterations = i;
    }
    if let Some(i) = s.power_iters {
        config.power_iterations = i;
    }
    if let Some(g) = s.grid_points {
        config.grid_points = g;
    }
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let seed = s.seed.unwrap_or(DEFAULT_SEED);
    let result = run_figure4(&config, seed)?;

    let rows = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.class.label().to_string(),
                r.index.to_string(),
                fmt_f(r.index_value),
                fmt_f(r.sobolev.s),
                r.statistic.to_string(),
                fmt_f(r.power),
                fmt_f(r.std_error),
            ]
        })
        .collect();
    let mut header = OutputHeader::new("figure4");
    header
        .push("p", config.p)
        .push("n", config.n)
        .push("alpha", config.alpha)
        .push("seed", seed)
        .push("null_iterations", config.null_iterations)
        .push("power_iterations", config.power_iterations)
        .push("lambda", fmt_f(result.lambda));
    for c in &result.classes {
        header
            .push(&format!("{}_s_range", c.class.label()), format!("{} {}", c.s_range.0, c.s_range.1))
            .push(&format!("{}_htbar_cutoff", c.class.label()), fmt_f(c.htbar_cutoff));
    }
    Ok(Table {
        header,
        columns: ["class", "index", "index_value", "s", "statistic", "power", "std_error"].map(String::from).to_vec(),
        rows,
    })
}

/// Boundedness sequences and boundary-rate estimates over `n = 2^k`.
pub fn cmd_rates(s: &Settings) -> Result<Table> {
    let mut problems = Problems::default();
    let weights = problems.take(parse_weights(s.weights.as_deref().unwrap_or("opt")));
    let p_rule = problems.take(parse_p_rule(s.p_rule.as_deref().unwrap_or("adaptive")));
    let delta_rule = problems.take(parse_delta_rule(s.delta_rule.as_deref().unwrap_or("adaptive")));
    let smooth = s.s.unwrap_or(1.0);
    if !(smooth > 0.5) {
        problems.push(format!("--s must exceed 1/2, got {smooth}"));
    }
    let m = s.m.unwrap_or(1.0);
    if !(m > 0.0) {
        problems.push(format!("--m must be positive, got {m}"));
    }
    let (lo, hi) = (s.n_min_log2.unwrap_or(6), s.n_max_log2.unwrap_or(20));
    if !(1 <= lo && lo <= hi && hi <= 40) {
        problems.push(format!("need 1 <= --n-min-log2 <= --n-max-log2 <= 40, got {lo} and {hi}"));
    }
    problems.finish()?;
    let (weights, p_rule, delta_rule) = (weights.expect("checked"), p_rule.expect("checked"), delta_rule.expect("checked"));

    let grid = dyadic_grid(lo, hi);
    let probe = rate_probe(&weights, p_rule, smooth, m, delta_rule, &grid)?;
    let boundary = boundary_rate_scan(&weights, p_rule, smooth, m, &grid)?;
    let st = s_tilde(smooth);
    let rows = (0..grid.len())
        .map(|i| {
            let n = grid[i] as f64;
            let reference = m.powf(-st / smooth) * n.ln() / (probe.p[i] as f64).ln();
            vec![
                grid[i].to_string(),
                probe.p[i].to_string(),
                fmt_f(probe.q[i]),
                fmt_f(probe.seq_i[i]),
                fmt_f(probe.seq_ii[i]),
                fmt_f(reference),
                fmt_f(boundary[i].delta_hat),
                boundary[i].saturated.to_string(),
            ]
        })
        .collect();
    let mut header = OutputHeader::new("rates");
    header
        .push("weights", weights.label())
        .push("s", smooth)
        .push("m", m)
        .push("p_rule", s.p_rule.as_deref().unwrap_or("adaptive"))
        .push("delta_rule", s.delta_rule.as_deref().unwrap_or("adaptive"))
        .push("seq_i_band_ratio", fmt_f(probe.band_ratio_i()))
        .push("seq_i_slope", fmt_f(probe.slope_i()))
        .push("seq_ii_slope", fmt_f(probe.slope_ii()))
        .push("interpolation", "linear in w^2 between integer indices");
    Ok(Table {
        header,
        columns: ["n", "p", "q", "seq_i", "seq_ii", "seq_ii_reference", "delta_hat", "saturated"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

/// Runs a command and returns its table without writing it.
pub fn execute(command: &Command) -> Result<Table> {
    let resolved = command.settings().resolve()?;
    let stray: Vec<String> = command
        .settings()
        .provided()
        .into_iter()
        .filter(|name| !command.accepted().contains(name))
        .map(|name| format!("{} is not used by the {} command", flag(name), command.name()))
        .collect();
    if !stray.is_empty() {
        return Err(Error::InvalidConfig(stray));
    }
    let table = match command {
        Command::Decompose(_) => cmd_decompose(&resolved),
        Command::Test(_) => cmd_test(&resolved),
        Command::Power(_) => cmd_power(&resolved),
        Command::Figure4(_) => cmd_figure4(&resolved),
        Command::Rates(_) => cmd_rates(&resolved),
    };
    table.map_err(|e| match e {
        Error::InvalidConfig(_) => e,
        other => other.context(command.name()),
    })
}

/// Runs a command and writes its table to `--out` or standard output.
pub fn run(command: &Command) -> Result<()> {
    let table = execute(command)?;
    let out = command.settings().resolve()?.out;
    write_table_file(out.as_deref(), &table)
}

fn write_table_file(path: Option<&Path>, table: &Table) -> Result<()> {
    let columns: Vec<&str> = table.columns.iter().map(String::as_str).collect();
    write_table_to(path, &table.header, &columns, &table.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse() {
        assert_eq!(parse_weights("opt"), Ok(WeightScheme::Opt));
        assert_eq!(parse_weights("fzz:s=1.5"), Ok(WeightScheme::Fzz { s: 1.5 }));
        assert!(parse_weights("fzz:s=0.4").is_err());
        assert!(parse_weights("fzz").is_err());
        assert!(parse_weights("bogus").is_err());
    }

    #[test]
    fn stats_parse() {
        assert_eq!(parse_stat("an", 0.05), Ok(StatKind::AdaptiveNeyman));
        assert_eq!(parse_stat("ht:s=1", 0.05), Ok(StatKind::Ht { s: 1.0 }));
        assert_eq!(
            parse_stat("htbar:lo=0.6,hi=1.2", 0.1),
            Ok(StatKind::HtBar {
                s_lo: 0.6,
                s_hi: 1.2,
                alpha: 0.1
            })
        );
        assert_eq!(parse_stat("cvm", 0.05), Ok(StatKind::Quadratic(WeightScheme::Cvm)));
        assert!(parse_stat("htbar:lo=1", 0.05).is_err());
    }

    #[test]
    fn alternatives_and_rules_parse() {
        assert_eq!(parse_alternative("spiked:j0=8"), Ok(Alternative::Spiked { j0: 8 }));
        assert_eq!(parse_alternative("smooth:b=0.3"), Ok(Alternative::Smooth { b: 0.3 }));
        assert!(parse_alternative("spiked:j0=1.5").is_err());
        assert!(parse_alternative("smooth:b=1").is_err());
        assert_eq!(parse_p_rule("fixed:9"), Ok(PRule::Fixed(9)));
        assert_eq!(parse_p_rule("adaptive"), Ok(PRule::AdaptiveTaper));
        assert!(parse_p_rule("fixed:0").is_err());
        assert_eq!(parse_delta_rule("power:0.4"), Ok(DeltaRule::Power(0.4)));
        assert!(parse_delta_rule("fixed:2").is_err());
    }

    #[test]
    fn pairs_parse() {
        let groups: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(parse_pairs("all", &groups), Ok(vec![(0, 1), (0, 2), (1, 2)]));
        assert_eq!(parse_pairs("c:a", &groups), Ok(vec![(2, 0)]));
        assert!(parse_pairs("a:z", &groups).is_err());
        assert!(parse_pairs("ab", &groups).is_err());
    }

    #[test]
    fn violations_are_aggregated() {
        let s = Settings {
            alpha: Some(2.0),
            iters: Some(10),
            weights: Some("nope".into()),
            ..Settings::default()
        };
        match cmd_test(&s) {
            Err(Error::InvalidConfig(v)) => assert_eq!(v.len(), 5, "{v:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stray_flags_are_rejected() {
        let cmd = Command::Rates(Settings {
            input: Some("x.csv".into()),
            ..Settings::default()
        });
        match execute(&cmd) {
            Err(Error::InvalidConfig(v)) => assert!(v[0].contains("--input")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_file_is_merged_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 9\np = 33\nn-max-log2 = 8\n").unwrap();
        let s = Settings {
            config: Some(path.clone()),
            p: Some(17),
            ..Settings::default()
        };
        let r = s.resolve().unwrap();
        assert_eq!((r.seed, r.p, r.n_max_log2), (Some(9), Some(17), Some(8)));

        std::fs::write(&path, "sead = 9\n").unwrap();
        assert!(matches!(s.resolve(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rates_table_shape() {
        let table = cmd_rates(&Settings {
            n_min_log2: Some(6),
            n_max_log2: Some(10),
            ..Settings::default()
        })
        .unwrap();
        assert_eq!(table.rows.len(), 5);
        assert_eq!(table.header.get("weights"), Some("opt"));
    }
}
