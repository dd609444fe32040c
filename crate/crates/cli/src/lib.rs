//! Declarative experiment runner: JSON specs in, a JSON manifest and CSV tables out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use optjam::game::{bernoulli_exploit_check, reoptimized_linear, SIGMA_THRESHOLD};
use optjam::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const TOOL_NAME: &str = "optjam";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Model(#[from] optjam::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Assertion(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Match,
    Saddle,
    Deviate,
    Mmse,
    WorstNoise,
    Asymptotic,
}

impl Task {
    fn stochastic(self) -> bool {
        matches!(self, Self::Saddle | Self::Deviate | Self::WorstNoise)
    }
}

/// Grid overrides; a missing field keeps the task's default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_points: Option<usize>,
}

/// Experiment description. Powers and variances are in signal units squared; `game` has no
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub task: Task,
    pub game: JammingGameConfig,
    #[serde(default)]
    pub grid: GridOverride,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Basis or expansion order for `mmse` and `worst_noise`.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Explicit jammer law for `saddle`; the synthesized matched jammer otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jammer: Option<DistributionModel>,
    /// Increasing power schedule for `asymptotic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<NoiseFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoders: Option<Vec<Compander>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jammers: Option<Vec<Jammer>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploit_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploit_p: Option<Vec<f64>>,
    #[serde(default)]
    pub strict_paper: bool,
    /// Not recorded in manifests, so reruns elsewhere stay byte-identical.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

fn default_trials() -> usize {
    game::DEFAULT_TRIALS
}

fn default_order() -> usize {
    6
}

/// Command-line overrides applied on top of a spec.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid_points: Option<usize>,
    pub grid_half_width: Option<f64>,
    pub seed: Option<u64>,
    pub strict_paper: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.grid_points.is_some() {
            self.grid.num_points = o.grid_points;
        }
        if o.grid_half_width.is_some() {
            self.grid.half_width = o.grid_half_width;
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        self.strict_paper |= o.strict_paper;
        if o.out.is_some() {
            self.output_dir = o.out.clone();
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!("invalid experiment name {:?}", self.name)));
        }
        self.game.validate()?;
        if self.task.stochastic() && self.seed.is_none() {
            return Err(CliError::Config(format!(
                "task {:?} is stochastic and needs a seed",
                self.task
            )));
        }
        if self.task == Task::Asymptotic && self.betas.as_ref().is_none_or(|b| b.is_empty()) {
            return Err(CliError::Config("task asymptotic needs a betas schedule".into()));
        }
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }

    fn grid_or(&self, default: GridSpec) -> CliResult<GridSpec> {
        Ok(GridSpec::new(
            self.grid.half_width.unwrap_or(default.half_width()),
            self.grid.num_points.unwrap_or(default.num_points()),
        )?)
    }
}

/// Second-moment quantities that follow from the game parameters alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub beta: f64,
    pub alpha_t: f64,
    pub linear_distortion: f64,
    pub saddle_cost: f64,
    pub decoder_gain: f64,
}

impl Derived {
    pub fn of(game: &JammingGameConfig, strict_paper: bool) -> Self {
        Self {
            beta: game.beta(),
            alpha_t: game.alpha_t(),
            linear_distortion: game.linear_distortion(),
            saddle_cost: game.saddle_cost(),
            decoder_gain: game.decoder_gain(strict_paper),
        }
    }

    fn scalars(&self) -> Vec<(String, f64)> {
        vec![
            ("beta".into(), self.beta),
            ("alpha_t".into(), self.alpha_t),
            ("linear_distortion".into(), self.linear_distortion),
            ("saddle_cost".into(), self.saddle_cost),
            ("decoder_gain".into(), self.decoder_gain),
        ]
    }
}

/// A CSV table with a header row and numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Seventeen significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Result of one task: scalar summary, structured outputs, tables and a pass flag.
#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub scalars: Vec<(String, f64)>,
    pub details: Value,
    pub tables: Vec<(String, Table)>,
    pub grid: Option<GridSpec>,
    pub failure: Option<String>,
}

impl TaskOutput {
    fn new(details: Value) -> Self {
        Self {
            scalars: Vec::new(),
            details,
            tables: Vec::new(),
            grid: None,
            failure: None,
        }
    }

    fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.push((key.into(), value));
    }
}

pub fn execute(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    spec.validate()?;
    let mut out = match spec.task {
        Task::Match => task_match(spec)?,
        Task::Saddle => task_saddle(spec)?,
        Task::Deviate => task_deviate(spec)?,
        Task::Mmse => task_mmse(spec)?,
        Task::WorstNoise => task_worst_noise(spec)?,
        Task::Asymptotic => task_asymptotic(spec)?,
    };
    let mut scalars = Derived::of(&spec.game, spec.strict_paper).scalars();
    scalars.append(&mut out.scalars);
    out.scalars = scalars;
    Ok(out)
}

fn verdict_json(m: &MatchingResult) -> Value {
    match &m.verdict {
        MatchVerdict::Matched => json!({ "verdict": "Matched" }),
        MatchVerdict::NoMatch(reason) => json!({ "verdict": "NoMatch", "reason": reason }),
    }
}

fn density_table(name: &str, law: &DistributionModel, grid: &GridSpec) -> Table {
    let mut t = Table::new(&["x", name]);
    for x in grid.xs() {
        t.rows.push(vec![x, law.pdf(x).unwrap_or(f64::NAN)]);
    }
    t
}

fn task_match(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    let grid = spec.grid_or(spec.game.default_grid())?;
    let m = synthesize_jammer(&spec.game, &grid)?;
    let mut out = TaskOutput::new(verdict_json(&m));
    out.grid = Some(grid);
    out.scalar("matched", if m.is_matched() { 1.0 } else { 0.0 });
    out.scalar("jammer_variance", m.jammer_variance);
    let mut cf = Table::new(&["omega", "re", "im"]);
    for (w, v) in grid.omegas().iter().zip(m.jammer_cf.values()) {
        cf.rows.push(vec![*w, v.re, v.im]);
    }
    out.tables.push(("jammer_cf".into(), cf));
    if let Some(law) = &m.jammer_density {
        out.tables.push(("jammer_density".into(), density_table("density", law, &grid)));
    }
    Ok(out)
}

fn task_saddle(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    let grid = spec.grid_or(spec.game.default_grid())?;
    let (jammer, source) = match &spec.jammer {
        Some(law) => (law.clone(), "explicit"),
        None => {
            let m = synthesize_jammer(&spec.game, &grid)?;
            let law = m.jammer_density.clone().ok_or_else(|| match &m.verdict {
                MatchVerdict::NoMatch(r) => {
                    CliError::Config(format!("no matched jammer for this game: {r}"))
                }
                MatchVerdict::Matched => CliError::Config("matched jammer has no density".into()),
            })?;
            (law, "matched")
        }
    };
    let profile = StrategyProfile::saddle(&spec.game, jammer, spec.strict_paper);
    let o = simulate(&spec.game, &profile, spec.trials, spec.seed())?;
    let mut out = TaskOutput::new(json!({ "jammer": source, "outcome": o }));
    out.grid = Some(grid);
    out.scalar("empirical_cost", o.empirical_cost);
    out.scalar("std_error", o.std_error);
    out.scalar("z_score", o.z_score);
    out.scalar("empirical_gain", o.empirical_gain);
    if o.z_score.abs() >= SIGMA_THRESHOLD {
        out.failure = Some(format!(
            "empirical cost {} is {:.2} standard errors from J = {}",
            o.empirical_cost, o.z_score, o.theoretical_cost
        ));
    }
    Ok(out)
}

fn default_encoders() -> Vec<Compander> {
    vec![
        Compander::CubicMix { a: 0.5 },
        Compander::HardLimiter,
        Compander::Tanh { slope: 1.0 },
    ]
}

fn default_jammers(p_a: f64) -> CliResult<Vec<Jammer>> {
    Ok(vec![
        Jammer::IndependentNoise { law: DistributionModel::uniform(p_a)? },
        Jammer::IndependentNoise { law: DistributionModel::laplace(p_a)? },
        Jammer::Correlated { rho: 0.7, residual: DistributionModel::gaussian(1.0)? },
    ])
}

fn task_deviate(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    let grid = spec.grid_or(spec.game.default_grid())?;
    let matched = match &spec.jammer {
        Some(law) => law.clone(),
        None => synthesize_jammer(&spec.game, &grid)?
            .jammer_density
            .ok_or_else(|| CliError::Config("no matched jammer for this game".into()))?,
    };
    let encoders = spec.encoders.clone().unwrap_or_else(default_encoders);
    let jammers = match &spec.jammers {
        Some(j) => j.clone(),
        None => default_jammers(spec.game.power_jam)?,
    };
    let rho = spec.exploit_rho.unwrap_or(0.7);
    let p_values = spec.exploit_p.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.75, 1.0]);
    let seed = spec.seed();
    let rhs = verify_rhs_inequality(&spec.game, &matched, &encoders, spec.trials, seed)?;
    let lhs = verify_lhs_inequality(&spec.game, &jammers, spec.trials, seed)?;
    let exploit = bernoulli_exploit_check(
        &spec.game,
        &p_values,
        rho,
        &DistributionModel::gaussian(1.0)?,
        spec.trials,
        seed,
    )?;

    let mut table = Table::new(&["p", "decoder_gain", "predicted_cost", "empirical_cost", "std_error"]);
    for r in &exploit.rows {
        table.rows.push(vec![
            r.bernoulli_p,
            r.decoder_gain,
            r.predicted_cost,
            r.outcome.empirical_cost,
            r.outcome.std_error,
        ]);
    }
    let mut out = TaskOutput::new(json!({ "encoders": rhs, "jammers": lhs, "exploit": exploit }));
    out.grid = Some(grid);
    out.tables.push(("exploit".into(), table));
    out.scalar("rhs_passed", f64::from(u8::from(rhs.all_passed)));
    out.scalar("lhs_passed", f64::from(u8::from(lhs.all_passed)));
    out.scalar("exploit_reduction_sigmas", exploit.best_reduction_sigmas);
    out.scalar("exploit_best_linear_cost", reoptimized_linear(&spec.game, rho, 1.0).1);
    let mut failures = Vec::new();
    failures.extend(
        rhs.candidates
            .iter()
            .chain(&lhs.candidates)
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({:+.2} se)", c.label, c.margin_sigmas)),
    );
    if !exploit.exploit_found {
        failures.push(format!(
            "no exploit at rho = {rho} ({:.2} se)",
            exploit.best_reduction_sigmas
        ));
    }
    if !failures.is_empty() {
        out.failure = Some(failures.join("; "));
    }
    Ok(out)
}

fn task_mmse(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    let (x, z) = (&spec.game.source, &spec.game.channel_noise);
    let grid = spec.grid_or(GridSpec::covering(&[x, z]))?;
    let curve = mmse_estimator(x, z, &grid)?;
    let coeffs = moment_coeffs(x, z, spec.order)?;
    let mmse_poly = coeffs.mmse_poly;
    let mut out = TaskOutput::new(json!({
        "mmse": curve.mmse,
        "linearity_residual": curve.linearity_residual,
        "linear_gain": curve.linear_gain,
        "coefficients": coeffs.c,
        "mmse_poly": mmse_poly,
    }));
    out.grid = Some(grid);
    out.scalar("mmse", curve.mmse);
    out.scalar("linearity_residual", curve.linearity_residual);
    out.scalar("mmse_poly", mmse_poly);
    out.scalar("expansion_gap", (mmse_poly - curve.mmse).abs());
    out.scalar("nonlinear_energy", coeffs.nonlinear_energy());
    let mut t = Table::new(&["u", "estimate", "output_density"]);
    for ((u, h), f) in grid.xs().iter().zip(&curve.values).zip(&curve.output_density) {
        t.rows.push(vec![*u, *h, *f]);
    }
    out.tables.push(("estimator".into(), t));
    let mut c = Table::new(&["m", "c_m"]);
    for (m, v) in coeffs.c.iter().enumerate() {
        c.rows.push(vec![m as f64, *v]);
    }
    out.tables.push(("coefficients".into(), c));
    Ok(out)
}

fn task_worst_noise(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    let family = spec.family.unwrap_or(NoiseFamily::GaussianMixture(3));
    let opts = SearchOptions {
        seed: spec.seed(),
        ..SearchOptions::default()
    };
    let r = worst_noise_search_with(&spec.game.source, spec.game.power_jam, spec.order, family, opts)?;
    let grid = spec.grid_or(GridSpec::covering(&[&spec.game.source, &r.noise]))?;
    let mut out = TaskOutput::new(serde_json::to_value(&r).map_err(json_err)?);
    out.grid = Some(grid);
    out.scalar("objective", r.objective);
    out.scalar("mmse_attained", r.mmse_attained);
    out.scalar("clip_magnitude", r.clip_magnitude);
    out.tables.push(("noise_density".into(), density_table("density", &r.noise, &grid)));
    Ok(out)
}

fn task_asymptotic(spec: &ExperimentSpec) -> CliResult<TaskOutput> {
    let betas = spec.betas.clone().unwrap_or_default();
    let source = &spec.game.source;
    let grid = spec.grid_or(GridSpec::covering(&[source]))?;
    let rows = asymptotic_gaussianization(source, &betas, &grid)?;
    let inverse: Vec<f64> = betas.iter().map(|b| 1.0 / b).collect();
    let high = high_csnr_gaussianization(&spec.game.channel_noise, spec.game.power_jam, &inverse, &grid)?;
    let mut t = Table::new(&["beta", "gaussian_distance"]);
    for r in &rows {
        t.rows.push(vec![r.beta, r.distance]);
    }
    let mut h = Table::new(&["jammer_index", "beta", "gaussian_distance"]);
    let names: Vec<&str> = ["gaussian", "laplace", "uniform"].to_vec();
    for r in &high {
        let idx = names.iter().position(|n| *n == r.jammer).unwrap_or(names.len());
        h.rows.push(vec![idx as f64, r.beta, r.distance]);
    }
    let decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let mut out = TaskOutput::new(json!({
        "source_distances": rows,
        "jammer_distances": high,
        "jammer_index": names,
        "strictly_decreasing": decreasing,
    }));
    out.grid = Some(grid);
    if let Some(last) = rows.last() {
        out.scalar("gaussian_distance", last.distance);
    }
    out.tables.push(("source_distance".into(), t));
    out.tables.push(("jammer_distance".into(), h));
    Ok(out)
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Config(format!("serialization failed: {e}"))
}

/// Everything written for one run; reloading reproduces [`Derived`] from `spec.game`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec: ExperimentSpec,
    pub grid: Option<GridSpec>,
    pub derived: Derived,
    pub outputs: Value,
    pub scalars: Vec<(String, f64)>,
    pub artifacts: Vec<String>,
    pub status: String,
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn out_dir(spec: &ExperimentSpec) -> CliResult<PathBuf> {
    let dir = spec.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

/// Runs the spec at `path` and writes `<name>.json` plus `<name>_<table>.csv`.
pub fn run(path: &Path, overrides: &Overrides) -> CliResult<Manifest> {
    let mut spec = ExperimentSpec::load(path)?;
    spec.apply(overrides);
    run_spec(&spec)
}

pub fn run_spec(spec: &ExperimentSpec) -> CliResult<Manifest> {
    let out = execute(spec)?;
    let dir = out_dir(spec)?;
    let mut artifacts = Vec::new();
    for (label, table) in &out.tables {
        let file = format!("{}_{label}.csv", spec.name);
        write(&dir.join(&file), &table.to_csv())?;
        artifacts.push(file);
    }
    let manifest = Manifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        spec: spec.clone(),
        grid: out.grid,
        derived: Derived::of(&spec.game, spec.strict_paper),
        outputs: out.details,
        scalars: out.scalars,
        artifacts,
        status: if out.failure.is_some() { "assertion_failure" } else { "ok" }.into(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(json_err)?;
    write(&dir.join(format!("{}.json", spec.name)), &text)?;
    match out.failure {
        Some(reason) => Err(CliError::Assertion(reason)),
        None => Ok(manifest),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Beta,
    PowerJam,
    PowerTx,
    Order,
}

impl SweepParam {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "beta" => Ok(Self::Beta),
            "power_jam" => Ok(Self::PowerJam),
            "power_tx" => Ok(Self::PowerTx),
            "order" => Ok(Self::Order),
            other => Err(CliError::Config(format!(
                "unknown sweep parameter {other:?}; expected beta, power_jam, power_tx or order"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::PowerJam => "power_jam",
            Self::PowerTx => "power_tx",
            Self::Order => "order",
        }
    }

    /// `beta` sets the asymptotic schedule to `[v]`, or `P_A = v·P_T − σ_N²` for other tasks.
    fn apply(self, spec: &mut ExperimentSpec, v: f64) -> CliResult<()> {
        match self {
            Self::Beta if spec.task == Task::Asymptotic => spec.betas = Some(vec![v]),
            Self::Beta => {
                let p_a = v * spec.game.power_tx - spec.game.channel_noise.variance();
                if !(p_a > 0.0) {
                    return Err(CliError::Config(format!(
                        "beta = {v} needs a non-positive jammer power {p_a}"
                    )));
                }
                spec.game.power_jam = p_a;
            }
            Self::PowerJam => spec.game.power_jam = v,
            Self::PowerTx => spec.game.power_tx = v,
            Self::Order => {
                if v.fract() != 0.0 {
                    return Err(CliError::Config(format!("order must be an integer, got {v}")));
                }
                spec.order = v as usize;
            }
        }
        Ok(())
    }
}

pub fn parse_values(csv: &str) -> CliResult<Vec<f64>> {
    csv.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("not a number: {s:?}")))?;
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(CliError::Config(format!("sweep values must be finite and positive, got {v}")))
            }
        })
        .collect()
}

/// Repeats the task per value and writes `<name>_sweep_<param>.csv`; returns the CSV text.
pub fn sweep(
    path: &Path,
    param: SweepParam,
    values: &[f64],
    overrides: &Overrides,
) -> CliResult<String> {
    let mut base = ExperimentSpec::load(path)?;
    base.apply(overrides);
    base.validate()?;
    let mut header: Option<Vec<String>> = None;
    let mut body = String::new();
    let mut failures = Vec::new();
    for &v in values {
        let mut spec = base.clone();
        param.apply(&mut spec, v)?;
        let out = execute(&spec)?;
        let keys: Vec<String> = out.scalars.iter().map(|(k, _)| k.clone()).collect();
        match &header {
            None => header = Some(keys),
            Some(h) if *h != keys => {
                return Err(CliError::Config("sweep rows produced different columns".into()))
            }
            Some(_) => {}
        }
        let cells: Vec<String> = std::iter::once(fmt_num(v))
            .chain(out.scalars.iter().map(|(_, x)| fmt_num(*x)))
            .collect();
        writeln!(body, "{}", cells.join(",")).expect("write to string");
        if let Some(f) = out.failure {
            failures.push(format!("{} = {v}: {f}", param.name()));
        }
    }
    let mut csv = std::iter::once(format!("sweep_{}", param.name()))
        .chain(header.unwrap_or_default())
        .collect::<Vec<_>>()
        .join(",");
    csv.push('\n');
    csv.push_str(&body);
    let dir = out_dir(&base)?;
    write(&dir.join(format!("{}_sweep_{}.csv", base.name, param.name())), &csv)?;
    if failures.is_empty() {
        Ok(csv)
    } else {
        Err(CliError::Assertion(failures.join("; ")))
    }
}
