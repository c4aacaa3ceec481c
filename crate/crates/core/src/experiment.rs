//! Monte Carlo experiments.
//!
//! An experiment fixes one graph, one parameter vector and one pair of
//! variance profiles, then repeats independent runs with fresh data. Every
//! algorithm in a run sees the same sample realization, so the curves are
//! paired. All randomness is addressed from `master_seed`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::algorithms::{run_trajectory, Algorithm, AlgorithmError, ErrorMetric, Schedule, Setup, StepSizes};
use crate::combiners::Rule;
use crate::graph::{random_geometric_graph, Graph, GraphError};
use crate::metrics::{
    average_curves, cost_report, iterations_to_threshold, to_db, CostReport, LearningCurve, MetricsError, RunSeries,
};
use crate::seed::{derive_seed, DOMAIN_GRAPH, DOMAIN_PARAMETER, DOMAIN_PROFILES, DOMAIN_RUN};
use crate::signal::{
    profiles_to_csv, random_parameter, variance_profiles, InputProfile, NoiseProfile, ParameterVector, SignalError,
    SignalKind, VarianceMode,
};

/// Radius used for generated topologies unless configured otherwise.
pub const DEFAULT_RADIUS: f64 = 0.45;
/// Master seed shared by the three reference scenarios.
pub const SCENARIO_SEED: u64 = 20_170_305;
/// Fraction of final iterations used for the steady-state MSE.
pub const STEADY_STATE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
}

impl ConfigError {
    fn field(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::InvalidField {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("signal: {0}")]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    /// Whether the failure stems from the configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::Graph(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    /// Random geometric graph with this connection radius.
    Generated { radius: f64 },
    /// Edge-list file.
    File(PathBuf),
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Generated { radius } => write!(f, "radius:{radius}"),
            GraphSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleSpec {
    Ascending,
    Explicit(Vec<usize>),
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Ascending => f.write_str("ascending"),
            ScheduleSpec::Explicit(order) => {
                let items: Vec<String> = order.iter().map(usize::to_string).collect();
                f.write_str(&items.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub filter_length: usize,
    pub step_size: f64,
    pub n_iterations: usize,
    pub n_runs: usize,
    pub variance_mode: VarianceMode,
    pub combiner_rule: Rule,
    /// Final-combination matrix for SI-LMS; `None` reuses `combiner_rule`.
    pub second_combiner_rule: Option<Rule>,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    pub graph_source: GraphSource,
    pub schedule: ScheduleSpec,
    pub error_metric: ErrorMetric,
    /// Convergence threshold in dB relative to the initial MSD.
    pub threshold_db: f64,
    pub signal_kind: SignalKind,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 20,
            filter_length: 5,
            step_size: 0.01,
            n_iterations: 2000,
            n_runs: 100,
            variance_mode: VarianceMode::Equal,
            combiner_rule: Rule::Metropolis,
            second_combiner_rule: None,
            algorithms: vec![Algorithm::Atc, Algorithm::SiLms],
            master_seed: SCENARIO_SEED,
            graph_source: GraphSource::Generated { radius: DEFAULT_RADIUS },
            schedule: ScheduleSpec::Ascending,
            error_metric: ErrorMetric::APriori,
            threshold_db: -20.0,
            signal_kind: SignalKind::Complex,
        }
    }
}

fn parse_num<T: std::str::FromStr>(field: &'static str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::field(field, format!("cannot parse {value:?}")))
}

impl ExperimentConfig {
    /// Parses flat `key = value` text on top of the defaults. `#` starts a
    /// comment. The result is validated.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: idx + 1 })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: idx + 1, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n_nodes" => self.n_nodes = parse_num("n_nodes", value)?,
            "filter_length" => self.filter_length = parse_num("filter_length", value)?,
            "step_size" => self.step_size = parse_num("step_size", value)?,
            "n_iterations" => self.n_iterations = parse_num("n_iterations", value)?,
            "n_runs" => self.n_runs = parse_num("n_runs", value)?,
            "master_seed" => self.master_seed = parse_num("master_seed", value)?,
            "threshold_db" => self.threshold_db = parse_num("threshold_db", value)?,
            "variance_mode" => {
                self.variance_mode = value.parse().map_err(|e| ConfigError::field("variance_mode", e))?
            }
            "combiner_rule" => {
                self.combiner_rule = value
                    .parse()
                    .map_err(|e: crate::combiners::UnknownRule| ConfigError::field("combiner_rule", e.to_string()))?
            }
            "second_combiner_rule" => {
                self.second_combiner_rule = if value.eq_ignore_ascii_case("same") {
                    None
                } else {
                    Some(value.parse().map_err(|e: crate::combiners::UnknownRule| {
                        ConfigError::field("second_combiner_rule", e.to_string())
                    })?)
                }
            }
            "algorithms" => {
                self.algorithms = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Algorithm>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| ConfigError::field("algorithms", e))?
            }
            "graph_source" => {
                self.graph_source = if let Some(r) = value.strip_prefix("radius:") {
                    GraphSource::Generated {
                        radius: parse_num("graph_source", r.trim())?,
                    }
                } else if let Some(p) = value.strip_prefix("file:") {
                    GraphSource::File(PathBuf::from(p.trim()))
                } else {
                    return Err(ConfigError::field("graph_source", "expected radius:<r> or file:<path>"));
                }
            }
            "schedule" => {
                self.schedule = if value.eq_ignore_ascii_case("ascending") {
                    ScheduleSpec::Ascending
                } else {
                    ScheduleSpec::Explicit(
                        value
                            .split(',')
                            .map(|s| parse_num("schedule", s.trim()))
                            .collect::<Result<_, _>>()?,
                    )
                }
            }
            "error_metric" => self.error_metric = value.parse().map_err(|e| ConfigError::field("error_metric", e))?,
            "signal_kind" => self.signal_kind = value.parse().map_err(|e| ConfigError::field("signal_kind", e))?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("n_nodes", self.n_nodes),
            ("filter_length", self.filter_length),
            ("n_iterations", self.n_iterations),
            ("n_runs", self.n_runs),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(ConfigError::field(field, "must be positive"));
            }
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(ConfigError::field("step_size", "must be positive"));
        }
        if !self.threshold_db.is_finite() {
            return Err(ConfigError::field("threshold_db", "must be finite"));
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::field("algorithms", "must list at least one algorithm"));
        }
        if let GraphSource::Generated { radius } = self.graph_source {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(ConfigError::field("graph_source", "radius must be positive"));
            }
        }
        if let ScheduleSpec::Explicit(order) = &self.schedule {
            if order.len() != self.n_nodes {
                return Err(ConfigError::field(
                    "schedule",
                    format!("lists {} nodes, n_nodes is {}", order.len(), self.n_nodes),
                ));
            }
            Schedule::new(order.clone()).map_err(|e| ConfigError::field("schedule", e.to_string()))?;
        }
        Ok(())
    }

    pub fn second_rule(&self) -> Rule {
        self.second_combiner_rule.unwrap_or(self.combiner_rule)
    }

    /// Text form accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let algorithms: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let second = self
            .second_combiner_rule
            .map_or_else(|| "same".to_string(), |r| r.to_string());
        format!(
            "n_nodes = {}\nfilter_length = {}\nstep_size = {:?}\nn_iterations = {}\nn_runs = {}\n\
             variance_mode = {}\ncombiner_rule = {}\nsecond_combiner_rule = {}\nalgorithms = {}\n\
             master_seed = {}\ngraph_source = {}\nschedule = {}\nerror_metric = {}\nthreshold_db = {:?}\n\
             signal_kind = {}\n",
            self.n_nodes,
            self.filter_length,
            self.step_size,
            self.n_iterations,
            self.n_runs,
            self.variance_mode,
            self.combiner_rule,
            second,
            algorithms.join(","),
            self.master_seed,
            self.graph_source,
            self.schedule,
            self.error_metric,
            self.threshold_db,
            self.signal_kind,
        )
    }
}

/// Per-algorithm outcome of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub curve: LearningCurve,
    pub cost: CostReport,
    /// Iteration count (1-based) at which the averaged MSD first reaches
    /// the threshold.
    pub iterations_to_threshold: Option<usize>,
    pub steady_state_mse_db: f64,
    pub runs: Vec<RunSeries>,
    /// Checksum of the samples consumed in each run.
    pub sample_checksums: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub graph: Graph,
    pub omega0: ParameterVector,
    pub input: InputProfile,
    pub noise: NoiseProfile,
    /// Absolute MSD threshold in dB.
    pub threshold_abs_db: f64,
    pub algorithms: Vec<AlgorithmResult>,
}

impl ExperimentResult {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.algorithms.iter().find(|r| r.algorithm == algorithm)
    }

    /// Ratio of SI-LMS to ATC iterations-to-threshold, when both converge.
    pub fn si_to_atc_ratio(&self) -> Option<f64> {
        let si = self.get(Algorithm::SiLms)?.iterations_to_threshold?;
        let atc = self.get(Algorithm::Atc)?.iterations_to_threshold?;
        Some(si as f64 / atc as f64)
    }

    /// Key=value summary: thresholds, steady-state MSE, reduction.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("n_runs={}\n", self.config.n_runs));
        out.push_str(&format!("n_iterations={}\n", self.config.n_iterations));
        out.push_str("paired_runs=true\n");
        out.push_str(&format!("threshold_db={:?}\n", self.config.threshold_db));
        out.push_str(&format!("threshold_abs_db={:.6}\n", self.threshold_abs_db));
        for r in &self.algorithms {
            let its = r
                .iterations_to_threshold
                .map_or_else(|| "not_reached".to_string(), |i| i.to_string());
            out.push_str(&format!("iterations_to_threshold.{}={its}\n", r.algorithm));
        }
        for r in &self.algorithms {
            out.push_str(&format!(
                "steady_state_mse_db.{}={:.6}\n",
                r.algorithm, r.steady_state_mse_db
            ));
        }
        if let Some(ratio) = self.si_to_atc_ratio() {
            out.push_str(&format!(
                "reduction_percent.silms_vs_atc={:.2}\n",
                100.0 * (1.0 - ratio)
            ));
        }
        out
    }

    /// Writes the standard output layout into an existing directory.
    pub fn write_to(&self, dir: &Path) -> Result<(), ExperimentError> {
        let write = |name: &str, contents: String| {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(io_err(&path))
        };
        write("config_echo.txt", self.config.to_text())?;
        write("graph.edges", self.graph.to_edge_list())?;
        write("profiles.csv", profiles_to_csv(&self.input, &self.noise))?;
        for r in &self.algorithms {
            write(&format!("curve_{}.csv", r.algorithm), r.curve.to_csv())?;
        }
        let mut costs = String::new();
        for r in &self.algorithms {
            costs.push_str(&format!("[{}]\n{}", r.algorithm, r.cost));
        }
        write("costs.txt", costs)?;
        write("summary.txt", self.summary())
    }
}

/// Loads or generates the experiment graph.
pub fn resolve_graph(cfg: &ExperimentConfig) -> Result<Graph, ExperimentError> {
    let graph = match &cfg.graph_source {
        GraphSource::Generated { radius } => {
            random_geometric_graph(cfg.n_nodes, *radius, derive_seed(cfg.master_seed, DOMAIN_GRAPH, 0))?
        }
        GraphSource::File(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Graph::parse_edge_list(&text)?
        }
    };
    if graph.n_nodes() != cfg.n_nodes {
        return Err(ConfigError::field(
            "n_nodes",
            format!("{} but the graph has {} nodes", cfg.n_nodes, graph.n_nodes()),
        )
        .into());
    }
    Ok(graph)
}

/// Builds the shared setup (graph, combiners, parameter, profiles).
pub fn build_setup(cfg: &ExperimentConfig) -> Result<Setup, ExperimentError> {
    cfg.validate()?;
    let graph = resolve_graph(cfg)?;
    let n = graph.n_nodes();
    let omega0 = random_parameter(cfg.filter_length, derive_seed(cfg.master_seed, DOMAIN_PARAMETER, 0))?;
    let (input, noise) = variance_profiles(n, cfg.variance_mode, derive_seed(cfg.master_seed, DOMAIN_PROFILES, 0))?;
    let c = cfg.combiner_rule.build(&graph);
    let a = cfg.second_rule().build(&graph);
    let schedule = match &cfg.schedule {
        ScheduleSpec::Ascending => Schedule::ascending(n),
        ScheduleSpec::Explicit(order) => Schedule::new(order.clone())?,
    };
    let mu = StepSizes::uniform(n, cfg.step_size)?;
    let mut setup = Setup::new(graph, c, a, mu, schedule, omega0, input, noise)?;
    setup.signal = cfg.signal_kind;
    setup.metric = cfg.error_metric;
    Ok(setup)
}

/// Seed of Monte Carlo run `run`.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    derive_seed(master_seed, DOMAIN_RUN, run as u64)
}

/// Runs every configured algorithm over `n_runs` paired Monte Carlo runs.
/// Runs execute in parallel; the result does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    let setup = build_setup(cfg)?;
    let per_run: Vec<Vec<(RunSeries, u64)>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|r| {
            let seed = run_seed(cfg.master_seed, r);
            cfg.algorithms
                .iter()
                .map(|&alg| {
                    let t = run_trajectory(alg, &setup, cfg.n_iterations, seed, false)?;
                    Ok((RunSeries { mse: t.mse, msd: t.msd }, t.sample_checksum))
                })
                .collect::<Result<Vec<_>, AlgorithmError>>()
        })
        .collect::<Result<_, _>>()?;

    let threshold_abs_db = to_db(setup.omega0.norm_sqr()) + cfg.threshold_db;
    let mut algorithms = Vec::with_capacity(cfg.algorithms.len());
    for (j, &alg) in cfg.algorithms.iter().enumerate() {
        let (runs, sample_checksums): (Vec<RunSeries>, Vec<u64>) = per_run.iter().map(|row| row[j].clone()).unzip();
        let curve = average_curves(&runs)?;
        algorithms.push(AlgorithmResult {
            algorithm: alg,
            cost: cost_report(alg, &setup.graph, cfg.filter_length),
            iterations_to_threshold: iterations_to_threshold(&curve, threshold_abs_db).map(|i| i + 1),
            steady_state_mse_db: curve.tail_mse_db(STEADY_STATE_FRACTION),
            curve,
            runs,
            sample_checksums,
        });
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        graph: setup.graph,
        omega0: setup.omega0,
        input: setup.input,
        noise: setup.noise,
        threshold_abs_db,
        algorithms,
    })
}

/// A named reference configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub config: ExperimentConfig,
}

/// The three reference setups: equal powers with step 0.01, varying
/// powers with step 0.01, and varying powers with step 0.05. They share
/// one master seed, hence one topology and one parameter vector.
pub fn reference_scenarios() -> Vec<Scenario> {
    let base = ExperimentConfig::default();
    vec![
        Scenario {
            name: "equal_mu0.01",
            config: ExperimentConfig {
                variance_mode: VarianceMode::Equal,
                step_size: 0.01,
                ..base.clone()
            },
        },
        Scenario {
            name: "varying_mu0.01",
            config: ExperimentConfig {
                variance_mode: VarianceMode::Varying,
                step_size: 0.01,
                ..base.clone()
            },
        },
        Scenario {
            name: "varying_mu0.05",
            config: ExperimentConfig {
                variance_mode: VarianceMode::Varying,
                step_size: 0.05,
                ..base
            },
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        let custom = ExperimentConfig {
            second_combiner_rule: Some(Rule::Laplacian { kappa: 0.5 }),
            schedule: ScheduleSpec::Explicit((0..20).rev().collect()),
            graph_source: GraphSource::File("some/graph.edges".into()),
            error_metric: ErrorMetric::APosteriori,
            signal_kind: SignalKind::Real,
            ..cfg
        };
        assert_eq!(ExperimentConfig::parse(&custom.to_text()).unwrap(), custom);
    }

    #[test]
    fn parse_reports_field_names() {
        let err = ExperimentConfig::parse("n_runs = 0\n").unwrap_err();
        assert!(err.to_string().contains("n_runs"), "{err}");
        let err = ExperimentConfig::parse("step_size = abc").unwrap_err();
        assert!(err.to_string().contains("step_size"));
        let err = ExperimentConfig::parse("algorithms = atc,rls").unwrap_err();
        assert!(err.to_string().contains("algorithms"));
        let err = ExperimentConfig::parse("# c\nbogus = 1").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "bogus".into()
            }
        );
        assert_eq!(
            ExperimentConfig::parse("n_runs").unwrap_err(),
            ConfigError::Syntax { line: 1 }
        );
        let err = ExperimentConfig::parse("schedule = 0,1").unwrap_err();
        assert!(err.to_string().contains("schedule"));
    }

    #[test]
    fn parse_comments_and_overrides() {
        let cfg = ExperimentConfig::parse("# header\nn_runs = 7 # few\nalgorithms = nocoop, cta\n").unwrap();
        assert_eq!(cfg.n_runs, 7);
        assert_eq!(cfg.algorithms, vec![Algorithm::NoCoop, Algorithm::Cta]);
    }

    #[test]
    fn scenarios_match_protocol() {
        let s = reference_scenarios();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].config.variance_mode, VarianceMode::Equal);
        assert_eq!(s[1].config.variance_mode, VarianceMode::Varying);
        assert_eq!(s[2].config.step_size, 0.05);
        for sc in &s {
            assert_eq!(sc.config.n_nodes, 20);
            assert_eq!(sc.config.filter_length, 5);
            assert_eq!(sc.config.n_runs, 100);
            assert_eq!(sc.config.combiner_rule, Rule::Metropolis);
        }
    }

    #[test]
    fn tiny_experiment() {
        let cfg = ExperimentConfig {
            algorithms: vec![Algorithm::Atc],
            n_runs: 1,
            n_iterations: 1,
            ..Default::default()
        };
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.algorithms.len(), 1);
        assert_eq!(res.algorithms[0].curve.len(), 1);
    }
}
