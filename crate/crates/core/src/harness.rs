//! Experiment orchestration: flat key=value configs, multi-trial runs
//! with seeded reproducibility, learning-curve CSV emission, and trial
//! aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algorithms::{
    arl_iteration, poga_iteration, zoo_gradient_estimate, zoo_iteration, HyperParams, Population,
};
use crate::envs::{two_state_env, CartPoleEnv, QuadraticBlackBox};
use crate::error::{Error, Result};
use crate::mdp::Environment;
use crate::policy::{
    LinearSigmoidPolicy, Policy, PolicyCheckpoint, SoftmaxTableauPolicy, TableauPolicy, OBS_DIM,
};
use crate::rng::{Purpose, Streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Zoo,
    Poga,
    Arl,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zoo" => Ok(Algorithm::Zoo),
            "poga" => Ok(Algorithm::Poga),
            "arl" => Ok(Algorithm::Arl),
            other => Err(Error::ConfigKey {
                key: "algorithm".into(),
                detail: format!("expected zoo|poga|arl, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Zoo => "zoo",
            Algorithm::Poga => "poga",
            Algorithm::Arl => "arl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvName {
    TwoState,
    CartPole,
    Quadratic,
}

impl FromStr for EnvName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_state" => Ok(EnvName::TwoState),
            "cartpole" => Ok(EnvName::CartPole),
            "quadratic" => Ok(EnvName::Quadratic),
            other => Err(Error::ConfigKey {
                key: "env".into(),
                detail: format!("expected two_state|cartpole|quadratic, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvName::TwoState => "two_state",
            EnvName::CartPole => "cartpole",
            EnvName::Quadratic => "quadratic",
        })
    }
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub env: EnvName,
    pub hp: HyperParams,
    pub trials: usize,
    pub master_seed: u64,
    pub lifted_plan: bool,
    pub out: Option<PathBuf>,
    pub moving_average_window: usize,
    /// Scale of the i.i.d. normal initial parameters (cart-pole and
    /// quadratic policies).
    pub init_scale: f64,
    /// Dimension of the quadratic black box.
    pub dim: usize,
    /// Record real per-generation wall time. Off by default so repeated
    /// runs are byte-identical.
    pub timing: bool,
}

/// Parse the flat `key = value` config syntax: one pair per line, `#`
/// comments, blank lines ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigKey {
                key: format!("line {}", lineno + 1),
                detail: format!("expected `key = value`, got `{line}`"),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::ConfigKey {
        key: key.to_string(),
        detail: e.to_string(),
    })
}

impl ExperimentConfig {
    /// Build a config from key=value pairs. `algorithm` and `env` are
    /// required; every other key has an environment-specific default.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        const KNOWN: &[&str] = &[
            "algorithm",
            "env",
            "beta",
            "alpha",
            "sigma",
            "pop_size",
            "generations",
            "trials",
            "master_seed",
            "lifted_plan",
            "gamma",
            "horizon",
            "moving_average_window",
            "init_scale",
            "dim",
            "out",
            "arl_mutation",
            "timing",
        ];
        for key in map.keys() {
            if !KNOWN.contains(&key.as_str()) {
                return Err(Error::ConfigKey {
                    key: key.clone(),
                    detail: "unknown key".into(),
                });
            }
        }
        let get = |key: &str| map.get(key).map(String::as_str);
        let algorithm: Algorithm = get("algorithm")
            .ok_or_else(|| Error::ConfigKey {
                key: "algorithm".into(),
                detail: "missing (zoo|poga|arl)".into(),
            })?
            .parse()?;
        let env: EnvName = get("env")
            .ok_or_else(|| Error::ConfigKey {
                key: "env".into(),
                detail: "missing (two_state|cartpole|quadratic)".into(),
            })?
            .parse()?;
        let defaults = match env {
            EnvName::TwoState => HyperParams {
                beta: 1.0,
                alpha: 0.1,
                sigma: 0.05,
                pop_size: 1000,
                generations: 200,
                gamma: 0.9,
                horizon: 30,
                arl_mutation: false,
            },
            EnvName::CartPole => HyperParams {
                beta: 0.05,
                alpha: 0.1,
                sigma: 0.05,
                pop_size: 300,
                generations: 300,
                gamma: 1.0,
                horizon: 500,
                arl_mutation: false,
            },
            EnvName::Quadratic => HyperParams {
                beta: 1.0,
                alpha: 0.1,
                sigma: 0.1,
                pop_size: 100,
                generations: 100,
                gamma: 1.0,
                horizon: 1,
                arl_mutation: false,
            },
        };
        let hp = HyperParams {
            beta: match get("beta") {
                Some(v) => parse_value("beta", v)?,
                None => defaults.beta,
            },
            alpha: match get("alpha") {
                Some(v) => parse_value("alpha", v)?,
                None => defaults.alpha,
            },
            sigma: match get("sigma") {
                Some(v) => parse_value("sigma", v)?,
                None => defaults.sigma,
            },
            pop_size: match get("pop_size") {
                Some(v) => parse_value("pop_size", v)?,
                None => defaults.pop_size,
            },
            generations: match get("generations") {
                Some(v) => parse_value("generations", v)?,
                None => defaults.generations,
            },
            gamma: match get("gamma") {
                Some(v) => parse_value("gamma", v)?,
                None => defaults.gamma,
            },
            horizon: match get("horizon") {
                Some(v) => parse_value("horizon", v)?,
                None => defaults.horizon,
            },
            arl_mutation: match get("arl_mutation") {
                Some(v) => parse_value("arl_mutation", v)?,
                None => defaults.arl_mutation,
            },
        };
        let config = ExperimentConfig {
            algorithm,
            env,
            hp,
            trials: match get("trials") {
                Some(v) => parse_value("trials", v)?,
                None => 1,
            },
            master_seed: match get("master_seed") {
                Some(v) => parse_value("master_seed", v)?,
                None => 0,
            },
            lifted_plan: match get("lifted_plan") {
                Some(v) => parse_value("lifted_plan", v)?,
                None => false,
            },
            out: get("out").map(PathBuf::from),
            moving_average_window: match get("moving_average_window") {
                Some(v) => parse_value("moving_average_window", v)?,
                None => 1,
            },
            init_scale: match get("init_scale") {
                Some(v) => parse_value("init_scale", v)?,
                None => 0.5,
            },
            dim: match get("dim") {
                Some(v) => parse_value("dim", v)?,
                None => 4,
            },
            timing: match get("timing") {
                Some(v) => parse_value("timing", v)?,
                None => false,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_map(&parse_key_values(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.moving_average_window == 0 {
            return Err(Error::Config("moving_average_window must be >= 1".into()));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::Config("init_scale must be >= 0".into()));
        }
        if self.env == EnvName::Quadratic && self.algorithm != Algorithm::Zoo {
            return Err(Error::Config(
                "the quadratic black box supports only the zoo algorithm".into(),
            ));
        }
        if self.dim == 0 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// One learning-curve row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub trial: usize,
    pub generation: usize,
    pub best_return: f64,
    pub mean_return: f64,
    pub wallclock_ms: u64,
}

/// Result of a full experiment run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<CurveRecord>,
    /// Best evaluated policy of the final generation of the last trial.
    pub final_policy: PolicyCheckpoint,
}

struct GenRow {
    best: f64,
    mean: f64,
    ms: u64,
}

fn clock(timing: bool, start: Instant) -> u64 {
    if timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn run_population<P, E, F>(
    env: &E,
    init: Population<P>,
    hp: &HyperParams,
    streams: &Streams,
    lifted: bool,
    timing: bool,
    step: F,
) -> Result<(Vec<GenRow>, Population<P>)>
where
    P: Policy<State = E::State>,
    E: Environment,
    F: Fn(
        &Population<P>,
        &E,
        &HyperParams,
        &Streams,
        Option<&E::Plan>,
    ) -> Result<(Population<P>, crate::algorithms::GenStats)>,
{
    let mut pop = init;
    let mut rows = Vec::with_capacity(hp.generations);
    for _ in 0..hp.generations {
        let start = Instant::now();
        let plan = if lifted {
            Some(env.sample_plan(&mut streams.generation(pop.generation, Purpose::Plan)))
        } else {
            None
        };
        let (next, stats) = step(&pop, env, hp, streams, plan.as_ref())?;
        rows.push(GenRow {
            best: stats.best_return,
            mean: stats.mean_return,
            ms: clock(timing, start),
        });
        pop = next;
    }
    Ok((rows, pop))
}

fn best_of_population<P: Policy>(pop: &Population<P>) -> &P {
    let best = pop
        .agents
        .iter()
        .max_by(|a, b| a.last_return.total_cmp(&b.last_return))
        .expect("population is non-empty");
    &best.policy
}

fn run_zoo_env<P, E>(
    env: &E,
    master: P,
    hp: &HyperParams,
    streams: &Streams,
    timing: bool,
) -> Result<(Vec<GenRow>, P)>
where
    P: Policy<State = E::State>,
    E: Environment,
{
    let mut master = master;
    let mut rows = Vec::with_capacity(hp.generations);
    for generation in 0..hp.generations {
        let start = Instant::now();
        let step = zoo_iteration(&master, env, hp, streams, generation as u64)?;
        rows.push(GenRow {
            best: step.stats.best_return,
            mean: step.stats.mean_return,
            ms: clock(timing, start),
        });
        master = step.policy;
    }
    Ok((rows, master))
}

fn normal_vec(rng: &mut rand_chacha::ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<(Vec<GenRow>, PolicyCheckpoint)> {
    let streams = Streams::new(config.master_seed).trial(trial as u64);
    let hp = &config.hp;
    match config.env {
        EnvName::TwoState => {
            let env = two_state_env(hp.gamma, hp.horizon);
            match config.algorithm {
                Algorithm::Zoo => {
                    let master = SoftmaxTableauPolicy::uniform(2, 2);
                    let (rows, final_policy) =
                        run_zoo_env(&env, master, hp, &streams, config.timing)?;
                    Ok((rows, PolicyCheckpoint::from(&final_policy)))
                }
                Algorithm::Poga => {
                    let pop =
                        Population::from_policies(vec![TableauPolicy::uniform(2, 2); hp.pop_size]);
                    let (rows, pop) = run_population(
                        &env,
                        pop,
                        hp,
                        &streams,
                        config.lifted_plan,
                        config.timing,
                        poga_iteration,
                    )?;
                    Ok((rows, PolicyCheckpoint::from(best_of_population(&pop))))
                }
                Algorithm::Arl => {
                    let pop =
                        Population::from_policies(vec![TableauPolicy::uniform(2, 2); hp.pop_size]);
                    let (rows, pop) = run_population(
                        &env,
                        pop,
                        hp,
                        &streams,
                        config.lifted_plan,
                        config.timing,
                        arl_iteration,
                    )?;
                    Ok((rows, PolicyCheckpoint::from(best_of_population(&pop))))
                }
            }
        }
        EnvName::CartPole => {
            let env = CartPoleEnv::new(hp.horizon).with_gamma(hp.gamma);
            let init_policy = |i: u64| {
                let mut rng = streams.agent(0, i, Purpose::Init);
                let theta = normal_vec(&mut rng, OBS_DIM, config.init_scale);
                LinearSigmoidPolicy::new([theta[0], theta[1], theta[2], theta[3]])
            };
            match config.algorithm {
                Algorithm::Zoo => {
                    let (rows, final_policy) =
                        run_zoo_env(&env, init_policy(0), hp, &streams, config.timing)?;
                    Ok((rows, PolicyCheckpoint::from(&final_policy)))
                }
                Algorithm::Poga => {
                    let pop = Population::from_policies(
                        (0..hp.pop_size).map(|i| init_policy(i as u64)).collect(),
                    );
                    let (rows, pop) = run_population(
                        &env,
                        pop,
                        hp,
                        &streams,
                        config.lifted_plan,
                        config.timing,
                        poga_iteration,
                    )?;
                    Ok((rows, PolicyCheckpoint::from(best_of_population(&pop))))
                }
                Algorithm::Arl => {
                    let pop = Population::from_policies(
                        (0..hp.pop_size).map(|i| init_policy(i as u64)).collect(),
                    );
                    let (rows, pop) = run_population(
                        &env,
                        pop,
                        hp,
                        &streams,
                        config.lifted_plan,
                        config.timing,
                        arl_iteration,
                    )?;
                    Ok((rows, PolicyCheckpoint::from(best_of_population(&pop))))
                }
            }
        }
        EnvName::Quadratic => {
            let objective = QuadraticBlackBox::new(config.dim);
            let mut params = normal_vec(
                &mut streams.agent(0, 0, Purpose::Init),
                config.dim,
                config.init_scale,
            );
            let mut rows = Vec::with_capacity(hp.generations);
            for generation in 0..hp.generations {
                let start = Instant::now();
                let est = zoo_gradient_estimate(
                    &params,
                    hp.sigma,
                    hp.pop_size,
                    |theta| objective.reward(theta),
                    &streams,
                    generation as u64,
                );
                for (p, g) in params.iter_mut().zip(&est.gradient) {
                    *p += hp.alpha * g;
                }
                rows.push(GenRow {
                    best: est.best_return,
                    mean: est.mean_return,
                    ms: clock(config.timing, start),
                });
            }
            Ok((rows, PolicyCheckpoint::LinearSigmoid { params }))
        }
    }
}

/// Run every trial of the configured experiment and collect one record
/// per generation. Deterministic given `(config, master_seed)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.trials * config.hp.generations);
    let mut final_policy = None;
    for trial in 0..config.trials {
        let (rows, checkpoint) = run_trial(config, trial)?;
        for (generation, row) in rows.into_iter().enumerate() {
            records.push(CurveRecord {
                trial,
                generation,
                best_return: row.best,
                mean_return: row.mean,
                wallclock_ms: row.ms,
            });
        }
        final_policy = Some(checkpoint);
    }
    Ok(RunOutcome {
        records,
        final_policy: final_policy.expect("at least one trial"),
    })
}

pub const CSV_HEADER: &str = "trial,generation,best_return,mean_return,wallclock_ms";

/// Serialize records with 17 significant digits so floats round-trip
/// exactly.
pub fn write_csv<W: Write>(records: &[CurveRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{}",
            r.trial, r.generation, r.best_return, r.mean_return, r.wallclock_ms
        )?;
    }
    Ok(())
}

pub fn write_csv_file(records: &[CurveRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<CurveRecord>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::InvalidInput(format!(
            "unexpected CSV header `{header}`"
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::InvalidInput(format!("bad CSV row `{line}`")));
        }
        records.push(CurveRecord {
            trial: parse_value("trial", fields[0])?,
            generation: parse_value("generation", fields[1])?,
            best_return: parse_value("best_return", fields[2])?,
            mean_return: parse_value("mean_return", fields[3])?,
            wallclock_ms: parse_value("wallclock_ms", fields[4])?,
        });
    }
    Ok(records)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CurveRecord>> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file))
}

/// Trailing moving average; the first `window - 1` entries average over
/// the available prefix.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidInput("window must be >= 1".into()));
    }
    Ok((0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &series[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect())
}

/// Per-generation aggregate across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub generation: usize,
    pub mean_best: f64,
    pub std_best: f64,
}

#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub rows: Vec<AggregateRow>,
    /// True when trials had ragged lengths and were truncated to the
    /// shortest.
    pub truncated: bool,
}

/// Smooth each trial's best-return series with a trailing moving
/// average, then aggregate the per-generation mean and population
/// standard deviation across trials. `include_trials` restricts the
/// aggregation to an explicit subset; it is never applied silently.
pub fn aggregate_trials(
    records: &[CurveRecord],
    window: usize,
    include_trials: Option<&[usize]>,
) -> Result<AggregateResult> {
    let mut by_trial: BTreeMap<usize, Vec<&CurveRecord>> = BTreeMap::new();
    for r in records {
        if let Some(keep) = include_trials {
            if !keep.contains(&r.trial) {
                continue;
            }
        }
        by_trial.entry(r.trial).or_default().push(r);
    }
    if by_trial.is_empty() {
        return Err(Error::InvalidInput("no trials to aggregate".into()));
    }
    let mut series: Vec<Vec<f64>> = Vec::with_capacity(by_trial.len());
    for (_, mut rows) in by_trial {
        rows.sort_by_key(|r| r.generation);
        let best: Vec<f64> = rows.iter().map(|r| r.best_return).collect();
        series.push(moving_average(&best, window)?);
    }
    let shortest = series.iter().map(Vec::len).min().unwrap_or(0);
    let truncated = series.iter().any(|s| s.len() != shortest);
    let n = series.len() as f64;
    let rows = (0..shortest)
        .map(|g| {
            let values: Vec<f64> = series.iter().map(|s| s[g]).collect();
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            AggregateRow {
                generation: g,
                mean_best: mean,
                std_best: var.sqrt(),
            }
        })
        .collect();
    Ok(AggregateResult { rows, truncated })
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], mut w: W) -> Result<()> {
    writeln!(w, "generation,mean_best,std_best")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e}",
            r.generation, r.mean_best, r.std_best
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn parse_rejects_unknown_keys_by_name() {
        let map = base_map(&[("algorithm", "arl"), ("env", "two_state"), ("betta", "1")]);
        let err = ExperimentConfig::from_map(&map).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("betta"), "message should name the key: {msg}");
    }

    #[test]
    fn parse_rejects_malformed_values() {
        let map = base_map(&[("algorithm", "arl"), ("env", "two_state"), ("beta", "x")]);
        let err = ExperimentConfig::from_map(&map).unwrap_err();
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn parse_key_value_syntax() {
        let text = "# comment\nalgorithm = arl\n\nenv=two_state # inline\npop_size = 16\n";
        let map = parse_key_values(text).unwrap();
        assert_eq!(map["algorithm"], "arl");
        assert_eq!(map["env"], "two_state");
        assert_eq!(map["pop_size"], "16");
        assert!(parse_key_values("nonsense line\n").is_err());
    }

    #[test]
    fn env_defaults_are_applied() {
        let map = base_map(&[("algorithm", "poga"), ("env", "cartpole")]);
        let config = ExperimentConfig::from_map(&map).unwrap();
        assert_eq!(config.hp.pop_size, 300);
        assert_eq!(config.hp.horizon, 500);
        assert_eq!(config.hp.gamma, 1.0);
        let map = base_map(&[("algorithm", "poga"), ("env", "two_state")]);
        let config = ExperimentConfig::from_map(&map).unwrap();
        assert_eq!(config.hp.pop_size, 1000);
        assert_eq!(config.hp.horizon, 30);
    }

    #[test]
    fn quadratic_rejects_population_algorithms() {
        let map = base_map(&[("algorithm", "poga"), ("env", "quadratic")]);
        assert!(ExperimentConfig::from_map(&map).is_err());
    }

    fn tiny_config(algorithm: &str) -> ExperimentConfig {
        let map = base_map(&[
            ("algorithm", algorithm),
            ("env", "two_state"),
            ("pop_size", "24"),
            ("generations", "3"),
            ("trials", "2"),
            ("master_seed", "7"),
        ]);
        ExperimentConfig::from_map(&map).unwrap()
    }

    #[test]
    fn run_emits_one_row_per_generation_and_trial() {
        for algo in ["zoo", "poga", "arl"] {
            let outcome = run_experiment(&tiny_config(algo)).unwrap();
            assert_eq!(outcome.records.len(), 6, "algo {algo}");
            assert_eq!(outcome.records[0].trial, 0);
            assert_eq!(outcome.records[5].trial, 1);
            assert_eq!(outcome.records[5].generation, 2);
            for r in &outcome.records {
                assert!(r.best_return >= r.mean_return);
                assert_eq!(r.wallclock_ms, 0);
            }
        }
    }

    #[test]
    fn run_is_deterministic_and_csv_round_trips() {
        let config = tiny_config("arl");
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&a.records, &mut csv_a).unwrap();
        write_csv(&b.records, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        let parsed = read_csv(std::io::Cursor::new(&csv_a)).unwrap();
        assert_eq!(parsed, a.records);
    }

    #[test]
    fn single_row_run_has_header_plus_one_line() {
        let map = base_map(&[
            ("algorithm", "zoo"),
            ("env", "two_state"),
            ("pop_size", "8"),
            ("generations", "1"),
        ]);
        let config = ExperimentConfig::from_map(&map).unwrap();
        let outcome = run_experiment(&config).unwrap();
        let mut csv = Vec::new();
        write_csv(&outcome.records, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(
            moving_average(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(
            moving_average(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            vec![1.0, 1.5, 2.5, 3.5]
        );
        let constant = vec![2.5; 7];
        assert_eq!(moving_average(&constant, 4).unwrap(), constant);
        assert!(moving_average(&constant, 0).is_err());
        assert!(moving_average(&[], 3).unwrap().is_empty());
    }

    fn record(trial: usize, generation: usize, best: f64) -> CurveRecord {
        CurveRecord {
            trial,
            generation,
            best_return: best,
            mean_return: best - 1.0,
            wallclock_ms: 0,
        }
    }

    #[test]
    fn aggregate_single_trial_is_the_series() {
        let records = vec![record(0, 0, 1.0), record(0, 1, 2.0)];
        let agg = aggregate_trials(&records, 1, None).unwrap();
        assert_eq!(agg.rows.len(), 2);
        assert_eq!(agg.rows[0].mean_best, 1.0);
        assert_eq!(agg.rows[0].std_best, 0.0);
        assert!(!agg.truncated);
    }

    #[test]
    fn aggregate_two_constant_trials() {
        let mut records = Vec::new();
        for g in 0..4 {
            records.push(record(0, g, 3.0));
            records.push(record(1, g, 5.0));
        }
        let agg = aggregate_trials(&records, 1, None).unwrap();
        for row in &agg.rows {
            assert_relative_eq!(row.mean_best, 4.0, max_relative = 1e-15);
            assert_relative_eq!(row.std_best, 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn aggregate_truncates_ragged_trials() {
        let records = vec![record(0, 0, 1.0), record(0, 1, 2.0), record(1, 0, 3.0)];
        let agg = aggregate_trials(&records, 1, None).unwrap();
        assert!(agg.truncated);
        assert_eq!(agg.rows.len(), 1);
    }

    #[test]
    fn aggregate_respects_trial_subset() {
        let records = vec![record(0, 0, 1.0), record(1, 0, 100.0), record(2, 0, 3.0)];
        let agg = aggregate_trials(&records, 1, Some(&[0, 2])).unwrap();
        assert_relative_eq!(agg.rows[0].mean_best, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn smoothed_arl_aggregate_trends_upward() {
        // Trend test on five seeded learning curves: after smoothing,
        // the aggregate must be non-decreasing over at least 95% of all
        // ordered generation pairs (a Mann-Kendall-style concordance).
        let map = base_map(&[
            ("algorithm", "arl"),
            ("env", "two_state"),
            ("pop_size", "1000"),
            ("generations", "200"),
            ("trials", "5"),
            ("beta", "0.05"),
            ("master_seed", "42"),
        ]);
        let config = ExperimentConfig::from_map(&map).unwrap();
        let outcome = run_experiment(&config).unwrap();
        let agg = aggregate_trials(&outcome.records, 5, None).unwrap();
        let mut concordant = 0usize;
        let mut total = 0usize;
        for i in 0..agg.rows.len() {
            for j in i + 1..agg.rows.len() {
                total += 1;
                if agg.rows[j].mean_best >= agg.rows[i].mean_best {
                    concordant += 1;
                }
            }
        }
        assert!(
            concordant as f64 >= 0.95 * total as f64,
            "only {concordant}/{total} generation pairs non-decreasing"
        );
    }
}
