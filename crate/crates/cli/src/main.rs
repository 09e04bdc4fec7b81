use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swarmbench::bench::{
    emit_csv, grouped_bar_svg, run_reduction, run_suite, run_trial, run_trial_with_telemetry, scaling_svg, AlgorithmId,
    AlgorithmParams, ChartSeries, Protocol, ReductionScenario, ScenarioConfig, ARTIFACT_VERSION,
};
use swarmbench::coverage::CoverageGrid;
use swarmbench::sim::{load_map, MapId};
use swarmbench::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "swarmbench", version, about = "Benchmark swarm and multi-robot algorithms in a 2D simulator")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Directory for emitted artifacts.
    #[arg(long, global = true, env = "SWARMBENCH_OUT", default_value = "swarmbench-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a single trial.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also write the coverage-error series, event logs and message log.
        #[arg(long)]
        telemetry: bool,
    },
    /// Run trials until the success quota is met or the scenario is intractable.
    Suite {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// 20-success quota with intractability after 20 straight failures.
        #[arg(long)]
        full: bool,
        #[arg(long, conflicts_with = "full")]
        quota: Option<usize>,
        #[arg(long)]
        max_trials: Option<usize>,
    },
    /// Check whether J reduces to Q on a scenario.
    Reduce {
        #[arg(long = "J", value_name = "ALGO")]
        j: AlgorithmId,
        #[arg(long = "Q", value_name = "ALGO")]
        q: AlgorithmId,
        #[arg(long, default_value = "empty_dense")]
        map: MapId,
        #[arg(long, default_value_t = 4)]
        robots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of consecutive seeds compared.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Render charts from one or more trial CSV files.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// List or export the built-in map layouts.
    Maps {
        #[command(subcommand)]
        action: MapsAction,
    },
}

#[derive(Subcommand, Debug)]
enum MapsAction {
    List,
    Export {
        map: MapId,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Also write the empty coverage grid as a matrix.
        #[arg(long)]
        grid: bool,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    map: MapId,
    #[arg(long = "algo")]
    algorithm: AlgorithmId,
    #[arg(long, default_value_t = 4)]
    robots: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    scale: Option<f64>,
    /// Simulated seconds before a trial counts as failed.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Delivery latency of the message bus in physics ticks.
    #[arg(long)]
    latency: Option<u64>,
    /// TOML parameter file replacing the shipped tuning for this map.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl ScenarioArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::new(self.map, self.algorithm, self.robots, self.seed)?;
        if let Some(s) = self.scale {
            cfg.scale = s;
        }
        if let Some(c) = self.cutoff {
            cfg.cutoff_s = c;
        }
        if let Some(l) = self.latency {
            cfg.comms.latency_ticks = l;
        }
        if let Some(path) = &self.params {
            cfg.params = AlgorithmParams::from_toml(&fs::read_to_string(path)?)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn stem(cfg: &ScenarioConfig) -> String {
    format!("{}_{}_{}", cfg.algorithm.as_str().replace('+', "-"), cfg.map, cfg.robots)
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, contents)?;
    println!("{}", path.display());
    Ok(path)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes")
}

fn run(out: &Path, scenario: &ScenarioArgs, telemetry: bool) -> Result<()> {
    let cfg = scenario.config()?;
    let name = format!("trial_{}_{}", stem(&cfg), cfg.seed);
    let result = if telemetry {
        let (result, tel) = run_trial_with_telemetry(&cfg)?;
        write(out.join(format!("{name}.telemetry.json")), &to_json(&tel))?;
        result
    } else {
        run_trial(&cfg)?
    };
    eprintln!(
        "config {} v{}: success={} time={:?} distance={:.2}",
        result.config_hash, ARTIFACT_VERSION, result.success, result.convergence_time_s, result.total_distance_m
    );
    write(out.join(format!("{name}.config.json")), &to_json(&cfg))?;
    write(out.join(format!("{name}.json")), &to_json(&result))?;
    write(out.join(format!("{name}.csv")), &emit_csv(std::slice::from_ref(&result))?)?;
    Ok(())
}

fn suite(out: &Path, scenario: &ScenarioArgs, full: bool, quota: Option<usize>, max_trials: Option<usize>) -> Result<()> {
    let cfg = scenario.config()?;
    let mut protocol = if full { Protocol::FULL } else { Protocol::DESK };
    if let Some(q) = quota {
        if q == 0 {
            return Err(Error::Config("quota must be positive".into()));
        }
        protocol.quota = q;
        protocol.failure_limit = q;
    }
    if let Some(m) = max_trials {
        protocol.max_trials = m;
    }
    let result = run_suite(&cfg, protocol)?;
    eprintln!(
        "config {} v{}: {:?} with {}/{} successes",
        result.config_hash,
        ARTIFACT_VERSION,
        result.verdict,
        result.successes(),
        result.trials.len()
    );
    let name = format!("suite_{}", stem(&cfg));
    write(out.join(format!("{name}.json")), &result.to_json())?;
    write(out.join(format!("{name}.csv")), &emit_csv(&result.trials)?)?;
    Ok(())
}

fn reduce(out: &Path, j: AlgorithmId, q: AlgorithmId, map: MapId, robots: usize, seed: u64, seeds: u64) -> Result<()> {
    let scenario = ReductionScenario {
        map,
        robots,
        seeds: (seed..seed + seeds).collect(),
    };
    let report = run_reduction(j, q, &scenario, run_trial)?;
    eprintln!(
        "reduction {} -> {}: simulates={} calibration={} bandwidth={} verdict={}",
        report.j,
        report.q,
        report.condition1_simulates.holds,
        report.condition2_calibration.holds,
        report.condition3_bandwidth.holds,
        report.verdict
    );
    let name = format!("reduce_{}_{}_{}_{}.json", j.as_str().replace('+', "-"), q.as_str().replace('+', "-"), map, robots);
    write(out.join(name), &report.to_json())?;
    Ok(())
}

#[derive(Debug, serde::Deserialize)]
struct Row {
    algorithm: String,
    map: String,
    robots: usize,
    success: bool,
    convergence_time_s: Option<f64>,
    distance_m: f64,
}

fn plot(out: &Path, files: &[PathBuf]) -> Result<()> {
    // (algorithm, map, robots) -> (times, distances) over successful trials
    let mut cells: BTreeMap<(String, String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for f in files {
        let mut reader = csv::Reader::from_path(f).map_err(|e| Error::Io(format!("{}: {e}", f.display())))?;
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::Io(format!("{}: {e}", f.display())))?;
            let cell = cells.entry((row.algorithm, row.map, row.robots)).or_default();
            if row.success {
                cell.0.push(row.convergence_time_s.unwrap_or(f64::NAN));
                cell.1.push(row.distance_m);
            }
        }
    }
    let mean = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let algos: Vec<String> = cells.keys().map(|k| k.0.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let maps: Vec<String> = cells.keys().map(|k| k.1.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let counts: Vec<usize> = cells.keys().map(|k| k.2).collect::<std::collections::BTreeSet<_>>().into_iter().collect();

    for (metric, label, pick) in [
        ("time", "mean convergence time (s)", 0usize),
        ("distance", "mean distance travelled (m)", 1usize),
    ] {
        let value = |a: &str, m: &str, n: usize| {
            cells
                .get(&(a.to_string(), m.to_string(), n))
                .map(|c| mean(if pick == 0 { &c.0 } else { &c.1 }))
                .unwrap_or(f64::NAN)
        };
        for &n in &counts {
            let series: Vec<ChartSeries> = algos
                .iter()
                .map(|a| ChartSeries {
                    name: a.clone(),
                    values: maps.iter().map(|m| value(a, m, n)).collect(),
                })
                .collect();
            let svg = grouped_bar_svg(&format!("{metric} by map, {n} robots"), label, &maps, &series);
            write(out.join(format!("bars_{metric}_{n}.svg")), &svg)?;
        }
        let xs: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
        for m in &maps {
            let series: Vec<ChartSeries> = algos
                .iter()
                .map(|a| ChartSeries {
                    name: a.clone(),
                    values: counts.iter().map(|&n| value(a, m, n)).collect(),
                })
                .collect();
            let svg = scaling_svg(&format!("{metric} vs robots on {m}"), label, &xs, &series);
            write(out.join(format!("scaling_{metric}_{m}.svg")), &svg)?;
        }
    }
    Ok(())
}

fn maps(out: &Path, action: &MapsAction) -> Result<()> {
    match action {
        MapsAction::List => {
            for id in MapId::ALL {
                let m = load_map(id, 1.0)?;
                println!("{id}\t{} obstacles\tgoal ({}, {}) r {}", m.obstacles.len(), m.goal.center.x, m.goal.center.y, m.goal.radius);
            }
        }
        MapsAction::Export { map, scale, grid } => {
            let m = load_map(*map, *scale)?;
            write(out.join(format!("map_{map}.toml")), &m.to_layout_string())?;
            if *grid {
                let g = CoverageGrid::for_map(&m, &Default::default());
                write(out.join(format!("grid_{map}.txt")), &g.export_matrix())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_path();
    let outcome = match &cli.command {
        Command::Run { scenario, telemetry } => run(out, scenario, *telemetry),
        Command::Suite {
            scenario,
            full,
            quota,
            max_trials,
        } => suite(out, scenario, *full, *quota, *max_trials),
        Command::Reduce {
            j,
            q,
            map,
            robots,
            seed,
            seeds,
        } => reduce(out, *j, *q, *map, *robots, *seed, *seeds),
        Command::Plot { csv } => plot(out, csv),
        Command::Maps { action } => maps(out, action),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
