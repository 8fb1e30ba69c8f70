//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_seeds, resolve_scenarios, RunConfig, SeedSpec};
use crate::error::{Error, Result};
use crate::geometry::ScenarioId;
use crate::mac::run_simulation;
use crate::metrics::{cdf, write_cdf_csv, write_samples_csv, GroupFilter, MetricsBundle, PercentileReport, TbStats};
use crate::phy::Direction;

#[derive(Debug, Parser)]
#[command(name = "ncr-sim", about = "Slot-level NCR-assisted mmWave network simulator")]
struct Args {
    /// s1..s5, custom, or all; may be repeated or comma separated.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// Seed range `a..b` (inclusive) or comma list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    ues: Option<usize>,
    #[arg(long = "traffic-mbps")]
    traffic_mbps: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// TOML or JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Do not print the percentile table.
    #[arg(long)]
    quiet: bool,
    /// Parse and validate the configuration, then exit.
    #[arg(long = "validate-config", num_args = 0..=1, default_missing_value = "only")]
    validate_config: Option<String>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    scenario: &'a str,
    seed: u64,
    samples: usize,
    dl: TbStats,
    ul: TbStats,
    via_ncr_fraction: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    ues: usize,
    traffic_mbps: f64,
    runs: Vec<RunSummary<'a>>,
    report: &'a PercentileReport,
}

/// Parses `argv` (including the program name) and runs. Returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn build_config(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if !args.scenario.is_empty() {
        cfg.scenarios = args.scenario.clone();
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = SeedSpec::List(parse_seeds(s)?);
    }
    if let Some(v) = args.slots {
        cfg.slots = v;
    }
    if let Some(v) = args.ues {
        cfg.ues = v;
    }
    if let Some(v) = args.traffic_mbps {
        cfg.traffic_mbps = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(args: Args) -> Result<()> {
    let cfg = build_config(&args)?;
    if args.validate_config.is_some() {
        println!("configuration ok");
        return Ok(());
    }
    let mut scenarios = resolve_scenarios(&cfg.scenarios, &cfg.custom_ncr)?;
    let baseline = ScenarioId::S1Baseline.short_name();
    if !scenarios.iter().any(|s| s.id == ScenarioId::S1Baseline) {
        scenarios.insert(0, crate::geometry::DeploymentScenario::preset(ScenarioId::S1Baseline, &crate::geometry::build_grid())?);
    }
    let seeds = cfg.seeds.resolve()?;
    prepare_out_dir(&args.out)?;

    let jobs: Vec<_> = scenarios.iter().flat_map(|s| seeds.iter().map(move |seed| (s, *seed))).collect();
    let bundles = jobs
        .par_iter()
        .map(|(s, seed)| run_simulation(&cfg.sim_config(s, *seed)))
        .collect::<Result<Vec<MetricsBundle>>>()?;

    let mut pooled = Vec::new();
    for s in &scenarios {
        let runs: Vec<&MetricsBundle> = bundles.iter().filter(|b| b.scenario == s.name).collect();
        write_samples_csv(BufWriter::new(File::create(args.out.join(format!("{}_samples.csv", s.name)))?), &runs)?;
        let samples: Vec<_> = runs.iter().flat_map(|b| b.samples.iter().copied()).collect();
        for dir in [Direction::Dl, Direction::Ul] {
            for group in GroupFilter::ALL {
                if let Ok(points) = cdf(&samples, group, dir) {
                    let name = format!("{}_cdf_{}_{}.csv", s.name, dir.to_string().to_lowercase(), group);
                    write_cdf_csv(BufWriter::new(File::create(args.out.join(name))?), &points)?;
                }
            }
        }
        pooled.push((s.name.clone(), samples));
    }
    let report = PercentileReport::build(&pooled, baseline, seeds.clone(), cfg.slots)?;
    report.write_csv(BufWriter::new(File::create(args.out.join("percentiles.csv"))?))?;
    let summary = Summary {
        ues: cfg.ues,
        traffic_mbps: cfg.traffic_mbps,
        runs: bundles
            .iter()
            .map(|b| RunSummary {
                scenario: &b.scenario,
                seed: b.seed,
                samples: b.samples.len(),
                dl: b.dl,
                ul: b.ul,
                via_ncr_fraction: b.via_ncr_fraction,
            })
            .collect(),
        report: &report,
    };
    fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    if !args.quiet {
        print_table(&report);
    }
    Ok(())
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
    fs::remove_file(probe)?;
    Ok(())
}

fn print_table(report: &PercentileReport) {
    println!("{:<8} {:<3} {:<8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "scenario", "dir", "group", "p10", "p50", "p90", "d10", "d50", "d90");
    for r in &report.rows {
        println!(
            "{:<8} {:<3} {:<8} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            r.scenario, r.direction, r.group, r.p10, r.p50, r.p90, r.delta_p10, r.delta_p50, r.delta_p90
        );
    }
}
