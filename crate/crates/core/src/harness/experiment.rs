//! Multi-seed experiment runner and CSV output.
//!
//! An output directory holds `config.toml` (the effective configuration),
//! one `run_seed{N}.csv` learning curve per seed and `aggregate.csv`. With
//! `dump_trajectories` set it also holds `trajectories_seed{N}.csv`
//! transition dumps and, in grafting modes, `library_seed{N}.csv` with the
//! final segment-library occupancy per bin.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{auc, mean_std, policy_quality};
use crate::autoeg::{EpisodeRecord, RunLog, Runner};
use crate::envs::make_env;
use crate::error::{Error, Result};
use crate::experience::TransitionDump;

pub const RUN_CSV_HEADER: &str =
    "episode,return,epsilon_used,n_synth_generated,n_synth_stored,synth_ratio,tutor_reward";
pub const AGGREGATE_CSV_HEADER: &str = "metric,mean,stddev,n_seeds";
pub const CONFIG_FILE: &str = "config.toml";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

pub fn run_csv_name(seed: u64) -> String {
    format!("run_seed{seed}.csv")
}

pub fn library_csv_name(seed: u64) -> String {
    format!("library_seed{seed}.csv")
}

pub fn trajectory_csv_name(seed: u64) -> String {
    format!("trajectories_seed{seed}.csv")
}

/// One row of a per-run CSV as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub episode: usize,
    pub episode_return: f64,
    pub epsilon_used: Option<f64>,
    pub n_synth_generated: usize,
    pub n_synth_stored: usize,
    pub synth_ratio: Option<f64>,
    pub tutor_reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub metric: String,
    pub mean: f64,
    pub stddev: f64,
    pub n_seeds: usize,
}

/// Per-seed outcome of [`run_experiment`].
#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub episodes_completed: usize,
    pub error: Option<Error>,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub seeds: Vec<SeedOutcome>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &SeedOutcome> {
        self.seeds.iter().filter(|s| s.error.is_some())
    }

    pub fn succeeded(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_run_csv<W: Write>(
    out: W,
    records: &[EpisodeRecord<f64>],
    grafting: bool,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_CSV_HEADER.split(','))?;
    for r in records {
        let (gen, stored, ratio) = if grafting {
            (
                r.n_synth_generated.to_string(),
                r.n_synth_stored.to_string(),
                r.synth_ratio.to_string(),
            )
        } else {
            (String::new(), String::new(), String::new())
        };
        w.write_record([
            r.episode.to_string(),
            r.episode_return.to_string(),
            opt(r.epsilon_used),
            gen,
            stored,
            ratio,
            opt(r.tutor_reward),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<F: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<Option<F>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::InvalidInput(format!("row {line}: bad {name} value {field:?}")))
}

pub fn read_run_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != RUN_CSV_HEADER {
        return Err(Error::InvalidInput(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let required = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidInput(format!("row {line}: missing {name}")))
        };
        rows.push(CurveRow {
            episode: parse_field(&rec[0], "episode", line)?
                .ok_or_else(|| Error::InvalidInput(format!("row {line}: missing episode")))?,
            episode_return: required(parse_field(&rec[1], "return", line)?, "return")?,
            epsilon_used: parse_field(&rec[2], "epsilon_used", line)?,
            n_synth_generated: parse_field(&rec[3], "n_synth_generated", line)?.unwrap_or(0),
            n_synth_stored: parse_field(&rec[4], "n_synth_stored", line)?.unwrap_or(0),
            synth_ratio: parse_field(&rec[5], "synth_ratio", line)?,
            tutor_reward: parse_field(&rec[6], "tutor_reward", line)?,
        });
    }
    Ok(rows)
}

pub fn write_aggregate_csv<W: Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.metric.clone(),
            r.mean.to_string(),
            r.stddev.to_string(),
            r.n_seeds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad number {:?} in aggregate", &rec[i])))
        };
        rows.push(AggregateRow {
            metric: rec[0].to_owned(),
            mean: num(1)?,
            stddev: num(2)?,
            n_seeds: rec[3]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad seed count {:?}", &rec[3])))?,
        });
    }
    Ok(rows)
}

/// Per-seed summary metrics of one learning curve. The policy-quality
/// window is shortened to the curve length for short runs.
pub fn curve_metrics(rows: &[CurveRow], quality_window: usize) -> Result<Vec<(&'static str, f64)>> {
    let returns: Vec<f64> = rows.iter().map(|r| r.episode_return).collect();
    let mut out = vec![
        ("auc", auc(&returns)?),
        (
            "policy_quality",
            policy_quality(&returns, quality_window.min(returns.len()))?,
        ),
    ];
    let eps: Vec<f64> = rows.iter().filter_map(|r| r.epsilon_used).collect();
    if !eps.is_empty() {
        out.push(("mean_epsilon", eps.iter().sum::<f64>() / eps.len() as f64));
        out.push((
            "synth_generated_total",
            rows.iter().map(|r| r.n_synth_generated as f64).sum(),
        ));
    }
    Ok(out)
}

/// Mean and sample standard deviation of each metric across curves. A
/// metric missing from some curves is aggregated over the others.
pub fn aggregate(curves: &[Vec<CurveRow>], quality_window: usize) -> Result<Vec<AggregateRow>> {
    let mut order: Vec<&'static str> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for curve in curves {
        for (name, v) in curve_metrics(curve, quality_window)? {
            match order.iter().position(|n| *n == name) {
                Some(i) => values[i].push(v),
                None => {
                    order.push(name);
                    values.push(vec![v]);
                }
            }
        }
    }
    Ok(order
        .into_iter()
        .zip(values)
        .map(|(metric, vals)| {
            let (mean, stddev) = mean_std(&vals).expect("at least one value per metric");
            AggregateRow {
                metric: metric.to_owned(),
                mean,
                stddev,
                n_seeds: vals.len(),
            }
        })
        .collect())
}

fn run_one_seed(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> SeedOutcome {
    let mut log = RunLog::default();
    let result = drive(cfg, seed, dir, &mut log);
    let grafting = cfg.mode != super::config::ModeName::NoEg;
    let write = File::create(dir.join(run_csv_name(seed)))
        .map_err(Error::from)
        .and_then(|f| write_run_csv(BufWriter::new(f), &log.records, grafting));
    SeedOutcome {
        seed,
        episodes_completed: log.len(),
        error: result.err().or(write.err()),
    }
}

fn drive(cfg: &ExperimentConfig, seed: u64, dir: &Path, log: &mut RunLog<f64>) -> Result<()> {
    let env = make_env::<f64>(cfg.env, &cfg.env_params());
    let mut runner = Runner::new(cfg.run_config(), cfg.run_mode(), env, cfg.episodes, seed)?;
    let mut dump = if cfg.dump_trajectories {
        let f = File::create(dir.join(trajectory_csv_name(seed)))?;
        Some(TransitionDump::new(BufWriter::new(f))?)
    } else {
        None
    };
    for _ in 0..cfg.episodes {
        let rec = runner.run_episode()?;
        if let Some(dump) = dump.as_mut() {
            if let Some(t) = runner.last_trajectory() {
                dump.write_episode(rec.episode, t.transitions())?;
            }
            for syn in runner.last_synthetic() {
                dump.write_episode(rec.episode, &syn.transitions().collect::<Vec<_>>())?;
            }
        }
        log.records.push(rec);
    }
    if let Some(dump) = dump {
        dump.finish()?;
        if cfg.mode != super::config::ModeName::NoEg {
            fs::write(dir.join(library_csv_name(seed)), runner.library().stats_csv())?;
        }
    }
    Ok(())
}

/// Runs every seed (concurrently), writes the per-run CSVs and the
/// aggregate over the seeds that completed. Failed seeds leave a partial
/// curve and are listed in the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join(CONFIG_FILE), cfg.to_toml_string()?)?;
    let seeds: Vec<SeedOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_one_seed(cfg, seed, &cfg.out))
        .collect();
    let mut curves = Vec::new();
    for s in seeds.iter().filter(|s| s.error.is_none()) {
        curves.push(read_run_csv(&cfg.out.join(run_csv_name(s.seed)))?);
    }
    let aggregate = if curves.is_empty() {
        Vec::new()
    } else {
        aggregate(&curves, cfg.quality_window)?
    };
    write_aggregate_csv(
        BufWriter::new(File::create(cfg.out.join(AGGREGATE_FILE))?),
        &aggregate,
    )?;
    Ok(ExperimentReport {
        out_dir: cfg.out.clone(),
        seeds,
        aggregate,
    })
}

/// Recomputes `aggregate.csv` from the per-run CSVs in `dir`. The
/// policy-quality window comes from `config.toml` when present.
pub fn report(dir: &Path) -> Result<Vec<AggregateRow>> {
    let window = match dir.join(CONFIG_FILE) {
        p if p.exists() => ExperimentConfig::from_file(&p)?.quality_window,
        _ => ExperimentConfig::default().quality_window,
    };
    let mut files: Vec<(u64, PathBuf)> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let seed = name
                .strip_prefix("run_seed")?
                .strip_suffix(".csv")?
                .parse()
                .ok()?;
            Some((seed, e.path()))
        })
        .collect();
    if files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no run_seed*.csv files in {}",
            dir.display()
        )));
    }
    files.sort();
    let curves = files
        .iter()
        .map(|(_, p)| read_run_csv(p))
        .collect::<Result<Vec<_>>>()?;
    let rows = aggregate(&curves, window)?;
    write_aggregate_csv(
        BufWriter::new(File::create(dir.join(AGGREGATE_FILE))?),
        &rows,
    )?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(episode: usize, ret: f64, eps: Option<f64>) -> CurveRow {
        CurveRow {
            episode,
            episode_return: ret,
            epsilon_used: eps,
            n_synth_generated: usize::from(eps.is_some()),
            n_synth_stored: 0,
            synth_ratio: eps.map(|_| 0.0),
            tutor_reward: None,
        }
    }

    #[test]
    fn metrics_per_curve() {
        let curve: Vec<_> = (1..=4).map(|i| row(i, i as f64, Some(0.5))).collect();
        let m = curve_metrics(&curve, 2).unwrap();
        assert_eq!(
            m,
            vec![
                ("auc", 10.0),
                ("policy_quality", 3.5),
                ("mean_epsilon", 0.5),
                ("synth_generated_total", 4.0)
            ]
        );
        let plain: Vec<_> = (1..=3).map(|i| row(i, 1.0, None)).collect();
        assert_eq!(
            curve_metrics(&plain, 100).unwrap(),
            vec![("auc", 3.0), ("policy_quality", 1.0)]
        );
    }

    #[test]
    fn aggregate_two_curves() {
        let a: Vec<_> = (1..=2).map(|i| row(i, 1.0, None)).collect();
        let b: Vec<_> = (1..=2).map(|i| row(i, 3.0, None)).collect();
        let agg = aggregate(&[a, b], 1).unwrap();
        assert_eq!(agg[0].metric, "auc");
        assert_eq!(agg[0].mean, 4.0);
        assert!((agg[0].stddev - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(agg[0].n_seeds, 2);
    }

    #[test]
    fn run_csv_blank_fields() {
        let rec = EpisodeRecord {
            episode: 1,
            episode_return: -2.5,
            episode_len: 3,
            epsilon_used: None,
            n_synth_generated: 0,
            n_synth_stored: 0,
            synth_ratio: 0.0,
            tutor_reward: None,
            synth_ratio_end: 0.0,
            eg_train_steps: 0,
            graft_stats: None,
        };
        let mut buf = Vec::new();
        write_run_csv(&mut buf, &[rec], false).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{RUN_CSV_HEADER}\n1,-2.5,,,,,\n")
        );
    }
}
