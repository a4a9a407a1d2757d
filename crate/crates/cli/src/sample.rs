//! `dimerlab sample`: Metropolis chains with checkpoints.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use dimerlab::sampler::{measure, Init, MCConfig, MCState, Observable, Sampler};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{weights, InteractionChoice, NamedInteraction, ObsSpec};
use crate::output::{io_err, load_config, num, CliError, CliResult, ManifestInfo, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub version: u32,
    #[serde(rename = "L")]
    pub l: usize,
    pub weights: [f64; 3],
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_interaction")]
    pub interaction: InteractionChoice,
    pub sweeps: u64,
    #[serde(default)]
    pub thermalization: u64,
    #[serde(default = "one")]
    pub measure_every: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: Init,
    pub observables: Vec<ObsSpec>,
    /// Write checkpoints every this many sweeps; 0 writes only at the end.
    #[serde(default)]
    pub checkpoint_every: u64,
}

fn default_interaction() -> InteractionChoice {
    InteractionChoice::Named(NamedInteraction::Plaquette)
}

fn one() -> u64 {
    1
}

fn default_init() -> Init {
    Init::Columnar
}

pub struct SampleArgs {
    pub seed: Option<u64>,
    pub chains: u64,
    pub resume: bool,
    /// Stop every chain at this sweep, leaving a resumable run.
    pub stop_after: Option<u64>,
}

pub fn measurements_file(chain: u64) -> String {
    format!("measurements_chain{chain}.csv")
}

pub fn checkpoint_file(chain: u64) -> String {
    format!("checkpoint_chain{chain}.bin")
}

impl SampleConfig {
    pub fn mc_config(&self) -> CliResult<MCConfig> {
        let cfg = MCConfig {
            l: self.l,
            t: weights(self.weights)?,
            lambda: self.lambda,
            spec: self.interaction.spec(),
            sweeps: self.sweeps,
            thermalization: self.thermalization,
            measure_every: self.measure_every,
            seed: self.seed,
            init: self.init,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(config: &Path, out: &Path, args: &SampleArgs) -> CliResult<()> {
    let start = Instant::now();
    let (mut cfg, mut echo): (SampleConfig, serde_json::Value) = load_config(config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
        echo["seed"] = s.into();
    }
    if args.chains == 0 {
        return Err(CliError::Config("--chains must be at least 1".into()));
    }
    if cfg.observables.is_empty() {
        return Err(CliError::Config("\"observables\" is empty".into()));
    }
    let mc = cfg.mc_config()?;
    let obs: Vec<Observable> = cfg.observables.iter().map(|o| o.observable()).collect::<CliResult<_>>()?;
    let names: Vec<String> = cfg.observables.iter().map(|o| o.id()).collect();
    let target = args.stop_after.map_or(mc.sweeps, |s| s.min(mc.sweeps));

    let mut dir = OutDir::create(out)?;
    let finished: Vec<u64> = (0..args.chains)
        .into_par_iter()
        .map(|c| run_chain(&dir.dir, &mc, &cfg, &obs, &names, c, target, args.resume))
        .collect::<CliResult<_>>()?;
    for c in 0..args.chains {
        dir.register(&measurements_file(c));
        dir.register(&checkpoint_file(c));
    }
    dir.write_manifest(ManifestInfo {
        command: "sample",
        config: echo,
        seeds: vec![mc.seed],
        chains: args.chains as usize,
        complete: finished.iter().all(|&s| s >= mc.sweeps),
        start,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_chain(
    dir: &Path,
    mc: &MCConfig,
    cfg: &SampleConfig,
    obs: &[Observable],
    names: &[String],
    chain: u64,
    target: u64,
    resume: bool,
) -> CliResult<u64> {
    let csv_path = dir.join(measurements_file(chain));
    let ckpt_path = dir.join(checkpoint_file(chain));
    let mut state = if resume {
        let f = File::open(&ckpt_path).map_err(io_err(&ckpt_path))?;
        let state = MCState::read_checkpoint(mc, BufReader::new(f))?;
        truncate_after(&csv_path, state.sweep, names)?;
        state
    } else {
        let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err(&csv_path))?;
        w.write_record(std::iter::once("sweep").chain(names.iter().map(|s| s.as_str()))).map_err(csv_err(&csv_path))?;
        w.flush().map_err(io_err(&csv_path))?;
        MCState::new(mc, chain)?
    };

    let file = OpenOptions::new().append(true).open(&csv_path).map_err(io_err(&csv_path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    let mut sampler = Sampler::new(mc)?;
    let mut row = Vec::with_capacity(obs.len());
    while state.sweep < target {
        sampler.sweep(&mut state);
        if state.sweep > mc.thermalization && (state.sweep - mc.thermalization) % mc.measure_every == 0 {
            measure(&state, obs, &mut row);
            let rec = std::iter::once(state.sweep.to_string()).chain(row.iter().map(|v| num(*v)));
            w.write_record(rec).map_err(csv_err(&csv_path))?;
        }
        if cfg.checkpoint_every > 0 && state.sweep % cfg.checkpoint_every == 0 && state.sweep < target {
            w.flush().map_err(io_err(&csv_path))?;
            write_checkpoint(&state, mc.seed, &ckpt_path)?;
        }
    }
    w.flush().map_err(io_err(&csv_path))?;
    write_checkpoint(&state, mc.seed, &ckpt_path)?;
    Ok(state.sweep)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Other(format!("{}: {e}", path.display()))
}

fn write_checkpoint(state: &MCState, seed: u64, path: &Path) -> CliResult<()> {
    let tmp: PathBuf = path.with_extension("bin.tmp");
    {
        let f = File::create(&tmp).map_err(io_err(&tmp))?;
        let mut w = BufWriter::new(f);
        state.write_checkpoint(seed, &mut w)?;
        std::io::Write::flush(&mut w).map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Drops rows recorded after the checkpoint so a resumed run appends
/// exactly the rows an uninterrupted run would have written.
fn truncate_after(path: &Path, sweep: u64, names: &[String]) -> CliResult<()> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.len() != names.len() + 1 || header.iter().skip(1).zip(names).any(|(a, b)| a != b) {
        return Err(CliError::Config(format!("{}: observables differ from the config", path.display())));
    }
    let mut keep = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let s: u64 =
            rec[0].parse().map_err(|_| CliError::Other(format!("{}: bad sweep {:?}", path.display(), &rec[0])))?;
        if s <= sweep {
            keep.push(rec);
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(&header).map_err(csv_err(path))?;
    for rec in keep {
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
