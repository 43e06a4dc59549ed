use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use taumax::experiments::dataset::{load_australian, Dataset, DEFAULT_SPLIT_SEED, SYNTHETIC_SEED};
use taumax::experiments::{run_by_id, run_logistic_on, LogisticConfig, EXPERIMENT_IDS};
use taumax::io::{read_numeric_csv, write_atomic};
use taumax::targets::{LMixture, Logistic, OneNodeNN, RegressionData, StdGaussian, Target};
use taumax::{
    estimate_tau, estimate_tau_acor, estimate_tau_max, run_chain, run_ensemble, ChainConfig, Error, ObservableSeries,
    SamplerKind, Status, TauMaxOptions, TauOptions,
};

use crate::config::CliConfig;
use crate::observables;

pub const DEFAULT_SEED: u64 = 2016;

/// A target plus its default step size, stride and initial state.
struct TargetSetup {
    target: Box<dyn Target>,
    dt: f64,
    stride: usize,
    initial: Vec<f64>,
}

fn build_target(id: &str, data: Option<&Path>) -> Result<TargetSetup> {
    let setup = |target: Box<dyn Target>, dt, stride, initial: Vec<f64>| TargetSetup {
        target,
        dt,
        stride,
        initial,
    };
    if let Some(d) = id.strip_prefix("gaussian:") {
        let dim: usize = d.parse().map_err(|_| anyhow!("bad dimension in target `{id}`"))?;
        return Ok(setup(Box::new(StdGaussian::new(dim)?), 0.02, 5, vec![0.0; dim]));
    }
    Ok(match id {
        "gaussian" | "gaussian1d" => setup(Box::new(StdGaussian::new(1)?), 0.02, 5, vec![0.0]),
        "lmixture" => setup(Box::new(LMixture), 0.02, 5, LMixture::MODES[0].to_vec()),
        "nn1" => setup(Box::new(OneNodeNN::new(RegressionData::bundled())), 0.004, 25, vec![0.0; 4]),
        "logistic" => {
            let ds = match data {
                Some(p) => load_australian(p, DEFAULT_SPLIT_SEED)?,
                None => Dataset::synthetic(SYNTHETIC_SEED, DEFAULT_SPLIT_SEED)?,
            };
            for w in &ds.warnings {
                eprintln!("warning: {w}");
            }
            let dim = ds.n_features();
            let target = Logistic::new(ds.train_features(), ds.train_labels())?;
            setup(Box::new(target), 0.05, 1, vec![0.0; dim])
        }
        other => bail!("unknown target `{other}`; expected gaussian, gaussian:D, lmixture, nn1 or logistic"),
    })
}

fn write_manifest(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

pub fn sample(cfg: &CliConfig) -> Result<()> {
    let target_id = cfg.target.as_deref().unwrap_or("gaussian");
    let setup = build_target(target_id, cfg.data.as_deref())?;
    let sampler: SamplerKind = cfg.sampler.as_deref().unwrap_or("em").parse()?;
    let defaults = ChainConfig::default();
    let chain = ChainConfig {
        step_size: cfg.dt.unwrap_or(setup.dt),
        n_steps: cfg.steps.unwrap_or(100_000),
        stride: cfg.stride.unwrap_or(setup.stride),
        burn_in: cfg.burn_in.unwrap_or(0),
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        stream: 0,
        gamma: cfg.gamma.unwrap_or(defaults.gamma),
        hmc_leapfrog_steps: cfg.leapfrog_steps.unwrap_or(defaults.hmc_leapfrog_steps),
        ghmc_mix_angle: cfg.mix_angle.unwrap_or(defaults.ghmc_mix_angle),
    };
    let initial = cfg.initial.clone().unwrap_or(setup.initial);
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let members = cfg.ensemble.unwrap_or(1);
    if members == 0 {
        bail!("--ensemble must be at least 1");
    }
    let trajectories = if members == 1 {
        vec![run_chain(setup.target.as_ref(), sampler, &chain, &initial)?]
    } else {
        run_ensemble(setup.target.as_ref(), sampler, &chain, &initial, members)?
    };
    let resolved = out.join("config.toml");
    write_atomic(&resolved, &cfg.to_toml()?)?;
    let mut files = vec![resolved];
    for (k, t) in trajectories.iter().enumerate() {
        let dir = if members == 1 {
            out.clone()
        } else {
            out.join(format!("member_{}", k + 1))
        };
        let csv = dir.join("trajectory.csv");
        let meta = dir.join("metadata.toml");
        write_atomic(&csv, &t.to_csv())?;
        write_atomic(&meta, &t.metadata())?;
        if matches!(sampler, SamplerKind::Mala | SamplerKind::Hmc | SamplerKind::Ghmc | SamplerKind::GhmcModified) {
            eprintln!("chain {}: acceptance rate {:.4}", k + 1, t.acceptance_rate);
        }
        files.push(csv);
        files.push(meta);
    }
    write_manifest(&files);
    Ok(())
}

fn load_series(cfg: &CliConfig) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let input = cfg.input.as_deref().ok_or_else(|| anyhow!("--input is required"))?;
    let table = read_numeric_csv(input).with_context(|| format!("reading {}", input.display()))?;
    observables::evaluate(cfg.obs.as_deref().unwrap_or(&[]), &table)
}

fn warn_status(label: &str, status: Status) {
    match status {
        Status::Ok => {}
        Status::InsufficientSamples => eprintln!("warning: {label}: too few samples for a reliable estimate"),
        Status::Degenerate => eprintln!("warning: {label}: series is degenerate (constant or anticorrelated)"),
    }
}

pub fn tau(cfg: &CliConfig) -> Result<()> {
    let (rows, labels) = load_series(cfg)?;
    let acor = match cfg.window.as_deref().unwrap_or("new") {
        "new" => false,
        "acor" => true,
        other => bail!("unknown window `{other}`; expected new or acor"),
    };
    let opts = TauOptions {
        doubling_levels: cfg.doubling.unwrap_or(1),
        ..TauOptions::default()
    };
    let mut table = String::from("observable,n,tau,ess,status\n");
    for (row, label) in rows.iter().zip(&labels) {
        let n = row.len();
        let est = if acor { estimate_tau_acor(row) } else { estimate_tau(row, &opts) };
        match est {
            Ok(e) => {
                warn_status(label, e.status);
                writeln!(table, "{label},{n},{},{},{}", e.tau, e.ess, e.status)?;
            }
            Err(Error::TooShort { required, got }) => {
                eprintln!("warning: {label}: {got} samples, at least {required} needed");
                writeln!(table, "{label},{n},NaN,NaN,{}", Status::InsufficientSamples)?;
            }
            Err(e) => return Err(e).with_context(|| format!("observable {label}")),
        }
    }
    print!("{table}");
    if let Some(dir) = &cfg.out {
        let path = dir.join("tau.csv");
        write_atomic(&path, &table)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn tau_max(cfg: &CliConfig) -> Result<()> {
    if let Some(w) = cfg.window.as_deref() {
        if w != "new" {
            bail!("tau-max uses the fitted exponential window; `--window {w}` is not supported");
        }
    }
    let (rows, labels) = load_series(cfg)?;
    let tol = cfg.tol.unwrap_or(0.1);
    let opts = TauMaxOptions {
        doubling_levels: cfg.doubling.unwrap_or(1),
        prune_collinear: cfg.prune.unwrap_or(false),
        tol,
        ..TauMaxOptions::default()
    };
    let series = ObservableSeries::new(rows, labels.clone())?;
    let r = match estimate_tau_max(&series, &opts) {
        Err(Error::TooShort { required, got }) => {
            eprintln!("warning: {got} samples, at least {required} needed");
            print!("key,value\ntau_max,NaN\nstatus,{}\n", Status::InsufficientSamples);
            return Ok(());
        }
        Err(e @ Error::CollinearBasis { .. }) => {
            let Error::CollinearBasis { rows, .. } = &e else { unreachable!() };
            let names: Vec<&str> = rows.iter().map(|&i| labels[i].as_str()).collect();
            return Err(anyhow!(e)).context(format!(
                "observables {} are linear combinations of the others; remove them or pass --prune",
                names.join(", ")
            ));
        }
        other => other?,
    };
    warn_status("tau_max", r.status);
    for &i in &r.pruned {
        eprintln!("warning: dropped collinear observable {}", labels[i]);
    }
    let t = &r.thoroughness;
    let mut out = String::from("key,value\n");
    writeln!(out, "tau_max,{}", r.tau_max)?;
    writeln!(out, "ess,{}", r.n_samples as f64 / r.tau_max)?;
    writeln!(out, "n_samples,{}", r.n_samples)?;
    writeln!(out, "status,{}", r.status)?;
    writeln!(out, "iterations,{}", r.iterations)?;
    writeln!(out, "stop,{}", r.stop.as_str())?;
    writeln!(out, "tol,{}", t.tol)?;
    writeln!(out, "n_required,{}", t.n_required)?;
    writeln!(out, "thorough,{}", t.satisfied)?;
    for (label, a) in labels.iter().zip(&r.coefficients) {
        writeln!(out, "a_{label},{a}")?;
    }
    print!("{out}");
    if t.satisfied {
        eprintln!("N = {} meets N >= tau_max / tol^2 = {:.0}", t.n_samples, t.n_required);
    } else {
        eprintln!("N = {} is below tau_max / tol^2 = {:.0}; sample longer", t.n_samples, t.n_required);
    }
    if let Some(dir) = &cfg.out {
        write_atomic(&dir.join("tau_max.csv"), &out)?;
        write_atomic(&dir.join("tau_max_trace.csv"), &r.trace_csv())?;
    }
    Ok(())
}

pub fn reproduce(id: &str, cfg: &CliConfig) -> Result<()> {
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let ids: Vec<&str> = if id == "all" { EXPERIMENT_IDS.to_vec() } else { vec![id] };
    if let Some(bad) = ids.iter().find(|i| !EXPERIMENT_IDS.contains(i)) {
        bail!("unknown experiment `{bad}`; expected one of {} or all", EXPERIMENT_IDS.join(", "));
    }
    write_atomic(&out.join("config.toml"), &cfg.to_toml()?)?;
    for id in ids {
        eprintln!("running {id}");
        let report = if id == "logistic" && cfg.data.is_some() {
            let mut lc = LogisticConfig {
                data: cfg.data.clone(),
                ..LogisticConfig::default()
            };
            if let Some(n) = cfg.samples {
                lc.n_samples = n;
            }
            if let Some(s) = cfg.seed {
                lc.seed = s;
            }
            let ds = lc.load_dataset()?;
            for w in &ds.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("dataset {}", ds.provenance);
            let mut report = run_logistic_on(ds, &lc)?.report;
            report.write(&out.join(id))?;
            report
        } else {
            run_by_id(id, cfg.samples, cfg.seed, &out)?
        };
        write_manifest(&report.files);
    }
    Ok(())
}
