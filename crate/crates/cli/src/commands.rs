//! Subcommands other than `simulate`.

use std::path::Path;
use std::time::Instant;

use cavarray_core::hamiltonian::{
    effective_coefficients, validate_regime, DEFAULT_REGIME_THRESHOLD,
};
use cavarray_core::protocols::estimate_decoherence;
use cavarray_core::SiteIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, set_path, ExperimentConfig};
use crate::error::{CliError, Context, Result};
use crate::output::{table_csv, Manifest, OutputDir, MANIFEST_NAME};
use crate::report::{EstimateJson, PlanJson};
use crate::run::{plan, run_experiment, write_coefficients, RunOptions};

fn manifest(
    command: &str,
    cfg: &ExperimentConfig,
    out: &OutputDir,
    started: Instant,
    opts: &RunOptions,
) -> Result<Manifest> {
    Ok(Manifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.to_toml()?,
        dispersion: cfg.dispersion().as_str().into(),
        sector: None,
        basis_dimension: None,
        effective_dimension: None,
        seedless: opts.seedless,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: out.files().to_vec(),
    })
}

fn finish(
    command: &str,
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    started: Instant,
    opts: &RunOptions,
) -> Result<Manifest> {
    let m = manifest(command, cfg, out, started, opts)?;
    out.write_json(MANIFEST_NAME, &m)?;
    Ok(m)
}

/// Pairs whose coupling is listed on stdout: the protocol pairs, or every
/// pair of driven sites.
fn report_pairs(cfg: &ExperimentConfig) -> Result<Vec<(SiteIndex, SiteIndex)>> {
    let proto = cfg.protocol_pairs()?;
    if !proto.is_empty() {
        return Ok(proto.into_iter().map(|(a, b, _)| (a, b)).collect());
    }
    let spec = cfg.lattice_spec()?;
    let params = cfg.site_params();
    let driven: Vec<SiteIndex> = spec
        .sites()
        .zip(&params)
        .filter(|(_, p)| p.is_driven())
        .map(|(s, _)| s)
        .collect();
    let mut pairs = Vec::new();
    for (i, &a) in driven.iter().enumerate() {
        for &b in &driven[i + 1..] {
            pairs.push((a, b));
        }
    }
    Ok(pairs)
}

/// Writes `coefficients.csv` and `regime.json`; returns the text printed
/// on stdout.
pub fn coeffs(cfg: &ExperimentConfig, out: &mut OutputDir, opts: &RunOptions) -> Result<String> {
    let started = Instant::now();
    let regime = write_coefficients(cfg, out)?;
    let spec = cfg.lattice_spec()?;
    let d = cfg.dispersion();
    let c = effective_coefficients(&spec, &cfg.site_params(), d)
        .context(|| format!("coefficients under {d}"))?;
    let mut text = format!(
        "dispersion {d}\n{:<10} {:<10} {:>14} {:>14} {:>12}\n",
        "site_a", "site_b", "re(chi)", "im(chi)", "|chi|"
    );
    for (a, b) in report_pairs(cfg)? {
        let z = c.chi_between(a, b);
        text += &format!(
            "{:<10} {:<10} {:>14.6e} {:>14.6e} {:>12.4e}\n",
            a.to_string(),
            b.to_string(),
            z.re,
            z.im,
            z.norm()
        );
    }
    for s in c.driven_sites() {
        text += &format!(
            "site {s}: epsilon {:.6e}, varsigma {:.6e}\n",
            c.epsilon_at(s),
            c.varsigma_at(s)
        );
    }
    match &regime.worst {
        Some(w) => {
            text += &format!(
                "regime: worst {} ratio {:.2} at ({},{}), threshold {}\n",
                w.kind, w.ratio, w.site[0], w.site[1], regime.threshold
            )
        }
        None => text += "regime: no driven sites\n",
    }
    for w in &regime.warnings {
        text += &format!("warning: {w}\n");
    }
    finish("coeffs", cfg, out, started, opts)?;
    Ok(text)
}

/// Writes `plan.json`; returns the text printed on stdout.
pub fn protocol(cfg: &ExperimentConfig, out: &mut OutputDir, opts: &RunOptions) -> Result<String> {
    let started = Instant::now();
    let p = plan(cfg, cfg.dispersion())?
        .ok_or_else(|| CliError::field("protocol", "missing [protocol] block"))?;
    let json = PlanJson::from(&p);
    out.write_json("plan.json", &json)?;
    let mut text = format!(
        "{} under {}: interaction time {:.6e}\n",
        json.kind, json.dispersion, json.interaction_time
    );
    for s in &json.pairs {
        text += &format!(
            "  ({},{})-({},{}) {}: |chi| {:.6e}, t {:.6e}, exchange phase ({:.6}, {:.6})\n",
            s.a[0],
            s.a[1],
            s.b[0],
            s.b[1],
            s.gate,
            s.chi_abs,
            s.interaction_time,
            s.exchange_phase[0],
            s.exchange_phase[1]
        );
    }
    for n in &json.notes {
        text += &format!("note: {n}\n");
    }
    finish("protocol", cfg, out, started, opts)?;
    Ok(text)
}

/// Writes `estimate.json`. The time defaults to the planned interaction time.
pub fn estimate(
    cfg: &ExperimentConfig,
    gamma: f64,
    kappa: f64,
    time: Option<f64>,
    out: &mut OutputDir,
    opts: &RunOptions,
) -> Result<(EstimateJson, String)> {
    let started = Instant::now();
    let time = match time {
        Some(t) => t,
        None => plan(cfg, cfg.dispersion())?
            .map(|p| p.interaction_time)
            .ok_or_else(|| {
                CliError::Usage("--time is required without a [protocol] block".into())
            })?,
    };
    let spec = cfg.lattice_spec()?;
    let d = cfg.dispersion();
    let e = estimate_decoherence(&spec, &cfg.site_params(), d, gamma, kappa, time)
        .context(|| "estimating decoherence".into())?;
    let json = EstimateJson::new(&e, d.as_str());
    out.write_json("estimate.json", &json)?;
    let mut text = format!(
        "p1 {:.4e}  p2 {:.4e}  p2(+omega) {:.4e}\ngamma_e {:.4e}  kappa_e {:.4e}  t {:.4e}\nF {:.6}  F(+omega) {:.6}\n",
        e.p1, e.p2, e.p2_plus, e.gamma_e, e.kappa_e, e.time, e.fidelity_estimate, e.fidelity_estimate_plus
    );
    text += &format!(
        "quoted: p1 {:.3e}, p2 {:.3e}, F {:.2}; chain with quoted values gives F {:.6}\n",
        e.quoted.p1, e.quoted.p2, e.quoted.fidelity, e.quoted.fidelity_from_chain
    );
    for n in &e.notes {
        text += &format!("note: {n}\n");
    }
    finish("estimate", cfg, out, started, opts)?;
    Ok((json, text))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub chi_abs: Option<f64>,
    pub interaction_time: Option<f64>,
    pub worst_regime_ratio: Option<f64>,
    pub regime_passes: bool,
    pub max_deviation: Option<f64>,
    pub winner: Option<String>,
    pub chi_fit: Option<f64>,
}

/// Parses a command-line value as a TOML scalar: integer, float, boolean,
/// then string.
pub fn parse_value(s: &str) -> toml::Value {
    let s = s.trim();
    if let Ok(i) = s.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(x) = s.parse::<f64>() {
        return toml::Value::Float(x);
    }
    if let Ok(b) = s.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(s.to_string())
}

/// Derives one config per value with `field` replaced.
pub fn sweep_configs(text: &str, field: &str, values: &[String]) -> Result<Vec<ExperimentConfig>> {
    let base: toml::Value = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    values
        .iter()
        .map(|v| {
            let mut tree = base.clone();
            let mut value = parse_value(v);
            // Integers are accepted where floats are expected.
            if let toml::Value::Integer(i) = value {
                if field != "lattice.n" && field != "initial.photon_cap" {
                    value = toml::Value::Float(i as f64);
                }
            }
            set_path(&mut tree, field, value)?;
            let text = toml::to_string(&tree).map_err(|e| CliError::Serialize(e.to_string()))?;
            parse_config(&text)
                .map_err(|e| CliError::field(format!("sweep value {v}"), e.to_string()))
        })
        .collect()
}

fn sweep_row(
    cfg: &ExperimentConfig,
    value: &str,
    simulate: Option<&Path>,
    opts: &RunOptions,
) -> Result<SweepRow> {
    let spec = cfg.lattice_spec()?;
    let params = cfg.site_params();
    let d = cfg.dispersion();
    let c = effective_coefficients(&spec, &params, d)
        .context(|| format!("coefficients for value {value}"))?;
    let chi_abs = report_pairs(cfg)?
        .first()
        .map(|&(a, b)| c.chi_between(a, b).norm());
    let regime = validate_regime(&spec, &params, d, DEFAULT_REGIME_THRESHOLD)
        .context(|| format!("regime for value {value}"))?;
    let interaction_time = match plan(cfg, d) {
        Ok(p) => p.map(|p| p.interaction_time),
        Err(_) => None,
    };
    let mut row = SweepRow {
        value: value.to_string(),
        chi_abs,
        interaction_time,
        worst_regime_ratio: regime.worst().map(|w| w.3),
        regime_passes: regime.passes(),
        max_deviation: None,
        winner: None,
        chi_fit: None,
    };
    if let Some(dir) = simulate {
        let mut out = OutputDir::create(dir)?;
        let r = run_experiment(cfg, &mut out, opts)?;
        if let Some(cmp) = r.comparison {
            row.max_deviation = cmp
                .conventions
                .iter()
                .map(|c| c.max_deviation)
                .reduce(f64::min);
            row.winner = Some(cmp.winner);
            row.chi_fit = cmp.chi_fit;
        }
    }
    Ok(row)
}

/// Evaluates every value concurrently and writes `sweep.csv`. With
/// `simulate`, each value also runs the configured models into `run-<i>/`.
pub fn sweep(
    text: &str,
    field: &str,
    values: &[String],
    simulate: bool,
    out: &mut OutputDir,
    opts: &RunOptions,
) -> Result<Vec<SweepRow>> {
    let started = Instant::now();
    let configs = sweep_configs(text, field, values)?;
    let root = out.path().to_path_buf();
    let rows = configs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (cfg, v))| {
            let dir = simulate.then(|| root.join(format!("run-{i}")));
            sweep_row(cfg, v, dir.as_deref(), opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.value.clone(),
                opt(r.chi_abs),
                opt(r.interaction_time),
                opt(r.worst_regime_ratio),
                r.regime_passes.to_string(),
                opt(r.max_deviation),
                r.winner.clone().unwrap_or_default(),
                opt(r.chi_fit),
            ]
        })
        .collect();
    let header = [
        field,
        "chi_abs",
        "interaction_time",
        "worst_regime_ratio",
        "regime_passes",
        "max_deviation",
        "winner",
        "chi_fit",
    ];
    out.write("sweep.csv", &table_csv(&header, &table)?)?;
    finish("sweep", &configs[0], out, started, opts)?;
    Ok(rows)
}
