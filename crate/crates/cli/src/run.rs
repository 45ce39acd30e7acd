//! Simulation runs: full model, effective model, and their comparison.

use std::f64::consts::PI;
use std::time::Instant;

use cavarray_core::dynamics::{
    compare_models_until, embed_pair_state, exchange_phase, fit_exchange_rate, propagate,
    Observable, Trajectory,
};
use cavarray_core::hamiltonian::full::{level_indices, photon_indices};
use cavarray_core::hamiltonian::{
    build_effective_general, effective_coefficients, full_interaction_operator,
};
use cavarray_core::hilbert::enumerate_basis;
use cavarray_core::protocols::{
    plan_entanglement, plan_parallel, plan_state_transfer, GateKind, ProtocolPlan,
};
use cavarray_core::{
    AtomLevel, Basis, BasisState, Dispersion, SectorSpec, SiteIndex, StateVector, C64,
};
use serde::{Deserialize, Serialize};

use crate::config::{linear, ExperimentConfig, Model, ObservableSpec, ProtocolName};
use crate::error::{CliError, Context, Result};
use crate::output::{Manifest, OutputDir, SectorRecord, MANIFEST_NAME};
use crate::report::{coefficients_csv, complex, site, PlanJson, RegimeJson};

/// Agreement bound on `max |P_full − P_eff|` over the comparison window.
pub const AGREEMENT_THRESHOLD: f64 = 0.1;

/// Column compared between models and used to fit the exchange rate.
pub const INITIAL_COLUMN: &str = "P_initial";

/// Amplitude columns recorded for the protocol pair.
const AMP_FG: &str = "amp_fg";
const AMP_GF: &str = "amp_gf";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seedless: bool,
}

/// One propagated model.
#[derive(Debug, Clone)]
pub struct ModelRun {
    /// `full` or `effective-<dispersion>`.
    pub label: String,
    pub dispersion: Option<Dispersion>,
    pub dimension: usize,
    pub trajectory: Trajectory,
    pub warnings: Vec<String>,
}

impl ModelRun {
    pub fn file_name(&self) -> String {
        format!("{}.csv", self.label)
    }
}

/// The planned protocol for `cfg`, under `dispersion`.
pub fn plan(cfg: &ExperimentConfig, dispersion: Dispersion) -> Result<Option<ProtocolPlan>> {
    let Some(proto) = &cfg.protocol else {
        return Ok(None);
    };
    let spec = cfg.lattice_spec()?.with_dispersion(dispersion);
    let params = cfg.site_params();
    let pairs = cfg.protocol_pairs()?;
    let what = || format!("planning {:?} under {dispersion}", proto.kind).to_lowercase();
    let plan = match (proto.kind, pairs[0].2) {
        (ProtocolName::Parallel, _) => {
            plan_parallel(&pairs, &spec, &params, dispersion, proto.threshold).context(what)?
        }
        (_, GateKind::Transfer { c0, c1 }) => {
            plan_state_transfer(pairs[0].0, pairs[0].1, c0, c1, &spec, &params, dispersion)
                .context(what)?
        }
        (_, GateKind::Entangle) => {
            plan_entanglement(pairs[0].0, pairs[0].1, &spec, &params, dispersion).context(what)?
        }
    };
    Ok(Some(plan))
}

fn planned_target(cfg: &ExperimentConfig, dispersion: Dispersion) -> Result<Option<ProtocolPlan>> {
    if cfg.observables().contains(&ObservableSpec::Target) {
        plan(cfg, dispersion)
    } else {
        Ok(None)
    }
}

/// The single protocol pair, when the protocol has exactly one.
fn protocol_pair(cfg: &ExperimentConfig) -> Result<Option<(SiteIndex, SiteIndex)>> {
    let pairs = cfg.protocol_pairs()?;
    Ok(match pairs.as_slice() {
        [(a, b, _)] => Some((*a, *b)),
        _ => None,
    })
}

fn initial_configuration(cfg: &ExperimentConfig, basis: &Basis) -> BasisState {
    let n = cfg.lattice.n;
    let mut s = BasisState::ground(n * n, basis.n_modes());
    for &at in &cfg.initial.f {
        s.atoms[linear(at, n)] = AtomLevel::F;
    }
    for &at in &cfg.initial.e {
        s.atoms[linear(at, n)] = AtomLevel::E;
    }
    s
}

fn site_linear(s: SiteIndex, n: usize) -> usize {
    (s.j - 1) * n + (s.k - 1)
}

fn pair_index(a: usize, b: usize, amps: [C64; 4], basis: &Basis) -> Result<usize> {
    let v =
        embed_pair_state(&amps, a, b, basis).context(|| "embedding the protocol pair".into())?;
    Ok(v.amplitudes()
        .iter()
        .position(|z| z.norm() > 0.0)
        .unwrap_or(0))
}

/// Observables for one model on `basis`. The protocol pair amplitudes are
/// added whenever a single-pair protocol is configured.
fn compile_observables(
    cfg: &ExperimentConfig,
    basis: &Basis,
    psi0: &StateVector,
    target_plan: Option<&ProtocolPlan>,
) -> Result<Vec<Observable>> {
    let n = cfg.lattice.n;
    let mut specs = cfg.observables();
    if !specs.contains(&ObservableSpec::Initial) {
        specs.insert(0, ObservableSpec::Initial);
    }
    let mut out = Vec::new();
    for s in &specs {
        let name = s.column();
        let obs = match s {
            ObservableSpec::Initial => Observable::occupation(&name, psi0.clone()),
            ObservableSpec::LevelF(at) => {
                Observable::population(&name, level_indices(basis, linear(*at, n), AtomLevel::F))
            }
            ObservableSpec::LevelE(at) => {
                Observable::population(&name, level_indices(basis, linear(*at, n), AtomLevel::E))
            }
            ObservableSpec::Photons => Observable::population(&name, photon_indices(basis)),
            ObservableSpec::Norm => Observable::norm(),
            ObservableSpec::Target => {
                let plan = target_plan.ok_or_else(|| {
                    CliError::field("run.observables", "\"target\" needs a protocol plan")
                })?;
                let s = &plan.pairs[0];
                let (a, b) = (site_linear(s.a, n), site_linear(s.b, n));
                let start = embed_pair_state(&s.initial, a, b, basis)
                    .context(|| "embedding the planned initial state".into())?;
                let ov = start
                    .overlap(psi0)
                    .context(|| "comparing initial states".into())?;
                if (ov.norm_sqr() - 1.0).abs() > 1e-9 {
                    return Err(CliError::field(
                        "initial",
                        "the \"target\" observable needs [initial] to match the planned initial state",
                    ));
                }
                let target = embed_pair_state(&s.predicted, a, b, basis)
                    .context(|| "embedding the planned target".into())?;
                Observable::fidelity(&name, target)
            }
        };
        out.push(obs);
    }
    if let Some((a, b)) = protocol_pair(cfg)? {
        let (a, b) = (site_linear(a, n), site_linear(b, n));
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        out.push(Observable::amplitude(
            AMP_FG,
            pair_index(a, b, [zero, zero, one, zero], basis)?,
        ));
        out.push(Observable::amplitude(
            AMP_GF,
            pair_index(a, b, [zero, one, zero, zero], basis)?,
        ));
    }
    Ok(out)
}

pub fn full_basis(cfg: &ExperimentConfig) -> Result<Basis> {
    let spec = cfg.lattice_spec()?;
    enumerate_basis(&spec, SectorSpec::exact(cfg.excitation(), cfg.photon_cap()))
        .context(|| "building the full-model basis".into())
}

pub fn effective_basis(cfg: &ExperimentConfig) -> Result<Basis> {
    let n = cfg.lattice.n;
    Basis::qubits(n * n, Some(cfg.excitation()))
        .context(|| "building the effective-model basis".into())
}

/// Propagates the full interaction-picture model in the sector of the
/// initial state.
pub fn simulate_full(cfg: &ExperimentConfig) -> Result<ModelRun> {
    let spec = cfg.lattice_spec()?;
    let params = cfg.site_params();
    let basis = full_basis(cfg)?;
    let h = full_interaction_operator(&spec, &params, &basis)
        .context(|| "building the full Hamiltonian".into())?;
    if h.dropped() != 0 {
        return Err(CliError::Model {
            context: "building the full Hamiltonian".into(),
            source: cavarray_core::Error::OutsideSector(format!(
                "{} matrix elements left the sector",
                h.dropped()
            )),
        });
    }
    let psi0 = StateVector::from_configuration(&basis, &initial_configuration(cfg, &basis))
        .context(|| "preparing the initial state".into())?;
    let target = planned_target(cfg, cfg.dispersion())?;
    let obs = compile_observables(cfg, &basis, &psi0, target.as_ref())?;
    let traj = propagate(
        &h,
        &psi0,
        cfg.run.t_end,
        &cfg.run.propagator.to_config(),
        &obs,
    )
    .context(|| "propagating the full model".into())?;
    Ok(ModelRun {
        label: "full".into(),
        dispersion: None,
        dimension: basis.dim(),
        trajectory: traj,
        warnings: Vec::new(),
    })
}

/// Propagates the vacuum-sector effective model under `dispersion`.
pub fn simulate_effective(cfg: &ExperimentConfig, dispersion: Dispersion) -> Result<ModelRun> {
    let spec = cfg.lattice_spec()?.with_dispersion(dispersion);
    let params = cfg.site_params();
    let basis = effective_basis(cfg)?;
    let eff = build_effective_general(&spec, &params, dispersion, &basis)
        .context(|| format!("building the effective Hamiltonian under {dispersion}"))?;
    let psi0 = StateVector::from_configuration(&basis, &initial_configuration(cfg, &basis))
        .context(|| "preparing the initial state".into())?;
    let target = planned_target(cfg, dispersion)?;
    let obs = compile_observables(cfg, &basis, &psi0, target.as_ref())?;
    let traj = propagate(
        &eff.operator,
        &psi0,
        cfg.run.t_end,
        &cfg.run.propagator.to_config(),
        &obs,
    )
    .context(|| format!("propagating the effective model under {dispersion}"))?;
    Ok(ModelRun {
        label: format!("effective-{dispersion}"),
        dispersion: Some(dispersion),
        dimension: basis.dim(),
        trajectory: traj,
        warnings: eff.warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionReport {
    pub dispersion: String,
    /// `χ` of the protocol pair, when one is configured.
    pub chi: Option<[f64; 2]>,
    pub chi_abs: Option<f64>,
    /// `|χ_fit| / |χ|`
    pub fit_ratio: Option<f64>,
    /// `π/(2|χ|)`, where the initial occupation first vanishes.
    pub predicted_exchange_time: Option<f64>,
    /// `π/(4|χ|)`
    pub predicted_entangling_time: Option<f64>,
    pub max_deviation: f64,
    pub rms_deviation: f64,
    pub time_of_max_deviation: f64,
    pub within_threshold: bool,
    pub effective_bell_peak: Option<BellPeak>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellPeak {
    pub fidelity: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub a: [usize; 2],
    pub b: [usize; 2],
    /// Unit `u` in `(|fg⟩ − i·u·|gf⟩)/√2`, read off the full model.
    pub measured_phase: [f64; 2],
    pub measured_at: f64,
    /// Sign of `Re u`; the Bell target is `(|fg⟩ − i·sign·|gf⟩)/√2`.
    pub bell_sign: f64,
    /// Bell fidelity of the full model at its first peak, before the first
    /// minimum of the initial occupation.
    pub full_bell_peak: BellPeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub column: String,
    pub chi_fit: Option<f64>,
    pub time_of_first_minimum: Option<f64>,
    /// End of the comparison window, `π/(4|χ_fit|)` when a fit exists.
    pub window_end: f64,
    pub window_from_fit: bool,
    pub threshold: f64,
    pub conventions: Vec<ConventionReport>,
    pub winner: String,
    pub agreement: bool,
    pub exchange: Option<ExchangeReport>,
}

fn amplitude_series(traj: &Trajectory, name: &str) -> Option<Vec<C64>> {
    let re = traj.column(&format!("{name}_re"))?;
    let im = traj.column(&format!("{name}_im"))?;
    Some(re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect())
}

/// `|⟨(fg − i·u·gf)/√2 | ψ⟩|²` from the pair amplitudes.
pub fn bell_fidelity(fg: C64, gf: C64, u: C64) -> f64 {
    let t = fg + C64::new(0.0, 1.0) * u.conj() * gf;
    0.5 * t.norm_sqr()
}

fn bell_peak(traj: &Trajectory, u: C64, t_max: f64) -> Option<BellPeak> {
    let fg = amplitude_series(traj, AMP_FG)?;
    let gf = amplitude_series(traj, AMP_GF)?;
    let mut best: Option<BellPeak> = None;
    for ((&t, a), b) in traj.times.iter().zip(&fg).zip(&gf) {
        if t > t_max {
            break;
        }
        let f = bell_fidelity(*a, *b, u);
        if best.is_none_or(|p| f > p.fidelity) {
            best = Some(BellPeak {
                fidelity: f,
                time: t,
            });
        }
    }
    best
}

/// Exchange phase at the first sample where `|gf|² ≥ 0.05`.
fn measured_phase(traj: &Trajectory) -> Option<(C64, f64)> {
    let fg = amplitude_series(traj, AMP_FG)?;
    let gf = amplitude_series(traj, AMP_GF)?;
    let i = gf.iter().position(|z| z.norm_sqr() >= 0.05)?;
    Some((exchange_phase(fg[i], gf[i])?, traj.times[i]))
}

fn sign_of(u: C64) -> C64 {
    C64::new(if u.re < 0.0 { -1.0 } else { 1.0 }, 0.0)
}

/// Compares the full run with each effective run on the initial occupation
/// over `[0, π/(4|χ_fit|)]`.
pub fn compare(
    cfg: &ExperimentConfig,
    full: &ModelRun,
    effective: &[ModelRun],
) -> Result<Comparison> {
    let p = full
        .trajectory
        .column(INITIAL_COLUMN)
        .ok_or_else(|| CliError::field("run.observables", "initial occupation was not recorded"))?;
    let fit = fit_exchange_rate(&full.trajectory.times, p);
    let (window_end, window_from_fit) = match fit {
        Some(f) => ((PI / (4.0 * f.chi)).min(cfg.run.t_end), true),
        None => (cfg.run.t_end, false),
    };
    let pair = protocol_pair(cfg)?;
    let measured = measured_phase(&full.trajectory);
    let peak_window = fit.map_or(cfg.run.t_end, |f| f.time_of_min);
    let mut conventions = Vec::new();
    for run in effective {
        let d = run.dispersion.expect("effective runs carry a dispersion");
        let dev = compare_models_until(
            &full.trajectory,
            &run.trajectory,
            INITIAL_COLUMN,
            window_end,
        )
        .context(|| format!("comparing the full model with {}", run.label))?;
        let chi = match pair {
            Some((a, b)) => {
                let spec = cfg.lattice_spec()?.with_dispersion(d);
                let c = effective_coefficients(&spec, &cfg.site_params(), d)
                    .context(|| format!("coefficients under {d}"))?;
                Some(c.chi_between(a, b))
            }
            None => None,
        };
        let chi_abs = chi.map(|z| z.norm());
        conventions.push(ConventionReport {
            dispersion: d.as_str().into(),
            chi: chi.map(complex),
            chi_abs,
            fit_ratio: fit.zip(chi_abs).map(|(f, c)| f.chi / c),
            predicted_exchange_time: chi_abs.map(|c| PI / (2.0 * c)),
            predicted_entangling_time: chi_abs.map(|c| PI / (4.0 * c)),
            max_deviation: dev.max,
            rms_deviation: dev.rms,
            time_of_max_deviation: dev.time_of_max,
            within_threshold: dev.max < AGREEMENT_THRESHOLD,
            effective_bell_peak: measured
                .and_then(|(u, _)| bell_peak(&run.trajectory, sign_of(u), peak_window)),
        });
    }
    let best = conventions
        .iter()
        .min_by(|x, y| x.max_deviation.total_cmp(&y.max_deviation))
        .ok_or_else(|| CliError::Usage("no effective run to compare with".into()))?;
    let winner = best.dispersion.clone();
    let agreement = best.within_threshold;
    let exchange = match (pair, measured) {
        (Some((a, b)), Some((u, at))) => {
            bell_peak(&full.trajectory, sign_of(u), peak_window).map(|peak| ExchangeReport {
                a: site(a),
                b: site(b),
                measured_phase: complex(u),
                measured_at: at,
                bell_sign: sign_of(u).re,
                full_bell_peak: peak,
            })
        }
        _ => None,
    };
    Ok(Comparison {
        column: INITIAL_COLUMN.into(),
        chi_fit: fit.map(|f| f.chi),
        time_of_first_minimum: fit.map(|f| f.time_of_min),
        window_end,
        window_from_fit,
        threshold: AGREEMENT_THRESHOLD,
        conventions,
        winner,
        agreement,
        exchange,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub runs: Vec<ModelRun>,
    pub comparison: Option<Comparison>,
    pub manifest: Manifest,
}

/// Runs the models selected in `cfg` and writes trajectories, coefficients,
/// the regime report, the plan, the comparison summary and the manifest.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let model = cfg.run.model;
    let conventions: Vec<Dispersion> = match model {
        Model::Both => vec![cfg.dispersion(), cfg.dispersion().other()],
        _ => vec![cfg.dispersion()],
    };
    let (full, effective) = rayon::join(
        || model.runs_full().then(|| simulate_full(cfg)).transpose(),
        || {
            use rayon::prelude::*;
            if model.runs_effective() {
                conventions
                    .par_iter()
                    .map(|&d| simulate_effective(cfg, d))
                    .collect::<Result<Vec<_>>>()
            } else {
                Ok(Vec::new())
            }
        },
    );
    let (full, effective) = (full?, effective?);

    let mut runs = Vec::new();
    runs.extend(full.clone());
    runs.extend(effective.iter().cloned());
    for r in &runs {
        out.write_trajectory(&r.file_name(), &r.trajectory)?;
    }

    write_coefficients(cfg, out)?;
    if let Some(p) = plan(cfg, cfg.dispersion())? {
        out.write_json("plan.json", &PlanJson::from(&p))?;
    }
    let comparison = match (&full, effective.is_empty()) {
        (Some(f), false) => {
            let c = compare(cfg, f, &effective)?;
            out.write_json("comparison.json", &c)?;
            Some(c)
        }
        _ => None,
    };

    let manifest = Manifest {
        command: "simulate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.to_toml()?,
        dispersion: cfg.dispersion().as_str().into(),
        sector: Some(SectorRecord {
            total_excitation: cfg.excitation(),
            photon_cap: cfg.photon_cap(),
        }),
        basis_dimension: full.as_ref().map(|r| r.dimension),
        effective_dimension: effective.first().map(|r| r.dimension),
        seedless: opts.seedless,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: out.files().to_vec(),
    };
    out.write_json(MANIFEST_NAME, &manifest)?;
    Ok(RunOutcome {
        runs,
        comparison,
        manifest,
    })
}

/// `coefficients.csv` and `regime.json` for the configured dispersion.
pub fn write_coefficients(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<RegimeJson> {
    let spec = cfg.lattice_spec()?;
    let params = cfg.site_params();
    let d = cfg.dispersion();
    let c =
        effective_coefficients(&spec, &params, d).context(|| format!("coefficients under {d}"))?;
    out.write("coefficients.csv", &coefficients_csv(&c)?)?;
    let regime = cavarray_core::hamiltonian::validate_regime(
        &spec,
        &params,
        d,
        cavarray_core::hamiltonian::DEFAULT_REGIME_THRESHOLD,
    )
    .context(|| "validating the dispersive regime".into())?;
    let json = RegimeJson::from(&regime);
    out.write_json("regime.json", &json)?;
    Ok(json)
}
