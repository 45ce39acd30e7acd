//! Time evolution `i·dψ/dt = H(t)ψ`, observables along the way, and tools to
//! compare two trajectories.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::hamiltonian::TimeDependentOperator;
use crate::hilbert::{AtomLevel, Basis, BasisState, OperatorMatrix, StateVector};
use crate::linalg::{inner, norm, norm_sqr, DenseMatrix, SparseMatrix};
use crate::math::{ceil, exp, ln, powf, sqrt};
use crate::{Error, Result, C64};

/// Largest tolerated `| ‖ψ‖ − 1 |` accumulated over a run.
pub const MAX_NORM_DRIFT: f64 = 1e-4;

/// Upper bound on recorded time points per run.
pub const MAX_SAMPLES: usize = 50_000_000;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Anything that can act as `H(t)` on a state vector.
pub trait Hamiltonian {
    fn dim(&self) -> usize;
    /// `out = H(t)·psi`
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);
}

impl Hamiltonian for SparseMatrix {
    fn dim(&self) -> usize {
        SparseMatrix::dim(self)
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        self.matvec(psi, out)
    }
}

impl Hamiltonian for OperatorMatrix {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        self.matrix.matvec(psi, out)
    }
}

impl Hamiltonian for TimeDependentOperator {
    fn dim(&self) -> usize {
        TimeDependentOperator::dim(self)
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        TimeDependentOperator::apply(self, t, psi, out)
    }
}

impl Hamiltonian for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(psi).map(|(a, b)| a * b).sum();
        }
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for &H {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        (**self).apply(t, psi, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta. Steps shrink slightly so that
    /// every sample time is hit exactly.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with per-step error control on the max-norm of the
    /// amplitude error.
    DormandPrince {
        tolerance: f64,
        initial_step: f64,
        max_step: f64,
    },
}

impl Method {
    pub fn rk4(step: f64) -> Self {
        Method::Rk4 { step }
    }

    pub fn dormand_prince(tolerance: f64) -> Self {
        Method::DormandPrince {
            tolerance,
            initial_step: 1e-3,
            max_step: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub method: Method,
    /// Renormalize the state after every step.
    pub renormalize: bool,
    /// Spacing of the recorded time grid. The final time is always recorded.
    pub sample_interval: f64,
    pub store_states: bool,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4 { step: 1e-3 },
            renormalize: false,
            sample_interval: 0.5,
            store_states: false,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 { step } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "step must be positive, got {step}"
                    )));
                }
            }
            Method::DormandPrince {
                tolerance,
                initial_step,
                max_step,
            } => {
                if !(tolerance > 0.0 && tolerance <= 1e-3) {
                    return Err(Error::InvalidConfig(format!(
                        "tolerance must lie in (0, 1e-3], got {tolerance}"
                    )));
                }
                if !(initial_step > 0.0 && initial_step.is_finite()) || !(max_step > 0.0) {
                    return Err(Error::InvalidConfig(
                        "initial and maximum steps must be positive".into(),
                    ));
                }
            }
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample interval must be positive, got {}",
                self.sample_interval
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableKind {
    /// `|⟨reference|ψ⟩|²`
    Overlap(StateVector),
    /// `Σ_i |ψ_i|²` over the listed basis indices.
    Population(Vec<usize>),
    /// `ψ_i`, recorded as two columns `<name>_re`, `<name>_im`.
    Amplitude(usize),
    Norm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub kind: ObservableKind,
}

impl Observable {
    /// Occupation probability of `reference`.
    pub fn occupation(name: &str, reference: StateVector) -> Self {
        Self {
            name: name.to_string(),
            kind: ObservableKind::Overlap(reference),
        }
    }

    /// Fidelity to `target`, the same quantity as [`Observable::occupation`].
    pub fn fidelity(name: &str, target: StateVector) -> Self {
        Self::occupation(name, target)
    }

    pub fn population(name: &str, indices: Vec<usize>) -> Self {
        Self {
            name: name.to_string(),
            kind: ObservableKind::Population(indices),
        }
    }

    pub fn amplitude(name: &str, index: usize) -> Self {
        Self {
            name: name.to_string(),
            kind: ObservableKind::Amplitude(index),
        }
    }

    pub fn norm() -> Self {
        Self {
            name: "norm".to_string(),
            kind: ObservableKind::Norm,
        }
    }

    fn columns(&self) -> Vec<String> {
        match self.kind {
            ObservableKind::Amplitude(_) => {
                vec![format!("{}_re", self.name), format!("{}_im", self.name)]
            }
            _ => vec![self.name.clone()],
        }
    }

    fn check(&self, dim: usize, basis_id: u64) -> Result<()> {
        match &self.kind {
            ObservableKind::Overlap(r) => {
                if r.basis_id() != basis_id || r.dim() != dim {
                    return Err(Error::BasisMismatch);
                }
            }
            ObservableKind::Population(idx) => {
                if let Some(&i) = idx.iter().find(|&&i| i >= dim) {
                    return Err(Error::InvalidArgument(format!(
                        "observable {}: index {i} outside dimension {dim}",
                        self.name
                    )));
                }
            }
            ObservableKind::Amplitude(i) => {
                if *i >= dim {
                    return Err(Error::InvalidArgument(format!(
                        "observable {}: index {i} outside dimension {dim}",
                        self.name
                    )));
                }
            }
            ObservableKind::Norm => {}
        }
        Ok(())
    }

    fn record(&self, psi: &[C64], out: &mut Vec<f64>) {
        match &self.kind {
            ObservableKind::Overlap(r) => out.push(inner(r.amplitudes(), psi).norm_sqr()),
            ObservableKind::Population(idx) => {
                out.push(idx.iter().map(|&i| psi[i].norm_sqr()).sum())
            }
            ObservableKind::Amplitude(i) => {
                out.push(psi[*i].re);
                out.push(psi[*i].im);
            }
            ObservableKind::Norm => out.push(norm(psi)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Column names, one per recorded real series.
    pub columns: Vec<String>,
    /// `values[c][i]` is column `c` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    pub states: Option<Vec<StateVector>>,
    pub final_state: StateVector,
    /// `| ‖ψ‖ − 1 |` of the unrenormalized evolution at the end.
    pub final_norm_error: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn sample_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = ceil(t_end / dt - 1e-9).max(1.0) as usize;
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    times.push(t_end);
    times
}

/// Writes `−i·H(t)·psi` into `out`.
fn derivative<H: Hamiltonian + ?Sized>(h: &H, t: f64, psi: &[C64], out: &mut [C64]) {
    h.apply(t, psi, out);
    for o in out.iter_mut() {
        *o = C64::new(o.im, -o.re);
    }
}

struct Rk4Work {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Work {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![ZERO; dim],
            k2: vec![ZERO; dim],
            k3: vec![ZERO; dim],
            k4: vec![ZERO; dim],
            tmp: vec![ZERO; dim],
        }
    }

    fn step<H: Hamiltonian + ?Sized>(&mut self, h: &H, t: f64, dt: f64, psi: &mut [C64]) {
        let half = 0.5 * dt;
        derivative(h, t, psi, &mut self.k1);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k1) {
            *x = p + k * half;
        }
        derivative(h, t + half, &self.tmp, &mut self.k2);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k2) {
            *x = p + k * half;
        }
        derivative(h, t + half, &self.tmp, &mut self.k3);
        for ((x, p), k) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k3) {
            *x = p + k * dt;
        }
        derivative(h, t + dt, &self.tmp, &mut self.k4);
        let w = dt / 6.0;
        for i in 0..psi.len() {
            psi[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct DpWork {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    next: Vec<C64>,
    /// Whether `k[0]` already holds the derivative at the current point.
    fsal: bool,
}

impl DpWork {
    fn new(dim: usize) -> Self {
        Self {
            k: core::array::from_fn(|_| vec![ZERO; dim]),
            tmp: vec![ZERO; dim],
            next: vec![ZERO; dim],
            fsal: false,
        }
    }

    /// Attempts one step and returns the max-norm error estimate. On success
    /// the caller swaps `next` into the state.
    fn attempt<H: Hamiltonian + ?Sized>(&mut self, h: &H, t: f64, dt: f64, psi: &[C64]) -> f64 {
        if !self.fsal {
            derivative(h, t, psi, &mut self.k[0]);
            self.fsal = true;
        }
        for s in 1..7 {
            for i in 0..psi.len() {
                let mut acc = psi[i];
                for (j, &a) in DP_A[s][..s].iter().enumerate() {
                    if a != 0.0 {
                        acc += self.k[j][i] * (a * dt);
                    }
                }
                self.tmp[i] = acc;
            }
            derivative(h, t + DP_C[s] * dt, &self.tmp, &mut self.k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..psi.len() {
            let mut y5 = psi[i];
            let mut e = ZERO;
            for s in 0..7 {
                y5 += self.k[s][i] * (DP_B5[s] * dt);
                e += self.k[s][i] * ((DP_B5[s] - DP_B4[s]) * dt);
            }
            self.next[i] = y5;
            err = err.max(e.norm());
        }
        err
    }

    fn accept(&mut self, psi: &mut [C64]) {
        psi.copy_from_slice(&self.next);
        // Last stage is evaluated at the accepted point.
        self.k.swap(0, 6);
    }
}

/// Propagates `psi0` from `t = 0` to `t_end`, recording `observables` on the
/// sample grid of `cfg`.
pub fn propagate<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t_end: f64,
    cfg: &PropagatorConfig,
    observables: &[Observable],
) -> Result<Trajectory> {
    cfg.validate()?;
    let dim = h.dim();
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi0.dim(),
        });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "initial state has norm {}",
            psi0.norm()
        )));
    }
    for o in observables {
        o.check(dim, psi0.basis_id())?;
    }
    if t_end / cfg.sample_interval > MAX_SAMPLES as f64 {
        return Err(Error::InvalidConfig(format!(
            "{t_end} / {} exceeds {MAX_SAMPLES} samples",
            cfg.sample_interval
        )));
    }

    let basis_id = psi0.basis_id();
    let grid = sample_grid(t_end, cfg.sample_interval);
    let columns: Vec<String> = observables.iter().flat_map(|o| o.columns()).collect();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); columns.len()];
    let mut states = cfg.store_states.then(|| Vec::with_capacity(grid.len()));
    let mut psi = psi0.amplitudes().to_vec();
    let mut row = Vec::with_capacity(columns.len());
    // Running log of the norm factors removed by renormalization.
    let mut log_scale = 0.0f64;
    let mut steps = 0usize;

    let mut record =
        |psi: &[C64], values: &mut Vec<Vec<f64>>, states: &mut Option<Vec<StateVector>>| {
            row.clear();
            for o in observables {
                o.record(psi, &mut row);
            }
            for (c, v) in values.iter_mut().zip(&row) {
                c.push(*v);
            }
            if let Some(s) = states.as_mut() {
                s.push(StateVector::from_raw(psi.to_vec(), basis_id));
            }
        };

    let drift_of =
        |psi: &[C64], log_scale: f64| -> f64 { (norm(psi) * exp(log_scale) - 1.0).abs() };
    let renorm = |psi: &mut [C64], log_scale: &mut f64| {
        if cfg.renormalize {
            let nrm = norm(psi);
            if nrm > 0.0 {
                *log_scale += ln(nrm);
                for x in psi.iter_mut() {
                    *x /= nrm;
                }
            }
        }
    };

    record(&psi, &mut values, &mut states);
    match cfg.method {
        Method::Rk4 { step } => {
            let mut work = Rk4Work::new(dim);
            for w in grid.windows(2) {
                let (a, b) = (w[0], w[1]);
                let n = ceil((b - a) / step - 1e-9).max(1.0) as usize;
                let dt = (b - a) / n as f64;
                for i in 0..n {
                    work.step(h, a + i as f64 * dt, dt, &mut psi);
                    renorm(&mut psi, &mut log_scale);
                }
                steps += n;
                let drift = drift_of(&psi, log_scale);
                if drift > MAX_NORM_DRIFT {
                    return Err(Error::Accuracy { time: b, drift });
                }
                record(&psi, &mut values, &mut states);
            }
        }
        Method::DormandPrince {
            tolerance,
            initial_step,
            max_step,
        } => {
            let mut work = DpWork::new(dim);
            let mut dt = initial_step.min(max_step);
            let mut t = 0.0;
            for &target in &grid[1..] {
                while target - t > 1e-12 * target.max(1.0) {
                    let h_try = dt.min(target - t).min(max_step);
                    let err = work.attempt(h, t, h_try, &psi);
                    let ratio = err / tolerance;
                    let factor = if ratio == 0.0 {
                        5.0
                    } else {
                        (0.9 * powf(ratio, -0.2)).clamp(0.2, 5.0)
                    };
                    if ratio <= 1.0 {
                        work.accept(&mut psi);
                        if cfg.renormalize {
                            renorm(&mut psi, &mut log_scale);
                            work.fsal = false;
                        }
                        t += h_try;
                        steps += 1;
                        // Only grow from a full-size step, not from one clipped to the grid.
                        if h_try >= dt || factor < 1.0 {
                            dt = h_try * factor;
                        }
                    } else {
                        dt = h_try * factor;
                        if dt < 1e-14 * target.max(1.0) {
                            return Err(Error::Accuracy {
                                time: t,
                                drift: drift_of(&psi, log_scale),
                            });
                        }
                    }
                }
                t = target;
                let drift = drift_of(&psi, log_scale);
                if drift > MAX_NORM_DRIFT {
                    return Err(Error::Accuracy {
                        time: target,
                        drift,
                    });
                }
                record(&psi, &mut values, &mut states);
            }
        }
    }

    let final_norm_error = drift_of(&psi, log_scale);
    Ok(Trajectory {
        times: grid,
        columns,
        values,
        states,
        final_state: StateVector::from_raw(psi, basis_id),
        final_norm_error,
        steps,
    })
}

/// `|⟨reference|state⟩|²`
pub fn occupation_probability(state: &StateVector, reference: &StateVector) -> Result<f64> {
    Ok(reference.overlap(state)?.norm_sqr())
}

/// `F(t) = |⟨target|ψ(t)⟩|²` over the stored states of `traj`.
pub fn fidelity_to(target: &StateVector, traj: &Trajectory) -> Result<Vec<f64>> {
    let states = traj
        .states
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("trajectory was recorded without states".into()))?;
    states
        .iter()
        .map(|s| occupation_probability(s, target))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub max: f64,
    pub rms: f64,
    pub time_of_max: f64,
    pub samples: usize,
}

fn interpolate(times: &[f64], ys: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&x| x < t);
    if i == 0 {
        return ys[0];
    }
    if i >= times.len() {
        return ys[times.len() - 1];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    if t1 == t {
        return ys[i];
    }
    let w = (t - t0) / (t1 - t0);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

/// Deviation of `column` between two trajectories on the time grid of `a`
/// restricted to the common range, with `b` linearly interpolated.
pub fn compare_models(a: &Trajectory, b: &Trajectory, column: &str) -> Result<Deviation> {
    compare_models_until(a, b, column, f64::INFINITY)
}

/// As [`compare_models`], only over `t ≤ t_max`.
pub fn compare_models_until(
    a: &Trajectory,
    b: &Trajectory,
    column: &str,
    t_max: f64,
) -> Result<Deviation> {
    let missing =
        |which: &str| Error::InvalidArgument(format!("{which} trajectory has no column {column}"));
    let ya = a.column(column).ok_or_else(|| missing("first"))?;
    let yb = b.column(column).ok_or_else(|| missing("second"))?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let lo = a.times[0].max(b.times[0]);
    let hi = a.times[a.len() - 1].min(b.times[b.len() - 1]).min(t_max);
    let mut dev = Deviation {
        max: 0.0,
        rms: 0.0,
        time_of_max: lo,
        samples: 0,
    };
    let mut sum = 0.0;
    for (&t, &y) in a.times.iter().zip(ya) {
        if t < lo || t > hi {
            continue;
        }
        let d = (y - interpolate(&b.times, yb, t)).abs();
        if d > dev.max || dev.samples == 0 {
            dev.max = d;
            dev.time_of_max = t;
        }
        sum += d * d;
        dev.samples += 1;
    }
    if dev.samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "time ranges do not overlap on [{lo}, {hi}]"
        )));
    }
    dev.rms = sqrt(sum / dev.samples as f64);
    Ok(dev)
}

/// Places a two-site state `[|gg⟩, |gf⟩, |fg⟩, |ff⟩]` on sites `a`, `b`
/// (linear indices) of `basis`, all other atoms in `|g⟩` and photons in vacuum.
pub fn embed_pair_state(pair: &[C64], a: usize, b: usize, basis: &Basis) -> Result<StateVector> {
    if pair.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: pair.len(),
        });
    }
    if a == b || a >= basis.n_sites() || b >= basis.n_sites() {
        return Err(Error::InvalidArgument(format!(
            "pair sites {a}, {b} invalid for {} sites",
            basis.n_sites()
        )));
    }
    let mut amps = vec![ZERO; basis.dim()];
    for (idx, &amp) in pair.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        let mut s = BasisState::ground(basis.n_sites(), basis.n_modes());
        s.atoms[a] = if idx & 2 != 0 {
            AtomLevel::F
        } else {
            AtomLevel::G
        };
        s.atoms[b] = if idx & 1 != 0 {
            AtomLevel::F
        } else {
            AtomLevel::G
        };
        let i = basis
            .index_of(&s)
            .ok_or_else(|| Error::OutsideSector(crate::hilbert::describe(&s)))?;
        amps[i] = amp;
    }
    StateVector::from_amplitudes(basis, amps)
}

/// Exchange rate read off the first deep minimum of an occupation
/// probability that starts near 1 and follows `cos²(χt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeFit {
    pub time_of_min: f64,
    pub min_value: f64,
    /// `π / (2·t_min)`
    pub chi: f64,
}

/// Finds the first minimum after `p` falls below 0.25 and before it climbs
/// back above 0.75, refined by a parabola through the neighbouring samples.
pub fn fit_exchange_rate(times: &[f64], p: &[f64]) -> Option<ExchangeFit> {
    let start = p.iter().position(|&x| x < 0.25)?;
    let end = p[start..]
        .iter()
        .position(|&x| x > 0.75)
        .map_or(p.len(), |e| start + e);
    let (mut i_min, mut v_min) = (start, p[start]);
    for (i, &v) in p.iter().enumerate().take(end).skip(start) {
        if v < v_min {
            i_min = i;
            v_min = v;
        }
    }
    let mut t_min = times[i_min];
    if i_min > 0 && i_min + 1 < p.len() {
        let (y0, y1, y2) = (p[i_min - 1], p[i_min], p[i_min + 1]);
        let (ta, tb) = (times[i_min - 1], times[i_min + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        // Parabolic refinement assumes a uniform grid around the minimum.
        if denom > 0.0 && ((times[i_min] - ta) - (tb - times[i_min])).abs() < 1e-9 * tb.max(1.0) {
            let h = times[i_min] - ta;
            t_min += 0.5 * h * (y0 - y2) / denom;
            v_min = y1 - 0.125 * (y0 - y2) * (y0 - y2) / denom;
        }
    }
    if t_min <= 0.0 {
        return None;
    }
    Some(ExchangeFit {
        time_of_min: t_min,
        min_value: v_min,
        chi: core::f64::consts::PI / (2.0 * t_min),
    })
}

/// Unit phase `u` such that the state near the start of an exchange reads
/// `a(|A⟩ − i·u·|B⟩)`, from the amplitudes on the two configurations.
pub fn exchange_phase(amp_from: C64, amp_to: C64) -> Option<C64> {
    if amp_from.norm() == 0.0 || amp_to.norm() == 0.0 {
        return None;
    }
    let u = C64::new(0.0, 1.0) * amp_to / amp_from;
    Some(u / u.norm())
}

/// Largest `| ‖ψ‖² − 1 |` over stored states.
pub fn max_norm_error(traj: &Trajectory) -> Option<f64> {
    traj.states.as_ref().map(|s| {
        s.iter()
            .map(|x| (norm_sqr(x.amplitudes()) - 1.0).abs())
            .fold(0.0, f64::max)
    })
}
