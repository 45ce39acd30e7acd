//! Serializable views of core results.

use cavarray_core::hamiltonian::{CrossPairRatio, EffectiveCoefficients, RegimeReport};
use cavarray_core::protocols::{DecoherenceEstimate, PairSchedule, ProtocolPlan};
use cavarray_core::{SiteIndex, C64};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::output::table_csv;

pub fn site(s: SiteIndex) -> [usize; 2] {
    [s.j, s.k]
}

pub fn complex(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRatioJson {
    pub mode: [usize; 2],
    pub omega: f64,
    pub cavity_ratio: f64,
    pub raman_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRegimeJson {
    pub site: [usize; 2],
    pub drive_ratio: Option<f64>,
    pub modes: Vec<ModeRatioJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstRatioJson {
    pub site: [usize; 2],
    pub kind: String,
    pub mode: Option<[usize; 2]>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeJson {
    pub dispersion: String,
    pub threshold: f64,
    pub passes: bool,
    pub worst: Option<WorstRatioJson>,
    pub warnings: Vec<String>,
    pub sites: Vec<SiteRegimeJson>,
}

impl From<&RegimeReport> for RegimeJson {
    fn from(r: &RegimeReport) -> Self {
        Self {
            dispersion: r.dispersion.as_str().into(),
            threshold: r.threshold,
            passes: r.passes(),
            worst: r.worst().map(|(s, kind, mode, ratio)| WorstRatioJson {
                site: site(s),
                kind: kind.label().into(),
                mode: mode.map(|(m, n)| [m, n]),
                ratio,
            }),
            warnings: r.warnings(),
            sites: r
                .sites
                .iter()
                .map(|s| SiteRegimeJson {
                    site: site(s.site),
                    drive_ratio: s.drive_ratio,
                    modes: s
                        .modes
                        .iter()
                        .map(|m| ModeRatioJson {
                            mode: [m.mode.0, m.mode.1],
                            omega: m.omega,
                            cavity_ratio: m.cavity_ratio,
                            raman_ratio: m.raman_ratio,
                            pass: m.pass,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// `quantity,site_a,site_b,re,im,abs` rows: ε and ς per site, χ per
/// unordered pair.
pub fn coefficients_csv(c: &EffectiveCoefficients) -> Result<Vec<u8>> {
    let n = c.n;
    let label = |i: usize| format!("({},{})", i / n + 1, i % n + 1);
    let num = |x: f64| x.to_string();
    let mut rows = Vec::new();
    for i in 0..n * n {
        rows.push(vec![
            "epsilon".into(),
            label(i),
            String::new(),
            num(c.epsilon[i]),
            num(0.0),
            num(c.epsilon[i].abs()),
        ]);
    }
    for i in 0..n * n {
        rows.push(vec![
            "varsigma".into(),
            label(i),
            String::new(),
            num(c.varsigma[i]),
            num(0.0),
            num(c.varsigma[i].abs()),
        ]);
    }
    for a in 0..n * n {
        for b in a + 1..n * n {
            let z = c.chi[(a, b)];
            rows.push(vec![
                "chi".into(),
                label(a),
                label(b),
                num(z.re),
                num(z.im),
                num(z.norm()),
            ]);
        }
    }
    table_csv(&["quantity", "site_a", "site_b", "re", "im", "abs"], &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleJson {
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub gate: String,
    pub chi: [f64; 2],
    pub chi_abs: f64,
    pub varsigma: f64,
    pub interaction_time: f64,
    pub exchange_phase: [f64; 2],
    pub stark_phase: f64,
    /// Amplitudes on `[gg, gf, fg, ff]`, site `a` first.
    pub initial: [[f64; 2]; 4],
    pub predicted: [[f64; 2]; 4],
}

impl From<&PairSchedule> for ScheduleJson {
    fn from(s: &PairSchedule) -> Self {
        Self {
            a: site(s.a),
            b: site(s.b),
            gate: s.gate.name().into(),
            chi: complex(s.chi),
            chi_abs: s.chi.norm(),
            varsigma: s.varsigma,
            interaction_time: s.interaction_time,
            exchange_phase: complex(s.exchange_phase),
            stark_phase: s.stark_phase,
            initial: s.initial.map(complex),
            predicted: s.predicted.map(complex),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossJson {
    pub site: [usize; 2],
    pub other: [usize; 2],
    pub offset: f64,
    pub chi_abs: f64,
    pub ratio: Option<f64>,
}

impl From<&CrossPairRatio> for CrossJson {
    fn from(c: &CrossPairRatio) -> Self {
        Self {
            site: site(c.site),
            other: site(c.other),
            offset: c.offset,
            chi_abs: c.chi,
            ratio: c.ratio.is_finite().then_some(c.ratio),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub kind: String,
    pub dispersion: String,
    pub interaction_time: f64,
    pub basis: [String; 4],
    pub pairs: Vec<ScheduleJson>,
    pub cross: Vec<CrossJson>,
    pub notes: Vec<String>,
    pub regime: RegimeJson,
}

impl From<&ProtocolPlan> for PlanJson {
    fn from(p: &ProtocolPlan) -> Self {
        Self {
            kind: p.kind.as_str().into(),
            dispersion: p.dispersion.as_str().into(),
            interaction_time: p.interaction_time,
            basis: ["gg", "gf", "fg", "ff"].map(String::from),
            pairs: p.pairs.iter().map(ScheduleJson::from).collect(),
            cross: p.cross.iter().map(CrossJson::from).collect(),
            notes: p.notes.clone(),
            regime: (&p.regime).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotedJson {
    pub p1: f64,
    pub p2: f64,
    pub fidelity: f64,
    pub fidelity_from_chain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub dispersion: String,
    pub gamma: f64,
    pub kappa: f64,
    pub time: f64,
    pub p1: f64,
    pub p2: f64,
    pub p2_plus: f64,
    pub gamma_e: f64,
    pub kappa_e: f64,
    pub fidelity_estimate: f64,
    pub fidelity_estimate_plus: f64,
    pub quoted: QuotedJson,
    pub notes: Vec<String>,
}

impl EstimateJson {
    pub fn new(e: &DecoherenceEstimate, dispersion: &str) -> Self {
        Self {
            dispersion: dispersion.into(),
            gamma: e.gamma,
            kappa: e.kappa,
            time: e.time,
            p1: e.p1,
            p2: e.p2,
            p2_plus: e.p2_plus,
            gamma_e: e.gamma_e,
            kappa_e: e.kappa_e,
            fidelity_estimate: e.fidelity_estimate,
            fidelity_estimate_plus: e.fidelity_estimate_plus,
            quoted: QuotedJson {
                p1: e.quoted.p1,
                p2: e.quoted.p2,
                fidelity: e.quoted.fidelity,
                fidelity_from_chain: e.quoted.fidelity_from_chain,
            },
            notes: e.notes.clone(),
        }
    }
}
