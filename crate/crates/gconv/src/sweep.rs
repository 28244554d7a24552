//! Parameter scans of the probabilistic protocol, written as CSV.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fock::{build_kerr_trisqueezed, build_trisqueezed, fock_overlap, FockVector};
use crate::optim::OptimizerConfig;
use crate::phase_space::{mana_auto, ManaConfig};
use crate::protocol::{
    optimize_probabilistic, CircuitParams, FreeParam, ProbProblem, QuadratureScheme,
    DEGENERATE_PROBABILITY,
};
use crate::teleport::{gate_error, GateErrorConfig};
use crate::wavefunction::position_wavefunction;

/// One point of a scan at fixed circuit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub fidelity: f64,
    pub probability: f64,
    pub mana_out: Option<f64>,
}

fn fixed_scan(
    problem: &ProbProblem,
    values: &[f64],
    mana: Option<&ManaConfig>,
    make: impl Fn(f64) -> CircuitParams,
) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&v| {
            let p = make(v);
            let out = problem.evaluate(&p)?;
            let mana_out = match mana {
                Some(cfg) => Some(problem.conditional_state(&p)?.mana(cfg)?),
                None => None,
            };
            Ok(SweepRow {
                value: v,
                fidelity: out.fidelity,
                probability: out.probability,
                mana_out,
            })
        })
        .collect()
}

/// Varies the bin half-width.
pub fn delta_sweep(
    problem: &ProbProblem,
    base: &CircuitParams,
    deltas: &[f64],
    mana: Option<&ManaConfig>,
) -> Result<Vec<SweepRow>> {
    fixed_scan(problem, deltas, mana, |delta| CircuitParams {
        delta,
        ..*base
    })
}

/// Varies the homodyne efficiency.
pub fn eta_sweep(
    problem: &ProbProblem,
    base: &CircuitParams,
    etas: &[f64],
    mana: Option<&ManaConfig>,
) -> Result<Vec<SweepRow>> {
    fixed_scan(problem, etas, mana, |eta| CircuitParams { eta, ..*base })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], swept: &str, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    out.write_record([swept, "fidelity", "probability", "mana_out"])
        .map_err(io)?;
    for r in rows {
        out.write_record([
            r.value.to_string(),
            r.fidelity.to_string(),
            r.probability.to_string(),
            r.mana_out.map(|m| m.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    out.flush()
        .map_err(|e| invalid(format!("csv write failed: {e}")))
}

/// Settings shared by the scans that re-optimise every point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSetup {
    pub cutoff: usize,
    pub target_xi: f64,
    pub quad: QuadratureScheme,
    pub base: CircuitParams,
    pub free: Vec<FreeParam>,
    pub optimizer: OptimizerConfig,
    pub mana: ManaConfig,
    /// Success probability below which a circuit setting is rejected.
    #[serde(default = "default_min_probability")]
    pub min_probability: f64,
}

fn default_min_probability() -> f64 {
    DEGENERATE_PROBABILITY
}

impl ScanSetup {
    fn problem(&self, input: FockVector, target_r: f64) -> Result<ProbProblem> {
        ProbProblem::new(input, target_r, self.target_xi, self.quad)?
            .with_min_probability(self.min_probability)
    }
}

/// Optimised point of the input-mana scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManaSweepRow {
    pub triplicity: f64,
    pub mana_in: f64,
    pub fidelity: f64,
    pub probability: f64,
    pub mana_out: f64,
    pub params: CircuitParams,
}

/// Re-optimises the circuit for trisqueezed inputs of varying triplicity and
/// a fixed target.
pub fn mana_sweep(
    triplicities: &[f64],
    target_r: f64,
    setup: &ScanSetup,
) -> Result<Vec<ManaSweepRow>> {
    triplicities
        .iter()
        .map(|&t| {
            let input = build_trisqueezed(C64::new(0.0, t), setup.cutoff)?;
            let mana_in = mana_auto(&[(1.0, position_wavefunction(&input))], &setup.mana)?;
            let problem = setup.problem(input, target_r)?;
            let best =
                optimize_probabilistic(&problem, &setup.base, &setup.free, &setup.optimizer)?;
            let mana_out = problem.conditional_state(&best.params)?.mana(&setup.mana)?;
            Ok(ManaSweepRow {
                triplicity: t,
                mana_in,
                fidelity: best.fidelity,
                probability: best.probability,
                mana_out,
                params: best.params,
            })
        })
        .collect()
}

pub fn write_mana_sweep_csv<W: Write>(rows: &[ManaSweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    out.write_record([
        "mana_in",
        "fidelity",
        "probability",
        "mana_out",
        "triplicity",
    ])
    .map_err(io)?;
    for r in rows {
        out.write_record(
            [
                r.mana_in,
                r.fidelity,
                r.probability,
                r.mana_out,
                r.triplicity,
            ]
            .map(|v| v.to_string()),
        )
        .map_err(io)?;
    }
    out.flush()
        .map_err(|e| invalid(format!("csv write failed: {e}")))
}

/// Optimised point of the residual-Kerr scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KerrRow {
    /// Triplicity over Kerr strength.
    pub ratio: f64,
    /// Fidelity of the Kerr-deformed input with the ideal trisqueezed state.
    pub input_fidelity: f64,
    pub fidelity: f64,
    pub probability: f64,
    pub gate_error: Option<f64>,
    pub params: CircuitParams,
}

/// Re-optimises the circuit for inputs grown with a residual Kerr term of
/// strength `t / ratio` over unit time. With `gate` set, the teleportation
/// gate error of each optimised output is computed as well.
pub fn kerr_sweep(
    t: f64,
    ratios: &[f64],
    target_r: f64,
    setup: &ScanSetup,
    gate: Option<&GateErrorConfig>,
) -> Result<Vec<KerrRow>> {
    let ideal = build_trisqueezed(C64::new(0.0, t), setup.cutoff)?;
    ratios
        .iter()
        .map(|&ratio| {
            if !(ratio > 0.0) {
                return Err(invalid(format!("ratio must be positive, got {ratio}")));
            }
            let input = build_kerr_trisqueezed(C64::new(0.0, t), t / ratio, 1.0, setup.cutoff)?;
            let input_fidelity = fock_overlap(&ideal, &input)?.norm_sqr();
            let problem = setup.problem(input, target_r)?;
            let best =
                optimize_probabilistic(&problem, &setup.base, &setup.free, &setup.optimizer)?;
            let gate_error = match gate {
                Some(cfg) => Some(gate_error(
                    &problem.conditional_state(&best.params)?,
                    target_r,
                    setup.target_xi,
                    cfg,
                )?),
                None => None,
            };
            Ok(KerrRow {
                ratio,
                input_fidelity,
                fidelity: best.fidelity,
                probability: best.probability,
                gate_error,
                params: best.params,
            })
        })
        .collect()
}

/// Columns `t_over_k, input_fidelity, output_fidelity, gate_error`.
pub fn write_gate_error_csv<W: Write>(rows: &[KerrRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    out.write_record([
        "t_over_k",
        "input_fidelity",
        "output_fidelity",
        "gate_error",
        "probability",
    ])
    .map_err(io)?;
    for r in rows {
        out.write_record([
            r.ratio.to_string(),
            r.input_fidelity.to_string(),
            r.fidelity.to_string(),
            r.gate_error.map(|m| m.to_string()).unwrap_or_default(),
            r.probability.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush()
        .map_err(|e| invalid(format!("csv write failed: {e}")))
}
