//! Execution of the subcommands. Results are written only after the
//! computation succeeds; the progress log is opened on the first iteration.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use gconv::fock::{build_kerr_trisqueezed, build_trisqueezed, FockVector};
use gconv::gaussian::{optimize_deterministic_observed, DetMode, DetProblem};
use gconv::optim::IterationRecord;
use gconv::phase_space::{cubic_mana, find_matching_cubicity, wigner_auto, ManaConfig, WignerGrid};
use gconv::protocol::{
    default_mask, optimize_probabilistic_observed, CircuitParams, FreeParam, Param, ProbProblem,
    QuadratureScheme,
};
use gconv::quadrature::PlaneQuadrature;
use gconv::sweep::{
    delta_sweep, eta_sweep, kerr_sweep, mana_sweep, write_gate_error_csv, write_mana_sweep_csv,
    write_sweep_csv, ScanSetup,
};
use gconv::teleport::{gate_error_pure, GateErrorConfig};
use gconv::wavefunction::{
    cubic_phase_wavefunction, displaced_squeezed_wavefunction, gkp_plus_momentum,
    position_wavefunction, xi_from_db, QuadWavefunction, Representation,
};
use gconv::{Error, C64};

use crate::args::*;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Files of one run, written together at the end.
struct Output {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(dir: &Path) -> Self {
        Output {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Outcome {
        let mut text = serde_json::to_vec_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push(b'\n');
        self.files.push((name.to_string(), text));
        Ok(())
    }

    fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn commit(self) -> Outcome {
        fs::create_dir_all(&self.dir)?;
        for (name, bytes) in self.files {
            fs::write(self.dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Line-delimited JSON progress records, created lazily.
struct ProgressLog {
    path: PathBuf,
    file: Option<BufWriter<File>>,
    error: Option<std::io::Error>,
}

impl ProgressLog {
    fn new(dir: &Path) -> Self {
        ProgressLog {
            path: dir.join("progress.jsonl"),
            file: None,
            error: None,
        }
    }

    fn record(&mut self, rec: &IterationRecord) {
        if self.error.is_some() {
            return;
        }
        let res = (|| -> std::io::Result<()> {
            if self.file.is_none() {
                if let Some(parent) = self.path.parent() {
                    fs::create_dir_all(parent)?;
                }
                self.file = Some(BufWriter::new(File::create(&self.path)?));
            }
            let f = self.file.as_mut().expect("opened above");
            serde_json::to_writer(&mut *f, rec)?;
            f.write_all(b"\n")
        })();
        if let Err(e) = res {
            self.error = Some(e);
        }
    }

    fn finish(mut self) -> Outcome {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        if let Some(mut f) = self.file.take() {
            f.flush()?;
        }
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let mut out = Output::new(&cfg.out);
    match &cfg.command {
        Command::State(a) => state(a, &mut out)?,
        Command::DetOpt(a) => det_opt(a, cfg, &mut out)?,
        Command::ProbOpt(a) => prob_opt(a, cfg, &mut out)?,
        Command::Sweep(a) => sweep(a, cfg, &mut out)?,
        Command::GateError(a) => gate_error_cmd(a, cfg, &mut out)?,
    }
    out.json("run_config.json", cfg)?;
    out.commit()
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> gconv::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn mana_of(psi: &QuadWavefunction, spacing: f64) -> Result<(f64, WignerGrid), Failure> {
    let cfg = ManaConfig {
        spacing,
        ..Default::default()
    };
    let (grid, _) = wigner_auto(&[(1.0, psi.clone())], &cfg)?;
    let m = grid.abs_integral().log2();
    Ok((m, grid))
}

/// Swaps the axes of a grid computed from a momentum wavefunction treated as
/// a position one: `W(q, p) = W'(p, -q)`.
fn from_momentum_frame(g: &WignerGrid) -> WignerGrid {
    let (nx, ny) = (g.q.len, g.p.len);
    // the axes are symmetric, so reversing an index negates the coordinate
    let mut values = vec![0.0; nx * ny];
    for i in 0..ny {
        for j in 0..nx {
            values[i * nx + j] = g.at(j, ny - 1 - i);
        }
    }
    WignerGrid {
        q: g.p,
        p: g.q,
        values,
    }
}

fn state(a: &StateArgs, out: &mut Output) -> Outcome {
    let xi_t = xi_from_db(a.sq_db);
    let (psi, extra) = match a.kind {
        StateKind::Trisqueezed => {
            let v = build_trisqueezed(C64::new(a.t, 0.0), a.cutoff)?;
            (
                position_wavefunction(&v),
                json!({ "t": a.t, "cutoff": a.cutoff, "tail_mass": v.tail_mass() }),
            )
        }
        StateKind::KerrTrisqueezed => {
            if !(a.kerr_ratio > 0.0) {
                return Err(Failure::Usage("--kerr-ratio must be positive".into()));
            }
            let v = build_kerr_trisqueezed(C64::new(a.t, 0.0), a.t / a.kerr_ratio, 1.0, a.cutoff)?;
            (
                position_wavefunction(&v),
                json!({ "t": a.t, "kerr_ratio": a.kerr_ratio, "cutoff": a.cutoff, "tail_mass": v.tail_mass() }),
            )
        }
        StateKind::Cubic => (
            cubic_phase_wavefunction(a.r, xi_t, 0.0)?,
            json!({ "r": a.r, "sq_db": a.sq_db, "semi_analytic_mana": cubic_mana(a.r, xi_t)? }),
        ),
        StateKind::Squeezed => (
            displaced_squeezed_wavefunction(C64::new(a.xi, 0.0), C64::new(a.q_beta, a.p_beta))?,
            json!({ "xi": a.xi, "q_beta": a.q_beta, "p_beta": a.p_beta }),
        ),
        StateKind::Gkp => {
            let m = gkp_plus_momentum(a.delta)?;
            let hw = m.domain_halfwidth();
            let as_position =
                QuadWavefunction::custom(move |x| m.eval(x), Representation::Position, hw);
            (as_position, json!({ "delta": a.delta }))
        }
    };
    let (mana, mut grid) = mana_of(&psi, a.spacing)?;
    if a.kind == StateKind::Gkp {
        grid = from_momentum_frame(&grid);
    }
    let body = json!({
        "kind": a.kind,
        "mana": mana,
        "integral": grid.integral(),
        "q_half_width": -grid.q.start,
        "p_half_width": -grid.p.start,
        "parameters": extra,
    });
    out.json("state.json", &body)?;
    out.raw("wigner.csv", csv_bytes(|b| grid.write_csv(b))?);
    Ok(())
}

/// Cubicity whose target has the same mana as the input state.
fn matched_cubicity(input: &FockVector, xi_target: f64) -> Result<f64, Failure> {
    let (m, _) = mana_of(&position_wavefunction(input), 0.02)?;
    Ok(find_matching_cubicity(m, xi_target, 1e-7)?)
}

fn det_opt(a: &DetOptArgs, cfg: &RunConfig, out: &mut Output) -> Outcome {
    let xi_t = xi_from_db(a.sq_db);
    let input = build_trisqueezed(C64::new(a.t, 0.0), a.cutoff)?;
    let r = match a.r {
        Some(r) => r,
        None => matched_cubicity(&input, xi_t)?,
    };
    let quad = PlaneQuadrature {
        half_width: a.quad_half_width,
        nodes: a.quad_nodes,
    };
    let problem = DetProblem::new(input, r, xi_t, quad);
    let opt = a.opt.config(cfg.seed);
    let mut log = ProgressLog::new(&cfg.out);
    let mode: DetMode = a.mode.into();
    let res = optimize_deterministic_observed(&problem, mode, &opt, |rec| log.record(rec));
    log.finish()?;
    let res = res?;
    out.json(
        "result.json",
        &json!({ "t": a.t, "r": r, "xi_target": xi_t, "outcome": res }),
    )
}

fn input_state(c: &CircuitArgs) -> Result<FockVector, Failure> {
    let g = C64::new(0.0, c.t);
    Ok(match c.kerr_ratio {
        None => build_trisqueezed(g, c.cutoff)?,
        Some(k) if k > 0.0 => build_kerr_trisqueezed(g, c.t / k, 1.0, c.cutoff)?,
        Some(k) => {
            return Err(Failure::Usage(format!(
                "--kerr-ratio must be positive, got {k}"
            )))
        }
    })
}

fn circuit_problem(c: &CircuitArgs) -> Result<(ProbProblem, f64), Failure> {
    let xi_t = xi_from_db(c.sq_db);
    let input = input_state(c)?;
    let r = match c.r {
        Some(r) => r,
        None => matched_cubicity(&build_trisqueezed(C64::new(0.0, c.t), c.cutoff)?, xi_t)?,
    };
    let problem = ProbProblem::new(input, r, xi_t, QuadratureScheme::default())?
        .with_min_probability(c.min_probability)?;
    Ok((problem, r))
}

fn bounded(param: Param, b: &Option<Vec<f64>>) -> FreeParam {
    match b {
        Some(v) => FreeParam {
            param,
            lower: v[0],
            upper: v[1],
        },
        None => FreeParam::full(param),
    }
}

fn prob_opt(a: &ProbOptArgs, cfg: &RunConfig, out: &mut Output) -> Outcome {
    let mut free = vec![
        bounded(Param::Theta, &a.theta_bounds),
        bounded(Param::QBeta, &a.q_beta_bounds),
        bounded(Param::Xi, &a.xi_bounds),
        bounded(Param::D, &a.d_bounds),
    ];
    if a.free_gamma {
        free.push(bounded(Param::Gamma, &a.gamma_bounds));
    } else if a.gamma_bounds.is_some() {
        return Err(Failure::Usage("--gamma-bounds needs --free-gamma".into()));
    }
    // reject bad bounds before any expensive work
    for f in &free {
        let (lo, hi) = f.param.allowed_range();
        if !(f.lower >= lo && f.upper <= hi && f.lower <= f.upper) {
            return Err(Failure::Usage(format!(
                "bounds [{}, {}] for {:?} must lie within [{lo}, {hi}]",
                f.lower, f.upper, f.param
            )));
        }
    }
    let (problem, r) = circuit_problem(&a.circuit)?;
    let base = CircuitParams {
        delta: a.circuit.delta,
        eta: a.circuit.eta,
        ..Default::default()
    };
    base.validate()?;
    let opt = a.opt.config(cfg.seed);
    let mut log = ProgressLog::new(&cfg.out);
    let res = optimize_probabilistic_observed(&problem, &base, &free, &opt, |rec| log.record(rec));
    log.finish()?;
    let res = res?;
    let mana_out = if a.mana {
        let mcfg = ManaConfig {
            spacing: 0.05,
            ..Default::default()
        };
        Some(problem.conditional_state(&res.params)?.mana(&mcfg)?)
    } else {
        None
    };
    out.json(
        "result.json",
        &json!({
            "t": a.circuit.t,
            "r": r,
            "xi_target": problem.target_xi,
            "kerr_ratio": a.circuit.kerr_ratio,
            "outcome": res,
            "mana_out": mana_out,
        }),
    )
}

fn sweep(a: &SweepArgs, cfg: &RunConfig, out: &mut Output) -> Outcome {
    let mcfg = ManaConfig {
        spacing: a.spacing,
        ..Default::default()
    };
    let c = &a.circuit;
    let base = CircuitParams {
        theta: a.theta,
        q_beta: a.q_beta,
        xi: a.xi,
        d: a.d,
        gamma: a.gamma,
        delta: c.delta,
        eta: c.eta,
        ..Default::default()
    };
    base.validate()?;
    let mana = a.with_mana.then_some(&mcfg);
    match a.kind {
        SweepKind::Delta | SweepKind::Eta => {
            let (problem, _) = circuit_problem(c)?;
            let (rows, name) = if a.kind == SweepKind::Delta {
                (delta_sweep(&problem, &base, &a.values, mana)?, "delta")
            } else {
                (eta_sweep(&problem, &base, &a.values, mana)?, "eta")
            };
            out.raw("sweep.csv", csv_bytes(|b| write_sweep_csv(&rows, name, b))?);
        }
        SweepKind::Mana | SweepKind::Kerr => {
            let xi_t = xi_from_db(c.sq_db);
            let target_r = c
                .r
                .ok_or_else(|| Failure::Usage("--r is required for re-optimising sweeps".into()))?;
            let mut free = default_mask();
            if a.kind == SweepKind::Kerr {
                free.push(FreeParam::full(Param::Gamma));
            }
            let setup = ScanSetup {
                cutoff: c.cutoff,
                target_xi: xi_t,
                quad: QuadratureScheme::default(),
                base: CircuitParams {
                    delta: c.delta,
                    eta: c.eta,
                    ..Default::default()
                },
                free,
                optimizer: a.opt.config(cfg.seed),
                mana: mcfg,
                min_probability: c.min_probability,
            };
            if a.kind == SweepKind::Mana {
                let rows = mana_sweep(&a.values, target_r, &setup)?;
                out.raw("sweep.csv", csv_bytes(|b| write_mana_sweep_csv(&rows, b))?);
            } else {
                let rows = kerr_sweep(c.t, &a.values, target_r, &setup, None)?;
                out.raw("sweep.csv", csv_bytes(|b| write_gate_error_csv(&rows, b))?);
            }
        }
    }
    Ok(())
}

fn gate_error_cmd(a: &GateErrorArgs, cfg: &RunConfig, out: &mut Output) -> Outcome {
    let xi_t = xi_from_db(a.sq_db);
    let gcfg = GateErrorConfig {
        delta_gkp: a.delta_gkp,
        ..Default::default()
    };
    let mut free = default_mask();
    free.push(FreeParam::full(Param::Gamma));
    let setup = ScanSetup {
        cutoff: a.cutoff,
        target_xi: xi_t,
        quad: QuadratureScheme::default(),
        base: CircuitParams::default(),
        free,
        optimizer: a.opt.config(cfg.seed),
        mana: ManaConfig::default(),
        min_probability: gconv::protocol::DEGENERATE_PROBABILITY,
    };
    // reference row: the ideal resource itself
    let ideal = gate_error_pure(&cubic_phase_wavefunction(a.r, xi_t, 0.0)?, a.r, xi_t, &gcfg)?;
    let rows = kerr_sweep(a.t, &a.ratios, a.r, &setup, Some(&gcfg))?;
    let mut bytes = csv_bytes(|b| write_gate_error_csv(&rows, b))?;
    let header_end = bytes
        .iter()
        .position(|&c| c == b'\n')
        .map_or(bytes.len(), |p| p + 1);
    let ideal_row = format!("inf,1,1,{ideal},\n");
    bytes.splice(header_end..header_end, ideal_row.into_bytes());
    out.raw("gate_error.csv", bytes);
    Ok(())
}
