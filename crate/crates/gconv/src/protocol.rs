//! Probabilistic conversion circuit: an ancilla in a displaced squeezed state
//! meets the input on a beam splitter, the second mode is phase rotated, the
//! first mode is measured by binned homodyne detection and the run is kept
//! when the outcome lands in the selected bin. A final momentum kick is
//! folded into the target.
//!
//! With `phi_q(q2) = psi_in(q cos th + q2 sin th) psi_anc(-q sin th + q2 cos th)`
//! the unnormalised output for outcome `q` is
//! `psi_q(x) = (1/pi) int K(x, q2) phi_q(q2) dq2`, where `K/pi` is the position
//! matrix element of the rotation `exp(-i gamma n)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{invalid, Error, Result};
use crate::fock::{build_trisqueezed, FockVector};
use crate::optim::{Bounds, IterationRecord, OptResult, OptimizerConfig};
use crate::par;
use crate::phase_space::{mana_auto, wigner_auto, ManaConfig, WignerGrid};
use crate::quadrature::Rule;
use crate::wavefunction::{
    cubic_phase_wavefunction, displaced_squeezed_wavefunction, position_wavefunction,
    QuadWavefunction, Representation,
};

/// Free parameters of the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitParams {
    /// Beam-splitter angle.
    pub theta: f64,
    /// Ancilla squeezing, real.
    pub xi: f64,
    pub q_beta: f64,
    pub p_beta: f64,
    /// Phase rotation on the unmeasured mode.
    pub gamma: f64,
    /// Final momentum displacement.
    pub d: f64,
    /// Centre of the accepted homodyne bin.
    pub q_n: f64,
    /// Half-width of the accepted bin.
    pub delta: f64,
    /// Homodyne efficiency in (0, 1].
    pub eta: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            theta: 0.0,
            xi: 0.0,
            q_beta: 0.0,
            p_beta: 0.0,
            gamma: -FRAC_PI_2,
            d: 0.0,
            q_n: 0.0,
            delta: 0.1,
            eta: 1.0,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.theta,
            self.xi,
            self.q_beta,
            self.p_beta,
            self.gamma,
            self.d,
            self.q_n,
            self.delta,
            self.eta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("circuit parameters must be finite"));
        }
        if !(self.delta > 0.0) {
            return Err(invalid(format!(
                "bin half-width must be positive, got {}",
                self.delta
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid(format!(
                "efficiency must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if self.gamma.sin().abs() < 1e-9 {
            return Err(Error::SingularKernel(self.gamma));
        }
        Ok(())
    }

    /// Variance of the Gaussian smearing of an inefficient homodyne detector.
    pub fn smearing_variance(&self) -> f64 {
        (1.0 - self.eta) / (4.0 * self.eta)
    }
}

/// Node counts and ranges of the integration axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureScheme {
    /// Half-width shared by the q0 and q2 axes.
    pub half_width: f64,
    pub q0_nodes: usize,
    pub q2_nodes: usize,
    /// Nodes across the accepted bin.
    pub bin_nodes: usize,
    /// Nodes on the smearing tails when the efficiency is below one.
    pub eta_nodes: usize,
    /// Tail length in units of the smearing width.
    pub eta_sigmas: f64,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            half_width: 8.0,
            q0_nodes: 240,
            q2_nodes: 240,
            bin_nodes: 32,
            eta_nodes: 64,
            eta_sigmas: 5.0,
        }
    }
}

impl QuadratureScheme {
    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0)
            || self.q0_nodes < 2
            || self.q2_nodes < 2
            || self.bin_nodes < 1
            || self.eta_nodes < 2
        {
            return Err(invalid("degenerate quadrature scheme"));
        }
        if !(self.eta_sigmas > 0.0) {
            return Err(invalid("smearing tail length must be positive"));
        }
        Ok(())
    }
}

/// `sqrt(2/pi) pi (1 - e^{-2 i gamma})^{-1/2} exp(i csc g (-2 q0 q2 + (q0^2 + q2^2) cos g))`.
pub fn overlap_kernel(q0: f64, q2: f64, gamma: f64) -> Result<C64> {
    let s = gamma.sin();
    if s.abs() < 1e-9 || !gamma.is_finite() {
        return Err(Error::SingularKernel(gamma));
    }
    let phase = (-2.0 * q0 * q2 + (q0 * q0 + q2 * q2) * gamma.cos()) / s;
    Ok(kernel_prefactor(gamma) * C64::from_polar(1.0, phase))
}

fn kernel_prefactor(gamma: f64) -> C64 {
    let one = C64::new(1.0, 0.0);
    (2.0 / PI).sqrt() * PI / (one - C64::from_polar(1.0, -2.0 * gamma)).sqrt()
}

/// Default success probability below which post-selection is degenerate.
pub const DEGENERATE_PROBABILITY: f64 = 1e-12;

/// Fidelity and success probability of one circuit setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub fidelity: f64,
    pub probability: f64,
}

/// Input state, target and quadrature for repeated circuit evaluations.
pub struct ProbProblem {
    pub input: FockVector,
    pub target_r: f64,
    pub target_xi: f64,
    pub quad: QuadratureScheme,
    /// Outcomes less likely than this are rejected as degenerate.
    pub min_probability: f64,
    input_psi: QuadWavefunction,
    q0: Rule,
    q2: Rule,
    /// Conjugated target times the q0 weight.
    target_row: Vec<C64>,
    /// `exp(2 i q0_i q2_j)`, the cross phase at the default rotation.
    default_cross: Vec<C64>,
}

impl ProbProblem {
    pub fn new(
        input: FockVector,
        target_r: f64,
        target_xi: f64,
        quad: QuadratureScheme,
    ) -> Result<Self> {
        quad.validate()?;
        let target = cubic_phase_wavefunction(target_r, target_xi, 0.0)?;
        let q0 = Rule::gauss_legendre(quad.q0_nodes, -quad.half_width, quad.half_width);
        let q2 = Rule::gauss_legendre(quad.q2_nodes, -quad.half_width, quad.half_width);
        let target_row = q0
            .nodes
            .iter()
            .zip(&q0.weights)
            .map(|(&x, &w)| target.eval(x).conj() * w)
            .collect();
        let default_cross = cross_phases(&q0.nodes, &q2.nodes, -FRAC_PI_2);
        Ok(ProbProblem {
            input_psi: position_wavefunction(&input),
            input,
            target_r,
            target_xi,
            quad,
            min_probability: DEGENERATE_PROBABILITY,
            q0,
            q2,
            target_row,
            default_cross,
        })
    }

    /// Raises the probability below which an outcome counts as degenerate.
    pub fn with_min_probability(mut self, p: f64) -> Result<Self> {
        if !(DEGENERATE_PROBABILITY..1.0).contains(&p) {
            return Err(invalid(format!(
                "minimum probability must lie in [1e-12, 1), got {p}"
            )));
        }
        self.min_probability = p;
        Ok(self)
    }

    /// Trisqueezed input with triplicity `t e^{i pi/2}`.
    pub fn trisqueezed(
        t: f64,
        cutoff: usize,
        target_r: f64,
        target_xi: f64,
        quad: QuadratureScheme,
    ) -> Result<Self> {
        Self::new(
            build_trisqueezed(C64::new(0.0, t), cutoff)?,
            target_r,
            target_xi,
            quad,
        )
    }

    pub fn input_wavefunction(&self) -> &QuadWavefunction {
        &self.input_psi
    }

    fn ancilla(&self, p: &CircuitParams) -> Result<QuadWavefunction> {
        displaced_squeezed_wavefunction(C64::new(p.xi, 0.0), C64::new(p.q_beta, p.p_beta))
    }

    /// Two-mode amplitude `phi_q` on the q2 nodes.
    fn joint_slice(&self, anc: &QuadWavefunction, p: &CircuitParams, q: f64) -> Vec<C64> {
        let (s, c) = p.theta.sin_cos();
        self.q2
            .nodes
            .iter()
            .map(|&y| self.input_psi.eval(q * c + y * s) * anc.eval(-q * s + y * c))
            .collect()
    }

    /// `T(q2_j) = (1/pi) sum_i w_i conj(target(q0_i)) e^{i q0_i d} K(q0_i, q2_j)`, times the q2 weight.
    fn target_projection(&self, p: &CircuitParams) -> Vec<C64> {
        let cot = p.gamma.cos() / p.gamma.sin();
        let row: Vec<C64> = self
            .q0
            .nodes
            .iter()
            .zip(&self.target_row)
            .map(|(&x, &t)| t * C64::from_polar(1.0, x * p.d + cot * x * x))
            .collect();
        let generic;
        let cross: &[C64] = if p.gamma == -FRAC_PI_2 {
            &self.default_cross
        } else {
            generic = cross_phases(&self.q0.nodes, &self.q2.nodes, p.gamma);
            &generic
        };
        let n2 = self.q2.len();
        let pref = kernel_prefactor(p.gamma) / PI;
        let cols = par::map_range(n2, |j| {
            let mut acc = C64::new(0.0, 0.0);
            for (i, r) in row.iter().enumerate() {
                acc += r * cross[i * n2 + j];
            }
            let y = self.q2.nodes[j];
            acc * pref * C64::from_polar(self.q2.weights[j], cot * y * y)
        });
        cols
    }

    /// `<target displaced by -d | psi_q>` for a single outcome `q`.
    pub fn overlap(&self, p: &CircuitParams, q: f64) -> Result<C64> {
        p.validate()?;
        let anc = self.ancilla(p)?;
        let t = self.target_projection(p);
        Ok(self
            .joint_slice(&anc, p, q)
            .iter()
            .zip(&t)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Nodes and weights over the measured quadrature. For unit efficiency
    /// these cover the bin; otherwise the bin indicator is smeared by the
    /// detector Gaussian, which integrates to a difference of error functions.
    pub fn outcome_rule(&self, p: &CircuitParams) -> Rule {
        let (lo, hi) = (p.q_n - p.delta, p.q_n + p.delta);
        if p.eta >= 1.0 {
            return Rule::gauss_legendre(self.quad.bin_nodes, lo, hi);
        }
        let sigma = p.smearing_variance().sqrt();
        let tail = self.quad.eta_sigmas * sigma;
        let side = (self.quad.eta_nodes / 2).max(1);
        let left = Rule::gauss_legendre(side, lo - tail, lo);
        let mid = Rule::gauss_legendre(self.quad.bin_nodes, lo, hi);
        let right = Rule::gauss_legendre(side, hi, hi + tail);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let s = std::f64::consts::SQRT_2 * sigma;
        for r in [left, mid, right] {
            for (&x, &w) in r.nodes.iter().zip(&r.weights) {
                let smear = 0.5 * (erf((hi - x) / s) - erf((lo - x) / s));
                nodes.push(x);
                weights.push(w * smear);
            }
        }
        Rule { nodes, weights }
    }

    /// Success probability and conditional fidelity.
    pub fn evaluate(&self, p: &CircuitParams) -> Result<ProtocolOutcome> {
        p.validate()?;
        let anc = self.ancilla(p)?;
        let t = self.target_projection(p);
        let outer = self.outcome_rule(p);
        let w2 = &self.q2.weights;
        let parts = par::map_slice(&outer.nodes, |&q| {
            let phi = self.joint_slice(&anc, p, q);
            let prob: f64 = phi.iter().zip(w2).map(|(a, w)| a.norm_sqr() * w).sum();
            let ov: C64 = phi.iter().zip(&t).map(|(a, b)| a * b).sum();
            (prob, ov.norm_sqr())
        });
        let mut prob = 0.0;
        let mut num = 0.0;
        for ((pk, ok), w) in parts.iter().zip(&outer.weights) {
            prob += w * pk;
            num += w * ok;
        }
        if !prob.is_finite() || !num.is_finite() {
            return Err(Error::Integration("non-finite protocol integral".into()));
        }
        if prob < self.min_probability {
            return Err(Error::DegeneratePostselection(prob));
        }
        Ok(ProtocolOutcome {
            fidelity: (num / prob).clamp(0.0, 1.0 + 1e-6),
            probability: prob,
        })
    }

    /// Post-selected output state as a probability-weighted mixture.
    pub fn conditional_state(&self, p: &CircuitParams) -> Result<ConditionalState> {
        p.validate()?;
        let anc = self.ancilla(p)?;
        let outer = self.outcome_rule(p);
        let slices = par::map_slice(&outer.nodes, |&q| self.joint_slice(&anc, p, q));
        let w2 = &self.q2.weights;
        let prob: f64 = slices
            .iter()
            .zip(&outer.weights)
            .map(|(phi, w)| {
                w * phi
                    .iter()
                    .zip(w2)
                    .map(|(a, v)| a.norm_sqr() * v)
                    .sum::<f64>()
            })
            .sum();
        if prob < DEGENERATE_PROBABILITY {
            return Err(Error::DegeneratePostselection(prob));
        }
        let components = slices
            .into_iter()
            .zip(&outer.weights)
            .map(|(phi, w)| {
                let weighted = phi.iter().zip(w2).map(|(a, v)| a * *v).collect();
                (w / prob, weighted)
            })
            .collect();
        Ok(ConditionalState {
            gamma: p.gamma,
            d: p.d,
            q2_nodes: self.q2.nodes.clone(),
            half_width: self.quad.half_width,
            probability: prob,
            components,
        })
    }
}

fn cross_phases(q0: &[f64], q2: &[f64], gamma: f64) -> Vec<C64> {
    let csc = 1.0 / gamma.sin();
    let mut out = Vec::with_capacity(q0.len() * q2.len());
    for &x in q0 {
        for &y in q2 {
            out.push(C64::from_polar(1.0, -2.0 * csc * x * y));
        }
    }
    out
}

/// Mixed output `rho = sum_k w_k |psi_k><psi_k|` of the post-selected circuit,
/// already displaced by the final momentum kick. The weights include the
/// division by the success probability, so `rho` has unit trace.
#[derive(Clone, Debug)]
pub struct ConditionalState {
    gamma: f64,
    d: f64,
    q2_nodes: Vec<f64>,
    half_width: f64,
    pub probability: f64,
    /// Weight and `phi_q(q2_j) w_j` per outcome node.
    components: Vec<(f64, Vec<C64>)>,
}

impl ConditionalState {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    fn eval_component(&self, k: usize, x: f64) -> C64 {
        component_value(&self.components[k].1, &self.q2_nodes, self.gamma, self.d, x)
    }

    /// Unnormalised component wavefunctions with their mixing weights.
    pub fn wavefunctions(&self) -> Vec<(f64, QuadWavefunction)> {
        self.components
            .iter()
            .map(|(w, phi)| {
                let phi = phi.clone();
                let nodes = self.q2_nodes.clone();
                let (g, d) = (self.gamma, self.d);
                let f = QuadWavefunction::custom(
                    move |x| component_value(&phi, &nodes, g, d, x),
                    Representation::Position,
                    self.half_width,
                );
                (*w, f)
            })
            .collect()
    }

    /// Position-space density matrix `<x_i|rho|x_j>` on the given points.
    pub fn density_kernel(&self, xs: &[f64]) -> DMatrix<C64> {
        let cols: Vec<Vec<C64>> = par::map_range(self.components.len(), |k| {
            xs.iter().map(|&x| self.eval_component(k, x)).collect()
        });
        let n = xs.len();
        let mut rho = DMatrix::zeros(n, n);
        for ((w, _), v) in self.components.iter().zip(&cols) {
            for j in 0..n {
                let cj = v[j].conj() * *w;
                for i in 0..n {
                    rho[(i, j)] += v[i] * cj;
                }
            }
        }
        rho
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        // <psi_k|psi_l> = (1/pi^2) <phi_k|K^dag K|phi_l> = <phi_k|phi_l> by unitarity.
        let n = self.components.len();
        let mut total = 0.0;
        for k in 0..n {
            for l in 0..n {
                let (wk, a) = &self.components[k];
                let (wl, b) = &self.components[l];
                let ov: C64 = a
                    .iter()
                    .zip(b)
                    .zip(&self.q2_weights())
                    .map(|((x, y), w)| x.conj() * y / w)
                    .sum();
                total += wk * wl * ov.norm_sqr();
            }
        }
        total
    }

    fn q2_weights(&self) -> Vec<f64> {
        let lo = -self.half_width;
        Rule::gauss_legendre(self.q2_nodes.len(), lo, -lo).weights
    }

    /// Wigner function on an automatically sized grid.
    pub fn wigner(&self, cfg: &ManaConfig) -> Result<WignerGrid> {
        Ok(wigner_auto(&self.wavefunctions(), cfg)?.0)
    }

    pub fn mana(&self, cfg: &ManaConfig) -> Result<f64> {
        mana_auto(&self.wavefunctions(), cfg)
    }
}

fn component_value(phi: &[C64], nodes: &[f64], gamma: f64, d: f64, x: f64) -> C64 {
    let (s, c) = gamma.sin_cos();
    let csc = 1.0 / s;
    let cot = c / s;
    let mut acc = C64::new(0.0, 0.0);
    for (a, &y) in phi.iter().zip(nodes) {
        acc += a * C64::from_polar(1.0, cot * y * y - 2.0 * csc * x * y);
    }
    acc * kernel_prefactor(gamma) / PI * C64::from_polar(1.0, cot * x * x + x * d)
}

/// Circuit parameters that an optimiser may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Param {
    Theta,
    Xi,
    QBeta,
    PBeta,
    Gamma,
    D,
}

impl Param {
    /// Widest interval the optimiser accepts for this parameter.
    pub fn allowed_range(self) -> (f64, f64) {
        match self {
            Param::Theta => (0.0, FRAC_PI_2),
            Param::Xi => (0.0, 1.5),
            Param::QBeta => (0.0, 1.5),
            Param::PBeta => (-1.5, 1.5),
            Param::Gamma => (-PI + 0.1, -0.1),
            Param::D => (-3.0, 0.0),
        }
    }

    pub fn get(self, p: &CircuitParams) -> f64 {
        match self {
            Param::Theta => p.theta,
            Param::Xi => p.xi,
            Param::QBeta => p.q_beta,
            Param::PBeta => p.p_beta,
            Param::Gamma => p.gamma,
            Param::D => p.d,
        }
    }

    pub fn set(self, p: &mut CircuitParams, v: f64) {
        match self {
            Param::Theta => p.theta = v,
            Param::Xi => p.xi = v,
            Param::QBeta => p.q_beta = v,
            Param::PBeta => p.p_beta = v,
            Param::Gamma => p.gamma = v,
            Param::D => p.d = v,
        }
    }
}

/// One optimised coordinate with its search interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParam {
    pub fn full(param: Param) -> Self {
        let (lower, upper) = param.allowed_range();
        FreeParam {
            param,
            lower,
            upper,
        }
    }
}

/// Beam-splitter angle, ancilla squeezing and displacement, and the final kick.
pub fn default_mask() -> Vec<FreeParam> {
    [Param::Theta, Param::QBeta, Param::Xi, Param::D]
        .into_iter()
        .map(FreeParam::full)
        .collect()
}

fn mask_bounds(free: &[FreeParam]) -> Result<Bounds> {
    if free.is_empty() {
        return Err(invalid("no free parameters"));
    }
    for (i, f) in free.iter().enumerate() {
        let (lo, hi) = f.param.allowed_range();
        if !(f.lower >= lo && f.upper <= hi && f.lower <= f.upper) {
            return Err(invalid(format!(
                "bounds [{}, {}] for {:?} must lie within [{lo}, {hi}]",
                f.lower, f.upper, f.param
            )));
        }
        if free[..i].iter().any(|g| g.param == f.param) {
            return Err(invalid(format!("{:?} listed twice", f.param)));
        }
    }
    Bounds::new(
        free.iter().map(|f| f.lower).collect(),
        free.iter().map(|f| f.upper).collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbOutcome {
    pub params: CircuitParams,
    pub fidelity: f64,
    pub probability: f64,
    pub optimizer: OptResult,
}

/// Maximises the conditional fidelity over the free parameters, holding the
/// rest of `base` fixed. Failing evaluations score zero fidelity.
pub fn optimize_probabilistic(
    problem: &ProbProblem,
    base: &CircuitParams,
    free: &[FreeParam],
    cfg: &OptimizerConfig,
) -> Result<ProbOutcome> {
    optimize_probabilistic_observed(problem, base, free, cfg, |_| {})
}

pub fn optimize_probabilistic_observed<O: FnMut(&IterationRecord)>(
    problem: &ProbProblem,
    base: &CircuitParams,
    free: &[FreeParam],
    cfg: &OptimizerConfig,
    observer: O,
) -> Result<ProbOutcome> {
    let bounds = mask_bounds(free)?;
    base.validate()?;
    let decode = |v: &[f64]| {
        let mut p = *base;
        for (f, x) in free.iter().zip(v) {
            f.param.set(&mut p, *x);
        }
        p
    };
    let objective = |v: &[f64]| match problem.evaluate(&decode(v)) {
        Ok(o) => 1.0 - o.fidelity,
        Err(_) => 1.0,
    };
    let res = cfg.minimize(objective, &bounds, observer)?;
    let params = decode(&res.best_x);
    let out = problem.evaluate(&params)?;
    Ok(ProbOutcome {
        params,
        fidelity: out.fidelity,
        probability: out.probability,
        optimizer: res,
    })
}

/// Independent two-mode Fock-space simulation of the same circuit.
pub mod reference {
    use super::*;
    use crate::fock::{displaced_squeezed, expm};
    use crate::wavefunction::{fock_coefficients, hermite_functions};

    /// Two-mode amplitudes `c[n1 * dim + n2]`.
    pub type TwoMode = Vec<C64>;

    /// Applies `exp(theta (a1 a2† - a1† a2))` block by block in total photon number.
    /// Coherent amplitudes move as `(a, b) -> (a cos - b sin, a sin + b cos)`.
    pub fn beam_splitter(state: &TwoMode, dim: usize, theta: f64) -> Result<TwoMode> {
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        for total in 0..(2 * dim - 1) {
            let lo = total.saturating_sub(dim - 1);
            let hi = total.min(dim - 1);
            let size = hi - lo + 1;
            // basis index k <-> (n1 = lo + k, n2 = total - n1)
            let mut g = DMatrix::<C64>::zeros(size, size);
            for k in 0..size {
                let n1 = lo + k;
                let n2 = total - n1;
                if n2 > 0 && k + 1 < size {
                    // a1† a2 |n1, n2> = sqrt((n1 + 1) n2) |n1 + 1, n2 - 1>
                    let v = ((n1 + 1) as f64 * n2 as f64).sqrt() * theta;
                    g[(k + 1, k)] -= C64::new(v, 0.0);
                    g[(k, k + 1)] += C64::new(v, 0.0);
                }
            }
            let u = expm(&g)?;
            let v: Vec<C64> = (0..size)
                .map(|k| state[(lo + k) * dim + total - lo - k])
                .collect();
            for i in 0..size {
                let mut acc = C64::new(0.0, 0.0);
                for (k, vk) in v.iter().enumerate() {
                    acc += u[(i, k)] * vk;
                }
                out[(lo + i) * dim + total - lo - i] = acc;
            }
        }
        Ok(out)
    }

    /// Product state of two single-mode vectors of equal cutoff.
    pub fn product(a: &FockVector, b: &FockVector) -> Result<TwoMode> {
        if a.cutoff() != b.cutoff() {
            return Err(invalid("product needs equal cutoffs"));
        }
        let dim = a.cutoff() + 1;
        let mut out = Vec::with_capacity(dim * dim);
        for x in a.amplitudes() {
            for y in b.amplitudes() {
                out.push(x * y);
            }
        }
        Ok(out)
    }

    /// Fidelity and probability of the circuit simulated at `cutoff` photons
    /// per mode, with `bin_nodes` Gauss-Legendre outcomes across the bin.
    pub fn fock_reference(
        input: &FockVector,
        target_r: f64,
        target_xi: f64,
        p: &CircuitParams,
        cutoff: usize,
        bin_nodes: usize,
    ) -> Result<ProtocolOutcome> {
        p.validate()?;
        if p.eta < 1.0 {
            return Err(invalid("the Fock reference models ideal detection only"));
        }
        let dim = cutoff + 1;
        let inp = input.resized(cutoff)?;
        let anc = displaced_squeezed(C64::new(p.xi, 0.0), C64::new(p.q_beta, p.p_beta), cutoff)?;
        let mut c = beam_splitter(&product(&inp, &anc)?, dim, p.theta)?;
        for n1 in 0..dim {
            for n2 in 0..dim {
                c[n1 * dim + n2] *= C64::from_polar(1.0, -p.gamma * n2 as f64);
            }
        }
        let target = cubic_phase_wavefunction(target_r, target_xi, p.d)?;
        let t = fock_coefficients(&target, cutoff, 12.0, 800);
        let rule = Rule::gauss_legendre(bin_nodes, p.q_n - p.delta, p.q_n + p.delta);
        let mut prob = 0.0;
        let mut num = 0.0;
        for (&q, &w) in rule.nodes.iter().zip(&rule.weights) {
            let h = hermite_functions(q, cutoff);
            let mut ov = C64::new(0.0, 0.0);
            let mut norm = 0.0;
            for n2 in 0..dim {
                let a: C64 = (0..dim).map(|n1| c[n1 * dim + n2] * h[n1]).sum();
                norm += a.norm_sqr();
                ov += t[n2].conj() * a;
            }
            prob += w * norm;
            num += w * ov.norm_sqr();
        }
        if prob < DEGENERATE_PROBABILITY {
            return Err(Error::DegeneratePostselection(prob));
        }
        Ok(ProtocolOutcome {
            fidelity: num / prob,
            probability: prob,
        })
    }
}
