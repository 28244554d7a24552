//! Gate teleportation with a non-ideal cubic phase resource.
//!
//! The gadget couples the input and the resource with `C_Z = exp(i q1 q2)`
//! and reads out the first rail. In this module alone quadratures follow the
//! gadget convention `[q, p] = i`.
//!
//! Gate errors are computed for a finite-energy GKP `|+>` input post-selected
//! on the `p = 0` outcome, where the teleported wavefunction is the resource
//! wavefunction multiplied by a Gaussian comb.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::expm;
use crate::phase_space::check_fidelity;
use crate::protocol::ConditionalState;
use crate::quadrature::Rule;
use crate::wavefunction::{
    cubic_phase_wavefunction, GaussianComb, QuadWavefunction, Representation,
};

/// Feed-forward operations after moving a squeeze `S(s)` and a displacement
/// `D(q, p)` on the second rail through the controlled phase gate.
///
/// Conjugation by `C_Z` shifts `p2` by `q1`, so
/// `C_Z† D C_Z = D exp(-i q q1)` and
/// `C_Z† S C_Z = S exp(-i (e^s - 1) q1 q2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardCorrection {
    pub squeeze_strength: f64,
    pub displacement: [f64; 2],
    /// Coefficient `c` of `exp(-i c q1)` that accompanies the displacement.
    pub displacement_phase: f64,
    /// Coefficient `c` of `exp(-i c q1 q2)` that accompanies the squeeze.
    pub squeeze_coupling: f64,
}

pub fn commuted_corrections(s: f64, q: f64, p: f64) -> FeedForwardCorrection {
    FeedForwardCorrection {
        squeeze_strength: s,
        displacement: [q, p],
        displacement_phase: q,
        squeeze_coupling: s.exp_m1(),
    }
}

/// Truncated two-mode operators for checking the commutation rules.
pub mod gadget {
    use super::*;

    /// Position and momentum of one mode with `[q, p] = i`.
    pub fn quadratures(cutoff: usize) -> (DMatrix<C64>, DMatrix<C64>) {
        let dim = cutoff + 1;
        let mut a = DMatrix::<C64>::zeros(dim, dim);
        for n in 1..dim {
            a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        let ad = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let q = (&a + &ad) * C64::new(s, 0.0);
        let p = (&a - &ad) * C64::new(0.0, -s);
        (q, p)
    }

    pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a.kronecker(b)
    }

    fn exp_i(h: &DMatrix<C64>, c: f64) -> Result<DMatrix<C64>> {
        expm(&(h * C64::new(0.0, c)))
    }

    /// `exp(i q1 q2)`.
    pub fn controlled_phase(cutoff: usize) -> Result<DMatrix<C64>> {
        let (q, _) = quadratures(cutoff);
        exp_i(&kron(&q, &q), 1.0)
    }

    /// `1 (x) exp(-i s (q p + p q) / 2)`.
    pub fn squeeze(s: f64, cutoff: usize) -> Result<DMatrix<C64>> {
        let (q, p) = quadratures(cutoff);
        let id = DMatrix::identity(cutoff + 1, cutoff + 1);
        exp_i(&kron(&id, &(&q * &p + &p * &q)), -0.5 * s)
    }

    /// `1 (x) exp(-i (q p_op - p q_op))`.
    pub fn displacement(q0: f64, p0: f64, cutoff: usize) -> Result<DMatrix<C64>> {
        let (q, p) = quadratures(cutoff);
        let id = DMatrix::identity(cutoff + 1, cutoff + 1);
        exp_i(
            &kron(&id, &(&p * C64::new(q0, 0.0) - &q * C64::new(p0, 0.0))),
            -1.0,
        )
    }

    /// `exp(-i c1 q1 - i c12 q1 q2)`.
    pub fn correction(c1: f64, c12: f64, cutoff: usize) -> Result<DMatrix<C64>> {
        let (q, _) = quadratures(cutoff);
        let id = DMatrix::identity(cutoff + 1, cutoff + 1);
        let h = kron(&q, &id) * C64::new(c1, 0.0) + kron(&q, &q) * C64::new(c12, 0.0);
        exp_i(&h, -1.0)
    }
}

/// Resource wavefunction after teleporting a GKP `|+>` of width `delta` and
/// post-selecting `p = 0`: the resource times the comb, normalised.
pub fn teleported_wavefunction(ancilla: &QuadWavefunction, delta: f64) -> Result<QuadWavefunction> {
    if ancilla.representation() != Representation::Position {
        return Err(invalid("resource must be in the position representation"));
    }
    let comb = GaussianComb::new(delta)?;
    let rule = comb_rule(ancilla.domain_halfwidth(), 48);
    let norm: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| (ancilla.eval(x) * comb.eval(x)).norm_sqr() * w)
        .sum();
    if !(norm > 1e-300) {
        return Err(Error::DegeneratePostselection(norm));
    }
    let s = 1.0 / norm.sqrt();
    let a = ancilla.clone();
    Ok(QuadWavefunction::custom(
        move |x| a.eval(x) * comb.eval(x) * s,
        Representation::Position,
        ancilla.domain_halfwidth(),
    ))
}

/// Composite Gauss-Legendre rule with one panel per comb period on
/// `[-half_width, half_width]`, panels split at the midpoints between peaks.
pub fn comb_rule(half_width: f64, nodes_per_panel: usize) -> Rule {
    let period = 2.0 * PI.sqrt();
    let mut breaks = vec![-half_width];
    let kmax = (half_width / period + 0.5).floor() as i64;
    for k in -kmax..kmax {
        let b = (k as f64 + 0.5) * period;
        if b > -half_width && b < half_width {
            breaks.push(b);
        }
    }
    breaks.push(half_width);
    Rule::composite(&breaks, nodes_per_panel)
}

/// Gate-error settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateErrorConfig {
    /// Width of the GKP peaks.
    pub delta_gkp: f64,
    pub half_width: f64,
    pub nodes_per_panel: usize,
}

impl Default for GateErrorConfig {
    fn default() -> Self {
        GateErrorConfig {
            delta_gkp: 0.2,
            half_width: 8.0,
            nodes_per_panel: 64,
        }
    }
}

/// `1 - <T|rho~|T>` for a resource density kernel `rho(x_i, x_j)` sampled on
/// the nodes of `rule`. `T` is the teleported ideal resource.
pub fn gate_error_from_kernel(
    rho: &DMatrix<C64>,
    rule: &Rule,
    target: &QuadWavefunction,
    comb: &GaussianComb,
) -> Result<f64> {
    let n = rule.len();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(invalid("density kernel does not match the rule"));
    }
    let g: Vec<f64> = rule.nodes.iter().map(|&x| comb.eval(x)).collect();
    let tg: Vec<C64> = rule
        .nodes
        .iter()
        .zip(&g)
        .map(|(&x, gx)| target.eval(x) * *gx)
        .collect();
    let t_norm: f64 = tg
        .iter()
        .zip(&rule.weights)
        .map(|(v, w)| v.norm_sqr() * w)
        .sum();
    // the comb multiplies both the ideal and the actual teleported resource
    let t: Vec<C64> = tg
        .iter()
        .zip(&g)
        .zip(&rule.weights)
        .map(|((v, gx), w)| v * (gx * w))
        .collect();
    let trace: f64 = (0..n)
        .map(|i| rho[(i, i)].re * g[i] * g[i] * rule.weights[i])
        .sum();
    if !(trace > 1e-300) || !(t_norm > 1e-300) {
        return Err(Error::DegeneratePostselection(trace.min(t_norm)));
    }
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..n {
            col += t[i].conj() * rho[(i, j)];
        }
        acc += col * t[j];
    }
    let f = check_fidelity(acc / (t_norm * trace))?;
    Ok((1.0 - f).max(0.0))
}

/// Gate error of a post-selected conversion output used as the resource.
pub fn gate_error(
    ancilla: &ConditionalState,
    r: f64,
    xi_target: f64,
    cfg: &GateErrorConfig,
) -> Result<f64> {
    let comb = GaussianComb::new(cfg.delta_gkp)?;
    let rule = comb_rule(cfg.half_width, cfg.nodes_per_panel);
    let rho = ancilla.density_kernel(&rule.nodes);
    let target = cubic_phase_wavefunction(r, xi_target, 0.0)?;
    gate_error_from_kernel(&rho, &rule, &target, &comb)
}

/// Gate error of a pure resource through teleported wavefunctions.
pub fn gate_error_pure(
    ancilla: &QuadWavefunction,
    r: f64,
    xi_target: f64,
    cfg: &GateErrorConfig,
) -> Result<f64> {
    let target = cubic_phase_wavefunction(r, xi_target, 0.0)?;
    let a = teleported_wavefunction(ancilla, cfg.delta_gkp)?;
    let b = teleported_wavefunction(&target, cfg.delta_gkp)?;
    let rule = comb_rule(cfg.half_width, cfg.nodes_per_panel);
    let ov: C64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| b.eval(x).conj() * a.eval(x) * w)
        .sum();
    Ok((1.0 - ov.norm_sqr()).max(0.0))
}
