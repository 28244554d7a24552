//! Single-mode Gaussian channels acting on characteristic functions and the
//! deterministic conversion protocol.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{build_trisqueezed, FockVector};
use crate::optim::{Bounds, IterationRecord, OptResult, OptimizerConfig};
use crate::phase_space::{
    check_fidelity, tabulate, Characteristic, CubicCharacteristic, FockCharacteristic, Point,
};
use crate::quadrature::{PlaneQuadrature, Rule};
use crate::wavefunction::{position_wavefunction, QuadWavefunction, Representation};

pub type Mat2 = [[f64; 2]; 2];

pub const OMEGA: Mat2 = [[0.0, 1.0], [-1.0, 0.0]];
pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const PHYSICALITY_TOL: f64 = 1e-9;

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// `chi -> exp(-r^T Omega^T Y Omega r / 4 + i l^T Omega r) chi(Omega^T X^T Omega r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannel {
    #[serde(rename = "X")]
    pub x: Mat2,
    #[serde(rename = "Y")]
    pub y: Mat2,
    pub l: [f64; 2],
}

impl GaussianChannel {
    pub fn new(x: Mat2, y: Mat2, l: [f64; 2]) -> Result<Self> {
        let all = x.iter().flatten().chain(y.iter().flatten()).chain(l.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(invalid("channel entries must be finite"));
        }
        if (y[0][1] - y[1][0]).abs() > 1e-12 {
            return Err(invalid("noise matrix must be symmetric"));
        }
        Ok(GaussianChannel { x, y, l })
    }

    pub fn identity() -> Self {
        GaussianChannel {
            x: IDENTITY,
            y: [[0.0; 2]; 2],
            l: [0.0; 2],
        }
    }

    /// Noiseless channel with a symplectic (or any) `X`.
    pub fn unitary(x: Mat2) -> Self {
        GaussianChannel {
            x,
            y: [[0.0; 2]; 2],
            l: [0.0; 2],
        }
    }

    /// `X = diag(a, 1/a)` (position stretched by `a`) followed by the
    /// displacement `(l_q, l_p)`.
    pub fn squeeze_displace(a: f64, lq: f64, lp: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(invalid("squeezing factor must be positive"));
        }
        GaussianChannel::new([[a, 0.0], [0.0, 1.0 / a]], [[0.0; 2]; 2], [lq, lp])
    }

    /// Matrix applied to the argument of the input characteristic function.
    pub fn argument_map(&self) -> Mat2 {
        mul(&mul(&transpose(&OMEGA), &transpose(&self.x)), &OMEGA)
    }

    /// Largest absolute entry of `Y`.
    pub fn noise_norm(&self) -> f64 {
        self.y.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityReport {
    pub physical: bool,
    pub min_eigenvalue: f64,
}

/// Checks `Y +- i(Omega - X Omega X^T) >= 0` by closed-form 2x2 eigenvalues.
pub fn is_physical(ch: &GaussianChannel, tol: f64) -> PhysicalityReport {
    let xo = mul(&mul(&ch.x, &OMEGA), &transpose(&ch.x));
    let k = OMEGA[0][1] - xo[0][1];
    let (a, d) = (ch.y[0][0], ch.y[1][1]);
    let mut min = f64::INFINITY;
    for sign in [1.0, -1.0] {
        // [[a, y12 + i s k], [y12 - i s k, d]]
        let off = C64::new(ch.y[0][1], sign * k);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + off.norm_sqr()).sqrt();
        min = min.min(mean - rad);
    }
    PhysicalityReport {
        physical: min >= -tol,
        min_eigenvalue: min,
    }
}

/// Characteristic function after a Gaussian channel.
pub struct ChannelOutput<'a, C: ?Sized> {
    chi: &'a C,
    ch: GaussianChannel,
    m: Mat2,
}

impl<C: Characteristic + ?Sized> Characteristic for ChannelOutput<'_, C> {
    fn chi(&self, r: Point) -> C64 {
        let (e, ph) = channel_factor(&self.ch, r);
        let s = [
            self.m[0][0] * r[0] + self.m[0][1] * r[1],
            self.m[1][0] * r[0] + self.m[1][1] * r[1],
        ];
        C64::from_polar((-e).exp(), ph) * self.chi.chi(s)
    }
}

/// `(r^T Omega^T Y Omega r / 4, l^T Omega r)`.
#[inline]
fn channel_factor(ch: &GaussianChannel, r: Point) -> (f64, f64) {
    // Omega r = (r2, -r1)
    let w = [r[1], -r[0]];
    let quad = w[0] * (ch.y[0][0] * w[0] + ch.y[0][1] * w[1])
        + w[1] * (ch.y[1][0] * w[0] + ch.y[1][1] * w[1]);
    (0.25 * quad, ch.l[0] * w[0] + ch.l[1] * w[1])
}

/// Applies `ch` to a characteristic function, checking physicality.
pub fn apply_channel<'a, C: Characteristic + ?Sized>(
    chi: &'a C,
    ch: &GaussianChannel,
) -> Result<ChannelOutput<'a, C>> {
    let rep = is_physical(ch, PHYSICALITY_TOL);
    if !rep.physical {
        return Err(Error::ConstraintViolation {
            min_eigenvalue: rep.min_eigenvalue,
        });
    }
    Ok(apply_channel_unchecked(chi, ch))
}

/// Same as [`apply_channel`] without the physicality gate.
pub fn apply_channel_unchecked<'a, C: Characteristic + ?Sized>(
    chi: &'a C,
    ch: &GaussianChannel,
) -> ChannelOutput<'a, C> {
    ChannelOutput {
        chi,
        ch: ch.clone(),
        m: ch.argument_map(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticParams {
    pub g: f64,
    pub e: f64,
    pub c: f64,
}

/// `[[g, g e], [c g, 1/g + c g e]]`, determinant one.
pub fn symplectic_matrix(p: SymplecticParams) -> Result<Mat2> {
    if p.g == 0.0 || !p.g.is_finite() || !p.e.is_finite() || !p.c.is_finite() {
        return Err(invalid(
            "symplectic parameter g must be finite and non-zero",
        ));
    }
    Ok([[p.g, p.g * p.e], [p.c * p.g, 1.0 / p.g + p.c * p.g * p.e]])
}

/// Position wavefunction after the unitary `X = diag(a, 1/a)` and displacement
/// `(lq, lp)`: `psi(q) -> e^(2 i lp q) psi((q - lq)/a) / sqrt(a)` up to a
/// global phase.
pub fn squeeze_displace_wavefunction(
    psi: &QuadWavefunction,
    a: f64,
    lq: f64,
    lp: f64,
) -> Result<QuadWavefunction> {
    if !(a > 0.0) || psi.representation() != Representation::Position {
        return Err(invalid("need a > 0 and a position wavefunction"));
    }
    let inner = psi.clone();
    let s = 1.0 / a.sqrt();
    Ok(QuadWavefunction::custom(
        move |q| inner.eval((q - lq) / a) * C64::from_polar(s, 2.0 * lp * q),
        Representation::Position,
        psi.domain_halfwidth() * a.max(1.0) + lq.abs(),
    ))
}

/// Parameterisations searched by the deterministic optimiser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetMode {
    /// `X = s S(g, e, c)` with `s > 0` (4), `Y` from a Cholesky factor plus the
    /// minimal noise `|1 - det X|` (3), `l` free (2).
    FullCptp,
    /// `X` from `(g, e, c)`, no noise or displacement.
    Symplectic,
    /// `X = diag(a, 1/a)` and a momentum displacement.
    SqueezeDisplace,
}

impl DetMode {
    pub fn dim(self) -> usize {
        match self {
            DetMode::FullCptp => 9,
            DetMode::Symplectic => 3,
            DetMode::SqueezeDisplace => 2,
        }
    }

    pub fn bounds(self) -> Bounds {
        let (lo, hi) = match self {
            DetMode::FullCptp => (
                vec![0.2, -1.0, -1.0, 0.5, 0.0, -0.5, 0.0, -1.0, -1.0],
                vec![3.0, 1.0, 1.0, 1.5, 0.5, 0.5, 0.5, 1.0, 1.0],
            ),
            DetMode::Symplectic => (vec![0.2, -1.0, -1.0], vec![3.0, 1.0, 1.0]),
            DetMode::SqueezeDisplace => (vec![0.2, -1.0], vec![3.0, 1.0]),
        };
        Bounds::new(lo, hi).expect("static bounds")
    }

    /// Maps an optimiser vector to a channel.
    pub fn decode(self, v: &[f64]) -> Result<GaussianChannel> {
        if v.len() != self.dim() {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                self.dim(),
                v.len()
            )));
        }
        match self {
            DetMode::FullCptp => {
                let sp = symplectic_matrix(SymplecticParams {
                    g: v[0],
                    e: v[1],
                    c: v[2],
                })?;
                let x = [
                    [v[3] * sp[0][0], v[3] * sp[0][1]],
                    [v[3] * sp[1][0], v[3] * sp[1][1]],
                ];
                let (l11, l21, l22) = (v[4], v[5], v[6]);
                let floor = (1.0 - det(&x)).abs();
                let y = [
                    [l11 * l11 + floor, l11 * l21],
                    [l11 * l21, l21 * l21 + l22 * l22 + floor],
                ];
                GaussianChannel::new(x, y, [v[7], v[8]])
            }
            DetMode::Symplectic => Ok(GaussianChannel::unitary(symplectic_matrix(
                SymplecticParams {
                    g: v[0],
                    e: v[1],
                    c: v[2],
                },
            )?)),
            DetMode::SqueezeDisplace => GaussianChannel::squeeze_displace(v[0], 0.0, v[1]),
        }
    }
}

/// Fidelity problem for one input/target pair, with the input characteristic
/// function tabulated once.
///
/// With `s = M r` the overlap integral becomes
/// `(1/(4 pi |det X|)) int chi_in(s) G(M^-1 s) chi_t(-M^-1 s) ds`, so every channel
/// evaluation reuses the same table.
pub struct DetProblem {
    pub input: FockVector,
    pub target: CubicCharacteristic,
    pub quad: PlaneQuadrature,
    rule: Rule,
    table: Vec<C64>,
}

impl DetProblem {
    pub fn new(input: FockVector, r: f64, xi_target: f64, quad: PlaneQuadrature) -> Self {
        let rule = quad.rule();
        let table = tabulate(&FockCharacteristic::new(&input), &rule);
        DetProblem {
            input,
            target: CubicCharacteristic {
                r,
                xi: xi_target,
                d: 0.0,
            },
            quad,
            rule,
            table,
        }
    }

    /// Trisqueezed input at triplicity `t` and the given cutoff.
    pub fn trisqueezed(
        t: f64,
        cutoff: usize,
        r: f64,
        xi_target: f64,
        quad: PlaneQuadrature,
    ) -> Result<Self> {
        Ok(DetProblem::new(
            build_trisqueezed(C64::new(t, 0.0), cutoff)?,
            r,
            xi_target,
            quad,
        ))
    }

    /// Fidelity between the channel output and the target (tabulated route).
    pub fn fidelity(&self, ch: &GaussianChannel) -> Result<f64> {
        let rep = is_physical(ch, PHYSICALITY_TOL);
        if !rep.physical {
            return Err(Error::ConstraintViolation {
                min_eigenvalue: rep.min_eigenvalue,
            });
        }
        let m = ch.argument_map();
        let dm = det(&m);
        if dm.abs() < 1e-12 {
            return Err(invalid("singular channel matrix"));
        }
        let inv = [[m[1][1] / dm, -m[0][1] / dm], [-m[1][0] / dm, m[0][0] / dm]];
        let t = &self.target;
        let kappa = (2.0 * t.xi).exp();
        let a2 = (2.0 / PI).sqrt() * t.xi.exp();
        let n = self.rule.len();
        let rows = crate::par::map_range(n, |i| {
            let s1 = self.rule.nodes[i];
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let s2 = self.rule.nodes[j];
                let r = [
                    inv[0][0] * s1 + inv[0][1] * s2,
                    inv[1][0] * s1 + inv[1][1] * s2,
                ];
                let (e, ph) = channel_factor(ch, r);
                // target at -r, folded into one exponential
                let sq = -0.25 * r[0];
                let a = C64::new(2.0 * kappa, 6.0 * t.r * sq);
                let expo = C64::new(
                    -2.0 * kappa * sq * sq - e,
                    -2.0 * t.r * sq * sq * sq + 2.0 * t.d * sq + ph,
                ) - r[1] * r[1] / (4.0 * a);
                let val = (C64::new(PI, 0.0) / a).sqrt() * expo.exp();
                acc += self.table[i * n + j] * val * self.rule.weights[j];
            }
            acc * self.rule.weights[i]
        });
        let total: C64 = rows.into_iter().sum::<C64>() * a2 / (4.0 * PI * dm.abs());
        check_fidelity(total)
    }

    /// Same quantity through the general channel and fidelity routines.
    pub fn fidelity_direct(&self, ch: &GaussianChannel) -> Result<f64> {
        let chi_in = FockCharacteristic::new(&self.input);
        let out = apply_channel(&chi_in, ch)?;
        crate::phase_space::fidelity_char(&out, &self.target, &self.quad)
    }
}

/// `det_objective(t, r, xi, ch)` with the default cutoff and quadrature.
pub fn det_objective(t: f64, r: f64, xi_target: f64, ch: &GaussianChannel) -> Result<f64> {
    DetProblem::trisqueezed(
        t,
        crate::DEFAULT_CUTOFF,
        r,
        xi_target,
        PlaneQuadrature::default(),
    )?
    .fidelity(ch)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetOutcome {
    pub mode: DetMode,
    pub fidelity: f64,
    pub channel: GaussianChannel,
    pub optimizer: OptResult,
}

/// Maximises the fidelity over the channels of `mode`. Unphysical or failing
/// evaluations score zero fidelity.
pub fn optimize_deterministic(
    problem: &DetProblem,
    mode: DetMode,
    cfg: &OptimizerConfig,
) -> Result<DetOutcome> {
    optimize_deterministic_observed(problem, mode, cfg, |_| {})
}

pub fn optimize_deterministic_observed<O: FnMut(&IterationRecord)>(
    problem: &DetProblem,
    mode: DetMode,
    cfg: &OptimizerConfig,
    observer: O,
) -> Result<DetOutcome> {
    let objective = |v: &[f64]| -> f64 {
        match mode.decode(v).and_then(|ch| problem.fidelity(&ch)) {
            Ok(f) => 1.0 - f,
            Err(_) => 1.0,
        }
    };
    let res = cfg.minimize(objective, &mode.bounds(), observer)?;
    let channel = mode.decode(&res.best_x)?;
    let fidelity = problem.fidelity(&channel)?;
    Ok(DetOutcome {
        mode,
        fidelity,
        channel,
        optimizer: res,
    })
}

/// Mana of the trisqueezed input after a squeeze-and-displace channel; a
/// Gaussian unitary, so this only differs from the input mana numerically.
pub fn squeeze_displace_output(
    input: &FockVector,
    a: f64,
    lq: f64,
    lp: f64,
) -> Result<QuadWavefunction> {
    squeeze_displace_wavefunction(&position_wavefunction(input), a, lq, lp)
}
