//! Characteristic functions, Wigner functions and mana.
//!
//! Conventions: `chi(r) = Tr[D(-r) rho]` with `D(-r) = exp(i(r2 q - r1 p))`,
//! which is the Fock displacement `D(alpha)` at `alpha = (r1 + i r2)/2`.
//! The Wigner function is normalised so that `int W dq dp = 1`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockDensity, FockVector};
use crate::par;
use crate::quadrature::{PlaneQuadrature, Rule};
use crate::wavefunction::{QuadWavefunction, Representation};

pub type Point = [f64; 2];

/// Anything that can be evaluated as a characteristic function.
pub trait Characteristic: Sync {
    fn chi(&self, r: Point) -> C64;
}

impl<F> Characteristic for F
where
    F: Fn(Point) -> C64 + Sync,
{
    fn chi(&self, r: Point) -> C64 {
        self(r)
    }
}

/// `<m|D(alpha)|n>` from the associated-Laguerre closed form.
pub fn displacement_element(m: usize, n: usize, alpha: C64) -> Result<C64> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(invalid("non-finite displacement"));
    }
    let x = alpha.norm_sqr();
    let (lo, hi, base) = if m >= n {
        (n, m, alpha)
    } else {
        (m, n, -alpha.conj())
    };
    // sqrt(lo!/hi!) base^(hi-lo), accumulated factor by factor
    let mut pref = C64::new((-x / 2.0).exp(), 0.0);
    for k in lo + 1..=hi {
        pref *= base / (k as f64).sqrt();
    }
    Ok(pref * laguerre(lo, (hi - lo) as f64, x))
}

/// Generalised Laguerre polynomial `L_n^(a)(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Full `rows x cols` block of `<m|D(alpha)|n>`, row-major.
///
/// Walks each diagonal `|m - n| = k` with the Laguerre recurrence in the
/// smaller index. The plain column recurrence in `n` is unstable once
/// `|alpha|^2` exceeds the photon numbers involved, this one is not.
pub fn displacement_block(alpha: C64, rows: usize, cols: usize) -> Vec<C64> {
    let mut d = vec![C64::new(0.0, 0.0); rows * cols];
    if rows == 0 || cols == 0 {
        return d;
    }
    let x = alpha.norm_sqr();
    for (base, lower) in [(alpha, true), (-alpha.conj(), false)] {
        // c = e^(-x/2) base^k / sqrt(k!)
        let mut c = C64::new((-x / 2.0).exp(), 0.0);
        let kmax = if lower { rows } else { cols };
        for k in 0..kmax {
            if k > 0 {
                c *= base / (k as f64).sqrt();
            }
            if !lower && k == 0 {
                continue;
            }
            let kf = k as f64;
            let len = if lower {
                rows.saturating_sub(k).min(cols)
            } else {
                cols.saturating_sub(k).min(rows)
            };
            let mut pref = c;
            let (mut l0, mut l1) = (0.0, 1.0);
            for j in 0..len {
                if j > 0 {
                    let jf = j as f64;
                    pref *= (jf / (jf + kf)).sqrt();
                    let l2 = if j == 1 {
                        1.0 + kf - x
                    } else {
                        ((2.0 * jf - 1.0 + kf - x) * l1 - (jf - 1.0 + kf) * l0) / jf
                    };
                    l0 = l1;
                    l1 = l2;
                }
                let (m, n) = if lower { (j + k, j) } else { (j, j + k) };
                d[m * cols + n] = pref * l1;
            }
        }
    }
    d
}

/// Characteristic function of a pure Fock state.
#[derive(Clone, Debug)]
pub struct FockCharacteristic {
    amps: Vec<C64>,
    support: Vec<usize>,
}

impl FockCharacteristic {
    pub fn new(state: &FockVector) -> Self {
        FockCharacteristic {
            amps: state.amplitudes().to_vec(),
            support: state.support(),
        }
    }
}

impl Characteristic for FockCharacteristic {
    fn chi(&self, r: Point) -> C64 {
        let dim = self.amps.len();
        let alpha = C64::new(0.5 * r[0], 0.5 * r[1]);
        let d = displacement_block(alpha, dim, dim);
        let mut acc = C64::new(0.0, 0.0);
        for &m in &self.support {
            let cm = self.amps[m].conj();
            let row = &d[m * dim..(m + 1) * dim];
            let mut s = C64::new(0.0, 0.0);
            for &n in &self.support {
                s += row[n] * self.amps[n];
            }
            acc += cm * s;
        }
        acc
    }
}

/// Characteristic function of a Fock density matrix.
#[derive(Clone, Debug)]
pub struct DensityCharacteristic {
    rho: FockDensity,
}

impl DensityCharacteristic {
    pub fn new(rho: &FockDensity) -> Self {
        DensityCharacteristic { rho: rho.clone() }
    }
}

impl Characteristic for DensityCharacteristic {
    fn chi(&self, r: Point) -> C64 {
        let dim = self.rho.cutoff() + 1;
        let d = displacement_block(C64::new(0.5 * r[0], 0.5 * r[1]), dim, dim);
        let m = self.rho.matrix();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                acc += d[i * dim + j] * m[(j, i)];
            }
        }
        acc
    }
}

/// Closed-form characteristic function of the finitely squeezed cubic phase
/// state `(2/pi)^(1/4) e^(xi/2) exp(-e^(2xi) q^2 + i r q^3 - i q d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicCharacteristic {
    pub r: f64,
    pub xi: f64,
    pub d: f64,
}

impl Characteristic for CubicCharacteristic {
    fn chi(&self, rv: Point) -> C64 {
        let kappa = (2.0 * self.xi).exp();
        let a2 = (2.0 / PI).sqrt() * self.xi.exp();
        let s = 0.25 * rv[0];
        let a = C64::new(2.0 * kappa, 6.0 * self.r * s);
        let expo = C64::new(
            -2.0 * kappa * s * s,
            -2.0 * self.r * s * s * s + 2.0 * self.d * s,
        ) - rv[1] * rv[1] / (4.0 * a);
        (C64::new(PI, 0.0) / a).sqrt() * expo.exp() * a2
    }
}

/// `chi(r)` of a pure Fock state.
pub fn characteristic_fn(state: &FockVector, r: Point) -> Result<C64> {
    if !(r[0].is_finite() && r[1].is_finite()) {
        return Err(invalid("non-finite phase-space point"));
    }
    Ok(FockCharacteristic::new(state).chi(r))
}

/// Values of `chi` on the tensor grid of `rule`, row-major in `(r1, r2)`.
pub fn tabulate<C: Characteristic + ?Sized>(chi: &C, rule: &Rule) -> Vec<C64> {
    let n = rule.len();
    let rows = par::map_range(n, |i| {
        (0..n)
            .map(|j| chi.chi([rule.nodes[i], rule.nodes[j]]))
            .collect::<Vec<_>>()
    });
    rows.concat()
}

/// `(1/4pi) int chi_a(r) chi_b(-r) d^2r`, the fidelity when one state is pure.
pub fn fidelity_char<A, B>(a: &A, b: &B, quad: &PlaneQuadrature) -> Result<f64>
where
    A: Characteristic + ?Sized,
    B: Characteristic + ?Sized,
{
    let rule = quad.rule();
    let n = rule.len();
    let rows = par::map_range(n, |i| {
        let r1 = rule.nodes[i];
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let r2 = rule.nodes[j];
            acc += a.chi([r1, r2]) * b.chi([-r1, -r2]) * rule.weights[j];
        }
        acc * rule.weights[i]
    });
    let total: C64 = rows.into_iter().sum::<C64>() / (4.0 * PI);
    check_fidelity(total)
}

pub(crate) fn check_fidelity(v: C64) -> Result<f64> {
    if !v.re.is_finite() || v.im.abs() > 1e-3 || v.re > 1.0 + 1e-3 || v.re < -1e-3 {
        return Err(Error::Integration(format!(
            "fidelity integral evaluated to {:.6}{:+.6}i",
            v.re, v.im
        )));
    }
    Ok(v.re.clamp(0.0, 1.0))
}

/// Largest number of samples accepted along one grid axis.
pub const MAX_GRID_POINTS: usize = 1 << 22;

/// Uniform axis `start + k * step`, `k < len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn symmetric(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width > 0.0 && step > 0.0) || !half_width.is_finite() {
            return Err(invalid("axis half-width and step must be positive"));
        }
        let k = (half_width / step).round();
        if 2.0 * k + 1.0 > MAX_GRID_POINTS as f64 {
            return Err(invalid(format!(
                "axis of {:.3e} points is too large",
                2.0 * k + 1.0
            )));
        }
        let k = k as usize;
        Ok(Axis {
            start: -(k as f64) * step,
            step,
            len: 2 * k + 1,
        })
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }
}

/// Wigner function sampled on a rectangular grid. `values[i * p.len + j]` is
/// `W(q_i, p_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub q: Axis,
    pub p: Axis,
    pub values: Vec<f64>,
}

impl WignerGrid {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p.len + j]
    }

    pub fn cell(&self) -> f64 {
        self.q.step * self.p.step
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    pub fn abs_integral(&self) -> f64 {
        self.values.iter().map(|w| w.abs()).sum::<f64>() * self.cell()
    }

    /// Largest |W| on the outer frame of the grid.
    pub fn boundary_max(&self) -> f64 {
        let (nq, np) = (self.q.len, self.p.len);
        let mut m = 0.0f64;
        for j in 0..np {
            m = m.max(self.at(0, j).abs()).max(self.at(nq - 1, j).abs());
        }
        for i in 0..nq {
            m = m.max(self.at(i, 0).abs()).max(self.at(i, np - 1).abs());
        }
        m
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
        out.write_record(["q", "p", "W"]).map_err(io)?;
        for i in 0..self.q.len {
            for j in 0..self.p.len {
                out.write_record(&[
                    format!("{:.6}", self.q.at(i)),
                    format!("{:.6}", self.p.at(j)),
                    format!("{:.10e}", self.at(i, j)),
                ])
                .map_err(io)?;
            }
        }
        out.flush().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }
}

/// Wigner function of a pure position wavefunction by the autocorrelation
/// integral `(2/pi) int psi*(q+y) psi(q-y) e^(4ipy) dy`, with the y step equal
/// to the q spacing so only grid samples are needed.
pub fn wigner_pure(psi: &QuadWavefunction, q: Axis, p: Axis) -> Result<WignerGrid> {
    wigner_mixture(&[(1.0, psi.clone())], q, p)
}

/// Wigner function of `sum_k w_k |psi_k><psi_k|`. Weights are used as given,
/// so unnormalised components with matching weights are fine.
pub fn wigner_mixture(
    components: &[(f64, QuadWavefunction)],
    q: Axis,
    p: Axis,
) -> Result<WignerGrid> {
    if components.is_empty() {
        return Err(invalid("empty mixture"));
    }
    if components
        .iter()
        .any(|(_, c)| c.representation() != Representation::Position)
    {
        return Err(invalid(
            "Wigner grid needs position-representation wavefunctions",
        ));
    }
    if components.iter().any(|(w, _)| !(*w >= 0.0)) {
        return Err(invalid("mixture weights must be non-negative"));
    }
    let h = q.step;
    // Extended sample grid on the same lattice as the q axis.
    let reach = components
        .iter()
        .map(|(_, c)| c.domain_halfwidth())
        .fold(0.0f64, f64::max)
        .max(q.start.abs())
        .max(q.end().abs());
    let lo = q.start - ((q.start + reach) / h).ceil().max(0.0) * h;
    let n_ext = ((reach - lo) / h).ceil() as usize + 1;
    let offset = ((q.start - lo) / h).round() as usize;
    let samples: Vec<(f64, Vec<C64>)> = components
        .iter()
        .map(|(w, c)| (*w, (0..n_ext).map(|k| c.eval(lo + k as f64 * h)).collect()))
        .collect();
    Ok(wigner_from_samples(&samples, offset, q, p))
}

/// Core of the autocorrelation route. `samples` hold `psi` on `lo + k h`; the
/// q axis starts at sample index `offset`.
pub(crate) fn wigner_from_samples(
    samples: &[(f64, Vec<C64>)],
    offset: usize,
    q: Axis,
    p: Axis,
) -> WignerGrid {
    let h = q.step;
    let n_ext = samples[0].1.len();
    let kmax = n_ext;
    // Phase table e^(4 i p_j k h), laid out [k][j].
    let np = p.len;
    let table = par::map_range(kmax, |k| {
        (0..np)
            .map(|j| {
                let ph = 4.0 * p.at(j) * k as f64 * h;
                (ph.cos(), ph.sin())
            })
            .collect::<Vec<_>>()
    });
    let rows = par::map_range(q.len, |i| {
        let c = offset + i;
        let kk = c.min(n_ext - 1 - c);
        // autocorrelation summed over the mixture before the p loop
        let mut corr = vec![C64::new(0.0, 0.0); kk + 1];
        for (w, s) in samples {
            for (k, f) in corr.iter_mut().enumerate() {
                *f += *w * s[c + k].conj() * s[c - k];
            }
        }
        let mut row = vec![corr[0].re; np];
        for (k, f) in corr.iter().enumerate().skip(1) {
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            let (fr, fi) = (2.0 * f.re, 2.0 * f.im);
            for (v, (cs, sn)) in row.iter_mut().zip(&table[k]) {
                *v += fr * cs - fi * sn;
            }
        }
        let scale = 2.0 / PI * h;
        row.into_iter().map(|v| v * scale).collect::<Vec<_>>()
    });
    WignerGrid {
        q,
        p,
        values: rows.concat(),
    }
}

/// Route used for Fock-basis Wigner functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WignerMethod {
    /// Iterative Laguerre expansion over density-matrix elements.
    Laguerre,
    /// Two-dimensional Fourier transform of the characteristic function.
    CharFourier,
}

/// Wigner function of a Fock-basis density matrix.
pub fn wigner_fock(
    rho: &FockDensity,
    q: Axis,
    p: Axis,
    method: WignerMethod,
) -> Result<WignerGrid> {
    match method {
        WignerMethod::Laguerre => Ok(wigner_laguerre(rho, q, p)),
        WignerMethod::CharFourier => {
            let n = rho.cutoff();
            let half = 2.0 * (2.0 * n as f64 + 1.0).sqrt() + 10.0;
            let nodes = ((half * 12.0) as usize).max(200);
            Ok(wigner_char_fourier(
                &DensityCharacteristic::new(rho),
                q,
                p,
                &PlaneQuadrature {
                    half_width: half,
                    nodes,
                },
            ))
        }
    }
}

fn wigner_laguerre(rho: &FockDensity, q: Axis, p: Axis) -> WignerGrid {
    let m = rho.matrix();
    let dim = rho.cutoff() + 1;
    let rows = par::map_range(q.len, |i| {
        let mut wl = vec![C64::new(0.0, 0.0); dim];
        (0..p.len)
            .map(|j| {
                let a = C64::new(q.at(i), p.at(j));
                let a2 = 2.0 * a;
                let a2c = a2.conj();
                wl[0] = C64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
                let mut w = m[(0, 0)] * wl[0];
                for n in 1..dim {
                    wl[n] = a2 * wl[n - 1] / (n as f64).sqrt();
                    w += 2.0 * (m[(0, n)] * wl[n]).re;
                }
                for mm in 1..dim {
                    let sm = (mm as f64).sqrt();
                    let mut temp = wl[mm];
                    wl[mm] = (a2c * temp - sm * wl[mm - 1]) / sm;
                    w += m[(mm, mm)] * wl[mm];
                    for n in mm + 1..dim {
                        let t2 = (a2 * wl[n - 1] - sm * temp) / (n as f64).sqrt();
                        temp = wl[n];
                        wl[n] = t2;
                        w += 2.0 * (m[(mm, n)] * wl[n]).re;
                    }
                }
                2.0 * w.re
            })
            .collect::<Vec<_>>()
    });
    WignerGrid {
        q,
        p,
        values: rows.concat(),
    }
}

/// `W(x) = (1/4pi^2) int chi(r) e^(i(r1 p - r2 q)) d^2r`, done as two
/// matrix products over the Gauss-Legendre grid.
pub fn wigner_char_fourier<C: Characteristic + ?Sized>(
    chi: &C,
    q: Axis,
    p: Axis,
    quad: &PlaneQuadrature,
) -> WignerGrid {
    let rule = quad.rule();
    let n = rule.len();
    let table = tabulate(chi, &rule);
    // inner[b][j] = sum_a w_a chi(r1_a, r2_b) e^(i r1_a p_j)
    let inner = par::map_range(n, |b| {
        (0..p.len)
            .map(|j| {
                let pj = p.at(j);
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..n {
                    acc += table[a * n + b] * C64::from_polar(rule.weights[a], rule.nodes[a] * pj);
                }
                acc
            })
            .collect::<Vec<_>>()
    });
    let rows = par::map_range(q.len, |i| {
        let qi = q.at(i);
        let phases: Vec<C64> = (0..n)
            .map(|b| C64::from_polar(rule.weights[b], -rule.nodes[b] * qi))
            .collect();
        (0..p.len)
            .map(|j| {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..n {
                    acc += inner[b][j] * phases[b];
                }
                acc.re / (4.0 * PI * PI)
            })
            .collect::<Vec<_>>()
    });
    WignerGrid {
        q,
        p,
        values: rows.concat(),
    }
}

/// Settings for grid-based mana.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManaConfig {
    pub spacing: f64,
    /// Largest |W| tolerated on the grid frame.
    pub boundary_tol: f64,
    /// Upper limit on the automatically chosen half-widths.
    pub max_half_width: f64,
    /// A grid is also accepted once enlarging it moves the mana by less than
    /// this. Wavefunctions built by quadrature carry a small noise floor that
    /// can keep the frame above `boundary_tol` at any size.
    #[serde(default = "default_mana_tol")]
    pub mana_tol: f64,
}

fn default_mana_tol() -> f64 {
    1e-4
}

impl Default for ManaConfig {
    fn default() -> Self {
        ManaConfig {
            spacing: 0.02,
            boundary_tol: 1e-7,
            max_half_width: 40.0,
            mana_tol: default_mana_tol(),
        }
    }
}

/// `log2 int |W|` on a grid. Fails when the grid clips the Wigner function.
pub fn mana(grid: &WignerGrid, boundary_tol: f64) -> Result<f64> {
    let b = grid.boundary_max();
    if b > boundary_tol {
        return Err(Error::DomainTooSmall { boundary: b });
    }
    Ok(grid.abs_integral().log2())
}

/// Mana of a pure or mixed position-space state with automatically sized
/// axes. The q range follows the wavefunction support; the p range grows until
/// the frame of the grid is quiet or the mana stops changing.
pub fn mana_auto(components: &[(f64, QuadWavefunction)], cfg: &ManaConfig) -> Result<f64> {
    let (grid, _) = wigner_auto(components, cfg)?;
    Ok(grid.abs_integral().log2())
}

/// Auto-sized Wigner grid used by [`mana_auto`]; also returns the half-widths.
pub fn wigner_auto(
    components: &[(f64, QuadWavefunction)],
    cfg: &ManaConfig,
) -> Result<(WignerGrid, (f64, f64))> {
    let first = components.first().ok_or_else(|| invalid("empty mixture"))?;
    let mut lq = components
        .iter()
        .map(|(_, c)| support_half_width(c))
        .fold(0.0f64, f64::max)
        .max(first.1.domain_halfwidth().min(4.0));
    let mut lp = lq.max(4.0);
    let mut last = None;
    loop {
        let q = Axis::symmetric(lq, cfg.spacing)?;
        let p = Axis::symmetric(lp, cfg.spacing)?;
        let grid = wigner_mixture(components, q, p)?;
        let b = grid.boundary_max();
        let m = grid.abs_integral().log2();
        let settled = last.is_some_and(|prev: f64| (m - prev).abs() < cfg.mana_tol);
        if b <= cfg.boundary_tol || settled {
            return Ok((grid, (lq, lp)));
        }
        last = Some(m);
        if lp >= cfg.max_half_width && lq >= cfg.max_half_width {
            return Err(Error::DomainTooSmall { boundary: b });
        }
        // grow whichever side is clipping
        let (nq, np) = (grid.q.len, grid.p.len);
        let qedge = (0..np)
            .map(|j| grid.at(0, j).abs().max(grid.at(nq - 1, j).abs()))
            .fold(0.0, f64::max);
        if qedge > cfg.boundary_tol {
            lq = (lq * 1.3).min(cfg.max_half_width);
        }
        lp = (lp * 1.3).min(cfg.max_half_width);
    }
}

/// Half-width beyond which `|psi|^2 < 1e-18`.
fn support_half_width(psi: &QuadWavefunction) -> f64 {
    let l = psi.domain_halfwidth();
    let mut edge = 0.0f64;
    let n = 2000;
    for k in 0..=n {
        let x = -l + 2.0 * l * k as f64 / n as f64;
        if psi.eval(x).norm_sqr() > 1e-18 {
            edge = edge.max(x.abs());
        }
    }
    edge + 0.5
}

/// Mana of the cubic phase state from its separable Wigner function
/// `W(q, p) = exp(-2 kappa q^2) F(p - 3 r q^2 / 2)`; only a one-dimensional
/// integral over `F` is needed.
pub fn cubic_mana(r: f64, xi_target: f64) -> Result<f64> {
    if !r.is_finite() || !xi_target.is_finite() {
        return Err(invalid("non-finite cubicity"));
    }
    let kappa = (2.0 * xi_target).exp();
    let a2 = (2.0 / PI).sqrt() * xi_target.exp();
    let ly = (40.0 / (2.0 * kappa)).sqrt();
    let f = |u: f64, rule: &Rule| -> f64 {
        let s = rule.integrate(|y| {
            (-2.0 * kappa * y * y).exp() * (4.0 * u * y - 2.0 * r * y * y * y).cos()
        });
        2.0 / PI * a2 * s
    };
    // u range: Gaussian decay on both sides plus the stretched tail on the
    // side of sign(r).
    let base = 8.0 / kappa.sqrt();
    let tail = 40.0 * r.abs() / kappa + 2.0;
    let (ulo, uhi) = if r >= 0.0 {
        (-base, base + tail)
    } else {
        (-base - tail, base)
    };
    let du = 0.005;
    let nu = ((uhi - ulo) / du).ceil();
    if nu > MAX_GRID_POINTS as f64 {
        return Err(Error::Integration(format!(
            "momentum grid of {nu:.3e} points is too large"
        )));
    }
    let nu = nu as usize;
    let ymax_phase = 4.0 * ulo.abs().max(uhi.abs()) * ly + 2.0 * r.abs() * ly.powi(3);
    let ny = ((ymax_phase / PI) as usize * 2 + 200).min(20000);
    let rule = Rule::gauss_legendre(ny, -ly, ly);
    let vals = par::map_range(nu + 1, |k| f(ulo + k as f64 * du, &rule));
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if vals[0].abs().max(vals[nu].abs()) > 1e-9 * peak {
        return Err(Error::DomainTooSmall {
            boundary: vals[0].abs().max(vals[nu].abs()),
        });
    }
    let integral = abs_trapezoid(&vals, du);
    let gauss = (PI / (2.0 * kappa)).sqrt();
    Ok((gauss * integral).log2())
}

/// `int |f|` for uniform samples, splitting cells at sign changes.
fn abs_trapezoid(vals: &[f64], h: f64) -> f64 {
    let mut acc = 0.0;
    for w in vals.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a * b >= 0.0 {
            acc += 0.5 * h * (a.abs() + b.abs());
        } else {
            let t = a.abs() / (a.abs() + b.abs());
            acc += 0.5 * h * (t * a.abs() + (1.0 - t) * b.abs());
        }
    }
    acc
}

/// Cubicity `r` whose cubic phase state (at `xi_target`) has the given mana.
pub fn find_matching_cubicity(target_mana: f64, xi_target: f64, tol: f64) -> Result<f64> {
    find_matching_cubicity_in(target_mana, xi_target, (0.0, 1.5), tol)
}

pub fn find_matching_cubicity_in(
    target_mana: f64,
    xi_target: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) || !target_mana.is_finite() {
        return Err(invalid("bad bracket or target"));
    }
    let mut flo = cubic_mana(lo, xi_target)? - target_mana;
    let fhi = cubic_mana(hi, xi_target)? - target_mana;
    if flo * fhi > 0.0 {
        return Err(Error::NoRoot(format!(
            "mana {target_mana} not bracketed by r in [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = cubic_mana(mid, xi_target)? - target_mana;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
