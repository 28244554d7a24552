//! Quadrature-basis wavefunctions (units with hbar = 1/2, q = (a + a†)/2).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::fock::FockVector;
use crate::quadrature::Rule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

type Evaluator = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Hermite(HermiteExpansion),
    Cubic {
        r: f64,
        kappa: f64,
        amp: f64,
        d: f64,
    },
    Squeezed {
        pref: C64,
        kappa: C64,
        q0: f64,
        p0: f64,
    },
    Comb(GaussianComb),
    Custom(Evaluator),
}

/// A wavefunction given as an evaluator plus the half-width outside of which it
/// is negligible.
#[derive(Clone)]
pub struct QuadWavefunction {
    kind: Kind,
    representation: Representation,
    domain_halfwidth: f64,
}

impl fmt::Debug for QuadWavefunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match &self.kind {
            Kind::Hermite(_) => "hermite",
            Kind::Cubic { .. } => "cubic",
            Kind::Squeezed { .. } => "squeezed",
            Kind::Comb(_) => "comb",
            Kind::Custom(_) => "custom",
        };
        f.debug_struct("QuadWavefunction")
            .field("kind", &k)
            .field("representation", &self.representation)
            .field("domain_halfwidth", &self.domain_halfwidth)
            .finish()
    }
}

impl QuadWavefunction {
    /// Wraps an arbitrary evaluator.
    pub fn custom(
        f: impl Fn(f64) -> C64 + Send + Sync + 'static,
        representation: Representation,
        domain_halfwidth: f64,
    ) -> Self {
        QuadWavefunction {
            kind: Kind::Custom(Arc::new(f)),
            representation,
            domain_halfwidth,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> C64 {
        match &self.kind {
            Kind::Hermite(h) => h.eval(x),
            Kind::Cubic { r, kappa, amp, d } => {
                let phase = r * x * x * x - x * d;
                C64::from_polar(amp * (-kappa * x * x).exp(), phase)
            }
            Kind::Squeezed {
                pref,
                kappa,
                q0,
                p0,
            } => {
                let y = x - q0;
                pref * (-kappa * y * y + C64::new(0.0, 2.0 * p0 * (x - 0.5 * q0))).exp()
            }
            Kind::Comb(c) => C64::new(c.eval(x), 0.0),
            Kind::Custom(f) => f(x),
        }
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn domain_halfwidth(&self) -> f64 {
        self.domain_halfwidth
    }

    /// Samples on the nodes of a rule.
    pub fn sample(&self, xs: &[f64]) -> Vec<C64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// `int |psi|^2` by Gauss-Legendre on the wavefunction's own domain.
    pub fn norm_sqr(&self, nodes: usize) -> f64 {
        let l = self.domain_halfwidth;
        Rule::gauss_legendre(nodes, -l, l).integrate(|x| self.eval(x).norm_sqr())
    }

    /// Returns a copy scaled to unit norm.
    pub fn normalized(&self, nodes: usize) -> Result<Self> {
        let n = self.norm_sqr(nodes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("wavefunction has zero or non-finite norm"));
        }
        let s = 1.0 / n.sqrt();
        let inner = self.clone();
        Ok(QuadWavefunction::custom(
            move |x| inner.eval(x) * s,
            self.representation,
            self.domain_halfwidth,
        ))
    }
}

/// `<a|b>` on `[-L, L]` with `nodes` Gauss-Legendre points.
pub fn overlap(a: &QuadWavefunction, b: &QuadWavefunction, half_width: f64, nodes: usize) -> C64 {
    let r = Rule::gauss_legendre(nodes, -half_width, half_width);
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(&x, &w)| a.eval(x).conj() * b.eval(x) * w)
        .sum()
}

/// Squeezing parameter for a level given in dB, sign convention of the target
/// (negative: anti-squeezed along q).
pub fn xi_from_db(db: f64) -> f64 {
    -(10f64.powf(db / 20.0)).ln()
}

/// dB value of a squeezing parameter.
pub fn db_from_xi(xi: f64) -> f64 {
    20.0 * xi.abs() * std::f64::consts::LOG10_E
}

/// `(2/pi)^(1/4) e^(xi/2) exp(-e^(2 xi) q^2) exp(i r q^3) exp(-i q d)`.
pub fn cubic_phase_wavefunction(r: f64, xi_target: f64, d: f64) -> Result<QuadWavefunction> {
    if !r.is_finite() || !xi_target.is_finite() || !d.is_finite() {
        return Err(invalid("cubic phase parameters must be finite"));
    }
    let kappa = (2.0 * xi_target).exp();
    let amp = (2.0 / PI).powf(0.25) * (0.5 * xi_target).exp();
    Ok(QuadWavefunction {
        kind: Kind::Cubic { r, kappa, amp, d },
        representation: Representation::Position,
        domain_halfwidth: (30.0 / kappa).sqrt(),
    })
}

/// Position wavefunction of `D(beta) S(xi)|0>` with
/// `S(xi) = exp((xi* a^2 - xi a†^2)/2)`.
pub fn displaced_squeezed_wavefunction(xi: C64, beta: C64) -> Result<QuadWavefunction> {
    if !(xi.re.is_finite() && xi.im.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
        return Err(invalid("squeezing and displacement must be finite"));
    }
    let r = xi.norm();
    let zeta = if r == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        xi * (r.tanh() / r)
    };
    let one = C64::new(1.0, 0.0);
    let pref = (2.0 / PI).powf(0.25) * (1.0 - zeta.norm_sqr()).powf(0.25) / (one - zeta).sqrt();
    let kappa = (one + zeta) / (one - zeta);
    Ok(QuadWavefunction {
        kind: Kind::Squeezed {
            pref,
            kappa,
            q0: beta.re,
            p0: beta.im,
        },
        representation: Representation::Position,
        domain_halfwidth: beta.re.abs() + (30.0 / kappa.re).sqrt(),
    })
}

/// Superposition of Gaussian peaks at `2 s sqrt(pi)` with envelope
/// `exp(-delta^2 (2s)^2 pi / 2)`, unnormalised.
#[derive(Clone, Debug)]
pub struct GaussianComb {
    pub delta: f64,
    centers: Vec<f64>,
    amps: Vec<f64>,
    scale: f64,
}

impl GaussianComb {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(invalid("comb width must be positive"));
        }
        let mut centers = Vec::new();
        let mut amps = Vec::new();
        let mut s: i64 = 0;
        loop {
            let w = (-delta * delta * (2.0 * s as f64).powi(2) * PI / 2.0).exp();
            if w < 1e-12 {
                break;
            }
            for sign in if s == 0 { vec![1] } else { vec![1, -1] } {
                centers.push(2.0 * (sign * s) as f64 * PI.sqrt());
                amps.push(w);
            }
            s += 1;
            if s > 10_000 {
                return Err(invalid("comb width too small"));
            }
        }
        Ok(GaussianComb {
            delta,
            centers,
            amps,
            scale: 1.0,
        })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let two_d2 = 2.0 * self.delta * self.delta;
        let mut acc = 0.0;
        for (c, a) in self.centers.iter().zip(&self.amps) {
            let u = x - c;
            let e = u * u / two_d2;
            if e < 40.0 {
                acc += a * (-e).exp();
            }
        }
        acc * self.scale
    }

    /// Closed-form `int G(x)^2 dx`.
    pub fn norm_sqr(&self) -> f64 {
        let d2 = self.delta * self.delta;
        let mut acc = 0.0;
        for (ci, ai) in self.centers.iter().zip(&self.amps) {
            for (cj, aj) in self.centers.iter().zip(&self.amps) {
                acc += ai * aj * (PI * d2).sqrt() * (-(ci - cj).powi(2) / (4.0 * d2)).exp();
            }
        }
        acc * self.scale * self.scale
    }

    /// Peak positions, nearest to the origin first.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn half_extent(&self) -> f64 {
        self.centers.iter().fold(0.0f64, |m, c| m.max(c.abs())) + 8.0 * self.delta
    }
}

/// Finite-energy GKP |+> in the momentum representation, normalised.
pub fn gkp_plus_momentum(delta: f64) -> Result<QuadWavefunction> {
    let mut comb = GaussianComb::new(delta)?;
    comb.scale = 1.0 / comb.norm_sqr().sqrt();
    let hw = comb.half_extent();
    Ok(QuadWavefunction {
        kind: Kind::Comb(comb),
        representation: Representation::Momentum,
        domain_halfwidth: hw,
    })
}

/// Hermite-function expansion `sum_n c_n phi_n(q)`.
#[derive(Clone, Debug)]
pub struct HermiteExpansion {
    coeffs: Vec<C64>,
}

impl HermiteExpansion {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let last = coeffs
            .iter()
            .rposition(|c| *c != C64::new(0.0, 0.0))
            .map_or(0, |i| i + 1);
        HermiteExpansion {
            coeffs: coeffs[..last.max(1)].to_vec(),
        }
    }

    pub fn max_index(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn eval(&self, q: f64) -> C64 {
        let mut p0 = (2.0 / PI).powf(0.25) * (-q * q).exp();
        let mut acc = self.coeffs[0] * p0;
        if self.coeffs.len() == 1 {
            return acc;
        }
        let mut p1 = 2.0 * q * p0;
        acc += self.coeffs[1] * p1;
        for n in 2..self.coeffs.len() {
            let nf = n as f64;
            let p2 = (2.0 * q * p1 - ((nf - 1.0).sqrt()) * p0) / nf.sqrt();
            p0 = p1;
            p1 = p2;
            let c = self.coeffs[n];
            acc += C64::new(c.re * p2, c.im * p2);
        }
        acc
    }
}

/// Number-state wavefunctions `phi_0..=phi_nmax` at `q`.
pub fn hermite_functions(q: f64, nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut p0 = (2.0 / PI).powf(0.25) * (-q * q).exp();
    out.push(p0);
    if nmax == 0 {
        return out;
    }
    let mut p1 = 2.0 * q * p0;
    out.push(p1);
    for n in 2..=nmax {
        let nf = n as f64;
        let p2 = (2.0 * q * p1 - (nf - 1.0).sqrt() * p0) / nf.sqrt();
        p0 = p1;
        p1 = p2;
        out.push(p2);
    }
    out
}

/// Position wavefunction of a Fock-basis state.
pub fn position_wavefunction(state: &FockVector) -> QuadWavefunction {
    let h = HermiteExpansion::new(state.amplitudes().to_vec());
    let hw = ((h.max_index() as f64) + 0.5).sqrt() + 5.0;
    QuadWavefunction {
        kind: Kind::Hermite(h),
        representation: Representation::Position,
        domain_halfwidth: hw,
    }
}

/// Fock coefficients `<n|psi>` of a position wavefunction by quadrature.
pub fn fock_coefficients(
    psi: &QuadWavefunction,
    cutoff: usize,
    half_width: f64,
    nodes: usize,
) -> Vec<C64> {
    let r = Rule::gauss_legendre(nodes, -half_width, half_width);
    let mut out = vec![C64::new(0.0, 0.0); cutoff + 1];
    for (&x, &w) in r.nodes.iter().zip(&r.weights) {
        let v = psi.eval(x) * w;
        for (n, h) in hermite_functions(x, cutoff).into_iter().enumerate() {
            out[n] += v * h;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_trisqueezed, displaced_squeezed};
    use approx::assert_abs_diff_eq;

    #[test]
    fn number_states_closed_form() {
        let a = (2.0 / PI).powf(0.25);
        for q in [-1.3, 0.0, 0.4, 2.2] {
            let h = hermite_functions(q, 2);
            assert_abs_diff_eq!(h[0], a * (-q * q).exp(), epsilon = 1e-15);
            assert_abs_diff_eq!(h[1], 2.0 * a * q * (-q * q).exp(), epsilon = 1e-15);
            // H_2(x) = 4x^2 - 2, x = sqrt(2) q, norm 1/sqrt(2^2 2!)
            let expect = a * (8.0 * q * q - 2.0) / 8f64.sqrt() * (-q * q).exp();
            assert_abs_diff_eq!(h[2], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn hermite_orthonormal() {
        let r = Rule::gauss_legendre(300, -12.0, 12.0);
        let n = 60;
        let table: Vec<Vec<f64>> = r.nodes.iter().map(|&x| hermite_functions(x, n)).collect();
        for (i, j) in [(0, 0), (3, 3), (60, 60), (0, 3), (57, 60), (30, 31)] {
            let v: f64 = table
                .iter()
                .zip(&r.weights)
                .map(|(h, w)| h[i] * h[j] * w)
                .sum();
            assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
        }
    }

    #[test]
    fn cubic_at_origin() {
        let xi = xi_from_db(5.0);
        let psi = cubic_phase_wavefunction(0.3, xi, 0.0).unwrap();
        assert_abs_diff_eq!(
            psi.eval(0.0).re,
            (2.0 / PI).powf(0.25) * (0.5 * xi).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(psi.norm_sqr(400), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn db_conversions() {
        assert_abs_diff_eq!(xi_from_db(5.0), -0.575646, epsilon = 1e-6);
        assert_abs_diff_eq!(db_from_xi(0.3257), 2.829, epsilon = 1e-3);
    }

    #[test]
    fn squeezed_matches_fock_route() {
        for (xi, beta) in [
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
            (C64::new(0.33, 0.0), C64::new(0.83, 0.0)),
            (C64::new(-0.4, 0.0), C64::new(0.2, 0.5)),
            (C64::new(0.2, 0.3), C64::new(-0.3, 0.1)),
        ] {
            let fock = displaced_squeezed(xi, beta, 60).unwrap();
            let via_fock = position_wavefunction(&fock);
            let direct = displaced_squeezed_wavefunction(xi, beta).unwrap();
            for q in [-1.5, -0.3, 0.0, 0.7, 1.9] {
                assert_abs_diff_eq!(
                    (via_fock.eval(q) - direct.eval(q)).norm(),
                    0.0,
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn fock_projection_roundtrip() {
        let v = build_trisqueezed(C64::new(0.1, 0.0), 30).unwrap();
        let psi = position_wavefunction(&v);
        let c = fock_coefficients(&psi, 30, 12.0, 300);
        for (x, y) in c.iter().zip(v.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gkp_normalised() {
        let g = gkp_plus_momentum(0.2).unwrap();
        assert_eq!(g.representation(), Representation::Momentum);
        let l = g.domain_halfwidth();
        let n = Rule::composite(
            &(0..=400)
                .map(|i| -l + 2.0 * l * i as f64 / 400.0)
                .collect::<Vec<_>>(),
            8,
        )
        .integrate(|p| g.eval(p).norm_sqr());
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-10);
        assert!(gkp_plus_momentum(0.0).is_err());
    }
}
