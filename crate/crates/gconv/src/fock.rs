//! Truncated Fock-space states and operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Default limit on the probability mass in the top tenth of the Fock indices.
pub const DEFAULT_TAIL_LIMIT: f64 = 1e-3;

/// Largest |t| accepted by the state builders.
pub const MAX_TRISQUEEZING: f64 = 0.2;

/// Pure state `sum_n c_n |n>`, n = 0..=cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FockVectorJson", try_from = "FockVectorJson")]
pub struct FockVector {
    cutoff: usize,
    amplitudes: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct FockVectorJson {
    cutoff: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl From<FockVector> for FockVectorJson {
    fn from(v: FockVector) -> Self {
        FockVectorJson {
            cutoff: v.cutoff,
            amplitudes: v.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<FockVectorJson> for FockVector {
    type Error = Error;
    fn try_from(j: FockVectorJson) -> Result<Self> {
        if j.amplitudes.len() != j.cutoff + 1 {
            return Err(invalid(format!(
                "{} amplitudes for cutoff {}",
                j.amplitudes.len(),
                j.cutoff
            )));
        }
        FockVector::from_amplitudes(j.amplitudes.iter().map(|a| C64::new(a[0], a[1])).collect())
    }
}

impl FockVector {
    /// Builds a state from raw amplitudes. The vector is normalised.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(invalid("empty amplitude vector"));
        }
        if amplitudes
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(invalid("non-finite amplitude"));
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(invalid("zero vector"));
        }
        Ok(FockVector {
            cutoff: amplitudes.len() - 1,
            amplitudes: amplitudes.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// Number state `|n>` in a space of the given cutoff.
    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(invalid(format!("n = {n} exceeds cutoff {cutoff}")));
        }
        let mut a = vec![C64::new(0.0, 0.0); cutoff + 1];
        a[n] = C64::new(1.0, 0.0);
        Ok(FockVector {
            cutoff,
            amplitudes: a,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability in the top 10% of Fock indices (at least one index).
    pub fn tail_mass(&self) -> f64 {
        let dim = self.cutoff + 1;
        let k = (dim / 10).max(1);
        self.amplitudes[dim - k..]
            .iter()
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Indices with non-zero amplitude.
    pub fn support(&self) -> Vec<usize> {
        (0..=self.cutoff)
            .filter(|&n| self.amplitudes[n] != C64::new(0.0, 0.0))
            .collect()
    }

    /// Same state embedded in (or cut down to) another cutoff, renormalised.
    pub fn resized(&self, cutoff: usize) -> Result<Self> {
        let mut a = vec![C64::new(0.0, 0.0); cutoff + 1];
        for (n, c) in self.amplitudes.iter().enumerate().take(cutoff + 1) {
            a[n] = *c;
        }
        FockVector::from_amplitudes(a)
    }

    pub fn to_column(&self) -> nalgebra::DVector<C64> {
        nalgebra::DVector::from_column_slice(&self.amplitudes)
    }

    /// Photon-number expectation value.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }
}

/// Density operator on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDensity {
    matrix: DMatrix<C64>,
}

impl FockDensity {
    pub fn from_pure(v: &FockVector) -> Self {
        let c = v.to_column();
        FockDensity {
            matrix: &c * c.adjoint(),
        }
    }

    /// Weighted mixture of pure states sharing one cutoff. Weights are normalised.
    pub fn mixture(states: &[(f64, FockVector)]) -> Result<Self> {
        let first = states.first().ok_or_else(|| invalid("empty mixture"))?;
        let dim = first.1.cutoff + 1;
        let mut m = DMatrix::zeros(dim, dim);
        let mut total = 0.0;
        for (w, s) in states {
            if s.cutoff + 1 != dim {
                return Err(invalid("mixture components differ in cutoff"));
            }
            if *w < 0.0 {
                return Err(invalid("negative mixture weight"));
            }
            let c = s.to_column();
            m += (&c * c.adjoint()) * C64::new(*w, 0.0);
            total += w;
        }
        if total <= 0.0 {
            return Err(invalid("mixture weights sum to zero"));
        }
        Ok(FockDensity {
            matrix: m / C64::new(total, 0.0),
        })
    }

    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("density matrix must be square"));
        }
        Ok(FockDensity { matrix })
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Dense operator on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    pub matrix: DMatrix<C64>,
}

impl FockOperator {
    pub fn cutoff(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn dagger(&self) -> Self {
        FockOperator {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, other: &FockOperator) -> Self {
        FockOperator {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        FockOperator {
            matrix: &self.matrix * s,
        }
    }

    pub fn plus(&self, other: &FockOperator) -> Self {
        FockOperator {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.cutoff != self.cutoff() {
            return Err(invalid("operator and state cutoffs differ"));
        }
        let out = &self.matrix * v.to_column();
        FockVector::from_amplitudes(out.iter().copied().collect())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).camax() <= tol
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(invalid("cutoff must be at least 1"));
    }
    Ok(())
}

/// Annihilation and creation operators truncated at `cutoff`.
pub fn ladder_operators(cutoff: usize) -> Result<(FockOperator, FockOperator)> {
    check_cutoff(cutoff)?;
    let dim = cutoff + 1;
    let a = DMatrix::from_fn(dim, dim, |m, n| {
        if n == m + 1 {
            C64::new((n as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a = FockOperator { matrix: a };
    let ad = a.dagger();
    Ok((a, ad))
}

/// `a^k` with entries `sqrt(n!/(n-k)!)` placed directly (no truncation artefacts
/// from multiplying truncated matrices).
pub fn annihilation_power(k: usize, cutoff: usize) -> Result<FockOperator> {
    check_cutoff(cutoff)?;
    let dim = cutoff + 1;
    let mut m = DMatrix::zeros(dim, dim);
    for n in k..dim {
        let v: f64 = (0..k).map(|j| (n - j) as f64).product::<f64>().sqrt();
        m[(n - k, n)] = C64::new(v, 0.0);
    }
    Ok(FockOperator { matrix: m })
}

/// `exp(G)` for a dense generator.
///
/// Generators of unitaries (`G = iH`, `H` Hermitian) and Hermitian generators go
/// through a Hermitian eigendecomposition; everything else uses Taylor scaling
/// and squaring.
pub fn matrix_exponential(g: &FockOperator) -> Result<FockOperator> {
    Ok(FockOperator {
        matrix: expm(&g.matrix)?,
    })
}

pub(crate) fn expm(g: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if g.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(invalid("non-finite generator"));
    }
    let scale = g.camax().max(1e-300);
    let tol = 1e-13 * scale;
    let h = g * C64::new(0.0, -1.0);
    if (&h - h.adjoint()).camax() <= tol {
        return Ok(expm_i_hermitian(&h));
    }
    if (g - g.adjoint()).camax() <= tol {
        return Ok(expm_hermitian(g));
    }
    Ok(expm_scaling_squaring(g))
}

/// `exp(iH)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, l).exp()));
    v * phases * v.adjoint()
}

fn expm_hermitian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.exp(), 0.0)));
    v * d * v.adjoint()
}

/// Taylor series with scaling and squaring. Slow but assumption-free.
pub fn expm_scaling_squaring(g: &DMatrix<C64>) -> DMatrix<C64> {
    let n = g.nrows();
    let norm1 = (0..n)
        .map(|j| g.column(j).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm1 / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let a = g / C64::new(2f64.powi(s), 0.0);
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..60 {
        term = (&term * &a) / C64::new(k as f64, 0.0);
        sum += &term;
        if term.camax() < 1e-20 * sum.camax() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Evolves the vacuum under `exp(i H)` where `H` only couples indices that are
/// equal modulo 3. Working on the residue-0 block keeps the other amplitudes
/// exactly zero.
fn evolve_vacuum_mod3(cutoff: usize, h: impl Fn(usize, usize) -> C64) -> Vec<C64> {
    let idx: Vec<usize> = (0..=cutoff).step_by(3).collect();
    let k = idx.len();
    let hm = DMatrix::from_fn(k, k, |i, j| h(idx[i], idx[j]));
    let u = expm_i_hermitian(&hm);
    let mut out = vec![C64::new(0.0, 0.0); cutoff + 1];
    for (i, &n) in idx.iter().enumerate() {
        out[n] = u[(i, 0)];
    }
    out
}

fn cubic_element(t: C64, m: usize, n: usize) -> C64 {
    // conj(t) a^3 + t a†^3
    let root = |hi: usize| ((hi as f64) * (hi - 1) as f64 * (hi - 2) as f64).sqrt();
    if m + 3 == n {
        t.conj() * root(n)
    } else if n + 3 == m {
        t * root(m)
    } else {
        C64::new(0.0, 0.0)
    }
}

fn gate_tail(v: &FockVector, limit: f64) -> Result<()> {
    let tail = v.tail_mass();
    if tail > limit {
        return Err(Error::Truncation {
            tail_mass: tail,
            limit,
            cutoff: v.cutoff,
            suggested_cutoff: 2 * v.cutoff,
        });
    }
    Ok(())
}

/// `exp(i(t* a^3 + t a†^3))|0>` with the default tail-mass limit.
pub fn build_trisqueezed(t: C64, cutoff: usize) -> Result<FockVector> {
    build_trisqueezed_with_limit(t, cutoff, DEFAULT_TAIL_LIMIT)
}

pub fn build_trisqueezed_with_limit(t: C64, cutoff: usize, tail_limit: f64) -> Result<FockVector> {
    if !(t.re.is_finite() && t.im.is_finite()) || t.norm() > MAX_TRISQUEEZING {
        return Err(invalid(format!(
            "|t| = {} outside [0, {MAX_TRISQUEEZING}]",
            t.norm()
        )));
    }
    if cutoff < 3 {
        return Err(invalid("cutoff must be at least 3"));
    }
    let amps = evolve_vacuum_mod3(cutoff, |m, n| cubic_element(t, m, n));
    let v = FockVector::from_amplitudes(amps)?;
    gate_tail(&v, tail_limit)?;
    Ok(v)
}

/// `exp(i tau (g* a^3 + g a†^3 + K a†^2 a^2))|0>`.
pub fn build_kerr_trisqueezed(g3: C64, kerr: f64, tau: f64, cutoff: usize) -> Result<FockVector> {
    build_kerr_trisqueezed_with_limit(g3, kerr, tau, cutoff, DEFAULT_TAIL_LIMIT)
}

pub fn build_kerr_trisqueezed_with_limit(
    g3: C64,
    kerr: f64,
    tau: f64,
    cutoff: usize,
    tail_limit: f64,
) -> Result<FockVector> {
    if !kerr.is_finite() || !tau.is_finite() || tau < 0.0 {
        return Err(invalid(
            "Kerr strength and time must be finite, time non-negative",
        ));
    }
    let t = g3 * tau;
    if t.norm() > MAX_TRISQUEEZING || !t.re.is_finite() {
        return Err(invalid(format!(
            "|g3 tau| = {} outside [0, {MAX_TRISQUEEZING}]",
            t.norm()
        )));
    }
    if cutoff < 3 {
        return Err(invalid("cutoff must be at least 3"));
    }
    let amps = evolve_vacuum_mod3(cutoff, |m, n| {
        if m == n {
            C64::new(tau * kerr * (n as f64) * (n as f64 - 1.0).max(0.0), 0.0)
        } else {
            cubic_element(t, m, n)
        }
    });
    let v = FockVector::from_amplitudes(amps)?;
    gate_tail(&v, tail_limit)?;
    Ok(v)
}

/// `D(beta) S(xi)|0>` with `S(xi) = exp((xi* a^2 - xi a†^2)/2)`.
///
/// Built in a padded space and truncated, so the low amplitudes are free of
/// truncation artefacts.
pub fn displaced_squeezed(xi: C64, beta: C64, cutoff: usize) -> Result<FockVector> {
    check_cutoff(cutoff)?;
    let big = cutoff + 40;
    let (a, ad) = ladder_operators(big)?;
    let a2 = annihilation_power(2, big)?;
    let ad2 = a2.dagger();
    let s_gen = a2.scaled(xi.conj() * 0.5).plus(&ad2.scaled(-xi * 0.5));
    let d_gen = ad.scaled(beta).plus(&a.scaled(-beta.conj()));
    let s = matrix_exponential(&s_gen)?;
    let d = matrix_exponential(&d_gen)?;
    let vac = FockVector::number(0, big)?;
    let out = d.apply(&s.apply(&vac)?)?;
    let amps: Vec<C64> = out.amplitudes()[..=cutoff].to_vec();
    FockVector::from_amplitudes(amps)
}

/// `<a|b>`.
pub fn fock_overlap(a: &FockVector, b: &FockVector) -> Result<C64> {
    if a.cutoff != b.cutoff {
        return Err(invalid(format!(
            "cutoff mismatch: {} vs {}",
            a.cutoff, b.cutoff
        )));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}
