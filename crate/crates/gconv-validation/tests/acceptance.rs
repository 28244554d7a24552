//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero when any of them fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gconv::fock::{
    build_kerr_trisqueezed, build_trisqueezed, build_trisqueezed_with_limit, displaced_squeezed,
    fock_overlap, ladder_operators, matrix_exponential, FockDensity, FockVector,
};
use gconv::gaussian::{
    is_physical, optimize_deterministic, squeeze_displace_output, DetMode, DetOutcome, DetProblem,
    GaussianChannel, PHYSICALITY_TOL,
};
use gconv::optim::{de_minimize, pso_minimize, Bounds, DeConfig, OptimizerConfig, SwarmConfig};
use gconv::phase_space::{
    characteristic_fn, displacement_element, fidelity_char, find_matching_cubicity, mana_auto,
    wigner_auto, wigner_fock, wigner_pure, Axis, FockCharacteristic, ManaConfig, WignerMethod,
};
use gconv::protocol::reference::fock_reference;
use gconv::protocol::{
    default_mask, optimize_probabilistic, CircuitParams, FreeParam, Param, ProbProblem,
    QuadratureScheme, DEGENERATE_PROBABILITY,
};
use gconv::quadrature::PlaneQuadrature;
use gconv::sweep::{delta_sweep, eta_sweep, kerr_sweep, mana_sweep, ScanSetup};
use gconv::teleport::gadget::{controlled_phase, correction, displacement, squeeze};
use gconv::teleport::{commuted_corrections, gate_error, GateErrorConfig};
use gconv::wavefunction::{position_wavefunction, xi_from_db};
use gconv::{Error, C64};

const CUTOFF: usize = 60;
const TRIPLICITIES: [f64; 3] = [0.1, 0.125, 0.15];
/// Cubicities whose 5 dB target matches the input mana.
const MATCHED_R: [f64; 3] = [0.1558, 0.2757, 0.4946];

fn xi_target() -> f64 {
    xi_from_db(5.0)
}

/// Collects the checks of one criterion.
#[derive(Default)]
struct Report {
    lines: Vec<String>,
    failed: usize,
}

impl Report {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failed += 1;
        }
        self.lines
            .push(format!("    [{}] {what}", if ok { "ok" } else { "FAILED" }));
    }

    fn close(&mut self, got: f64, want: f64, tol: f64, what: &str) {
        self.check(
            (got - want).abs() <= tol,
            format!("{what}: {got:.5} vs {want:.5} +- {tol}"),
        );
    }
}

// ---------------------------------------------------------------------------
// Deterministic conversion

struct DetCell {
    t: f64,
    full: DetOutcome,
    symplectic: DetOutcome,
    squeeze_displace: DetOutcome,
}

fn det_cells() -> &'static [DetCell] {
    static CELLS: OnceLock<Vec<DetCell>> = OnceLock::new();
    CELLS.get_or_init(|| {
        TRIPLICITIES
            .iter()
            .zip(MATCHED_R)
            .map(|(&t, r)| {
                let pr =
                    DetProblem::trisqueezed(t, CUTOFF, r, xi_target(), PlaneQuadrature::default())
                        .unwrap();
                let run = |mode, cfg: OptimizerConfig| {
                    assert!(cfg.budget() <= 100_000);
                    optimize_deterministic(&pr, mode, &cfg).unwrap()
                };
                let swarm = |n, it| OptimizerConfig::Pso(SwarmConfig::standard(n, it, 1));
                // The full channel has nine parameters and a swarm alone can stall on a
                // ridge at t=0.125, so it is paired with a differential-evolution run.
                let de = OptimizerConfig::De(DeConfig {
                    population: 45,
                    generations: 400,
                    seed: 1,
                    ..Default::default()
                });
                let (a, b) = (
                    run(DetMode::FullCptp, swarm(60, 300)),
                    run(DetMode::FullCptp, de),
                );
                DetCell {
                    t,
                    full: if a.fidelity >= b.fidelity { a } else { b },
                    symplectic: run(DetMode::Symplectic, swarm(30, 150)),
                    squeeze_displace: run(DetMode::SqueezeDisplace, swarm(20, 100)),
                }
            })
            .collect()
    })
}

fn criterion_1(rep: &mut Report) {
    let full = [0.9708, 0.9273, 0.8557];
    let symp = [0.9335, 0.8810, 0.8113];
    for (k, c) in det_cells().iter().enumerate() {
        let tol = if k == 2 { 0.005 } else { 0.003 };
        rep.close(
            c.full.fidelity,
            full[k],
            tol,
            &format!("full-cptp t={}", c.t),
        );
        rep.close(
            c.symplectic.fidelity,
            symp[k],
            tol,
            &format!("symplectic t={}", c.t),
        );
        rep.check(
            is_physical(&c.full.channel, PHYSICALITY_TOL).physical,
            format!("full-cptp optimum physical at t={}", c.t),
        );
    }
}

fn criterion_2(rep: &mut Report) {
    let mana_out = [0.1658, 0.3338, 0.5450];
    for (k, c) in det_cells().iter().enumerate() {
        rep.close(
            c.squeeze_displace.fidelity,
            c.full.fidelity,
            0.003,
            &format!("squeeze-displace vs full-cptp t={}", c.t),
        );
        let lq = c.full.channel.l[0];
        rep.check(
            lq.abs() < 1e-3,
            format!("|l_q| = {:.2e} at t={}", lq.abs(), c.t),
        );
        let input = build_trisqueezed(C64::new(c.t, 0.0), CUTOFF).unwrap();
        let ch = &c.squeeze_displace.channel;
        let out = squeeze_displace_output(&input, ch.x[0][0], ch.l[0], ch.l[1]).unwrap();
        let m = mana_auto(&[(1.0, out)], &ManaConfig::default()).unwrap();
        rep.close(m, mana_out[k], 0.005, &format!("output mana t={}", c.t));
    }
}

// ---------------------------------------------------------------------------
// Probabilistic conversion

/// A near-optimal circuit setting for t = 0.1 and r = 0.1558.
fn reference_circuit() -> CircuitParams {
    CircuitParams {
        theta: 1.0133,
        q_beta: 0.8304,
        xi: 0.3257,
        d: -0.9525,
        ..Default::default()
    }
}

fn prob_problem(t: f64, r: f64) -> ProbProblem {
    ProbProblem::trisqueezed(t, CUTOFF, r, xi_target(), QuadratureScheme::default()).unwrap()
}

fn criterion_3(rep: &mut Report) {
    let floors = [0.995, 0.984, 0.925];
    for (k, (&t, r)) in TRIPLICITIES.iter().zip(MATCHED_R).enumerate() {
        let pr = prob_problem(t, r);
        let clock = Instant::now();
        pr.evaluate(&reference_circuit()).unwrap();
        let per_eval = clock.elapsed().as_secs_f64();
        rep.check(
            per_eval <= 1.0,
            format!("one evaluation takes {per_eval:.3} s"),
        );
        let cfg = OptimizerConfig::Pso(SwarmConfig::standard(80, 249, 2));
        rep.check(cfg.budget() <= 20_000, format!("budget {}", cfg.budget()));
        let best =
            optimize_probabilistic(&pr, &CircuitParams::default(), &default_mask(), &cfg).unwrap();
        rep.check(
            best.fidelity >= floors[k],
            format!(
                "t={t}: F = {:.5} >= {} (P = {:.4})",
                best.fidelity, floors[k], best.probability
            ),
        );
        if k == 0 {
            rep.check(
                (0.03..=0.08).contains(&best.probability),
                format!("t={t}: P = {:.4} in [0.03, 0.08]", best.probability),
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Mana table

fn input_mana(t: f64) -> f64 {
    let v = build_trisqueezed(C64::new(t, 0.0), CUTOFF).unwrap();
    mana_auto(&[(1.0, position_wavefunction(&v))], &ManaConfig::default()).unwrap()
}

fn criterion_4(rep: &mut Report) {
    let manas = [0.1576, 0.3350, 0.5737];
    let r_tol = [0.005, 0.01, 0.02];
    for k in 0..3 {
        let t = TRIPLICITIES[k];
        let m = input_mana(t);
        rep.close(m, manas[k], 0.005, &format!("trisqueezed mana t={t}"));
        let r = find_matching_cubicity(m, xi_target(), 1e-7).unwrap();
        rep.close(
            r,
            MATCHED_R[k],
            r_tol[k],
            &format!("matched cubicity t={t}"),
        );
    }
}

// ---------------------------------------------------------------------------
// Trend suites

fn is_monotone(v: &[f64], increasing: bool) -> bool {
    v.windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn criterion_5(rep: &mut Report) {
    let pr = prob_problem(0.1, MATCHED_R[0]);
    let base = reference_circuit();

    let deltas = [0.025, 0.05, 0.1, 0.2, 0.3, 0.5];
    let rows = delta_sweep(&pr, &base, &deltas, None).unwrap();
    let f: Vec<f64> = rows.iter().map(|r| r.fidelity).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.probability).collect();
    rep.check(
        is_monotone(&f, false),
        format!("delta sweep: fidelity falls {f:.4?}"),
    );
    rep.check(
        is_monotone(&p, true),
        format!("delta sweep: probability rises {p:.4?}"),
    );

    let etas = [0.5, 0.7, 0.85, 0.95, 0.99, 1.0];
    let rows = eta_sweep(&pr, &base, &etas, None).unwrap();
    let f: Vec<f64> = rows.iter().map(|r| r.fidelity).collect();
    rep.check(
        is_monotone(&f, true),
        format!("eta sweep: fidelity rises {f:.4?}"),
    );
    let near = pr
        .evaluate(&CircuitParams {
            eta: 1.0 - 1e-7,
            ..base
        })
        .unwrap();
    let at = pr.evaluate(&base).unwrap();
    rep.check(
        (near.fidelity - at.fidelity).abs() < 1e-4
            && (near.probability - at.probability).abs() < 1e-4,
        format!(
            "eta -> 1 continuity: {:.6} vs {:.6}",
            near.fidelity, at.fidelity
        ),
    );

    let mana_cfg = ManaConfig {
        spacing: 0.05,
        ..Default::default()
    };
    let setup = |free: Vec<FreeParam>, particles, iterations, min_probability| ScanSetup {
        cutoff: CUTOFF,
        target_xi: xi_target(),
        quad: QuadratureScheme::default(),
        base: CircuitParams::default(),
        free,
        optimizer: OptimizerConfig::Pso(SwarmConfig::standard(particles, iterations, 1)),
        mana: mana_cfg,
        min_probability,
    };
    // Without a floor on the success probability the swarm at low input mana
    // drifts to outcomes with P ~ 1e-12 that only post-select the target.
    let ts = [0.04, 0.07, 0.1, 0.13];
    let rows = mana_sweep(&ts, 0.133, &setup(default_mask(), 40, 150, 1e-3)).unwrap();
    for r in &rows {
        rep.check(
            r.probability * r.mana_out <= r.mana_in + 0.01,
            format!(
                "t={}: P*M_out = {:.4} <= M_in + 0.01 = {:.4}",
                r.triplicity,
                r.probability * r.mana_out,
                r.mana_in + 0.01
            ),
        );
    }
    let f: Vec<f64> = rows.iter().map(|r| r.fidelity).collect();
    let plateau = &f[1..];
    let spread = plateau.iter().cloned().fold(f64::MIN, f64::max)
        - plateau.iter().cloned().fold(f64::MAX, f64::min);
    rep.check(
        spread < 0.01,
        format!("mana sweep plateau: fidelities {f:.4?}"),
    );
    rep.check(
        f[0] < plateau[0] - 0.005,
        "mana sweep drops at the lowest input mana",
    );

    let mut free = default_mask();
    free.push(FreeParam::full(Param::Gamma));
    let ratios = [0.5, 1.0, 2.0, 4.0];
    let gate = GateErrorConfig::default();
    let rows = kerr_sweep(
        0.1,
        &ratios,
        MATCHED_R[0],
        &setup(free, 60, 200, DEGENERATE_PROBABILITY),
        Some(&gate),
    )
    .unwrap();
    let at2 = &rows[2];
    rep.check(
        at2.fidelity >= 0.99,
        format!("kerr sweep t/K=2: F = {:.5} >= 0.99", at2.fidelity),
    );
    let eps: Vec<f64> = rows.iter().map(|r| r.gate_error.unwrap()).collect();
    rep.check(
        is_monotone(&eps, false),
        format!("gate error falls with t/K {eps:.4?}"),
    );

    let xi = xi_target();
    let state = prob_problem(0.1, MATCHED_R[0])
        .conditional_state(&base)
        .unwrap();
    let by_delta: Vec<f64> = [0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|&d| {
            let cfg = GateErrorConfig {
                delta_gkp: d,
                ..gate
            };
            gate_error(&state, MATCHED_R[0], xi, &cfg).unwrap()
        })
        .collect();
    rep.check(
        is_monotone(&by_delta, true),
        format!("gate error rises with delta {by_delta:.4?}"),
    );
}

// ---------------------------------------------------------------------------
// Oracle equivalence

/// Largest deviation on the block of low photon numbers of both modes.
fn low_block_error(a: &DMatrix<C64>, b: &DMatrix<C64>, cutoff: usize) -> f64 {
    let dim = cutoff + 1;
    let (keep, inp) = (5, 1);
    let mut worst = 0.0f64;
    for col in 0..dim * dim {
        let (c1, c2) = (col / dim, col % dim);
        if c1 > inp || c2 > inp {
            continue;
        }
        for row in 0..dim * dim {
            let (r1, r2) = (row / dim, row % dim);
            if r1 <= keep && r2 <= keep {
                worst = worst.max((a[(row, col)] - b[(row, col)]).norm());
            }
        }
    }
    worst
}

fn random_state(rng: &mut ChaCha8Rng, cutoff: usize) -> FockVector {
    if rng.gen_bool(0.5) {
        let xi = C64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
        let beta = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        displaced_squeezed(xi, beta, cutoff).unwrap()
    } else {
        let t = C64::from_polar(rng.gen_range(0.0..0.12), rng.gen_range(0.0..2.0 * PI));
        build_trisqueezed(t, cutoff).unwrap()
    }
}

fn criterion_6(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    // (a) characteristic-function fidelity against the Fock inner product
    let mut worst = 0.0f64;
    for _ in 0..24 {
        let a = random_state(&mut rng, 50);
        let b = random_state(&mut rng, 50);
        let f = fidelity_char(
            &FockCharacteristic::new(&a),
            &FockCharacteristic::new(&b),
            &PlaneQuadrature::default(),
        )
        .unwrap();
        worst = worst.max((f - fock_overlap(&a, &b).unwrap().norm_sqr()).abs());
    }
    rep.check(
        worst < 1e-4,
        format!("(a) 24 pairs, worst fidelity gap {worst:.2e}"),
    );

    // (b) quadrature pipeline against the two-mode Fock simulation
    let xi = xi_target();
    let sets = [
        (0.1, 0.1558, reference_circuit()),
        (
            0.125,
            0.2757,
            CircuitParams {
                theta: 0.8,
                q_beta: 1.0,
                xi: 0.5,
                d: -1.1,
                ..Default::default()
            },
        ),
        (
            0.1,
            0.1558,
            CircuitParams {
                theta: 0.6,
                q_beta: 0.4,
                xi: 0.2,
                p_beta: 0.3,
                gamma: -1.2,
                d: -0.5,
                delta: 0.2,
                ..Default::default()
            },
        ),
    ];
    for (t, r, p) in sets {
        let input = build_trisqueezed(C64::new(0.0, t), 40).unwrap();
        let quad = ProbProblem::new(input.clone(), r, xi, QuadratureScheme::default())
            .unwrap()
            .evaluate(&p)
            .unwrap();
        let fock = fock_reference(&input, r, xi, &p, 40, 32).unwrap();
        rep.check(
            (quad.fidelity - fock.fidelity).abs() < 2e-3,
            format!(
                "(b) t={t}: F {:.6} vs Fock {:.6}",
                quad.fidelity, fock.fidelity
            ),
        );
    }

    // (c) displacement elements against the matrix exponential
    let big = 90;
    let (a, ad) = ladder_operators(big).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..60 {
        let alpha = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (m, n) = (rng.gen_range(0..12), rng.gen_range(0..12));
        let g = ad.scaled(alpha).plus(&a.scaled(-alpha.conj()));
        let d = matrix_exponential(&g).unwrap();
        worst = worst.max((displacement_element(m, n, alpha).unwrap() - d.matrix[(m, n)]).norm());
    }
    rep.check(
        worst < 1e-9,
        format!("(c) 60 triples, worst gap {worst:.2e}"),
    );

    // (d) feed-forward identities through the controlled phase gate
    let n = 25;
    let cz = controlled_phase(n).unwrap();
    let s = 0.2;
    let lhs = cz.adjoint() * squeeze(s, n).unwrap() * &cz;
    let c = commuted_corrections(s, 0.0, 0.0);
    let rhs = squeeze(s, n).unwrap() * correction(0.0, c.squeeze_coupling, n).unwrap();
    let e1 = low_block_error(&lhs, &rhs, n);
    let (q0, p0) = (0.4, -0.3);
    let lhs = cz.adjoint() * displacement(q0, p0, n).unwrap() * &cz;
    let c = commuted_corrections(0.0, q0, p0);
    let rhs = displacement(q0, p0, n).unwrap() * correction(c.displacement_phase, 0.0, n).unwrap();
    let e2 = low_block_error(&lhs, &rhs, n);
    rep.check(
        e1 < 1e-6 && e2 < 1e-6,
        format!("(d) squeeze {e1:.2e}, displacement {e2:.2e}"),
    );

    // (e) Wigner function by two independent routes
    let v = build_trisqueezed_with_limit(C64::new(0.1, 0.0), 24, 1.0).unwrap();
    let ax = Axis::symmetric(3.0, 0.1).unwrap();
    let rho = FockDensity::from_pure(&v);
    let lag = wigner_fock(&rho, ax, ax, WignerMethod::Laguerre).unwrap();
    let four = wigner_fock(&rho, ax, ax, WignerMethod::CharFourier).unwrap();
    let auto = wigner_pure(&position_wavefunction(&v), ax, ax).unwrap();
    let sup = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let d1 = sup(&lag.values, &four.values);
    let d2 = sup(&lag.values, &auto.values);
    rep.check(
        d1 < 1e-5 && d2 < 1e-5,
        format!("(e) Laguerre vs Fourier {d1:.2e}, vs autocorrelation {d2:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// Invariants

fn criterion_7(rep: &mut Report) {
    // characteristic function at the origin
    let states = [
        build_trisqueezed(C64::new(0.0, 0.15), CUTOFF).unwrap(),
        build_kerr_trisqueezed(C64::new(0.0, 0.1), 0.05, 1.0, CUTOFF).unwrap(),
        displaced_squeezed(C64::new(0.3, -0.2), C64::new(0.5, 0.4), 40).unwrap(),
    ];
    let worst = states
        .iter()
        .map(|v| (characteristic_fn(v, [0.0, 0.0]).unwrap() - 1.0).norm())
        .fold(0.0, f64::max);
    rep.check(worst < 1e-10, format!("chi(0) = 1 within {worst:.1e}"));

    // normalisation of Wigner grids
    let cfg = ManaConfig::default();
    let v = build_trisqueezed(C64::new(0.0, 0.1), CUTOFF).unwrap();
    let (g, _) = wigner_auto(&[(1.0, position_wavefunction(&v))], &cfg).unwrap();
    rep.close(g.integral(), 1.0, 2e-3, "integral of W, trisqueezed");
    let pr = prob_problem(0.1, MATCHED_R[0]);
    let g = pr
        .conditional_state(&reference_circuit())
        .unwrap()
        .wigner(&ManaConfig {
            spacing: 0.05,
            ..cfg
        })
        .unwrap();
    rep.close(g.integral(), 1.0, 2e-3, "integral of W, conditional state");

    // mana under Gaussian unitaries
    let m0 = input_mana(0.1);
    let squeezed = squeeze_displace_output(&v, 1.3, 0.2, -0.3).unwrap();
    rep.close(
        mana_auto(&[(1.0, squeezed)], &cfg).unwrap(),
        m0,
        5e-3,
        "mana after squeeze and displacement",
    );
    let rotated = build_trisqueezed(C64::from_polar(0.1, 0.7), CUTOFF).unwrap();
    rep.close(
        mana_auto(&[(1.0, position_wavefunction(&rotated))], &cfg).unwrap(),
        m0,
        5e-3,
        "mana after phase rotation",
    );

    // physicality gate
    let det = DetProblem::trisqueezed(
        0.1,
        CUTOFF,
        MATCHED_R[0],
        xi_target(),
        PlaneQuadrature::default(),
    )
    .unwrap();
    let bad = GaussianChannel::new([[2.0, 0.0], [0.0, 2.0]], [[0.0; 2]; 2], [0.0, 0.0]).unwrap();
    rep.check(
        !is_physical(&bad, PHYSICALITY_TOL).physical
            && matches!(det.fidelity(&bad), Err(Error::ConstraintViolation { .. })),
        "amplifier without noise is rejected",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bounds = DetMode::FullCptp.bounds();
    let all_physical = (0..200).all(|_| {
        let x: Vec<f64> = (0..9)
            .map(|k| rng.gen_range(bounds.lower[k]..=bounds.upper[k]))
            .collect();
        is_physical(&DetMode::FullCptp.decode(&x).unwrap(), PHYSICALITY_TOL).physical
    });
    rep.check(
        all_physical,
        "every full-cptp parameter vector decodes to a physical channel",
    );

    // optimiser box, monotone history and seed determinism
    let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let b = Bounds::new(vec![-2.0, -1.0], vec![2.0, 3.0]).unwrap();
    let pso = SwarmConfig::standard(30, 100, 5);
    let de = DeConfig {
        population: 30,
        generations: 100,
        seed: 5,
        ..Default::default()
    };
    let runs = [
        pso_minimize(rosen, &b, &pso).unwrap(),
        pso_minimize(rosen, &b, &pso).unwrap(),
        de_minimize(rosen, &b, &de).unwrap(),
        de_minimize(rosen, &b, &de).unwrap(),
    ];
    for r in &runs {
        rep.check(
            b.contains(&r.best_x),
            format!("{} optimum inside the box", r.method),
        );
        rep.check(
            r.history.windows(2).all(|w| w[1] <= w[0]),
            format!("{} history is non-increasing", r.method),
        );
    }
    rep.check(
        runs[0] == runs[1] && runs[2] == runs[3],
        "equal seeds give identical runs",
    );
    let other = pso_minimize(rosen, &b, &SwarmConfig::standard(30, 100, 6)).unwrap();
    rep.check(
        other.best_x != runs[0].best_x,
        "a different seed gives a different run",
    );

    // cutoff doubling
    let ch = GaussianChannel::squeeze_displace(1.4837, 0.0, 0.1586).unwrap();
    let f60 = det.fidelity(&ch).unwrap();
    let f120 = DetProblem::trisqueezed(
        0.1,
        2 * CUTOFF,
        MATCHED_R[0],
        xi_target(),
        PlaneQuadrature::default(),
    )
    .unwrap()
    .fidelity(&ch)
    .unwrap();
    rep.check(
        (f60 - f120).abs() < 1e-6,
        format!(
            "deterministic fidelity under cutoff doubling {:.1e}",
            (f60 - f120).abs()
        ),
    );
    let p60 = pr.evaluate(&reference_circuit()).unwrap().fidelity;
    let p120 = ProbProblem::trisqueezed(
        0.1,
        2 * CUTOFF,
        MATCHED_R[0],
        xi_target(),
        QuadratureScheme::default(),
    )
    .unwrap()
    .evaluate(&reference_circuit())
    .unwrap()
    .fidelity;
    rep.check(
        (p60 - p120).abs() < 1e-6,
        format!(
            "probabilistic fidelity under cutoff doubling {:.1e}",
            (p60 - p120).abs()
        ),
    );
}

type Criterion = fn(&mut Report);

fn main() {
    let criteria: [(&str, Criterion); 7] = [
        ("1 deterministic fidelities", criterion_1),
        ("2 squeeze-displace saturates the bound", criterion_2),
        ("3 probabilistic protocol", criterion_3),
        ("4 mana table", criterion_4),
        ("5 trend suites", criterion_5),
        ("6 oracle equivalence", criterion_6),
        ("7 invariants", criterion_7),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (name, run) in criteria {
        let label = format!("criterion {name}");
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let mut rep = Report::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut rep)));
        let ok = outcome.is_ok() && rep.failed == 0;
        if !ok {
            failures += 1;
        }
        println!(
            "{label}: {} ({:.0} s)",
            if ok { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64()
        );
        for line in &rep.lines {
            println!("{line}");
        }
        if outcome.is_err() {
            println!("    [FAILED] panicked");
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
