use proptest::prelude::*;

use gconv::fock::{displaced_squeezed, fock_overlap, FockVector};
use gconv::gaussian::{is_physical, DetMode, PHYSICALITY_TOL};
use gconv::optim::{pso_minimize, Bounds, SwarmConfig};
use gconv::phase_space::{characteristic_fn, displacement_element};
use gconv::protocol::{overlap_kernel, CircuitParams, Param, ProbProblem, QuadratureScheme};
use gconv::teleport::commuted_corrections;
use gconv::wavefunction::{db_from_xi, xi_from_db};
use gconv::C64;

fn coherent_squeezed(xr: f64, xi: f64, br: f64, bi: f64) -> FockVector {
    displaced_squeezed(C64::new(xr, xi), C64::new(br, bi), 50).unwrap()
}

fn full_cptp_vector() -> impl Strategy<Value = Vec<f64>> {
    let b = DetMode::FullCptp.bounds();
    b.lower
        .iter()
        .zip(&b.upper)
        .map(|(&l, &u)| l..=u)
        .collect::<Vec<_>>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_cptp_decoding_is_physical(v in full_cptp_vector()) {
        let ch = DetMode::FullCptp.decode(&v).unwrap();
        prop_assert!(is_physical(&ch, PHYSICALITY_TOL).physical);
    }

    #[test]
    fn characteristic_function_is_one_at_origin(
        xr in -0.5..0.5f64, xi in -0.5..0.5f64, br in -1.0..1.0f64, bi in -1.0..1.0f64,
    ) {
        let v = coherent_squeezed(xr, xi, br, bi);
        prop_assert!((characteristic_fn(&v, [0.0, 0.0]).unwrap() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn characteristic_function_is_hermitian(
        br in -1.0..1.0f64, bi in -1.0..1.0f64, r1 in -3.0..3.0f64, r2 in -3.0..3.0f64,
    ) {
        let v = coherent_squeezed(0.2, -0.1, br, bi);
        let a = characteristic_fn(&v, [r1, r2]).unwrap();
        let b = characteristic_fn(&v, [-r1, -r2]).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-10);
        prop_assert!(a.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(
        a in (-0.5..0.5f64, -1.0..1.0f64), b in (-0.5..0.5f64, -1.0..1.0f64),
    ) {
        let u = coherent_squeezed(a.0, 0.0, a.1, 0.3);
        let v = coherent_squeezed(b.0, 0.1, b.1, -0.2);
        let uv = fock_overlap(&u, &v).unwrap();
        let vu = fock_overlap(&v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() < 1e-12);
        prop_assert!(uv.norm_sqr() <= 1.0 + 1e-10);
    }

    #[test]
    fn displacement_columns_are_normalised(re in -1.0..1.0f64, im in -1.0..1.0f64, n in 0usize..6) {
        let alpha = C64::new(re, im);
        let total: f64 = (0..80).map(|m| displacement_element(m, n, alpha).unwrap().norm_sqr()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overlap_kernel_is_symmetric(q0 in -4.0..4.0f64, q2 in -4.0..4.0f64, g in -3.0..-0.1f64) {
        let a = overlap_kernel(q0, q2, g).unwrap();
        let b = overlap_kernel(q2, q0, g).unwrap();
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn squeezing_units_round_trip(db in 0.0..20.0f64) {
        prop_assert!((db_from_xi(xi_from_db(db)) - db).abs() < 1e-12);
    }

    #[test]
    fn squeeze_coupling_matches_exponential(s in -1.0..1.0f64) {
        prop_assert!((commuted_corrections(s, 0.0, 0.0).squeeze_coupling - (s.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn swarm_stays_in_the_box(seed in 0u64..1000, lo in -3.0..0.0f64, width in 0.5..4.0f64) {
        let b = Bounds::new(vec![lo; 3], vec![lo + width; 3]).unwrap();
        let res = pso_minimize(|x: &[f64]| x.iter().map(|v| (v - 1.0).powi(2)).sum(), &b, &SwarmConfig::standard(10, 20, seed)).unwrap();
        prop_assert!(b.contains(&res.best_x));
        prop_assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn protocol_outputs_are_probabilities(
        theta in 0.2..1.4f64, qb in 0.0..1.5f64, xi in 0.0..1.5f64, d in -3.0..0.0f64, delta in 0.02..0.5f64,
    ) {
        let pr = ProbProblem::trisqueezed(0.1, 60, 0.1558, xi_from_db(5.0), QuadratureScheme::default()).unwrap();
        let mut p = CircuitParams { delta, ..Default::default() };
        for (param, v) in [(Param::Theta, theta), (Param::QBeta, qb), (Param::Xi, xi), (Param::D, d)] {
            param.set(&mut p, v);
        }
        if let Ok(out) = pr.evaluate(&p) {
            prop_assert!((0.0..=1.0 + 1e-9).contains(&out.probability));
            prop_assert!((0.0..=1.0 + 1e-6).contains(&out.fidelity));
        }
    }
}
