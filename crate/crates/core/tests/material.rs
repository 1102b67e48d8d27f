use dpg_visco::calibration::{invert_dma, BeamGeometry, DmaMeasurement, Setup};
use dpg_visco::material::{
    check_positivity, cstar_from_lame, lame_from_young_poisson, moduli_from_lame, voigt_index, IsotropicMaterial,
};
use dpg_visco::C64;
use proptest::prelude::*;

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `C_ijkl = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk)`.
fn isotropic_component(lambda: C64, mu: C64, i: usize, j: usize, k: usize, l: usize) -> C64 {
    lambda * delta(i, j) * delta(k, l) + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
}

fn silicone_e() -> C64 {
    let geom = BeamGeometry {
        setup: Setup::Single,
        gap: 17.5e-3,
        width: 11.8e-3,
        thickness: 1.63e-3,
        middle_clamp: 6.35e-3,
        external_clamp: 7.625e-3,
        total_length: 40e-3,
    };
    let meas = DmaMeasurement {
        temperature: f64::NAN,
        frequency_hz: 4.0,
        amplitude: 15e-6,
        inphase_force: 0.1064,
        tan_delta: 0.0384,
    };
    invert_dma(&meas, &geom, C64::new(0.33, 0.0)).unwrap()
}

#[test]
fn silicone_voigt_matches_index_loop() {
    let nu = C64::new(0.33, 0.0);
    let (lambda, mu) = lame_from_young_poisson(silicone_e(), nu).unwrap();
    let v = cstar_from_lame(lambda, mu);
    let scale = v.entries.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let oracle = isotropic_component(lambda, mu, i, j, k, l);
                    let got = v.entries[voigt_index(i, j)][voigt_index(k, l)];
                    assert!((got - oracle).norm() <= 1e-15 * scale, "C_{i}{j}{k}{l}");
                }
            }
        }
    }
}

#[test]
fn voigt_index_is_symmetric_and_onto() {
    let mut seen = [false; 6];
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(voigt_index(i, j), voigt_index(j, i));
            seen[voigt_index(i, j)] = true;
        }
        assert_eq!(voigt_index(i, i), i);
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn silicone_and_epoxy_round_trip() {
    let nu = C64::new(0.33, 0.0);
    let epoxy = C64::new(1_299_505_110.337_131_1, 11_292_699.408_829_67);
    for e in [silicone_e(), epoxy] {
        let (lambda, mu) = lame_from_young_poisson(e, nu).unwrap();
        let m = moduli_from_lame(lambda, mu).unwrap();
        assert!((m.e_star - e).norm() <= 1e-12 * e.norm());
        assert!((m.nu_star - nu).norm() <= 1e-12 * nu.norm());
        assert!(IsotropicMaterial::new(lambda, mu, 1000.0, 1.0).is_ok());
    }
}

fn symmetric_strain(v: [f64; 12]) -> [[C64; 3]; 3] {
    let z = |k: usize| C64::new(v[2 * k], v[2 * k + 1]);
    let d = [z(0), z(1), z(2)];
    let (s23, s13, s12) = (z(3), z(4), z(5));
    [[d[0], s12, s13], [s12, d[1], s23], [s13, s23, d[2]]]
}

fn strain_values() -> impl Strategy<Value = [f64; 12]> {
    prop::array::uniform12(-1.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn young_poisson_round_trip(e_re in 1e-3..1e10f64, e_im in -1e9..1e9f64, nu_re in -0.9..0.45f64, nu_im in -0.1..0.1f64) {
        let e = C64::new(e_re, e_im);
        let nu = C64::new(nu_re, nu_im);
        let (lambda, mu) = lame_from_young_poisson(e, nu).unwrap();
        let m = moduli_from_lame(lambda, mu).unwrap();
        prop_assert!((m.e_star - e).norm() <= 1e-12 * e.norm());
        prop_assert!((m.nu_star - nu).norm() <= 1e-12 * nu.norm().max(1.0));
    }

    #[test]
    fn apply_equals_tensor_contraction(l_re in -5.0..5.0f64, l_im in -5.0..5.0f64, m_re in -5.0..5.0f64, m_im in -5.0..5.0f64, v in strain_values()) {
        let voigt = cstar_from_lame(C64::new(l_re, l_im), C64::new(m_re, m_im));
        let eps = symmetric_strain(v);
        let in_voigt = [eps[0][0], eps[1][1], eps[2][2], eps[1][2], eps[0][2], eps[0][1]];
        let stress = voigt.apply(&in_voigt);
        let t = voigt.to_tensor();
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..3 {
                    for l in 0..3 {
                        s += t[i][j][k][l] * eps[k][l];
                    }
                }
                scale = scale.max(s.norm());
                worst = worst.max((s - stress[voigt_index(i, j)]).norm());
            }
        }
        prop_assert!(worst <= 1e-13 * scale.max(1e-300));
    }

    #[test]
    fn admissible_pairs_are_accepted(g_re in 1e-3..1e3f64, g_im in -1e3..1e3f64, k_re in 1e-3..1e3f64, k_im in -1e3..1e3f64) {
        let mu = C64::new(g_re, g_im);
        let lambda = C64::new(k_re, k_im) - mu * (2.0 / 3.0);
        let rep = check_positivity(&cstar_from_lame(lambda, mu)).unwrap();
        prop_assert_eq!(rep.sign, 1);
        prop_assert!(rep.lambda_min > 0.0);
    }

    #[test]
    fn storage_form_never_vanishes(g_re in 1e-3..1e3f64, g_im in -1e3..1e3f64, k_re in 1e-3..1e3f64, k_im in -1e3..1e3f64,
                                   strains in prop::collection::vec(strain_values(), 10)) {
        let mu = C64::new(g_re, g_im);
        let voigt = cstar_from_lame(C64::new(k_re, k_im) - mu * (2.0 / 3.0), mu);
        prop_assert!(check_positivity(&voigt).is_ok());
        let t = voigt.to_tensor();
        for v in strains {
            let eps = symmetric_strain(v);
            let mut q = C64::new(0.0, 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            q += eps[i][j].conj() * t[i][j][k][l].re * eps[k][l];
                        }
                    }
                }
            }
            prop_assert!(q.re.abs() > 0.0);
        }
    }
}
