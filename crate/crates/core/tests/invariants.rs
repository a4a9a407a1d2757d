use std::f64::consts::PI;

use dimerlab::height::height_diff;
use dimerlab::interaction::{delta_energy, energy, flip, flip_changes, plaquette_spec, sixv_odd_spec, sixv_spec};
use dimerlab::kasteleyn::partition_function;
use dimerlab::lattice::{validate_config, winding, DimerConfig, Face, LatticePath};
use dimerlab::sampler::{Init, MCConfig, MCState, Sampler};
use dimerlab::sixvertex::{delta, dimer_to_weights, weights_to_dimer};
use dimerlab::spectral::{free_energy, mu, EdgeWeights};
use proptest::prelude::*;

/// A typical configuration in the winding sector of `init`.
fn random_config(l: usize, seed: u64, init: Init) -> DimerConfig {
    let cfg = MCConfig {
        l,
        t: EdgeWeights::uniform(),
        lambda: 0.0,
        spec: plaquette_spec(),
        sweeps: 20,
        thermalization: 0,
        measure_every: 1,
        seed,
        init,
    };
    let mut s = MCState::new(&cfg, 0).unwrap();
    let mut sampler = Sampler::new(&cfg).unwrap();
    for _ in 0..cfg.sweeps {
        sampler.sweep(&mut s);
    }
    s.config
}

fn face(l: usize, i: usize, odd: bool) -> Face {
    let (x1, x2) = ((i % l) as i64, ((i / l) % l) as i64);
    if odd {
        Face::odd(x1, x2)
    } else {
        Face::even(x1, x2)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flip_is_an_involution(seed in 0u64..10_000, i in 0usize..64, odd: bool) {
        let m = random_config(8, seed, Init::Columnar);
        let f = face(8, i, odd);
        if flip_changes(&m, f).is_ok() {
            let mut n = m.clone();
            flip(&mut n, f).unwrap();
            prop_assert!(validate_config(&n));
            prop_assert_ne!(&n, &m);
            prop_assert_eq!(winding(&n), winding(&m));
            flip(&mut n, f).unwrap();
            prop_assert_eq!(n, m);
        } else {
            let mut n = m.clone();
            prop_assert!(flip(&mut n, f).is_err());
        }
    }

    #[test]
    fn height_difference_is_path_independent(seed in 0u64..10_000, a1 in 0i64..8, a2 in 0i64..8, d1 in -3i64..=3, d2 in -3i64..=3) {
        let m = random_config(8, seed, Init::Staircase { w1: 1, w2: -2 });
        let start = Face::odd(a1, a2);
        let h1 = height_diff(&m, &LatticePath::staircase(start, d1, d2));
        let h2 = height_diff(&m, &LatticePath::staircase_e2_first(start, d1, d2));
        let h3 = height_diff(&m, &LatticePath::walk(start, &[(1, d1), (2, d2 + 1), (1, -d1), (1, d1), (2, -1)]));
        prop_assert!((h1 - h2).abs() < 1e-12, "{} vs {}", h1, h2);
        prop_assert!((h1 - h3).abs() < 1e-12, "{} vs {}", h1, h3);
    }

    #[test]
    fn energy_is_translation_invariant(seed in 0u64..10_000, u1 in -8i64..8, u2 in -8i64..8) {
        let m = random_config(8, seed, Init::Columnar);
        let n = m.translate((u1, u2));
        for spec in [plaquette_spec(), sixv_spec()] {
            prop_assert!((energy(&m, &spec) - energy(&n, &spec)).abs() < 1e-12);
        }
        // the odd-sublattice six-vertex pattern is only invariant under even shifts
        if (u1 + u2) % 2 == 0 {
            let spec = sixv_odd_spec();
            prop_assert!((energy(&m, &spec) - energy(&n, &spec)).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_energy_matches_recomputation(seed in 0u64..10_000, i in 0usize..64, odd: bool) {
        let m = random_config(8, seed, Init::Columnar);
        let f = face(8, i, odd);
        for spec in [plaquette_spec(), sixv_spec(), sixv_odd_spec()] {
            match delta_energy(&m, f, &spec) {
                Ok(de) => {
                    let mut n = m.clone();
                    flip(&mut n, f).unwrap();
                    prop_assert!((energy(&n, &spec) - energy(&m, &spec) - de).abs() < 1e-12);
                }
                Err(_) => prop_assert!(flip_changes(&m, f).is_err()),
            }
        }
    }

    #[test]
    fn mu_shift_by_pi_is_reflected_conjugate(k1 in -PI..PI, k2 in -PI..PI, t1 in 0.2f64..3.0, t2 in 0.2f64..3.0, t3 in 0.2f64..3.0) {
        let t = EdgeWeights::new(t1, t2, t3).unwrap();
        let a = mu([k1 + PI, k2 + PI], &t);
        let b = mu([-k1, -k2], &t).conj();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn six_vertex_dictionary_roundtrip(t1 in 0.2f64..3.0, t2 in 0.2f64..3.0, t3 in 0.2f64..3.0, lambda in -1.0f64..1.0) {
        let t = EdgeWeights::new(t1, t2, t3).unwrap();
        let a = dimer_to_weights(&t, lambda);
        let (u, l2) = weights_to_dimer(&a).unwrap();
        prop_assert!((l2 - lambda).abs() < 1e-12);
        for (x, y) in t.as_array().iter().zip(u.as_array()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(delta(&a) == 0.0, lambda == 0.0);
    }
}

#[test]
fn free_energy_is_the_large_torus_limit() {
    for t in
        [EdgeWeights::uniform(), EdgeWeights::new(1.3, 0.7, 0.9).unwrap(), EdgeWeights::new(2.0, 1.0, 1.0).unwrap()]
    {
        let fe = free_energy(&t, 256).unwrap();
        let mut prev = f64::INFINITY;
        for l in [16usize, 32, 64, 128] {
            let err = (partition_function(l, &t).unwrap() / (l * l) as f64 - fe).abs();
            assert!(err < prev, "t = {:?}: error did not shrink at L = {l}", t.as_array());
            prev = err;
        }
        assert!(prev < 1e-4, "t = {:?}: error {prev} at L = 128", t.as_array());
    }
}

#[test]
fn uniform_free_energy_is_twice_catalan_over_pi() {
    // 2G/pi per dimer on the square lattice
    let catalan = 0.915_965_594_177_219_f64;
    let fe = free_energy(&EdgeWeights::uniform(), 512).unwrap();
    assert!((fe - 2.0 * catalan / PI).abs() < 1e-8, "{fe}");
}
