use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcbf_core::linalg::{unit, CVector};
use rcbf_core::model::{
    compute_sinr, perturb, sampled_worst_sinr, to_db, BeamformerSet, ChannelSet, ErrorEllipsoid, Link, SystemConfig,
};

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `Σ conj(a_i) b_i` written out by hand.
fn inner(a: &CVector, b: &CVector) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.len() {
        acc += a[i].conj() * b[i];
    }
    acc
}

#[test]
fn single_link_without_interference() {
    let cfg = SystemConfig::uniform(1, 1, 3, 1.0, 1.0, None).unwrap();
    let h = vec![unit(3, 0)];
    let beams = BeamformerSet::new(vec![unit(3, 0) * Complex64::new(2.0, 0.0)]).unwrap();
    assert_eq!(compute_sinr(&h, &beams, &cfg, (0, 0)).unwrap(), 4.0);
}

#[test]
fn zero_beams_give_zero_sinr() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = SystemConfig::uniform(2, 2, 3, 1.0, 0.3, None).unwrap();
    let h: Vec<_> = (0..2).map(|_| random_vec(&mut rng, 3)).collect();
    let beams = BeamformerSet::zeros(&cfg);
    for cell in 0..2 {
        for user in 0..2 {
            assert_eq!(compute_sinr(&h, &beams, &cfg, (cell, user)).unwrap(), 0.0);
        }
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let cfg = SystemConfig::uniform(1, 1, 3, 1.0, 1.0, None).unwrap();
    let beams = BeamformerSet::new(vec![unit(2, 0)]).unwrap();
    assert!(compute_sinr(&[unit(3, 0)], &beams, &cfg, (0, 0)).is_err());
    let beams = BeamformerSet::new(vec![unit(3, 0)]).unwrap();
    assert!(compute_sinr(&[unit(2, 0)], &beams, &cfg, (0, 0)).is_err());
}

#[test]
fn matches_straight_line_recomputation() {
    let (nc, k, nt) = (2, 2, 3);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..nc * k).map(|_| rng.random_range(0.1..2.0)).collect();
        let cfg = SystemConfig::new(nc, k, nt, vec![1.0; nc], vec![1.0; nc * k], noise.clone(), None).unwrap();
        let w: Vec<CVector> = (0..nc * k).map(|_| random_vec(&mut rng, nt)).collect();
        let beams = BeamformerSet::new(w.clone()).unwrap();
        for i in 0..nc {
            for kk in 0..k {
                let h: Vec<CVector> = (0..nc).map(|_| random_vec(&mut rng, nt)).collect();
                let signal = inner(&h[i], &w[i * k + kk]).norm_sqr();
                let mut denom = noise[i * k + kk];
                for (j, hj) in h.iter().enumerate() {
                    for l in 0..k {
                        if (j, l) != (i, kk) {
                            denom += inner(hj, &w[j * k + l]).norm_sqr();
                        }
                    }
                }
                let expected = signal / denom;
                let got = compute_sinr(&h, &beams, &cfg, (i, kk)).unwrap();
                assert!((got - expected).abs() <= 1e-12 * expected, "{got} vs {expected}");
            }
        }
    }
}

proptest! {
    #[test]
    fn noise_scale_covariance(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = SystemConfig::uniform(2, 2, 3, 1.0, 0.5, None).unwrap();
        let scaled_cfg = SystemConfig::uniform(2, 2, 3, 1.0, 0.5 * c, None).unwrap();
        let beams = BeamformerSet::new((0..4).map(|_| random_vec(&mut rng, 3)).collect()).unwrap();
        let h: Vec<_> = (0..2).map(|_| random_vec(&mut rng, 3)).collect();
        let a = compute_sinr(&h, &beams, &cfg, (1, 0)).unwrap();
        let b = compute_sinr(&h, &beams.scaled(c.sqrt()), &scaled_cfg, (1, 0)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn more_interference_lowers_sinr(seed in any::<u64>(), victim in 0usize..3, boost in 1.01f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = SystemConfig::uniform(2, 2, 3, 1.0, 0.5, None).unwrap();
        let mut w: Vec<CVector> = (0..4).map(|_| random_vec(&mut rng, 3)).collect();
        let h: Vec<_> = (0..2).map(|_| random_vec(&mut rng, 3)).collect();
        let before = compute_sinr(&h, &BeamformerSet::new(w.clone()).unwrap(), &cfg, (0, 0)).unwrap();
        // Interferers of user (0, 0) are beams 1, 2, 3.
        let idx = victim + 1;
        let bs = idx / 2;
        prop_assume!(inner(&h[bs], &w[idx]).norm_sqr() > 1e-9);
        w[idx] *= Complex64::new(boost, 0.0);
        let after = compute_sinr(&h, &BeamformerSet::new(w).unwrap(), &cfg, (0, 0)).unwrap();
        prop_assert!(after < before);
    }
}

fn two_cell_channels(eps: f64, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nominal = (0..8).map(|_| random_vec(&mut rng, 3)).collect();
    ChannelSet::from_nominal(2, 2, nominal, ErrorEllipsoid::spherical(eps).unwrap()).unwrap()
}

#[test]
fn zero_errors_leave_channels_bitwise_unchanged() {
    let ch = two_cell_channels(0.1, 3);
    let realized = perturb(&ch, &vec![CVector::zeros(3); ch.num_links()]).unwrap();
    assert_eq!(realized.as_slice(), ch.nominal_all());
}

#[test]
fn perturbation_on_the_boundary_is_accepted() {
    let ch = two_cell_channels(0.1, 4);
    let mut errors = vec![CVector::zeros(3); ch.num_links()];
    let target = ch.link_index(Link::new(1, 0, 1));
    errors[target] = unit(3, 2) * Complex64::new(0.0, 0.1);
    let realized = perturb(&ch, &errors).unwrap();
    for (idx, h) in realized.iter().enumerate() {
        let expected = &ch.nominal_all()[idx] + &errors[idx];
        assert_eq!(h, &expected);
    }
    errors[target] = unit(3, 2) * Complex64::new(0.0, 0.1001);
    match perturb(&ch, &errors) {
        Err(rcbf_core::Error::OutsideEllipsoid { bs, cell, user, .. }) => assert_eq!((bs, cell, user), (1, 0, 1)),
        other => panic!("expected an ellipsoid violation, got {other:?}"),
    }
}

fn random_beams(seed: u64) -> BeamformerSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BeamformerSet::new((0..4).map(|_| random_vec(&mut rng, 3)).collect()).unwrap()
}

#[test]
fn sampled_worst_equals_nominal_without_uncertainty() {
    let ch = two_cell_channels(0.0, 5);
    let cfg = SystemConfig::uniform(2, 2, 3, 1.0, 0.2, None).unwrap();
    let beams = random_beams(6);
    for (cell, user) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let nominal = compute_sinr(ch.user_nominal(cell, user), &beams, &cfg, (cell, user)).unwrap();
        for n in [1, 10, 100] {
            assert_eq!(sampled_worst_sinr(&ch, &beams, &cfg, (cell, user), n, 9).unwrap(), nominal);
        }
    }
}

#[test]
fn sampled_worst_never_exceeds_nominal() {
    let cfg = SystemConfig::uniform(2, 2, 3, 1.0, 0.2, None).unwrap();
    for seed in 0..10 {
        let ch = two_cell_channels(0.2, seed);
        let beams = random_beams(seed + 100);
        let nominal = compute_sinr(ch.user_nominal(1, 1), &beams, &cfg, (1, 1)).unwrap();
        // The first sample is the zero perturbation.
        let one = sampled_worst_sinr(&ch, &beams, &cfg, (1, 1), 1, seed).unwrap();
        assert_eq!(one, nominal);
        let many = sampled_worst_sinr(&ch, &beams, &cfg, (1, 1), 500, seed).unwrap();
        assert!(many <= nominal + 1e-12);
        assert_eq!(many, sampled_worst_sinr(&ch, &beams, &cfg, (1, 1), 500, seed).unwrap());
    }
    let ch = two_cell_channels(0.2, 0);
    assert!(sampled_worst_sinr(&ch, &random_beams(0), &cfg, (0, 0), 0, 0).is_err());
}

#[test]
fn sampled_worst_agrees_with_grid_search() {
    let eps = 0.1;
    let sigma2 = 0.05;
    let h = CVector::from_vec(vec![Complex64::new(0.8, 0.1), Complex64::new(-0.3, 0.4)]);
    let w = CVector::from_vec(vec![Complex64::new(0.6, -0.2), Complex64::new(0.1, 0.5)]);
    let ch = ChannelSet::from_nominal(1, 1, vec![h.clone()], ErrorEllipsoid::spherical(eps).unwrap()).unwrap();
    let cfg = SystemConfig::uniform(1, 1, 2, 1.0, sigma2, None).unwrap();
    let beams = BeamformerSet::new(vec![w.clone()]).unwrap();
    let sampled = sampled_worst_sinr(&ch, &beams, &cfg, (0, 0), 100_000, 17).unwrap();

    // Cubic grid over the 4-real-dimensional ball.
    let steps = 40;
    let mut grid_min = f64::INFINITY;
    let coord = |i: usize| -eps + 2.0 * eps * i as f64 / steps as f64;
    for a in 0..=steps {
        for b in 0..=steps {
            for c in 0..=steps {
                for d in 0..=steps {
                    let (x0, y0, x1, y1) = (coord(a), coord(b), coord(c), coord(d));
                    if x0 * x0 + y0 * y0 + x1 * x1 + y1 * y1 > eps * eps {
                        continue;
                    }
                    let e = CVector::from_vec(vec![Complex64::new(x0, y0), Complex64::new(x1, y1)]);
                    let s = inner(&(&h + e), &w).norm_sqr() / sigma2;
                    grid_min = grid_min.min(s);
                }
            }
        }
    }
    let diff = (to_db(sampled) - to_db(grid_min)).abs();
    assert!(diff <= 0.05, "sampled {sampled} vs grid {grid_min} ({diff} dB)");
}
