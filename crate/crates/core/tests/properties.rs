use ntkt_core::math::{gaussian_tail_bounds, norm};
use ntkt_core::metrics::samp_bounds;
use ntkt_core::networks::{flip_bound, NetFile, NetKind};
use ntkt_core::sampling::{draw_batch, maurey_bound, transported_weight, truncation_radius, uniform_bounds};
use ntkt_core::transport::TransportMap;
use ntkt_core::RngStream;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn batch_moves_never_exceed_bound(seed in any::<u64>(), m in 2usize..400, eps in 0.05f64..5.0, d in 1usize..4) {
        let t = TransportMap::custom(d, 3.0, move |wt: &[f64]| {
            let n = norm(wt).max(1e-12);
            wt.iter().map(|v| 3.0 * n.tanh() * v / n).collect()
        }).unwrap();
        let batch = draw_batch(&t, m, eps, 0.1, &mut RngStream::new(seed, 7)).unwrap();
        prop_assert!(batch.max_move() <= batch.move_bound());
        let mut tau = vec![0.0; d + 1];
        for j in 0..m {
            let tv = t.eval(batch.w(j)).unwrap();
            transported_weight(batch.w(j), &tv, batch.s(j), eps, m, batch.radius(), &mut tau);
            prop_assert_eq!(&tau[..], batch.tau(j));
        }
    }

    #[test]
    fn truncation_radius_grows_with_width(d in 1usize..6, m in 2usize..100_000, eta in 0.001f64..0.5) {
        prop_assert!(truncation_radius(d, 2 * m, eta) > truncation_radius(d, m, eta));
        prop_assert!(truncation_radius(d, m, eta) >= ((d + 1) as f64).sqrt());
    }

    #[test]
    fn sampling_bounds_shrink_with_width(b in 2.0f64..1e3, m in 2usize..10_000, eps in 0.01f64..2.0, eta in 0.01f64..0.9) {
        let r = truncation_radius(1, m, eta);
        let s1 = samp_bounds(b, m, eps, r, eta).unwrap();
        let s4 = samp_bounds(b, 4 * m, eps, r, eta).unwrap();
        prop_assert!(s4.eq1 < s1.eq1 && s4.eq2 < s1.eq2);
        prop_assert!(s1.eq2 >= s1.eq1 - 1e-9 * s1.eq1);
        prop_assert!((maurey_bound(1.0, 4 * m, eta).unwrap() * 2.0 - maurey_bound(1.0, m, eta).unwrap()).abs() < 1e-12);
        let u1 = uniform_bounds(1.0, m, 1, eta, 2.0).unwrap();
        let u2 = uniform_bounds(1.0, 16 * m, 1, eta, 2.0).unwrap();
        prop_assert!(u2.threshold_bound < u1.threshold_bound && u2.relu_bound < u1.relu_bound);
        prop_assert!(flip_bound(b, eps, 4 * m) < flip_bound(b, eps, m));
    }

    #[test]
    fn tail_bounds_decrease_in_radius(d in 1usize..8, a in 0.0f64..4.0, gap in 0.01f64..3.0) {
        let r = (d as f64).sqrt() + a;
        let lo = gaussian_tail_bounds(d, r).unwrap();
        let hi = gaussian_tail_bounds(d, r + gap).unwrap();
        prop_assert!(hi.prob_bound < lo.prob_bound);
        prop_assert!(hi.norm_tail_bound < lo.norm_tail_bound);
        prop_assert!(hi.sqnorm_tail_bound < lo.sqnorm_tail_bound);
    }

    #[test]
    fn net_file_bytes_roundtrip(d in 1usize..4, m in 1usize..20, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = RngStream::new(seed, 1);
        let k = d + 1;
        let file = NetFile {
            kind: NetKind::Ntk,
            d,
            m,
            eps: rng.gen_range(0.01..2.0),
            radius: rng.gen_range(1.0..10.0),
            scalars: vec![rng.gen_range(0.0..10.0)],
            w: (0..m * k).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            s: (0..m).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
            tau: (0..m * k).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        };
        prop_assert_eq!(NetFile::from_bytes(&file.to_bytes()).unwrap(), file.clone());
        prop_assert_eq!(NetFile::from_json(&file.to_json().unwrap()).unwrap(), file);
    }
}
