use proptest::prelude::*;

use codp_sketch::binary_mechanism::GaussBmCounter;
use codp_sketch::hashing::HashFamily;
use codp_sketch::noise::{GaussianSampler, NoiseScale};
use codp_sketch::streamgen::ExactOracle;
use codp_sketch::{LazySketch, PlainSketch, PunctualSketch, SketchKind};

fn kind() -> impl Strategy<Value = SketchKind> {
    prop_oneof![Just(SketchKind::Cms), Just(SketchKind::Cs)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stack_is_a_dyadic_partition(
        incs in prop::collection::vec(-5i64..=5, 1..600),
        sigma in 0.0f64..10.0,
        seed: u64,
    ) {
        let cap = incs.len() as u64;
        let mut c = GaussBmCounter::with_scale(cap, NoiseScale::new(sigma).unwrap()).unwrap();
        let mut g = GaussianSampler::new(seed);
        let mut prefix = 0i64;
        for (i, &inc) in incs.iter().enumerate() {
            let t = i as u64 + 1;
            c.update(inc, t, &mut g).unwrap();
            prefix += inc;
            let nodes = c.nodes();
            prop_assert_eq!(nodes.len() as u32, t.count_ones());
            prop_assert_eq!(c.noise_terms() as u32, t.count_ones());
            prop_assert!(nodes.len() <= c.height() as usize);
            prop_assert_eq!(nodes[0].lo, 1);
            prop_assert_eq!(nodes.last().unwrap().hi, t);
            for pair in nodes.windows(2) {
                prop_assert_eq!(pair[0].hi + 1, pair[1].lo);
                prop_assert!(pair[0].width() > pair[1].width());
            }
            for n in nodes {
                prop_assert!(n.width().is_power_of_two());
            }
            prop_assert_eq!(c.exact_sum(), prefix);
            let noise: f64 = nodes.iter().map(|n| n.noise).sum();
            prop_assert!((c.query() - prefix as f64 - noise).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_off_counter_is_exact(incs in prop::collection::vec(-1000i64..=1000, 1..1024)) {
        let mut c = GaussBmCounter::with_scale(incs.len() as u64, NoiseScale::ZERO).unwrap();
        let mut g = GaussianSampler::new(0);
        let mut prefix = 0;
        for (i, &inc) in incs.iter().enumerate() {
            c.update(inc, i as u64 + 1, &mut g).unwrap();
            prefix += inc;
            prop_assert_eq!(c.query(), prefix as f64);
        }
    }

    #[test]
    fn cms_never_underestimates(
        keys in prop::collection::vec(0u64..64, 1..3000),
        w in 1usize..40,
        d in 1usize..6,
        seed: u64,
    ) {
        let mut sk = PlainSketch::new(SketchKind::Cms, d, w, seed).unwrap();
        let mut oracle = ExactOracle::new();
        for &k in &keys {
            sk.update(k, 1);
            oracle.observe(k);
        }
        for k in 0..64 {
            prop_assert!(sk.query(k) >= oracle.frequency(k) as i64);
        }
        for i in 0..d {
            prop_assert!(sk.row(i).iter().all(|&c| c >= 0));
            prop_assert_eq!(sk.row(i).iter().sum::<i64>(), keys.len() as i64);
        }
    }

    #[test]
    fn cs_rows_conserve_signed_mass(
        keys in prop::collection::vec(any::<u64>(), 1..2000),
        w in 1usize..40,
        seed: u64,
    ) {
        let mut sk = PlainSketch::new(SketchKind::Cs, 3, w, seed).unwrap();
        for &k in &keys {
            sk.update(k, 1);
        }
        for i in 0..3 {
            let row = sk.hashes().row(i);
            let signed: i64 = keys.iter().map(|&k| row.sign(k)).sum();
            prop_assert_eq!(sk.row(i).iter().sum::<i64>(), signed);
        }
    }

    #[test]
    fn punctual_noise_off_equals_plain(
        kind in kind(),
        keys in prop::collection::vec(0u64..200, 1..400),
        w in 1usize..24,
        d in 1usize..5,
        seed: u64,
    ) {
        let hashes = HashFamily::new(d, w, seed);
        let mut plain = PlainSketch::with_hashes(kind, hashes.clone());
        let mut p = PunctualSketch::with_hashes(kind, hashes, keys.len() as u64, NoiseScale::ZERO, seed).unwrap();
        for &k in &keys {
            plain.update(k, 1);
            p.update(k).unwrap();
            for q in 0..200 {
                prop_assert_eq!(p.query(q), plain.query(q) as f64);
            }
        }
    }

    #[test]
    fn lazy_cms_delay_band(
        keys in prop::collection::vec(0u64..100, 1..1500),
        w in 1usize..48,
        seed: u64,
    ) {
        let hashes = HashFamily::new(3, w, seed);
        let mut plain = PlainSketch::with_hashes(SketchKind::Cms, hashes.clone());
        let mut lazy = LazySketch::with_hashes(SketchKind::Cms, hashes, keys.len() as u64, NoiseScale::ZERO, seed).unwrap();
        for (i, &k) in keys.iter().enumerate() {
            plain.update(k, 1);
            lazy.update(k).unwrap();
            prop_assert_eq!(lazy.pos(), (i + 1) % w);
            for q in 0..100 {
                let diff = lazy.query(q) - plain.query(q) as f64;
                prop_assert!((-(w as f64)..=0.0).contains(&diff), "diff {}", diff);
            }
        }
        for i in 0..3 {
            for j in 0..w {
                let released = lazy.counter(i, j).exact_sum();
                prop_assert_eq!(released + lazy.unreleased_count(i, j), plain.cell(i, j));
            }
        }
    }

    #[test]
    fn cs_sign_symmetry(
        keys in prop::collection::vec(0u64..300, 1..500),
        w in 1usize..32,
        d in 1usize..6,
        seed: u64,
    ) {
        let hashes = HashFamily::new(d, w, seed);
        let mut flipped = hashes.clone();
        flipped.negate_signs();
        let mut a = PlainSketch::with_hashes(SketchKind::Cs, hashes.clone());
        let mut b = PlainSketch::with_hashes(SketchKind::Cs, flipped.clone());
        let n = keys.len() as u64;
        let mut pa = PunctualSketch::with_hashes(SketchKind::Cs, hashes, n, NoiseScale::ZERO, 1).unwrap();
        let mut pb = PunctualSketch::with_hashes(SketchKind::Cs, flipped, n, NoiseScale::ZERO, 1).unwrap();
        for &k in &keys {
            a.update(k, 1);
            b.update(k, 1);
            pa.update(k).unwrap();
            pb.update(k).unwrap();
        }
        for q in 0..300 {
            prop_assert_eq!(a.query(q), b.query(q));
            prop_assert_eq!(pa.query(q), pb.query(q));
        }
    }

    #[test]
    fn oracle_moments(keys in prop::collection::vec(0u64..50, 1..2000)) {
        let mut o = ExactOracle::new();
        for &k in &keys {
            let f = o.frequency(k) as u128;
            let f2 = o.f2();
            o.observe(k);
            prop_assert_eq!(o.f2(), f2 + 2 * f + 1);
            prop_assert_eq!(o.f1(), o.t());
        }
    }

    #[test]
    fn hash_family_is_deterministic(seed: u64, w in 1usize..5000, key: u64) {
        let a = HashFamily::new(4, w, seed);
        let b = HashFamily::new(4, w, seed);
        for i in 0..4 {
            prop_assert_eq!(a.row(i).bucket(key), b.row(i).bucket(key));
            prop_assert!(a.row(i).bucket(key) < w);
            prop_assert_eq!(a.row(i).sign(key), b.row(i).sign(key));
        }
    }
}

#[test]
fn update_cost_laws() {
    let (d, w) = (3, 33);
    let p = codp_sketch::PrivacyParams::new(1.0, 0.01).unwrap();
    let mut punct = PunctualSketch::new(SketchKind::Cms, d, w, 1000, p, 5).unwrap();
    let mut lazy = LazySketch::new(SketchKind::Cs, d, w, 1000, p, 5).unwrap();
    for t in 1..=1000u64 {
        punct.update(t * 7).unwrap();
        lazy.update(t * 7).unwrap();
        assert_eq!(punct.stats().counter_updates, t * 99);
        assert_eq!(lazy.stats().counter_updates, t * d as u64);
        assert_eq!(lazy.stats().buffer_ops, t * 2 * d as u64);
    }
}
