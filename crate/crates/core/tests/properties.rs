use std::sync::OnceLock;

use ashvss::cover::{multilinear_form, to_covering_family, VectorFamily};
use ashvss::lattice::{
    lwe_invert, prim_fraction, sample_prim_secret, trapdoor_gen, LatticeError, LweParams, Mat, TrapdoorMatrix,
};
use ashvss::numt::{is_primitive_root, pow_mod};
use ashvss::setsys::{build_grolmusz_system, build_merged_system, merge_systems, GrolmuszParams, SetSystem};
use ashvss::tokens::{combine_tokens, membership_test, TokenEncoder, TokenPack};
use ashvss::Streams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn h() -> &'static SetSystem {
    static H: OnceLock<SetSystem> = OnceLock::new();
    H.get_or_init(|| build_merged_system(&GrolmuszParams::new(15, 3, 3, 2).unwrap()).unwrap())
}

fn family() -> &'static VectorFamily {
    static F: OnceLock<VectorFamily> = OnceLock::new();
    F.get_or_init(|| to_covering_family(h()))
}

fn encoder() -> &'static TokenEncoder {
    static E: OnceLock<TokenEncoder> = OnceLock::new();
    E.get_or_init(|| {
        let p = GrolmuszParams::new(15, 3, 3, 2).unwrap();
        TokenEncoder::new(h().clone(), &build_merged_system(&p.with_extra_prime(7).unwrap()).unwrap()).unwrap()
    })
}

fn trapdoor() -> &'static TrapdoorMatrix {
    static T: OnceLock<TrapdoorMatrix> = OnceLock::new();
    T.get_or_init(|| {
        let p = LweParams::desk();
        trapdoor_gen(&p, &Mat::identity(p.n), &mut ChaCha20Rng::seed_from_u64(1)).unwrap()
    })
}

fn packs_for(packs: &[TokenPack], mask: u32) -> Vec<&TokenPack> {
    packs.iter().filter(|p| mask >> (p.party - 1) & 1 == 1).collect()
}

fn brute_order(k: u64, p: u64) -> u64 {
    (1..p).find(|&e| pow_mod(k, e, p) == 1).unwrap()
}

#[test]
fn primitive_roots_match_brute_force() {
    for p in (3..=101u64).filter(|&p| (2..p).all(|d| d * d > p || p % d != 0)) {
        for k in 1..p {
            assert_eq!(is_primitive_root(k, p).unwrap(), brute_order(k, p) == p - 1, "k={k} p={p}");
        }
    }
}

#[test]
fn merged_size_classes_have_ratio_l() {
    for (m, n, l) in [(6, 2, 2), (15, 3, 2), (10, 2, 2)] {
        let Ok(params) = GrolmuszParams::new(m, n, 3, l) else {
            continue;
        };
        let g = build_grolmusz_system(&params).unwrap();
        let merged = merge_systems(&g, l).unwrap();
        let classes = merged.size_classes();
        assert_eq!(classes.len(), 2, "m={m} n={n}");
        assert_eq!(classes[1], l * classes[0]);
    }
}

#[test]
fn self_inner_products_vanish() {
    let f = family();
    for i in 0..f.len() {
        assert_eq!(f.inner_mod(i, i), 0);
    }
}

#[test]
fn pair_residues_match_bitsets() {
    let sets = h().sets();
    let mut brute = std::collections::BTreeSet::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let x = sets[i].and_count(&sets[j]);
            if x != sets[i].count() && x != sets[j].count() && !x.is_multiple_of(15) {
                brute.insert((x % 15) as u64);
            }
        }
    }
    assert_eq!(family().residue_set(ashvss::Execution::Parallel), brute);
    // Each copy block contributes a residue in {0, 1, 6, 10}; two blocks add.
    let base = [0u64, 1, 6, 10];
    assert!(brute.iter().all(|r| base.iter().any(|a| base.iter().any(|b| (a + b) % 15 == *r))), "{brute:?}");
}

#[test]
fn token_soundness_exhaustive_up_to_eight_parties() {
    let enc = encoder();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for parties in 1..=8usize {
        for size in 1..=parties.min(3) {
            let mut omega: Vec<usize> =
                rand::seq::index::sample(&mut rng, parties, size).into_iter().map(|i| i + 1).collect();
            omega.sort_unstable();
            let (inst, packs) = enc.encode(parties, &omega, 0, &mut rng).unwrap();
            let mut authorized_combined = None;
            for mask in 1u32..(1 << parties) {
                let c = combine_tokens(&packs_for(&packs, mask)).unwrap();
                let auth = omega.iter().all(|&p| mask >> (p - 1) & 1 == 1);
                assert_eq!(membership_test(&c, inst.m, inst.m_prime), auth, "ℓ={parties} Ω={omega:?} mask={mask:b}");
                if auth {
                    assert_eq!(*authorized_combined.get_or_insert_with(|| c.clone()), c);
                }
            }
            assert!(authorized_combined.is_some());
        }
    }
}

#[test]
fn verdicts_do_not_depend_on_the_permutation() {
    let enc = encoder();
    let omega = [2, 4];
    let verdicts = |seed: u64| {
        let (inst, packs) = enc.encode(5, &omega, 0, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let bytes: Vec<String> = packs.iter().map(|p| p.elements.to_hex()).collect();
        let v: Vec<bool> = (1u32..32)
            .map(|mask| membership_test(&combine_tokens(&packs_for(&packs, mask)).unwrap(), inst.m, inst.m_prime))
            .collect();
        (bytes, v)
    };
    let (b1, v1) = verdicts(3);
    let (b2, v2) = verdicts(4);
    assert_ne!(b1, b2);
    assert_eq!(v1, v2);
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(a: &mut [usize], b: &mut [usize]) -> f64 {
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut d) = (0, 0, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn token_size_multisets_hide_omega() {
    let enc = encoder();
    let trials = 1000;
    let sizes = |omega: &[usize], label: &str| -> Vec<Vec<usize>> {
        let s = Streams::new(5).child(label);
        (0..trials as u64)
            .map(|t| {
                let (_, packs) = enc.encode(5, omega, t, &mut s.indexed("trial", t)).unwrap();
                let mut v: Vec<usize> = packs.iter().map(|p| p.elements.count()).collect();
                v.sort_unstable();
                v
            })
            .collect()
    };
    let a = sizes(&[1, 2, 3], "a");
    let b = sizes(&[3, 4, 5], "b");
    // Critical value at α = 0.001 for two samples of 1000.
    let crit = 1.95 * (2.0 / trials as f64).sqrt();
    for rank in 0..5 {
        let mut xa: Vec<usize> = a.iter().map(|v| v[rank]).collect();
        let mut xb: Vec<usize> = b.iter().map(|v| v[rank]).collect();
        let d = ks(&mut xa, &mut xb);
        assert!(d < crit, "order statistic {rank}: D = {d:.4} ≥ {crit:.4}");
    }
    let mut ta: Vec<usize> = a.iter().map(|v| v.iter().sum()).collect();
    let mut tb: Vec<usize> = b.iter().map(|v| v.iter().sum()).collect();
    assert!(ks(&mut ta, &mut tb) < crit);
}

#[test]
fn prim_acceptance_rates() {
    for (p, n) in [(3u64, 3usize), (5, 4), (7, 3)] {
        let mut rng = ChaCha20Rng::seed_from_u64(p * 100 + n as u64);
        let samples = 100_000;
        let accepted = (0..samples)
            .filter(|_| match sample_prim_secret(n, p, 1, &mut rng) {
                Ok(_) => true,
                Err(LatticeError::RetryCap(1)) => false,
                Err(e) => panic!("{e}"),
            })
            .count();
        let rate = accepted as f64 / samples as f64;
        let want = prim_fraction(p, n as u32);
        let se = (want * (1.0 - want) / samples as f64).sqrt();
        assert!((rate - want).abs() <= 3.0 * se, "p={p} n={n}: {rate} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multilinear_form_is_symmetric(i in 0usize..783, j in 0usize..783, k in 0usize..783) {
        let v = &family().vectors;
        let base = multilinear_form(&[&v[i], &v[j], &v[k]]).unwrap();
        for perm in [[j, i, k], [k, j, i], [i, k, j], [j, k, i], [k, i, j]] {
            prop_assert_eq!(multilinear_form(&[&v[perm[0]], &v[perm[1]], &v[perm[2]]]).unwrap(), base);
        }
    }

    #[test]
    fn inversion_recovers_planted_pairs(seed in any::<u64>()) {
        let t = trapdoor();
        let p = &t.params;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bound = p.inversion_bound();
        let s = Mat::from_fn(p.n, p.n, |_, _| rng.gen_range(0..p.q as i64));
        let e = Mat::from_fn(p.w, p.n, |_, _| rng.gen_range(-bound..=bound));
        let inv = lwe_invert(t, &t.a.mul_mod(&s, p.q).add_mod(&e, p.q)).unwrap();
        prop_assert_eq!(inv.s, s);
        prop_assert_eq!(inv.e, e);
    }

    #[test]
    fn completeness_for_random_supersets(parties in 3usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let size = rng.gen_range(1..=3usize.min(parties));
        let omega: Vec<usize> = rand::seq::index::sample(&mut rng, parties, size).into_iter().map(|i| i + 1).collect();
        let (inst, packs) = encoder().encode(parties, &omega, 0, &mut rng).unwrap();
        let extra: u32 = rng.gen_range(0..1 << parties);
        let mask = omega.iter().fold(extra, |m, &p| m | 1 << (p - 1));
        prop_assert!(membership_test(&combine_tokens(&packs_for(&packs, mask)).unwrap(), inst.m, inst.m_prime));
    }
}
