//! Samplers and the exploration chain checked against exhaustive
//! enumeration of small instances and hand-derived transition laws.

use std::collections::BTreeMap;

use pairlab_core::degree::DegreeSequence;
use pairlab_core::diagnostics::{expected_next_martingale, martingale_value};
use pairlab_core::exploration::{self, ChainSnapshot};
use pairlab_core::pairing::{self, PointSpace, DEFAULT_ENUMERATION_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper 1e-3 quantiles of the chi-squared law, by degrees of freedom
/// (scipy.stats.chi2.ppf(0.999, df)).
fn chi2_critical(df: usize) -> f64 {
    match df {
        1 => 10.827566170662733,
        2 => 13.815510557964274,
        14 => 36.12327368039813,
        104 => 154.31407954898623,
        _ => panic!("no frozen critical value for df={df}"),
    }
}

fn space(d: &[u32]) -> PointSpace {
    PointSpace::new(&DegreeSequence::new(d.to_vec()).unwrap())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn sampler_is_uniform_over_enumeration() {
    let draws = 100_000u64;
    for (seed, d) in [&[2u32, 2][..], &[1, 1, 1, 1], &[2, 2, 2], &[1, 1, 2, 2, 2]].iter().enumerate() {
        let s = space(d);
        let k = pairing::enumerate_pairings(&s, DEFAULT_ENUMERATION_CAP).unwrap().count();
        let mut hits = vec![0u64; k];
        let mut r = rng(seed as u64);
        for _ in 0..draws {
            hits[pairing::sample_pairing(&s, &mut r).rank() as usize] += 1;
        }
        let expected = draws as f64 / k as f64;
        let stat: f64 = hits.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
        assert!(stat < chi2_critical(k - 1), "d={d:?}: chi2={stat}");
    }
}

#[test]
fn exact_counts_for_two_doubles() {
    let s = space(&[2, 2]);
    let all: Vec<_> = pairing::enumerate_pairings(&s, 6).unwrap().collect();
    assert_eq!(all.len(), 3);
    let x2 = all.iter().filter(|p| pairing::count_loops(p) == 2).count();
    let y1 = all.iter().filter(|p| pairing::count_parallel_pairs(p) == 1).count();
    let simple = all.iter().filter(|p| pairing::project_components(p).simple).count();
    assert_eq!((x2, y1, simple), (1, 2, 0));
}

/// Component size of vertex 0 under every pairing of the instance.
fn exact_root_size_law(s: &PointSpace) -> BTreeMap<u32, f64> {
    let all: Vec<_> = pairing::enumerate_pairings(s, DEFAULT_ENUMERATION_CAP).unwrap().collect();
    let mut law = BTreeMap::new();
    for p in &all {
        let mut uf = pairlab_core::union_find::UnionFind::new(s.n());
        for (u, v) in p.edges() {
            uf.union(u, v);
        }
        let root = uf.find(0);
        let size = (0..s.n()).filter(|&v| uf.find(v) == root).count() as u32;
        *law.entry(size).or_insert(0.0) += 1.0 / all.len() as f64;
    }
    law
}

#[test]
fn single_root_exploration_matches_enumeration() {
    let trials = 60_000u64;
    for (seed, d) in [&[2u32, 2][..], &[3, 1, 2, 2], &[2, 2, 2]].iter().enumerate() {
        let s = space(d);
        let law = exact_root_size_law(&s);
        let mut r = rng(100 + seed as u64);
        let mut hits: BTreeMap<u32, u64> = BTreeMap::new();
        for _ in 0..trials {
            let tr = exploration::explore_component(&s, 0, &mut r, false).unwrap();
            *hits.entry(tr.component_size).or_default() += 1;
        }
        assert_eq!(hits.keys().collect::<Vec<_>>(), law.keys().collect::<Vec<_>>(), "d={d:?}");
        for (size, &p) in &law {
            let freq = hits[size] as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((freq - p).abs() <= 4.0 * sigma + 1e-12, "d={d:?} size={size}: {freq} vs {p}");
        }
    }
    // d=(2,2) from vertex 0: loop with probability 1/3
    let law = exact_root_size_law(&space(&[2, 2]));
    assert!((law[&1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn first_step_frequencies_match_transition_law() {
    // Root of degree 3 with I_1 = 1, I_2 = 2: 7 candidate partners.
    let s = space(&[3, 1, 2, 2]);
    let law = exploration::start_exploration(&s, 0).unwrap().snapshot().transition_law().unwrap();
    assert!(law.is_normalized());
    let expected = [(0u32, 2.0 / 7.0), (1, 1.0 / 7.0), (2, 4.0 / 7.0)];
    for &(j, p) in &expected[1..] {
        assert!((law.join_probability(j) - p).abs() < 1e-15);
    }
    assert!((law.active_probability() - expected[0].1).abs() < 1e-15);

    let trials = 100_000u64;
    let mut r = rng(9);
    let mut hits = [0u64; 3];
    for _ in 0..trials {
        let mut st = exploration::start_exploration(&s, 0).unwrap();
        hits[st.step(&mut r).unwrap().partner_degree as usize] += 1;
    }
    let stat: f64 = expected
        .iter()
        .map(|&(j, p)| {
            let e = p * trials as f64;
            (hits[j as usize] as f64 - e).powi(2) / e
        })
        .sum();
    assert!(stat < chi2_critical(2), "chi2={stat}, hits={hits:?}");
}

#[test]
fn spot_state_partner_classes_by_enumeration() {
    // A = 3, I_2 = 2: list the A - 1 + I = 6 candidate points explicitly.
    let candidates: Vec<&str> = ["active"; 2].into_iter().chain(["fresh2"; 4]).collect();
    let p_join = candidates.iter().filter(|&&c| c == "fresh2").count() as f64 / candidates.len() as f64;
    let snap = ChainSnapshot { t: 0, active: 3, inactive_counts: vec![0, 0, 2], two_m: 7 };
    let law = snap.transition_law().unwrap();
    assert_eq!(law.join_probability(2), p_join);
    assert!((p_join - 2.0 / 3.0).abs() < 1e-15);
}

/// Drift written out term by term.
fn drift_formula(s: &ChainSnapshot) -> f64 {
    let a = s.active as f64;
    let i: f64 = s.inactive_points() as f64;
    let denom = a + i - 1.0;
    let mut e = a + (-2.0) * (a - 1.0) / denom;
    for (j, &c) in s.inactive_counts.iter().enumerate() {
        let j = j as f64;
        e += j * c as f64 / denom * (j - 2.0);
    }
    e
}

#[test]
fn drift_and_martingale_on_reachable_states() {
    let seq = pairlab_core::degree::build_subpower_sequence(20_000, 3.5, 1.0, 0.9).unwrap();
    let s = PointSpace::new(&seq);
    let mut r = rng(77);
    let mut checked = 0;
    for root in (0..seq.n()).step_by(97) {
        let mut snaps = Vec::new();
        exploration::explore_component_with(&s, root, &mut r, false, |st, _| snaps.push(st.snapshot())).unwrap();
        for snap in snaps.iter().filter(|x| x.active > 0) {
            let implemented = snap.expected_next_active().unwrap();
            let formula = drift_formula(snap);
            assert!((implemented - formula).abs() <= 1e-12 * formula.abs().max(1.0));
            for j in 1..=seq.max_degree() {
                if snap.inactive(j) == 0 {
                    continue;
                }
                let now = martingale_value(snap, j).unwrap();
                let next = expected_next_martingale(snap, j).unwrap();
                assert!(((next - now) / now).abs() <= 1e-12);
            }
            checked += 1;
        }
    }
    assert!(checked > 100);
}

/// Multiset of component sizes under every pairing.
fn exact_partition_support(s: &PointSpace) -> BTreeMap<Vec<u32>, usize> {
    let mut support = BTreeMap::new();
    for p in pairing::enumerate_pairings(s, DEFAULT_ENUMERATION_CAP).unwrap() {
        *support.entry(pairing::project_components(&p).component_sizes).or_default() += 1;
    }
    support
}

#[test]
fn decomposition_support_equals_enumeration() {
    for (seed, d) in [&[2u32, 2][..], &[1, 1, 1, 1], &[1, 2, 3, 2], &[2, 2, 2, 2, 2]].iter().enumerate() {
        let s = space(d);
        let exact = exact_partition_support(&s);
        let mut seen = BTreeMap::new();
        let mut r = rng(500 + seed as u64);
        for _ in 0..20_000 {
            let rep = exploration::largest_component_via_exploration(&s, &mut r).report();
            *seen.entry(rep.component_sizes).or_insert(0usize) += 1;
        }
        assert_eq!(seen.keys().collect::<Vec<_>>(), exact.keys().collect::<Vec<_>>(), "d={d:?}");
    }
    let exact = exact_partition_support(&space(&[2, 2]));
    assert_eq!(exact[&vec![2]], 2);
    assert_eq!(exact[&vec![1, 1]], 1);
}

#[test]
fn decomposition_pairing_is_uniform() {
    let s = space(&[1, 1, 2, 2, 2]);
    let k = pairing::pairing_count(4) as usize;
    let draws = 100_000u64;
    let mut hits = vec![0u64; k];
    let mut r = rng(4242);
    for _ in 0..draws {
        hits[exploration::largest_component_via_exploration(&s, &mut r).pairing.rank() as usize] += 1;
    }
    let e = draws as f64 / k as f64;
    let stat: f64 = hits.iter().map(|&h| (h as f64 - e).powi(2) / e).sum();
    assert!(stat < chi2_critical(k - 1), "chi2={stat}");
}
