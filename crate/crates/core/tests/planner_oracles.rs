mod common;

use common::{brute_force_confidence, rng};
use eeqt_core::planner::{
    advantageous_set, confidence, descents, di_confirmation_count, interval_expectations,
    minimal_m, plan_for, AdvantageousSet,
};
use eeqt_core::TransmissionScenario;
use proptest::prelude::*;
use rand::Rng;

fn random_scenario(r: &mut impl Rng) -> TransmissionScenario {
    let accuracy = r.gen_range(0.01..0.2);
    let rho1 = r.gen_range(accuracy..1.0 - accuracy);
    let eta = r.gen_range(0.1..1.0);
    let margin = r.gen_range(0.2..1.0) * accuracy;
    TransmissionScenario::with_margin(rho1, eta, accuracy, margin, 0.5).unwrap()
}

/// Binomial coefficient by Pascal's triangle.
fn pascal(m: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..m {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

#[test]
fn confidence_equals_enumeration_up_to_m_20() {
    let mut r = rng(41);
    for _ in 0..10 {
        let s = random_scenario(&mut r);
        for m in 1..=20u64 {
            let row = plan_for(m, &s).unwrap();
            let brute = if row.advantageous.is_empty() {
                0.0
            } else {
                brute_force_confidence(m as u32, s.success_probability(), row.advantageous.lo as u32, row.advantageous.hi as u32)
            };
            assert!((row.confidence - brute).abs() <= 1e-10, "m={m} {} vs {brute}", row.confidence);
        }
    }
}

#[test]
fn log_domain_agrees_with_direct_sum_up_to_m_100() {
    let mut r = rng(43);
    for _ in 0..20 {
        let p: f64 = r.gen_range(0.01..0.99);
        for m in 1..=100usize {
            let c = pascal(m);
            let lo = r.gen_range(0..=m);
            let hi = r.gen_range(lo..=m);
            let direct: f64 = (lo..=hi).map(|i| c[i] * p.powi(i as i32) * (1.0 - p).powi((m - i) as i32)).sum();
            let got = confidence(m as u64, p, &AdvantageousSet::new(lo as u64, hi as u64)).unwrap();
            assert!((got - direct).abs() <= 1e-10, "m={m} p={p} [{lo},{hi}]");
            assert!((0.0..=1.0).contains(&got));
        }
    }
}

#[test]
fn minimal_m_is_exact() {
    let mut r = rng(47);
    for _ in 0..500 {
        let s = random_scenario(&mut r);
        let m = minimal_m(&s).unwrap();
        let (lo, hi) = interval_expectations(m, &s).unwrap();
        assert!(hi - lo >= 1.0);
        if m > 1 {
            let (lo, hi) = interval_expectations(m - 1, &s).unwrap();
            assert!(hi - lo < 1.0);
        }
    }
}

#[test]
fn confirmation_count_is_literal_argmin() {
    let mut r = rng(53);
    for _ in 0..1000 {
        let p: f64 = r.gen_range(0.001..0.999);
        let c: f64 = r.gen_range(0.01..0.999);
        let scan = (1u64..).find(|&n| (1.0 - p).powi(n as i32) <= 1.0 - c).unwrap();
        assert_eq!(di_confirmation_count(p, c).unwrap(), scan, "p={p} c={c}");
    }
}

#[test]
fn descents_match_independent_recomputation() {
    let mut r = rng(59);
    for _ in 0..20 {
        let s = random_scenario(&mut r);
        let start = minimal_m(&s).unwrap();
        let rows: Vec<_> = (start..start + 15).map(|m| plan_for(m, &s).unwrap()).collect();
        let found = descents(&rows);
        let mut expected = Vec::new();
        for a in 0..rows.len() {
            for b in a + 1..rows.len() {
                let set_a = advantageous_set(rows[a].m, &s).unwrap();
                let set_b = advantageous_set(rows[b].m, &s).unwrap();
                let ca = brute_or_zero(rows[a].m, s.success_probability(), set_a);
                let cb = brute_or_zero(rows[b].m, s.success_probability(), set_b);
                if cb < ca - 1e-12 {
                    expected.push((rows[a].m, rows[b].m));
                }
            }
        }
        let got: Vec<_> = found.iter().map(|d| (d.m, d.later)).collect();
        assert_eq!(got, expected);
    }
}

fn brute_or_zero(m: u64, p: f64, set: AdvantageousSet) -> f64 {
    let c = pascal(m as usize);
    set.iter().map(|i| c[i as usize] * p.powi(i as i32) * (1.0 - p).powi((m - i) as i32)).sum()
}

#[test]
fn full_sets_never_descend() {
    let rows: Vec<_> = (1..40u64)
        .map(|m| {
            let c = confidence(m, 0.63, &AdvantageousSet::new(0, m)).unwrap();
            eeqt_core::PlanResult { m, i_minus: 0.0, i_plus: m as f64, advantageous: AdvantageousSet::new(0, m), confidence: c }
        })
        .collect();
    assert!(descents(&rows).iter().all(|d| d.from - d.to < 1e-12));
}

proptest! {
    #[test]
    fn enlarging_the_set_never_lowers_confidence(
        m in 1u64..150,
        p in 0.0f64..=1.0,
        a in 0u64..150,
        b in 0u64..150,
        grow_lo in 0u64..10,
        grow_hi in 0u64..10,
    ) {
        let (lo, hi) = (a.min(b).min(m), a.max(b).min(m));
        let small = confidence(m, p, &AdvantageousSet::new(lo, hi)).unwrap();
        let big = confidence(m, p, &AdvantageousSet::new(lo.saturating_sub(grow_lo), (hi + grow_hi).min(m))).unwrap();
        prop_assert!(big >= small - 1e-12);
        prop_assert!((0.0..=1.0).contains(&small));
    }
}
