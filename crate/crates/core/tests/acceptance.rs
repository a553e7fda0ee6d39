//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use common::{brute_force_confidence, probs_at, rng, run, start_on_zero};
use eeqt_core::detectors::{
    binary_trajectory, filter_classical_output, two_state_trajectory, BinaryDetectorSpec,
    FilterSpec, NStateDetectorSpec, SignalDecomposition, TwoStateDetectorSpec,
};
use eeqt_core::lindblad::{check_cp_conditions_with, CpCheckOptions};
use eeqt_core::linalg::{self, C64};
use eeqt_core::planner::{
    advantageous_set, detect_nonmonotonicity, di_confirmation_count, interval_expectations,
    minimal_m, plan_for, scan_plan, AdvantageousSet,
};
use eeqt_core::shapes::{enumerate_admissible_patterns, ShapeTag, ShapeTag3x3};
use eeqt_core::{quantum_marginal, HybridState, Projector, Trajectory, TransmissionScenario};
use rand::Rng;

#[derive(Default)]
struct Criterion {
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn within(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check(format!("{what} = {got:.6} (want {want} ± {tol:e})"), (got - want).abs() <= tol);
    }

    fn runtime(&mut self, started: Instant, limit: Duration) {
        let took = started.elapsed();
        self.check(format!("runtime {took:.2?} < {limit:?}"), took < limit);
    }
}

/// Trajectories from criteria 1 to 3, audited by criterion 8.
#[derive(Default)]
struct Audit {
    trajectories: Vec<(String, Trajectory)>,
}

fn aligned_binary(k1: f64, k2: f64) -> (BinaryDetectorSpec, HybridState) {
    let spec = BinaryDetectorSpec::new(k1, k2, Projector::basis(2, 0).unwrap()).unwrap();
    (spec, start_on_zero(linalg::matrix_unit(2, 0, 0), 2))
}

fn criterion_1(c: &mut Criterion, audit: &mut Audit) {
    let started = Instant::now();
    let (spec, rho0) = aligned_binary(1.0, 0.0);
    let traj = run(&rho0, &spec.couplings(), 0.01, 10.0, 10);
    let p1 = traj.last().probabilities()[1];
    c.check(format!("k1=1, k2=0: p1(10) = {p1:.6} >= 0.999"), p1 >= 0.999);
    audit.trajectories.push(("binary k1=1 k2=0".into(), traj));

    let (spec, rho0) = aligned_binary(1.0, 1.0);
    let traj = run(&rho0, &spec.couplings(), 0.01, 10.0, 10);
    c.within("k1=k2=1: p1(10)", traj.last().probabilities()[1], 0.5, 1e-4);
    audit.trajectories.push(("binary k1=k2=1".into(), traj));
    c.runtime(started, Duration::from_secs(1));
}

fn criterion_2(c: &mut Criterion, audit: &mut Audit) {
    let started = Instant::now();
    let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
    let mut r = rng(2);
    let mut worst_binary = 0.0f64;
    let mut worst_two = 0.0f64;
    for draw in 0..50 {
        let d = 2;
        let e = Projector::new(linalg::random_pure(d, &mut r)).unwrap();
        let spec = BinaryDetectorSpec::new(r.gen_range(0.1..1.5), r.gen_range(0.0..1.5), e).unwrap();
        let w = linalg::random_density(d, &mut r);
        let sig = SignalDecomposition::new(spec.e.weight(&w), 1.0 - spec.e.weight(&w)).unwrap();
        let traj = run(&start_on_zero(w, 2), &spec.couplings(), 0.01, 5.0, 50);
        for &t in &times {
            let (p0, p1) = binary_trajectory(&spec, &sig, t).unwrap();
            let num = probs_at(&traj, t);
            worst_binary = worst_binary.max((num[0] - p0).abs()).max((num[1] - p1).abs());
        }
        audit.trajectories.push((format!("binary draw {draw}"), traj));

        let ps = linalg::random_orthogonal_projectors(3, 2, &mut r);
        let mut k = || r.gen_range(0.05..1.5);
        let spec = TwoStateDetectorSpec::new(
            k(),
            k(),
            k(),
            k(),
            Projector::new(ps[0].clone()).unwrap(),
            Projector::new(ps[1].clone()).unwrap(),
        )
        .unwrap();
        let w = linalg::random_density(3, &mut r);
        let (a0, b0) = (spec.e2.weight(&w), spec.e3.weight(&w));
        let traj = run(&start_on_zero(w, 3), &spec.couplings(), 0.01, 5.0, 50);
        for &t in &times {
            let closed = two_state_trajectory(&spec, a0, b0, t).unwrap();
            let num = probs_at(&traj, t);
            for j in 0..3 {
                worst_two = worst_two.max((num[j] - closed[j]).abs());
            }
        }
        audit.trajectories.push((format!("two-state draw {draw}"), traj));
    }
    c.check(format!("binary: max |closed - numeric| = {worst_binary:.2e} <= 1e-6"), worst_binary <= 1e-6);
    c.check(format!("two-state: max |closed - numeric| = {worst_two:.2e} <= 1e-6"), worst_two <= 1e-6);
    c.runtime(started, Duration::from_secs(10));
}

fn criterion_3(c: &mut Criterion, audit: &mut Audit) {
    let mut curves = Vec::new();
    for n in [1usize, 2, 5] {
        let spec = NStateDetectorSpec::new(1.0, (0..n).map(|i| Projector::basis(n, i).unwrap()).collect()).unwrap();
        // Signal aligned with the last channel.
        let rho0 = start_on_zero(linalg::matrix_unit(n, n - 1, n - 1), n + 1);
        let traj = run(&rho0, &spec.couplings(), 0.01, 10.0, 10);
        let curve: Vec<f64> = traj.points.iter().map(|p| p.probabilities()[n]).collect();
        let last = *curve.last().unwrap();
        c.check(format!("n={n}: p_j(10) = {last:.6} >= 0.9999"), last >= 0.9999);
        curves.push(curve);
        audit.trajectories.push((format!("n-state n={n}"), traj));
    }
    let dev = curves[1..]
        .iter()
        .flat_map(|cv| cv.iter().zip(&curves[0]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    c.check(format!("curves for n in {{1,2,5}} differ by {dev:.2e} <= 1e-10"), dev <= 1e-10);
}

fn criterion_4(c: &mut Criterion) {
    let two = enumerate_admissible_patterns(2).unwrap();
    c.check(format!("two-event catalogue has {} shapes (want 6)", two.len()), two.len() == 6);
    let three = enumerate_admissible_patterns(3).unwrap();
    c.check(format!("three-event catalogue has {} shapes (want 11)", three.len()), three.len() == 11);
    let dups: Vec<_> = three.iter().filter(|e| e.duplicate_of.is_some()).collect();
    c.check(
        "W11 flagged as duplicate of W10",
        dups.len() == 1
            && dups[0].tag == ShapeTag::ThreeEvent(ShapeTag3x3::W11)
            && dups[0].duplicate_of == Some(ShapeTag::ThreeEvent(ShapeTag3x3::W10)),
    );
    let mut r = rng(4);
    let opts = CpCheckOptions { random_probes: 100, seed: 4, tolerance: 1e-10 };
    let mut failed = Vec::new();
    for entry in two.iter().chain(&three) {
        let v = entry.pattern.instantiate(4, r.gen_range(0.3..1.7), &mut r).unwrap();
        if !check_cp_conditions_with(&[v], &[], &opts).passed() {
            failed.push(entry.tag.name());
        }
    }
    c.check(format!("all 17 instantiated shapes pass CP (failures: {failed:?})"), failed.is_empty());
}

fn criterion_5(c: &mut Criterion) {
    let started = Instant::now();
    let s = TransmissionScenario::with_margin(0.8, 0.9, 0.05, 0.045, 0.6).unwrap();
    let m = minimal_m(&s).unwrap();
    c.check(format!("minimal_m = {m} (want 12)"), m == 12);
    let (lo, hi) = interval_expectations(12, &s).unwrap();
    c.check(
        format!("interval at m=12 = ({lo}, {hi}) (want (8.1, 9.18))"),
        (lo - 8.1).abs() < 1e-12 && (hi - 9.18).abs() < 1e-12,
    );
    let set = advantageous_set(12, &s).unwrap();
    c.check(format!("advantageous set at m=12 = {set} (want {{9}})"), set == AdvantageousSet::new(9, 9));
    c.within("P(12)", plan_for(12, &s).unwrap().confidence, 0.25, 0.005);
    c.within("P(15)", plan_for(15, &s).unwrap().confidence, 0.22, 0.005);

    let scan = scan_plan(&s, 200).unwrap();
    let first = scan.first_passing.map(|r| r.m);
    c.check(format!("first m with confidence >= 0.6 = {first:?} (want 62)"), first == Some(62));
    let r62 = plan_for(62, &s).unwrap();
    c.check(format!("set at m=62 = {} (want {{42..47}})", r62.advantageous), r62.advantageous == AdvantageousSet::new(42, 47));
    c.within("P(62)", r62.confidence, 0.603, 0.005);

    let half = TransmissionScenario::with_margin(0.8, 0.45, 0.05, 0.045, 0.6).unwrap();
    let r66 = plan_for(66, &half).unwrap();
    c.check(format!("eta=0.45 set at m=66 = {} (want {{21..26}})", r66.advantageous), r66.advantageous == AdvantageousSet::new(21, 26));
    c.within("eta=0.45 P(66)", r66.confidence, 0.56, 0.01);
    c.runtime(started, Duration::from_secs(1));
}

fn criterion_6(c: &mut Criterion) {
    let s = TransmissionScenario::with_margin(0.8, 0.9, 0.05, 0.045, 0.6).unwrap();
    let d = detect_nonmonotonicity(&s, 12..=15).unwrap();
    let hit = d.iter().find(|x| x.m == 12 && x.later == 15);
    c.check(
        format!("descent P(12) -> P(15) reported ({})", hit.map_or("none".into(), |x| format!("{:.4} -> {:.4}", x.from, x.to))),
        hit.is_some(),
    );
}

fn criterion_7(c: &mut Criterion) {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let accuracy = r.gen_range(0.01..0.2);
        let rho1 = r.gen_range(accuracy..1.0 - accuracy);
        let s = TransmissionScenario::with_margin(rho1, r.gen_range(0.1..1.0), accuracy, r.gen_range(0.2..1.0) * accuracy, 0.5).unwrap();
        for m in 1..=16u64 {
            let row = plan_for(m, &s).unwrap();
            let brute = if row.advantageous.is_empty() {
                0.0
            } else {
                brute_force_confidence(m as u32, s.success_probability(), row.advantageous.lo as u32, row.advantageous.hi as u32)
            };
            worst = worst.max((row.confidence - brute).abs());
        }
    }
    c.check(format!("max |binomial - enumeration| over 20 scenarios, m <= 16 = {worst:.2e} <= 1e-10"), worst <= 1e-10);
}

fn criterion_8(c: &mut Criterion, audit: &Audit) {
    let drift = audit.trajectories.iter().map(|(_, t)| t.max_trace_drift()).fold(0.0, f64::max);
    let min_eig = audit.trajectories.iter().map(|(_, t)| t.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    c.check(format!("{} trajectories: max trace drift {drift:.2e} <= 1e-8", audit.trajectories.len()), drift <= 1e-8);
    c.check(format!("min block eigenvalue {min_eig:.2e} >= -1e-7"), min_eig >= -1e-7);
}

fn criterion_9(c: &mut Criterion) {
    let k = 1.0;
    let spec = FilterSpec::new(k, Projector::basis(3, 0).unwrap()).unwrap();

    let aligned = start_on_zero(linalg::matrix_unit(3, 0, 0), 2);
    let traj = run(&aligned, &spec.couplings(), 0.005, 5.0, 100);
    let dev = linalg::max_abs(&(quantum_marginal(&traj.last().state).matrix() - linalg::matrix_unit(3, 0, 0)));
    c.check(format!("case (a): quantum marginal moved by {dev:.2e} <= 1e-8 at t=5"), dev <= 1e-8);
    let mut worst_classical = 0.0f64;
    for p in &traj.points {
        let (p0, p1) = filter_classical_output(1.0, 0.0, 1.0, k, p.t).unwrap();
        let num = p.probabilities();
        worst_classical = worst_classical.max((num[0] - p0).abs()).max((num[1] - p1).abs());
    }

    let mut w = linalg::zeros(3);
    for (i, x) in [0.5, 0.3, 0.2].into_iter().enumerate() {
        w[(i, i)] = C64::new(x, 0.0);
    }
    for (i, j, z) in [(0, 1, C64::new(0.15, 0.1)), (0, 2, C64::new(-0.1, 0.0)), (1, 2, C64::new(0.05, 0.05))] {
        w[(i, j)] = z;
        w[(j, i)] = z.conj();
    }
    let q1 = w[(0, 0)].re;
    let traj = run(&start_on_zero(w.clone(), 2), &spec.couplings(), 0.005, 5.0, 100);
    let mut worst_decay = 0.0f64;
    for p in &traj.points {
        let q = quantum_marginal(&p.state);
        let decay = (-k * p.t / 2.0).exp();
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0)] {
            worst_decay = worst_decay.max((q.matrix()[(i, j)] - w[(i, j)] * decay).norm());
        }
        let (p0, p1) = filter_classical_output(1.0, 0.0, q1, k, p.t).unwrap();
        let num = p.probabilities();
        worst_classical = worst_classical.max((num[0] - p0).abs()).max((num[1] - p1).abs());
    }
    c.check(format!("case (c): coherences touching e1 off e^(-kt/2) by {worst_decay:.2e} <= 1e-6"), worst_decay <= 1e-6);
    c.check(format!("classical output vs closed form: {worst_classical:.2e} <= 1e-8"), worst_classical <= 1e-8);
}

fn criterion_10(c: &mut Criterion) {
    let miss4 = 0.55f64.powi(4);
    c.check(format!("0.55^4 = {miss4:.4} <= 0.1"), miss4 <= 0.1);
    c.check(format!("0.55^3 = {:.4} > 0.1", 0.55f64.powi(3)), 0.55f64.powi(3) > 0.1);
    let n = di_confirmation_count(0.45, 0.9).unwrap();
    c.check(format!("di_confirmation_count(0.45, 0.9) = {n} (want 4)"), n == 4);
}

fn main() {
    let mut audit = Audit::default();
    let mut results: Vec<(usize, &str, Criterion)> = Vec::new();
    let mut add = |id: usize, name: &'static str, f: &mut dyn FnMut(&mut Criterion)| {
        let mut c = Criterion::default();
        f(&mut c);
        results.push((id, name, c));
    };
    add(1, "asymptotic binary efficiency", &mut |c| criterion_1(c, &mut audit));
    add(2, "closed forms vs integrator", &mut |c| criterion_2(c, &mut audit));
    add(3, "n-state independence", &mut |c| criterion_3(c, &mut audit));
    add(4, "shape catalogues", &mut criterion_4);
    add(5, "planner reproduction", &mut criterion_5);
    add(6, "non-monotonicity detection", &mut criterion_6);
    add(7, "brute-force binomial oracle", &mut criterion_7);
    add(8, "conservation", &mut |c| criterion_8(c, &audit));
    add(9, "filter behaviour", &mut criterion_9);
    add(10, "confirmation count", &mut criterion_10);

    let mut failed = 0;
    for (id, name, c) in &results {
        let ok = c.checks.iter().all(|(_, ok)| *ok);
        failed += !ok as usize;
        println!("{} criterion {id}: {name}", if ok { "PASS" } else { "FAIL" });
        for (what, ok) in &c.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAIL" });
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
