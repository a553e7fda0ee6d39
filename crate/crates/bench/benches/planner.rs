use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use eeqt_core::planner::{advantageous_set, confidence, scan_plan};
use eeqt_core::TransmissionScenario;

fn scenario() -> TransmissionScenario {
    TransmissionScenario::new(0.8, 0.9, 0.05, 0.6).unwrap()
}

fn confidence_by_m(c: &mut Criterion) {
    let s = scenario();
    let p = s.success_probability();
    let mut group = c.benchmark_group("confidence");
    for m in [12u64, 62, 500] {
        let set = advantageous_set(m, &s).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| confidence(black_box(m), p, &set).unwrap())
        });
    }
    group.finish();
}

fn scan(c: &mut Criterion) {
    let s = scenario();
    c.bench_function("scan_plan/100", |b| b.iter(|| scan_plan(black_box(&s), 100).unwrap()));
}

criterion_group!(benches, confidence_by_m, scan);
criterion_main!(benches);
