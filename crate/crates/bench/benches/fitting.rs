use criterion::{criterion_group, criterion_main, Criterion};
use nvforge_core::pl::{fit_lines, synthesize_spectrum, EmissionLine, GridSpec};

fn bench_fit(c: &mut Criterion) {
    let grid = GridSpec { start_nm: 600.0, stop_nm: 790.0, step_nm: 0.05 };
    let truth = vec![
        EmissionLine::lorentzian(638.0, 1.1, 900.0),
        EmissionLine::lorentzian(742.0, 2.2, 400.0),
    ];
    let spectrum = synthesize_spectrum(&truth, None, &grid).unwrap();
    let initial = vec![
        EmissionLine::lorentzian(637.0, 1.5, 500.0),
        EmissionLine::lorentzian(743.5, 1.5, 600.0),
    ];
    c.bench_function("fit_two_lorentzians_3800pts", |b| {
        b.iter(|| fit_lines(&spectrum, &initial).unwrap())
    });

    c.bench_function("synthesize_two_lines_3800pts", |b| {
        b.iter(|| synthesize_spectrum(&truth, None, &grid).unwrap())
    });
}

criterion_group!(benches, bench_fit);
criterion_main!(benches);
