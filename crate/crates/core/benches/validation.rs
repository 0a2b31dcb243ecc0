use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use atlm::data::Column;
use atlm::rng::SplitMix64;
use atlm::validation::{self, ValidationPlan};
use atlm::{Atlm, ColumnSchema, Dataset, Execution};

/// Log-linear effort data with `p` numeric features and one three-level factor.
fn synthetic(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut schema: Vec<ColumnSchema> = (0..p).map(|j| ColumnSchema::numeric(format!("x{j}"))).collect();
    schema.push(ColumnSchema::categorical("mode"));
    schema.push(ColumnSchema::response("effort"));
    let mut features = vec![Vec::with_capacity(n); p];
    let mut mode = Vec::with_capacity(n);
    let mut effort = Vec::with_capacity(n);
    for _ in 0..n {
        let mut log_y = 1.0;
        for col in features.iter_mut() {
            let x = (3.0 * unit()).exp();
            log_y += 0.2 * x.ln();
            col.push(x);
        }
        let level = (unit() * 3.0) as usize;
        log_y += [0.0, 0.3, 0.6][level] + 0.2 * (unit() - 0.5);
        mode.push(["a", "b", "c"][level]);
        effort.push(log_y.exp());
    }
    let mut columns: Vec<Column> = features.into_iter().map(Column::from).collect();
    columns.push(Column::from(mode));
    columns.push(Column::from(effort));
    Dataset::new("bench", schema, columns).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn holdout(c: &mut Criterion) {
    let ds = synthetic(200, 16, 1);
    let plan = ValidationPlan::holdout(10, 100, 1);
    let model = Atlm::default();
    let mut group = c.benchmark_group("holdout_10x100");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| validation::run_validation(&ds, &plan, &model, exec).unwrap())
        });
    }
    group.finish();
}

fn loocv(c: &mut Criterion) {
    let ds = synthetic(120, 16, 2);
    let plan = ValidationPlan::loocv();
    let model = Atlm::default();
    let mut group = c.benchmark_group("loocv_120");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| validation::run_validation(&ds, &plan, &model, exec).unwrap())
        });
    }
    group.finish();
}

fn repeated_cv(c: &mut Criterion) {
    let ds = synthetic(63, 16, 3);
    let model = Atlm::default();
    let mut group = c.benchmark_group("tenfold_x30");
    group.sample_size(20);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| validation::repeat_cv_experiment(&ds, 10, 30, 1, &model, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, holdout, loocv, repeated_cv);
criterion_main!(benches);
