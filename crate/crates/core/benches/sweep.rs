//! Sequential vs. rayon execution of the quadruple sweeps and scenario batches.

use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use shockstab::config::{Scenario, ScenarioConfig};
use shockstab::entropy::DboundConstants;
use shockstab::exec::Execution;
use shockstab::flux::FluxModel;
use shockstab::stability::run_batch;
use shockstab::verify::{verify_dbound, verify_identities, GridSpec};

fn modes() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { workers: 0 }),
    ]
}

fn dbound(c: &mut Criterion) {
    let spec = GridSpec::uniform(FluxModel::quartic(1.0, 3.0).unwrap(), -2.0, 2.0, 21).with_random(100_000, 7);
    let mut group = c.benchmark_group("verify_dbound");
    group.throughput(Throughput::Elements(spec.grid_size() + spec.random));
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(verify_dbound(&spec, DboundConstants::default(), exec).unwrap()))
        });
    }
    group.finish();
}

fn identities(c: &mut Criterion) {
    let spec = GridSpec::uniform(FluxModel::Cosh, -2.0, 2.0, 7).with_random(5_000, 7);
    let mut group = c.benchmark_group("verify_identities");
    group.throughput(Throughput::Elements(spec.grid_size() + spec.random));
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(verify_identities(&spec, exec).unwrap()))
        });
    }
    group.finish();
}

fn scenarios() -> Vec<Scenario> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).unwrap();
            ScenarioConfig::from_json(&text).unwrap().validate().unwrap()
        })
        .collect()
}

fn batch(c: &mut Criterion) {
    let all = scenarios();
    let mut group = c.benchmark_group("run_batch");
    group.throughput(Throughput::Elements(all.len() as u64));
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_batch(&all, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, dbound, identities, batch);
criterion_main!(benches);
