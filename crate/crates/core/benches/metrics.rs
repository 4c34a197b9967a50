use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use fairscreen::backends::mock::mock_embedding;
use fairscreen::corpus::NamePools;
use fairscreen::par::{self, Execution};
use fairscreen::perturb::{apply_plan, PerturbationPlan};
use fairscreen::retrieval::{cosine, non_uniformity_grouped, JobPool, NonUniformityMode};
use fairscreen::{seed, DemographicGroup, Resume};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn text(rng: &mut impl Rng, words: usize) -> String {
    (0..words).map(|_| format!("w{}", rng.gen_range(0..2000))).collect::<Vec<_>>().join(" ")
}

fn scoring(c: &mut Criterion) {
    let mut rng = seed::rng(1);
    let resumes: Vec<Vec<f64>> = (0..400).map(|_| mock_embedding(&text(&mut rng, 200))).collect();
    let jobs: Vec<Vec<f64>> = (0..50).map(|_| mock_embedding(&text(&mut rng, 80))).collect();
    let mut g = c.benchmark_group("cosine_scores_50x400");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::map(exec, &jobs, |j| resumes.iter().map(|r| cosine(r, j).unwrap()).collect::<Vec<_>>())
            })
        });
    }
    g.finish();
}

fn nonuniformity(c: &mut Criterion) {
    let mut rng = seed::rng(2);
    let pools: Vec<Vec<(DemographicGroup, f64)>> = (0..200)
        .map(|_| (0..2000).map(|i| (DemographicGroup::ALL[i % 4], rng.gen::<f64>())).collect())
        .collect();
    let ids: Vec<String> = (0..pools.len()).map(|i| format!("job{i}")).collect();
    let jobs: Vec<JobPool<'_>> =
        pools.iter().zip(&ids).map(|(p, id)| JobPool { job_id: id, occupation: "occ", pool: p }).collect();
    let mut g = c.benchmark_group("nonuniformity_200x2000");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| non_uniformity_grouped(black_box(&jobs), 10.0, NonUniformityMode::Separated, 0.05, exec).unwrap())
        });
    }
    g.finish();
}

fn perturbation(c: &mut Criterion) {
    let pools = NamePools::bundled().unwrap();
    let mut rng = seed::rng(3);
    let resumes: Vec<Resume> =
        (0..100).map(|i| Resume::new(format!("r{i:03}"), "Data Analyst", text(&mut rng, 300))).collect();
    let plan = PerturbationPlan::standard(7, false);
    let mut g = c.benchmark_group("standard_plan_100");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| apply_plan(black_box(&resumes), &plan, &pools, None, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, scoring, nonuniformity, perturbation);
criterion_main!(benches);
