use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oadr_core::synthetic::{generate, SyntheticConfig};
use oadr_core::{
    mock_embed, top_k, train_adapter, triplet_loss_grad, EmbeddingVector, LinearAdapter, TrainConfig, TripletIds,
};

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn bench_top_k(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sentences: Vec<Vec<f32>> = (0..400).map(|_| random_vector(&mut rng, 384)).collect();
    let query = random_vector(&mut rng, 384);
    c.bench_function("top_k 400x384 all", |b| b.iter(|| top_k(black_box(&query), &sentences, 400).unwrap()));
    c.bench_function("top_k 400x384 k=10", |b| b.iter(|| top_k(black_box(&query), &sentences, 10).unwrap()));
}

fn bench_gradient(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for dim in [64, 256] {
        let mut v = || EmbeddingVector::new(random_vector(&mut rng, dim)).unwrap();
        let (a, p, n) = (v(), v(), v());
        let adapter = LinearAdapter::identity(dim);
        c.bench_function(&format!("triplet_loss_grad dim={dim}"), |b| {
            b.iter(|| triplet_loss_grad(&a, &p, &n, black_box(&adapter), 1.0, 1e-12).unwrap())
        });
    }
}

fn bench_mock_embed(c: &mut Criterion) {
    let text = "The keeper climbed the spiral stairs each evening to light the great lamp above the harbor.";
    c.bench_function("mock_embed dim=256", |b| b.iter(|| mock_embed(black_box(text), 256)));
}

fn bench_train(c: &mut Criterion) {
    let data = generate(&SyntheticConfig { samples: 64, ..SyntheticConfig::default() });
    let store = data.mock_store(128).unwrap();
    let ids: Vec<_> = data.samples.iter().map(|s| TripletIds::for_sample(&s.sample_id)).collect();
    let config = TrainConfig { learning_rate: 0.5, ..TrainConfig::default() };
    let mut group = c.benchmark_group("train");
    group.sample_size(20);
    group.bench_function("64 triplets dim=128 1 epoch", |b| {
        b.iter_batched(|| (), |_| train_adapter(&ids, &store, &config).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, bench_top_k, bench_gradient, bench_mock_embed, bench_train);
criterion_main!(benches);
