use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qnet_xval::kernel::{EventQueue, KernelError};
use qnet_xval::linkgen::run_link;
use qnet_xval::noise::{ErrorVectorSwap, StorageTimes, WernerSwap};
use qnet_xval::{PauliWeights, ProtocolModel, SimConfig, TransitionMatrix};

/// Self-rescheduling chains interleaved in one queue.
fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    for chains in [1u32, 64] {
        group.bench_with_input(BenchmarkId::new("100k_events", chains), &chains, |b, &chains| {
            b.iter(|| {
                let mut q: EventQueue<u32> = EventQueue::new();
                for i in 0..chains {
                    q.schedule(f64::from(i) * 1e-9, 100_000 / chains).unwrap();
                }
                let stats = q
                    .run_until_idle(|q, left| -> Result<(), KernelError> {
                        if left > 1 {
                            q.schedule(1e-6, left - 1)?;
                        }
                        Ok(())
                    })
                    .unwrap();
                black_box(stats)
            })
        });
    }
    group.finish();
}

fn matrix_power(c: &mut Criterion) {
    let q = TransitionMatrix::depolarizing(7.7e-5, 1e-6).unwrap();
    let mut group = c.benchmark_group("matrix_power");
    for n in [1_000u64, 1_000_000, 1 << 40] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| black_box(q.power(n))));
    }
    group.finish();
}

fn link_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("link_1000_pairs");
    group.sample_size(20);
    for model in ProtocolModel::ALL {
        for n_mem in [1u32, 16] {
            let mut cfg = SimConfig::default();
            cfg.hardware.n_memories = n_mem;
            let cfg = cfg.validate().unwrap();
            group.bench_with_input(BenchmarkId::new(model.slug(), n_mem), &cfg, |b, cfg| {
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                b.iter(|| black_box(run_link(model, cfg, &mut rng).unwrap()))
            });
        }
    }
    group.finish();
}

fn swap_trials(c: &mut Criterion) {
    let storage = StorageTimes {
        t1_s: 3e-4,
        t2_s: 1e-4,
        message_s: 1e-4,
    };
    let mut group = c.benchmark_group("swap_trial");
    group.bench_function("error_vector", |b| {
        let mut swap = ErrorVectorSwap::new(0.05, 0.1, PauliWeights::uniform(), 18e-3, 1e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        b.iter(|| black_box(swap.trial(&mut rng, &storage).unwrap()))
    });
    group.bench_function("werner", |b| {
        let swap = WernerSwap::new(0.05, 0.1, 18e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        b.iter(|| black_box(swap.trial(&mut rng, &storage)))
    });
    group.finish();
}

criterion_group!(benches, kernel, matrix_power, link_generation, swap_trials);
criterion_main!(benches);
