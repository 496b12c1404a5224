use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dce_bench::received_grid;
use dce_core::decoder::{decoder_backward, fit, AdamState, DecoderArch, DecoderParams, FitConfig};
use dce_core::numerics::{RealTensor3, RngStream};
use dce_core::signal::pack_grid;
use std::hint::black_box;

fn epoch(c: &mut Criterion) {
    let mut group = c.benchmark_group("decoder_epoch");
    group.sample_size(20);
    for (m, k) in [(1, 16), (16, 16), (64, 16), (64, 32)] {
        let arch = DecoderArch::six_layer(k, 2 * m, 64, 64).unwrap();
        let target = pack_grid(&received_grid(m, 10.0, 1).y);
        let mut rng = RngStream::new(0, 0);
        let params = DecoderParams::init(&arch, &mut rng);
        let (ch, f, t) = arch.input_dims();
        let z0 = RealTensor3::from_vec(ch, f, t, rng.uniform(ch * f * t, 0.0, 0.1)).unwrap();
        group.bench_function(format!("m{m}_k{k}"), |b| {
            b.iter_batched(
                || (params.clone(), AdamState::new(params.len(), FitConfig::new(1, 0.01).adam)),
                |(mut p, mut adam)| {
                    let (loss, grads, _) = decoder_backward(&arch, &p, &z0, &target).unwrap();
                    adam.step(p.as_mut_slice(), grads.as_slice());
                    black_box(loss)
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn short_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("decoder_fit_50_epochs");
    group.sample_size(10);
    let arch = DecoderArch::six_layer(16, 32, 64, 64).unwrap();
    let target = pack_grid(&received_grid(16, 10.0, 2).y);
    let cfg = FitConfig::new(50, 0.01);
    group.bench_function("m16_k16", |b| {
        b.iter(|| black_box(fit(&arch, &target, &cfg, &mut RngStream::new(3, 0)).unwrap().final_loss))
    });
    group.finish();
}

criterion_group!(benches, epoch, short_fit);
criterion_main!(benches);
