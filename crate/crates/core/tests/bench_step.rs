//! One-off throughput measurement for the training step at full batch.

use nsd_core::fcnn::{
    forward, init_model, loss_and_gradients, Batch, ForwardTrace, Gradients, Mode, INPUT_LEN,
};
use nsd_core::rng::Rng;
use std::time::Instant;

#[test]
#[ignore]
fn step_timing() {
    let model = init_model::<f32>(1);
    let b = 2048;
    let mut rng = Rng::new(7);
    let input = Batch {
        data: (0..b * INPUT_LEN).map(|_| rng.normal() as f32).collect(),
        b,
        maps: 1,
        len: INPUT_LEN,
    };
    let targets: Vec<usize> = (0..b).map(|i| i % 2).collect();
    let mut trace = ForwardTrace::new();
    let mut grads = Gradients::zeros_like(&model);
    forward(&model, &input, Mode::Train, &mut trace).unwrap();
    loss_and_gradients(&model, &mut trace, &targets, &mut grads);

    let reps = 3u32;
    let t = Instant::now();
    for _ in 0..reps {
        forward(&model, &input, Mode::Train, &mut trace).unwrap();
    }
    let fwd = t.elapsed() / reps;
    let t = Instant::now();
    for _ in 0..reps {
        forward(&model, &input, Mode::Train, &mut trace).unwrap();
        loss_and_gradients(&model, &mut trace, &targets, &mut grads);
    }
    let both = t.elapsed() / reps;
    let fwd_gf = (b as f64 * 6.1e6) / fwd.as_secs_f64() / 1e9;
    let bwd = both - fwd;
    let bwd_gf = (b as f64 * 12.0e6) / bwd.as_secs_f64() / 1e9;
    eprintln!(
        "forward: {fwd:?} ({fwd_gf:.1} GF/s)  backward: {bwd:?} ({bwd_gf:.1} GF/s)  step: {both:?}"
    );
}
