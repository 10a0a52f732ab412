//! Fits `y = x + U(-0.25, 0.25)` with an order-5 map iterated three times and
//! prints predictions inside and outside the training range.
//!
//! cargo run --release -p tmpnn --example noisy_linear -- [epochs] [standardize 0|1]

use tmpnn::data::gen_noisy_linear;
use tmpnn::{BatchSize, ModelSpec, TrainConfig};

fn main() -> tmpnn::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let epochs = args.first().copied().unwrap_or(2000);
    let standardize = args.get(1).copied().unwrap_or(0) == 1;

    let data = gen_noisy_linear(200, (-1.0, 1.0), 0)?;
    let mut model = ModelSpec::new(1, 1)
        .order(5)
        .steps(3)
        .standardize(standardize)
        .build()?;
    let config = TrainConfig {
        epochs,
        batch_size: BatchSize::Size(32),
        ..TrainConfig::default()
    };
    let report = model.fit(&data, None, &config)?;
    println!("train MSE {:.5} (noise variance {:.5})", report.final_train_mse, 0.25f64.powi(2) / 3.0);
    for x in [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        println!("x = {x:5.2}  y = {:.4}", model.forward(&[x])?.prediction[0]);
    }
    let w = model.map().as_slice();
    let (lo, hi) = w.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
    println!("weight range [{lo:.4}, {hi:.4}]");
    Ok(())
}
