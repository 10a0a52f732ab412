//! Trains on Friedman-1 and prints the held-out R².
//!
//! cargo run --release -p tmpnn --example friedman -- [order] [steps] [epochs] [unimportant] [lr] [standardize 0|1]

use std::time::Instant;

use tmpnn::data::{gen_friedman1, metric_r2, split_random};
use tmpnn::{ModelSpec, TrainConfig};

fn main() -> tmpnn::Result<()> {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let args: Vec<usize> = raw.iter().filter_map(|a| a.parse().ok()).collect();
    let lr: f64 = raw.get(4).and_then(|a| a.parse().ok()).unwrap_or(0.002);
    let order = args.first().copied().unwrap_or(3);
    let steps = args.get(1).copied().unwrap_or(5);
    let epochs = args.get(2).copied().unwrap_or(1000);
    let extra = args.get(3).copied().unwrap_or(0);
    let standardize = raw.get(5).is_none_or(|a| a != "0");

    let data = gen_friedman1(10_000, extra, 0.0, 1)?;
    let (train, test) = split_random(&data, 0.25, 1)?;
    let mut model = ModelSpec::new(5 + extra, 1)
        .order(order)
        .steps(steps)
        .standardize(standardize)
        .build()?;
    let mut config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    config.optimizer.learning_rate = lr;
    let start = Instant::now();
    let report = model.fit(&train, Some(&test), &config)?;
    for r in report.epochs.iter().step_by((epochs / 20).max(1)) {
        println!("epoch {:5} train {:.5} valid {:.5}", r.epoch, r.train_loss, r.valid_loss.unwrap());
    }
    let pred = model.predict(test.x.view())?;
    println!(
        "k={order} p={steps}: test R² = {:.5} ({:.1?})",
        metric_r2(test.y.view(), pred.view())?,
        start.elapsed()
    );
    Ok(())
}
