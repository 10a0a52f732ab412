use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, ensure, Context, Result};
use ndarray::{s, Array2, ArrayView2, Axis};
use serde::Serialize;
use tmpnn::data::{
    gen_friedman1, gen_noisy_linear, load_csv, metric_mse, metric_r2_per_target, split_quantile,
    split_random, write_matrix_csv,
};
use tmpnn::odeview::{extract_ode, render_ode_with_threshold, state_names};
use tmpnn::{
    BatchSize, Dataset, EarlyStop, EpochRecord, Init, ModelSpec, TargetSpec, TmpnnError,
    TmpnnModel, TrainConfig,
};

use crate::model_file::{ModelFile, TrainingInfo};
use crate::{
    EvaluateArgs, GenDataArgs, GenOptions, Generator, InitKind, InspectArgs, PredictArgs,
    RaiseArgs, TrainArgs,
};

fn generate(kind: Generator, opts: &GenOptions, seed: u64) -> Result<Dataset> {
    Ok(match kind {
        Generator::Friedman1 => {
            gen_friedman1(opts.samples.unwrap_or(10_000), opts.unimportant, opts.noise, seed)?
        }
        Generator::Linear => gen_noisy_linear(opts.samples.unwrap_or(200), (opts.low, opts.high), seed)?,
    })
}

fn parse_quantile_split(spec: &str) -> Result<(String, f64)> {
    let (column, q) = spec
        .rsplit_once(':')
        .ok_or_else(|| anyhow!("--split-quantile expects `column:q`, got `{spec}`"))?;
    let q: f64 = q.parse().with_context(|| format!("bad quantile `{q}`"))?;
    Ok((column.to_string(), q))
}

fn parse_batch(s: &str) -> Result<BatchSize> {
    if s.eq_ignore_ascii_case("full") {
        return Ok(BatchSize::Full);
    }
    let n: usize = s
        .parse()
        .map_err(|_| anyhow!("--batch expects a positive integer or `full`, got `{s}`"))?;
    ensure!(n > 0, "--batch must be at least 1");
    Ok(BatchSize::Size(n))
}

#[derive(Debug, Serialize)]
struct TargetScore {
    name: String,
    mse: f64,
    /// Absent when the target is constant on the scored rows.
    r2: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Scores {
    rows: usize,
    mse: f64,
    r2: Option<f64>,
    targets: Vec<TargetScore>,
}

fn score(names: &[String], y: ArrayView2<f64>, pred: ArrayView2<f64>) -> Result<Scores> {
    let targets = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let yj = y.slice(s![.., j..j + 1]);
            let pj = pred.slice(s![.., j..j + 1]);
            let r2 = match metric_r2_per_target(yj, pj) {
                Ok(v) => Some(v[0]),
                Err(TmpnnError::UndefinedR2 { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(TargetScore {
                name: name.clone(),
                mse: metric_mse(yj, pj)?,
                r2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_r2 = targets
        .iter()
        .map(|t| t.r2)
        .sum::<Option<f64>>()
        .map(|v| v / targets.len() as f64);
    Ok(Scores {
        rows: y.nrows(),
        mse: metric_mse(y, pred)?,
        r2: mean_r2,
        targets,
    })
}

#[derive(Debug, Serialize)]
struct TrainReportFile<'a> {
    order: usize,
    steps: usize,
    latent: usize,
    seed: u64,
    config: &'a TrainConfig,
    /// What the per-epoch `valid_loss` column measures: `validation` when
    /// early stopping is on, otherwise `test`.
    valid_source: Option<&'static str>,
    epochs: &'a [EpochRecord],
    best_epoch: usize,
    stopped_early: bool,
    train: Scores,
    test: Option<Scores>,
}

fn print_scores(label: &str, s: &Scores) {
    match s.r2 {
        Some(r2) => println!("{label}: {} rows, MSE {:.6}, R² {r2:.6}", s.rows, s.mse),
        None => println!("{label}: {} rows, MSE {:.6}, R² undefined", s.rows, s.mse),
    }
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let data = match (&args.data, args.gen) {
        (Some(path), None) => {
            let targets = args.targets.as_deref().expect("clap enforces --targets with --data");
            load_csv(path, &TargetSpec::parse(targets))
                .with_context(|| format!("cannot load {}", path.display()))?
        }
        (None, Some(kind)) => generate(kind, &args.gen_options, args.seed)?,
        _ => unreachable!("clap enforces exactly one data source"),
    };
    ensure!(data.n_targets() > 0, "no target columns selected");

    let (train, test) = if let Some(spec) = &args.split_quantile {
        let (column, q) = parse_quantile_split(spec)?;
        let (tr, te) = split_quantile(&data, &column, q)?;
        (tr, Some(te))
    } else if args.test_fraction > 0.0 {
        ensure!(args.test_fraction < 1.0, "--test-fraction must be below 1");
        let (tr, te) = split_random(&data, args.test_fraction, args.seed)?;
        (tr, Some(te))
    } else {
        ensure!(args.test_fraction == 0.0, "--test-fraction must be in [0, 1)");
        (data.clone(), None)
    };
    let (train, valid) = match args.patience {
        Some(_) => {
            let (tr, va) = split_random(&train, args.valid_fraction, args.seed.wrapping_add(1))?;
            (tr, Some(va))
        }
        None => (train, None),
    };

    let init = match args.init {
        InitKind::Identity => Init::Identity,
        InitKind::Perturbed => Init::Perturbed {
            std: args.init_std,
            seed: args.seed,
        },
    };
    let mut model = ModelSpec::new(data.n_features(), data.n_targets())
        .order(args.order)
        .steps(args.steps)
        .latent(args.latent)
        .init(init)
        .standardize(args.standardize.on())
        .standardize_targets(args.standardize_targets.on())
        .init_trainable(args.init_trainable)
        .regularization(args.l1, args.l2)
        .build()?;
    let mut config = TrainConfig {
        epochs: args.epochs,
        batch_size: parse_batch(&args.batch)?,
        shuffle_seed: args.seed,
        early_stop: args.patience.map(|patience| EarlyStop {
            patience,
            min_delta: 0.0,
        }),
        grad_clip: args.grad_clip,
        ..TrainConfig::default()
    };
    config.optimizer.learning_rate = args.lr;

    let monitor = valid.as_ref().or(test.as_ref());
    let report = model.fit(&train, monitor, &config)?;

    let train_pred = model.predict(train.x.view())?;
    let train_scores = score(&data.target_names, train.y.view(), train_pred.view())?;
    let test_scores = match &test {
        Some(t) => {
            let p = model.predict(t.x.view())?;
            Some(score(&data.target_names, t.y.view(), p.view())?)
        }
        None => None,
    };

    let info = TrainingInfo {
        seed: args.seed,
        epochs_run: report.epochs.len(),
        final_train_mse: train_scores.mse,
        final_test_mse: test_scores.as_ref().map(|s| s.mse),
    };
    ModelFile::from_model(&model, data.feature_names.clone(), data.target_names.clone(), Some(info))
        .save(&args.out)?;

    print_scores("train", &train_scores);
    if let Some(s) = &test_scores {
        print_scores("test", s);
    }
    if let Some(path) = &args.report {
        let file = TrainReportFile {
            order: args.order,
            steps: args.steps,
            latent: args.latent,
            seed: args.seed,
            config: &config,
            valid_source: match (&valid, &test) {
                (Some(_), _) => Some("validation"),
                (None, Some(_)) => Some("test"),
                (None, None) => None,
            },
            epochs: &report.epochs,
            best_epoch: report.best_epoch,
            stopped_early: report.stopped_early,
            train: train_scores,
            test: test_scores,
        };
        write_json(path, &file)?;
    }
    println!("model written to {}", args.out.display());
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Feature matrix in the model's column order. Columns are matched by name
/// when every model feature appears in the file; otherwise the widths must
/// agree.
fn model_features(data: &Dataset, file: &ModelFile) -> Result<Array2<f64>> {
    let by_name: Option<Vec<usize>> = file
        .feature_names
        .iter()
        .map(|n| data.feature_names.iter().position(|c| c == n))
        .collect();
    match by_name {
        Some(idx) => Ok(data.x.select(Axis(1), &idx)),
        None if data.n_features() == file.n_features => Ok(data.x.clone()),
        None => Err(TmpnnError::DimensionMismatch {
            what: "feature count",
            expected: file.n_features,
            found: data.n_features(),
        })
        .context("data does not match the model's features"),
    }
}

fn load_model(path: &Path) -> Result<(ModelFile, TmpnnModel)> {
    let file = ModelFile::load(path)?;
    let model = file.to_model()?;
    Ok((file, model))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let (file, model) = load_model(&args.model)?;
    let data = load_csv(&args.data, &TargetSpec::Trailing(0))
        .with_context(|| format!("cannot load {}", args.data.display()))?;
    let x = model_features(&data, &file)?;
    let pred = model.predict(x.view())?;
    let mut out = output(args.out.as_deref())?;
    write_matrix_csv(&mut out, &file.target_names, pred.view())?;
    out.flush()?;
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let (file, model) = load_model(&args.model)?;
    let data = match &args.targets {
        Some(t) => load_csv(&args.data, &TargetSpec::parse(t))?,
        None => match load_csv(&args.data, &TargetSpec::Names(file.target_names.clone())) {
            Ok(d) => d,
            Err(TmpnnError::UnknownColumn { .. }) => {
                load_csv(&args.data, &TargetSpec::Trailing(file.n_targets))?
            }
            Err(e) => return Err(e).with_context(|| format!("cannot load {}", args.data.display())),
        },
    };
    ensure!(
        data.n_targets() == file.n_targets,
        "model predicts {} targets but {} were selected",
        file.n_targets,
        data.n_targets()
    );
    let data = if let Some(spec) = &args.split_quantile {
        let (column, q) = parse_quantile_split(spec)?;
        split_quantile(&data, &column, q)?.1
    } else if let Some(f) = args.test_fraction {
        ensure!(f > 0.0 && f < 1.0, "--test-fraction must be in (0, 1)");
        split_random(&data, f, args.seed)?.1
    } else {
        data
    };
    let x = model_features(&data, &file)?;
    let pred = model.predict(x.view())?;
    let scores = score(&file.target_names, data.y.view(), pred.view())?;
    println!("{}", serde_json::to_string_pretty(&scores)?);
    Ok(())
}

pub fn inspect_ode(args: &InspectArgs) -> Result<()> {
    let (file, model) = load_model(&args.model)?;
    ensure!(
        args.threshold >= 0.0 && args.threshold.is_finite(),
        "--threshold must be finite and >= 0"
    );
    let names = state_names(&file.feature_names, &file.target_names, file.n_latent);
    let text = render_ode_with_threshold(&extract_ode(&model), &names, args.threshold)?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn raise_order(args: &RaiseArgs) -> Result<()> {
    let (file, model) = load_model(&args.model)?;
    let raised = tmpnn::odeview::raise_order(&model, args.steps)?;
    ModelFile::from_model(&raised, file.feature_names, file.target_names, file.training)
        .save(&args.out)?;
    println!(
        "steps {} -> {}; model written to {}",
        model.steps(),
        raised.steps(),
        args.out.display()
    );
    Ok(())
}

pub fn gen_data(args: &GenDataArgs) -> Result<()> {
    let data = generate(args.generator, &args.options, args.seed)?;
    match &args.out {
        Some(path) => data.write_csv(path)?,
        None => {
            let names: Vec<String> = data.feature_names.iter().chain(&data.target_names).cloned().collect();
            let table = ndarray::concatenate(Axis(1), &[data.x.view(), data.y.view()])?;
            let mut out = std::io::stdout().lock();
            write_matrix_csv(&mut out, &names, table.view())?;
        }
    }
    Ok(())
}
