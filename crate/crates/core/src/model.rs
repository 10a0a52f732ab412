//! The TMPNN regressor.
//!
//! The feature vector is extended with `m` target slots and `l` latent slots
//! into the state `Z_0 = (x, y_0, h_0)`. One shared Taylor map is applied `p`
//! times, and the target slots of `Z_p` are the predictions. Training runs
//! reverse-mode differentiation through all `p` applications, accumulating
//! every layer's contribution into the single weight matrix.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{metric_mse, Dataset, Scaler};
use crate::error::{Result, TmpnnError};
use crate::optim::{clip_gradient, AdamaxConfig, AdamaxState};
use crate::taylor_map::TaylorMapWeights;

/// Samples per gradient work unit. Partial sums are reduced in chunk order,
/// so results do not depend on the number of threads.
const GRAD_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// `W_1 = I`, all other weights zero.
    Identity,
    /// Identity plus `N(0, std²)` noise on every coefficient.
    Perturbed { std: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scaling {
    Off,
    /// Enabled; parameters are estimated from the training features on the
    /// first call to [`TmpnnModel::fit`].
    Unfitted,
    Fitted(Scaler),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n_features: usize,
    pub n_targets: usize,
    pub n_latent: usize,
    pub order: usize,
    pub steps: usize,
    pub init: Init,
    pub standardize: bool,
    pub standardize_targets: bool,
    pub init_trainable: bool,
    pub reg_l1: f64,
    pub reg_l2: f64,
}

impl ModelSpec {
    /// Defaults: order 3, 5 steps, identity init, standardized features,
    /// no latent units, fixed zero initial state, no regularization.
    pub fn new(n_features: usize, n_targets: usize) -> Self {
        Self {
            n_features,
            n_targets,
            n_latent: 0,
            order: 3,
            steps: 5,
            init: Init::Identity,
            standardize: true,
            standardize_targets: false,
            init_trainable: false,
            reg_l1: 0.0,
            reg_l2: 0.0,
        }
    }

    pub fn order(mut self, k: usize) -> Self {
        self.order = k;
        self
    }

    pub fn steps(mut self, p: usize) -> Self {
        self.steps = p;
        self
    }

    pub fn latent(mut self, l: usize) -> Self {
        self.n_latent = l;
        self
    }

    pub fn init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn standardize(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }

    /// Reads predictions through a per-target affine map fitted to the
    /// training targets, so the target slots evolve in standardized units.
    pub fn standardize_targets(mut self, on: bool) -> Self {
        self.standardize_targets = on;
        self
    }

    pub fn init_trainable(mut self, on: bool) -> Self {
        self.init_trainable = on;
        self
    }

    pub fn regularization(mut self, l1: f64, l2: f64) -> Self {
        self.reg_l1 = l1;
        self.reg_l2 = l2;
        self
    }

    pub fn build(self) -> Result<TmpnnModel> {
        TmpnnModel::new(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmpnnModel {
    n_features: usize,
    n_targets: usize,
    n_latent: usize,
    steps: usize,
    map: TaylorMapWeights,
    init_state: Vec<f64>,
    init_trainable: bool,
    reg_l1: f64,
    reg_l2: f64,
    scaling: Scaling,
    target_scaling: Scaling,
}

/// Result of a single-sample forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub prediction: Vec<f64>,
    /// `steps + 1` states, starting with `Z_0`.
    pub trajectory: Vec<Vec<f64>>,
}

/// Gradient of the batch loss, laid out like the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    /// Present when the initial state is trainable.
    pub init_state: Option<Vec<f64>>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        if let Some(s) = &self.init_state {
            v.extend_from_slice(s);
        }
        v
    }
}

fn check_reg(v: f64, name: &str) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(TmpnnError::invalid(format!("{name} must be finite and >= 0")));
    }
    Ok(())
}

impl TmpnnModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        if spec.n_features == 0 {
            return Err(TmpnnError::invalid("model needs at least one feature"));
        }
        if spec.n_targets == 0 {
            return Err(TmpnnError::invalid("model needs at least one target"));
        }
        if spec.steps == 0 {
            return Err(TmpnnError::invalid("steps must be at least 1"));
        }
        check_reg(spec.reg_l1, "L1 strength")?;
        check_reg(spec.reg_l2, "L2 strength")?;
        let dim = spec.n_features + spec.n_targets + spec.n_latent;
        let map = match spec.init {
            Init::Identity => TaylorMapWeights::identity(dim, spec.order)?,
            Init::Perturbed { std, seed } => {
                TaylorMapWeights::perturbed_identity(dim, spec.order, std, seed)?
            }
        };
        Ok(Self {
            n_features: spec.n_features,
            n_targets: spec.n_targets,
            n_latent: spec.n_latent,
            steps: spec.steps,
            map,
            init_state: vec![0.0; spec.n_targets + spec.n_latent],
            init_trainable: spec.init_trainable,
            reg_l1: spec.reg_l1,
            reg_l2: spec.reg_l2,
            scaling: if spec.standardize {
                Scaling::Unfitted
            } else {
                Scaling::Off
            },
            target_scaling: if spec.standardize_targets {
                Scaling::Unfitted
            } else {
                Scaling::Off
            },
        })
    }

    /// Reassembles a model from stored parts, validating every dimension.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n_features: usize,
        n_targets: usize,
        n_latent: usize,
        steps: usize,
        map: TaylorMapWeights,
        init_state: Vec<f64>,
        init_trainable: bool,
        reg: (f64, f64),
        scaling: Scaling,
        target_scaling: Scaling,
    ) -> Result<Self> {
        if n_features == 0 || n_targets == 0 {
            return Err(TmpnnError::invalid("model needs at least one feature and one target"));
        }
        if steps == 0 {
            return Err(TmpnnError::invalid("steps must be at least 1"));
        }
        let dim = n_features + n_targets + n_latent;
        if map.dim() != dim {
            return Err(TmpnnError::DimensionMismatch {
                what: "map dimension",
                expected: dim,
                found: map.dim(),
            });
        }
        if init_state.len() != n_targets + n_latent {
            return Err(TmpnnError::DimensionMismatch {
                what: "initial state",
                expected: n_targets + n_latent,
                found: init_state.len(),
            });
        }
        if init_state.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("initial state"));
        }
        check_reg(reg.0, "L1 strength")?;
        check_reg(reg.1, "L2 strength")?;
        if let Scaling::Fitted(s) = &scaling {
            s.validate(n_features)?;
        }
        if let Scaling::Fitted(s) = &target_scaling {
            s.validate(n_targets)?;
        }
        Ok(Self {
            n_features,
            n_targets,
            n_latent,
            steps,
            map,
            init_state,
            init_trainable,
            reg_l1: reg.0,
            reg_l2: reg.1,
            scaling,
            target_scaling,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    pub fn order(&self) -> usize {
        self.map.order()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn map(&self) -> &TaylorMapWeights {
        &self.map
    }

    pub fn map_mut(&mut self) -> &mut TaylorMapWeights {
        &mut self.map
    }

    pub fn init_state(&self) -> &[f64] {
        &self.init_state
    }

    pub fn set_init_state(&mut self, state: Vec<f64>) -> Result<()> {
        if state.len() != self.init_state.len() {
            return Err(TmpnnError::DimensionMismatch {
                what: "initial state",
                expected: self.init_state.len(),
                found: state.len(),
            });
        }
        self.init_state = state;
        Ok(())
    }

    pub fn init_trainable(&self) -> bool {
        self.init_trainable
    }

    pub fn regularization(&self) -> (f64, f64) {
        (self.reg_l1, self.reg_l2)
    }

    pub fn set_regularization(&mut self, l1: f64, l2: f64) -> Result<()> {
        check_reg(l1, "L1 strength")?;
        check_reg(l2, "L2 strength")?;
        self.reg_l1 = l1;
        self.reg_l2 = l2;
        Ok(())
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn set_scaling(&mut self, scaling: Scaling) -> Result<()> {
        if let Scaling::Fitted(s) = &scaling {
            s.validate(self.n_features)?;
        }
        self.scaling = scaling;
        Ok(())
    }

    pub fn target_scaling(&self) -> &Scaling {
        &self.target_scaling
    }

    pub fn set_target_scaling(&mut self, scaling: Scaling) -> Result<()> {
        if let Scaling::Fitted(s) = &scaling {
            s.validate(self.n_targets)?;
        }
        self.target_scaling = scaling;
        Ok(())
    }

    /// Replaces the shared map; its dimension must match.
    pub fn with_map(mut self, map: TaylorMapWeights) -> Result<Self> {
        if map.dim() != self.dim() {
            return Err(TmpnnError::DimensionMismatch {
                what: "map dimension",
                expected: self.dim(),
                found: map.dim(),
            });
        }
        self.map = map;
        Ok(self)
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(TmpnnError::invalid("steps must be at least 1"));
        }
        self.steps = steps;
        Ok(self)
    }

    /// Number of trainable scalars: the map weights, plus the initial state
    /// when it is trainable.
    pub fn n_trainable(&self) -> usize {
        self.map.param_count() + if self.init_trainable { self.init_state.len() } else { 0 }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = self.map.as_slice().to_vec();
        if self.init_trainable {
            v.extend_from_slice(&self.init_state);
        }
        v
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_trainable() {
            return Err(TmpnnError::DimensionMismatch {
                what: "parameter vector",
                expected: self.n_trainable(),
                found: params.len(),
            });
        }
        let nw = self.map.param_count();
        self.map.as_mut_slice().copy_from_slice(&params[..nw]);
        if self.init_trainable {
            self.init_state.copy_from_slice(&params[nw..]);
        }
        Ok(())
    }

    fn target_slots(&self) -> std::ops::Range<usize> {
        self.n_features..self.n_features + self.n_targets
    }

    fn check_features(&self, n: usize) -> Result<()> {
        if n != self.n_features {
            return Err(TmpnnError::DimensionMismatch {
                what: "feature count",
                expected: self.n_features,
                found: n,
            });
        }
        Ok(())
    }

    /// Prediction for target `j` from its state slot, and `dŷ/dz`.
    fn readout(&self, j: usize, z: f64) -> (f64, f64) {
        match &self.target_scaling {
            Scaling::Fitted(s) => (s.mean[j] + s.scale[j] * z, s.scale[j]),
            _ => (z, 1.0),
        }
    }

    fn readout_into(&self, z: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(&z[self.target_slots()]).enumerate() {
            *o = self.readout(j, v).0;
        }
    }

    /// `Z_0` for a raw feature row.
    fn initial_state_into(&self, x: ArrayView1<f64>, z: &mut [f64]) {
        let (head, tail) = z.split_at_mut(self.n_features);
        match &self.scaling {
            Scaling::Fitted(s) => s.transform_into(x, head),
            _ => head.iter_mut().zip(x.iter()).for_each(|(h, v)| *h = *v),
        }
        tail.copy_from_slice(&self.init_state);
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        self.check_features(x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("feature vector"));
        }
        let d = self.dim();
        let mut z = vec![0.0; d];
        self.initial_state_into(ArrayView1::from(x), &mut z);
        let mut trajectory = Vec::with_capacity(self.steps + 1);
        trajectory.push(z);
        let mut phi = vec![0.0; self.map.n_rows()];
        for t in 0..self.steps {
            let mut next = vec![0.0; d];
            self.map
                .apply_into(&trajectory[t], &mut phi, &mut next)
                .map_err(|e| e.at_step(t))?;
            trajectory.push(next);
        }
        let mut prediction = vec![0.0; self.n_targets];
        self.readout_into(&trajectory[self.steps], &mut prediction);
        Ok(Forward {
            prediction,
            trajectory,
        })
    }

    /// Final state `Z_p` for one feature row, using caller buffers.
    fn final_state(
        &self,
        x: ArrayView1<f64>,
        z: &mut Vec<f64>,
        next: &mut Vec<f64>,
        phi: &mut [f64],
    ) -> Result<()> {
        self.initial_state_into(x, z);
        for t in 0..self.steps {
            self.map.apply_into(z, phi, next).map_err(|e| e.at_step(t))?;
            std::mem::swap(z, next);
        }
        Ok(())
    }

    /// Row-wise predictions, `N × m`. Rows are processed in parallel.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_features(x.ncols())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("feature matrix"));
        }
        let m = self.n_targets;
        let rows: Vec<Vec<f64>> = (0..x.nrows())
            .into_par_iter()
            .map_init(
                || {
                    (
                        vec![0.0; self.dim()],
                        vec![0.0; self.dim()],
                        vec![0.0; self.map.n_rows()],
                    )
                },
                |(z, next, phi), i| {
                    self.final_state(x.row(i), z, next, phi)
                        .map_err(|e| e.at_row(i))?;
                    let mut row = vec![0.0; m];
                    self.readout_into(z, &mut row);
                    Ok(row)
                },
            )
            .collect::<Result<_>>()?;
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(Array2::from_shape_vec((x.nrows(), m), flat).expect("prediction shape"))
    }

    /// Mean squared error over the batch plus `l1 Σ|W| + l2 Σ W²`, and its
    /// gradient with respect to every trainable parameter.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
    ) -> Result<(f64, Gradient)> {
        self.check_features(x.ncols())?;
        if y.ncols() != self.n_targets {
            return Err(TmpnnError::DimensionMismatch {
                what: "target count",
                expected: self.n_targets,
                found: y.ncols(),
            });
        }
        if x.nrows() != y.nrows() {
            return Err(TmpnnError::DimensionMismatch {
                what: "batch rows",
                expected: x.nrows(),
                found: y.nrows(),
            });
        }
        if x.nrows() == 0 {
            return Err(TmpnnError::EmptyDataset);
        }
        let (sse, mut grad) = self.sse_and_gradient(x, y)?;
        let denom = (x.nrows() * self.n_targets) as f64;
        let mut loss = sse / denom;

        let (l1, l2) = (self.reg_l1, self.reg_l2);
        if l1 > 0.0 || l2 > 0.0 {
            for (g, &w) in grad.weights.iter_mut().zip(self.map.as_slice()) {
                loss += l1 * w.abs() + l2 * w * w;
                *g += l1 * sign(w) + 2.0 * l2 * w;
            }
        }
        if !loss.is_finite()
            || grad.weights.iter().any(|g| !g.is_finite())
            || grad
                .init_state
                .as_ref()
                .is_some_and(|s| s.iter().any(|g| !g.is_finite()))
        {
            return Err(TmpnnError::Divergence {
                step: None,
                row: None,
                input: Vec::new(),
            });
        }
        Ok((loss, grad))
    }

    /// Sum of squared errors and gradient of `sse / (N m)` (no regularization).
    fn sse_and_gradient(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<(f64, Gradient)> {
        let n = x.nrows();
        let scale = 2.0 / (n * self.n_targets) as f64;
        let n_chunks = n.div_ceil(GRAD_CHUNK);
        let partials: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * GRAD_CHUNK;
                let hi = (lo + GRAD_CHUNK).min(n);
                let mut ws = Workspace::new(self);
                let mut sse = 0.0;
                for i in lo..hi {
                    sse += self
                        .backprop_sample(x.row(i), y.row(i), scale, &mut ws)
                        .map_err(|e| e.at_row(i))?;
                }
                Ok((sse, ws.grad_w, ws.grad_init))
            })
            .collect::<Result<_>>()?;

        let mut sse = 0.0;
        let mut gw = vec![0.0; self.map.param_count()];
        let mut gi = vec![0.0; self.init_state.len()];
        for (s, w, i) in partials {
            sse += s;
            gw.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
            gi.iter_mut().zip(&i).for_each(|(a, b)| *a += b);
        }
        Ok((
            sse,
            Gradient {
                weights: gw,
                init_state: self.init_trainable.then_some(gi),
            },
        ))
    }

    /// Forward and backward pass for one sample; accumulates gradients into
    /// `ws` and returns the sample's squared error.
    fn backprop_sample(
        &self,
        x: ArrayView1<f64>,
        y: ArrayView1<f64>,
        scale: f64,
        ws: &mut Workspace,
    ) -> Result<f64> {
        let d = self.dim();
        let nb = self.map.n_rows();
        let p = self.steps;

        self.initial_state_into(x, &mut ws.states[..d]);
        for t in 0..p {
            let (cur, rest) = ws.states[t * d..].split_at_mut(d);
            self.map
                .apply_into(cur, &mut ws.phis[t * nb..(t + 1) * nb], &mut rest[..d])
                .map_err(|e| e.at_step(t))?;
        }

        let last = &ws.states[p * d..(p + 1) * d];
        ws.cot.fill(0.0);
        let mut sse = 0.0;
        for (j, slot) in self.target_slots().enumerate() {
            let (pred, dpred) = self.readout(j, last[slot]);
            let r = pred - y[j];
            sse += r * r;
            ws.cot[slot] = scale * r * dpred;
        }

        let basis = self.map.basis();
        for t in (0..p).rev() {
            let phi = &ws.phis[t * nb..(t + 1) * nb];
            for (row, &m) in ws.grad_w.chunks_exact_mut(d).zip(phi) {
                if m == 0.0 {
                    continue;
                }
                for (g, &c) in row.iter_mut().zip(&ws.cot) {
                    *g += m * c;
                }
            }
            if t == 0 && !self.init_trainable {
                break;
            }
            self.map.pull_back(&ws.cot, &mut ws.h);
            ws.next_cot.fill(0.0);
            basis.jacobian_t_mul(phi, &ws.h, &mut ws.next_cot);
            std::mem::swap(&mut ws.cot, &mut ws.next_cot);
        }
        if self.init_trainable {
            for (g, c) in ws.grad_init.iter_mut().zip(&ws.cot[self.n_features..]) {
                *g += c;
            }
        }
        Ok(sse)
    }

    /// Feature and target scaling parameters are estimated here when enabled
    /// but not yet fitted.
    pub fn fit(
        &mut self,
        train: &Dataset,
        valid: Option<&Dataset>,
        config: &TrainConfig,
    ) -> Result<TrainReport> {
        config.validate()?;
        self.check_dataset(train)?;
        if let Some(v) = valid {
            self.check_dataset(v)?;
        }
        if matches!(self.scaling, Scaling::Unfitted) {
            self.scaling = Scaling::Fitted(Scaler::fit(train.x.view()));
        }
        if matches!(self.target_scaling, Scaling::Unfitted) {
            self.target_scaling = Scaling::Fitted(Scaler::fit(train.y.view()));
        }

        let n = train.len();
        let batch = match config.batch_size {
            BatchSize::Full => n,
            BatchSize::Size(b) => b.min(n),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut opt = AdamaxState::new(self.n_trainable(), config.optimizer);
        let mut params = self.flat_params();

        let mut epochs = Vec::with_capacity(config.epochs);
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        let mut wait = 0usize;
        let mut stopped_early = false;

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut lr = config.optimizer.learning_rate;
            let mut loss_sum = 0.0;
            let mut seen = 0usize;
            let mut skipped = 0usize;
            let n_batches = n.div_ceil(batch);

            for idx in order.chunks(batch) {
                let bx = train.x.select(Axis(0), idx);
                let by = train.y.select(Axis(0), idx);
                match self.loss_and_gradient(bx.view(), by.view()) {
                    Ok((loss, grad)) => {
                        let mut g = grad.flatten();
                        if let Some(max) = config.grad_clip {
                            clip_gradient(&mut g, max);
                        }
                        opt.step_with_lr(&mut params, &g, lr)?;
                        self.set_flat_params(&params)?;
                        loss_sum += loss * idx.len() as f64;
                        seen += idx.len();
                    }
                    Err(e) if e.is_divergence() => {
                        skipped += 1;
                        lr *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            }
            if skipped == n_batches {
                return Err(TmpnnError::DivergentTraining { epoch });
            }
            let train_loss = loss_sum / seen as f64;

            let valid_loss = match valid {
                Some(v) => Some(match self.predict(v.x.view()) {
                    Ok(p) => metric_mse(v.y.view(), p.view())?,
                    Err(e) if e.is_divergence() => f64::INFINITY,
                    Err(e) => return Err(e),
                }),
                None => None,
            };
            epochs.push(EpochRecord {
                epoch,
                train_loss,
                valid_loss,
                skipped_batches: skipped,
                learning_rate: lr,
            });

            let monitored = valid_loss.unwrap_or(train_loss);
            let min_delta = config.early_stop.map_or(0.0, |e| e.min_delta);
            let improved = best
                .as_ref()
                .is_none_or(|(_, b, _)| monitored < b - min_delta);
            if improved {
                let snapshot = if config.early_stop.is_some() && valid.is_some() {
                    params.clone()
                } else {
                    Vec::new()
                };
                best = Some((epoch, monitored, snapshot));
                wait = 0;
            } else {
                wait += 1;
            }
            if let (Some(es), Some(_)) = (config.early_stop, valid) {
                if wait >= es.patience {
                    stopped_early = true;
                    break;
                }
            }
        }

        let best_epoch = best.as_ref().map_or(0, |b| b.0);
        if config.early_stop.is_some() && valid.is_some() {
            if let Some((_, _, snapshot)) = best {
                self.set_flat_params(&snapshot)?;
            }
        }

        let final_train_mse = self.mse_on(train);
        let final_valid_mse = valid.map(|v| self.mse_on(v));
        Ok(TrainReport {
            epochs,
            best_epoch,
            stopped_early,
            final_train_mse,
            final_valid_mse,
        })
    }

    fn mse_on(&self, d: &Dataset) -> f64 {
        match self.predict(d.x.view()) {
            Ok(p) => metric_mse(d.y.view(), p.view()).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn check_dataset(&self, d: &Dataset) -> Result<()> {
        self.check_features(d.n_features())?;
        if d.n_targets() != self.n_targets {
            return Err(TmpnnError::DimensionMismatch {
                what: "target count",
                expected: self.n_targets,
                found: d.n_targets(),
            });
        }
        if d.is_empty() {
            return Err(TmpnnError::EmptyDataset);
        }
        Ok(())
    }
}

fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

struct Workspace {
    states: Vec<f64>,
    phis: Vec<f64>,
    cot: Vec<f64>,
    next_cot: Vec<f64>,
    h: Vec<f64>,
    grad_w: Vec<f64>,
    grad_init: Vec<f64>,
}

impl Workspace {
    fn new(model: &TmpnnModel) -> Self {
        let d = model.dim();
        let nb = model.map.n_rows();
        Self {
            states: vec![0.0; (model.steps + 1) * d],
            phis: vec![0.0; model.steps * nb],
            cot: vec![0.0; d],
            next_cot: vec![0.0; d],
            h: vec![0.0; nb],
            grad_w: vec![0.0; model.map.param_count()],
            grad_init: vec![0.0; model.init_state.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchSize {
    Full,
    Size(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub patience: usize,
    pub min_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub optimizer: AdamaxConfig,
    pub shuffle_seed: u64,
    pub early_stop: Option<EarlyStop>,
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: BatchSize::Size(256),
            optimizer: AdamaxConfig::default(),
            shuffle_seed: 0,
            early_stop: None,
            grad_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(TmpnnError::invalid("epochs must be at least 1"));
        }
        if self.batch_size == BatchSize::Size(0) {
            return Err(TmpnnError::invalid("batch size must be at least 1"));
        }
        if !(self.optimizer.learning_rate > 0.0 && self.optimizer.learning_rate.is_finite()) {
            return Err(TmpnnError::invalid("learning rate must be positive"));
        }
        if let Some(c) = self.grad_clip {
            if c.is_nan() || c <= 0.0 {
                return Err(TmpnnError::invalid("gradient clip norm must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean of the batch losses seen during the epoch.
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    pub skipped_batches: usize,
    /// Learning rate in effect at the end of the epoch.
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub final_train_mse: f64,
    pub final_valid_mse: Option<f64>,
}
