//! ODE view of a trained model.
//!
//! One application of the map is an explicit Euler step of size `1/p` for
//!
//! ```text
//! dZ/dτ = A_0 + A_1 Z + A_2 Z^[2] + … + A_k Z^[k],   τ ∈ [0, 1]
//! ```
//!
//! with `A_q = p W_q` for `q ≠ 1` and `A_1 = p (W_1 − I)`. This module moves
//! between the two forms, integrates the ODE with classical RK4 for
//! comparison, prints it, and rebuilds models with more steps or a different
//! time horizon.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::basis::MonomialBasis;
use crate::error::{Result, TmpnnError};
use crate::model::TmpnnModel;
use crate::taylor_map::TaylorMapWeights;

/// Default number of RK4 steps for [`integrate_reference`].
pub const REFERENCE_STEPS: usize = 1000;

/// Coefficients below this magnitude are left out of [`render_ode`].
pub const PRINT_THRESHOLD: f64 = 1e-10;

/// Polynomial vector field over the same reduced basis and layout as
/// [`TaylorMapWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    basis: Arc<MonomialBasis>,
    a: Vec<f64>,
}

impl OdeSystem {
    pub fn zeros(basis: Arc<MonomialBasis>) -> Self {
        let a = vec![0.0; basis.len() * basis.dim()];
        Self { basis, a }
    }

    pub fn from_coefficients(basis: Arc<MonomialBasis>, a: Vec<f64>) -> Result<Self> {
        let expected = basis.len() * basis.dim();
        if a.len() != expected {
            return Err(TmpnnError::DimensionMismatch {
                what: "ODE coefficients",
                expected,
                found: a.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("ODE coefficients"));
        }
        Ok(Self { basis, a })
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    /// Row-major `|basis| × dim`.
    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let d = self.dim();
        self.a[row * d + col] = value;
    }

    /// Right-hand side `F(z)`.
    pub fn rhs(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut phi = vec![0.0; self.basis.len()];
        let mut out = vec![0.0; self.dim()];
        self.rhs_into(z, &mut phi, &mut out);
        Ok(out)
    }

    fn rhs_into(&self, z: &[f64], phi: &mut [f64], out: &mut [f64]) {
        let d = self.dim();
        self.basis.eval_into(z, phi);
        out.fill(0.0);
        for (row, &m) in self.a.chunks_exact(d).zip(phi.iter()) {
            if m == 0.0 {
                continue;
            }
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c * m;
            }
        }
    }
}

/// `A_q = p W_q` for `q ≠ 1`, `A_1 = p (W_1 − I)`.
pub fn extract_ode(model: &TmpnnModel) -> OdeSystem {
    map_to_ode(model.map(), model.steps() as f64)
}

/// The vector field whose `steps`-step Euler discretization is `map`.
pub fn map_to_ode(map: &TaylorMapWeights, steps: f64) -> OdeSystem {
    let basis = map.basis().clone();
    let d = basis.dim();
    let mut a: Vec<f64> = map.as_slice().to_vec();
    for j in 0..d {
        let i = basis.linear_index(j) * d + j;
        a[i] -= 1.0;
    }
    a.iter_mut().for_each(|v| *v *= steps);
    OdeSystem { basis, a }
}

/// Euler discretization with step `1/steps`: `W_q = A_q / p̄`,
/// `W_1 = I + A_1 / p̄`.
pub fn rebuild_map(ode: &OdeSystem, steps: usize) -> Result<TaylorMapWeights> {
    if steps == 0 {
        return Err(TmpnnError::invalid("steps must be at least 1"));
    }
    let p = steps as f64;
    let w: Vec<f64> = ode.a.iter().map(|v| v / p).collect();
    let mut map = TaylorMapWeights::from_raw(ode.basis.clone(), w)?;
    map.add_identity(1.0);
    Ok(map)
}

/// Weights of `map` carried over to `ratio`-scaled dynamics:
/// `W̄_q = ratio · W_q` for `q ≠ 1` and `W̄_1 = I + ratio · (W_1 − I)`.
fn scale_increment(map: &TaylorMapWeights, ratio: f64) -> Result<TaylorMapWeights> {
    let basis = map.basis().clone();
    let d = basis.dim();
    let mut w: Vec<f64> = map.as_slice().iter().map(|v| v * ratio).collect();
    for j in 0..d {
        let i = basis.linear_index(j) * d + j;
        w[i] = 1.0 + ratio * (map.as_slice()[i] - 1.0);
    }
    TaylorMapWeights::from_raw(basis, w)
}

/// Same vector field, integrated with `new_steps > steps` Euler steps:
/// `W̄_q = p W_q / p̄`, `W̄_1 = p W_1 / p̄ + (p̄ − p) I / p̄`.
pub fn raise_order(model: &TmpnnModel, new_steps: usize) -> Result<TmpnnModel> {
    let p = model.steps();
    if new_steps <= p {
        return Err(TmpnnError::invalid(format!(
            "new step count {new_steps} must exceed the current {p}"
        )));
    }
    let map = scale_increment(model.map(), p as f64 / new_steps as f64)?;
    model.clone().with_map(map)?.with_steps(new_steps)
}

/// Integration horizon `τ̄` instead of 1: `W̄_q = τ̄ W_q` for `q ≠ 1` and
/// `W̄_1 = τ̄ (W_1 − I) + I`.
pub fn rescale_time(model: &TmpnnModel, tau_bar: f64) -> Result<TmpnnModel> {
    if !(tau_bar > 0.0 && tau_bar.is_finite()) {
        return Err(TmpnnError::invalid("time horizon must be positive"));
    }
    let map = rescale_map(model.map(), tau_bar)?;
    model.clone().with_map(map)
}

/// Map-level form of [`rescale_time`]; accepts `τ̄ = 0`, which gives the
/// identity map.
pub fn rescale_map(map: &TaylorMapWeights, tau_bar: f64) -> Result<TaylorMapWeights> {
    if !(tau_bar >= 0.0 && tau_bar.is_finite()) {
        return Err(TmpnnError::invalid("time horizon must be finite and >= 0"));
    }
    scale_increment(map, tau_bar)
}

/// Classical fixed-step RK4 from `τ = 0` to `τ = 1`.
pub fn integrate_reference(ode: &OdeSystem, z0: &[f64], n_steps: usize) -> Result<Vec<f64>> {
    integrate_to(ode, z0, 1.0, n_steps)
}

/// Classical fixed-step RK4 from `τ = 0` to `τ = horizon`.
pub fn integrate_to(ode: &OdeSystem, z0: &[f64], horizon: f64, n_steps: usize) -> Result<Vec<f64>> {
    if n_steps == 0 {
        return Err(TmpnnError::invalid("n_steps must be at least 1"));
    }
    ode.basis.check_input(z0)?;
    let d = ode.dim();
    let h = horizon / n_steps as f64;
    let mut z = z0.to_vec();
    let mut phi = vec![0.0; ode.basis.len()];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for step in 0..n_steps {
        ode.rhs_into(&z, &mut phi, &mut k1);
        axpy(&z, 0.5 * h, &k1, &mut tmp);
        ode.rhs_into(&tmp, &mut phi, &mut k2);
        axpy(&z, 0.5 * h, &k2, &mut tmp);
        ode.rhs_into(&tmp, &mut phi, &mut k3);
        axpy(&z, h, &k3, &mut tmp);
        ode.rhs_into(&tmp, &mut phi, &mut k4);
        for i in 0..d {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::Divergence {
                step: Some(step),
                row: None,
                input: z0.to_vec(),
            });
        }
    }
    Ok(z)
}

fn axpy(z: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, zi), ki) in out.iter_mut().zip(z).zip(k) {
        *o = zi + a * ki;
    }
}

/// Rounds to 9 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn format_coefficient(c: f64) -> String {
    let rounded: f64 = format!("{c:.8e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if mag != 0.0 && !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

fn monomial_text(exponents: &[u32], names: &[String]) -> String {
    let mut parts = Vec::new();
    for (e, name) in exponents.iter().zip(names) {
        match e {
            0 => {}
            1 => parts.push(name.clone()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

/// One line per state variable, `d<name>/dτ = <terms>`, terms in basis order,
/// coefficients with magnitude below `threshold` omitted.
pub fn render_ode_with_threshold(
    ode: &OdeSystem,
    names: &[String],
    threshold: f64,
) -> Result<String> {
    if names.len() != ode.dim() {
        return Err(TmpnnError::DimensionMismatch {
            what: "variable names",
            expected: ode.dim(),
            found: names.len(),
        });
    }
    let mut out = String::new();
    for (j, name) in names.iter().enumerate() {
        let mut line = format!("d{name}/dτ =");
        let mut first = true;
        for (i, exps) in ode.basis.exponents().iter().enumerate() {
            let c = ode.get(i, j);
            if c.abs() < threshold {
                continue;
            }
            let mag = format_coefficient(c.abs());
            let term = if i == 0 {
                mag
            } else {
                format!("{mag}*{}", monomial_text(exps, names))
            };
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                let lead = if c < 0.0 { "-" } else { "" };
                write!(line, " {lead}{term}").unwrap();
                first = false;
            } else {
                write!(line, " {sign} {term}").unwrap();
            }
        }
        if first {
            line.push_str(" 0");
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn render_ode(ode: &OdeSystem, names: &[String]) -> Result<String> {
    render_ode_with_threshold(ode, names, PRINT_THRESHOLD)
}

/// Names for the extended state: features, then targets, then `h1..hl`.
pub fn state_names(feature_names: &[String], target_names: &[String], n_latent: usize) -> Vec<String> {
    feature_names
        .iter()
        .chain(target_names)
        .cloned()
        .chain((1..=n_latent).map(|i| format!("h{i}")))
        .collect()
}
