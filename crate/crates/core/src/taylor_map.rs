//! The shared polynomial layer `Z ↦ W_0 + W_1 Z + … + W_k Z^[k]`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::basis::MonomialBasis;
use crate::error::{Result, TmpnnError};

/// Dense weights over the reduced basis.
///
/// Stored row-major with shape `basis.len() × dim`: row `i` holds the
/// coefficients of monomial `i` for every output component, so column `j`
/// is everything feeding output `j`. The degree-`q` block `W_q` is the row
/// slice [`MonomialBasis::degree_range`]`(q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorMapWeights {
    basis: Arc<MonomialBasis>,
    w: Vec<f64>,
}

/// Output of [`TaylorMapWeights::apply_with_grads`].
#[derive(Debug, Clone)]
pub struct MapGradients {
    pub output: Vec<f64>,
    /// Row-major `dim × dim`; entry `(j, v)` is `∂out_j / ∂z_v`.
    pub d_out_d_z: Vec<f64>,
    /// `∂out_j / ∂W[i][j] = weight_sensitivity[i]`; weight `(i, j)` does not
    /// touch any other output.
    pub weight_sensitivity: Vec<f64>,
}

impl TaylorMapWeights {
    pub fn zeros(dim: usize, order: usize) -> Result<Self> {
        let basis = Arc::new(MonomialBasis::new(dim, order)?);
        Ok(Self::zeros_on(basis))
    }

    pub fn zeros_on(basis: Arc<MonomialBasis>) -> Self {
        let w = vec![0.0; basis.len() * basis.dim()];
        Self { basis, w }
    }

    /// `W_1 = I`, everything else zero. Applying the map returns its input.
    pub fn identity(dim: usize, order: usize) -> Result<Self> {
        let mut weights = Self::zeros(dim, order)?;
        weights.add_identity(1.0);
        Ok(weights)
    }

    /// Identity plus i.i.d. `N(0, std²)` noise on every coefficient.
    pub fn perturbed_identity(dim: usize, order: usize, std: f64, seed: u64) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(TmpnnError::invalid("perturbation std must be finite and >= 0"));
        }
        let mut weights = Self::identity(dim, order)?;
        let normal = Normal::new(0.0, std).map_err(|e| TmpnnError::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in weights.w.iter_mut() {
            *v += normal.sample(&mut rng);
        }
        Ok(weights)
    }

    pub fn from_raw(basis: Arc<MonomialBasis>, w: Vec<f64>) -> Result<Self> {
        let expected = basis.len() * basis.dim();
        if w.len() != expected {
            return Err(TmpnnError::DimensionMismatch {
                what: "weight matrix",
                expected,
                found: w.len(),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("weight matrix"));
        }
        Ok(Self { basis, w })
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

    pub fn n_rows(&self) -> usize {
        self.basis.len()
    }

    /// Number of stored coefficients, `dim · |basis|`.
    pub fn param_count(&self) -> usize {
        self.w.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.w[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let d = self.dim();
        self.w[row * d + col] = value;
    }

    /// Rows of the degree-`q` block, row-major.
    pub fn degree_block(&self, q: usize) -> &[f64] {
        let r = self.basis.degree_range(q);
        let d = self.dim();
        &self.w[r.start * d..r.end * d]
    }

    /// Adds `scale · I` to the degree-1 block.
    pub(crate) fn add_identity(&mut self, scale: f64) {
        let d = self.dim();
        for j in 0..d {
            let row = self.basis.linear_index(j);
            self.w[row * d + j] += scale;
        }
    }

    /// `out = Wᵀ φ` for precomputed monomial values `phi`.
    pub(crate) fn combine(&self, phi: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out.fill(0.0);
        for (row, &m) in self.w.chunks_exact(d).zip(phi) {
            if m == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * m;
            }
        }
    }

    /// `h = W g`, the pull-back of an output cotangent onto monomials.
    pub(crate) fn pull_back(&self, g: &[f64], h: &mut [f64]) {
        let d = self.dim();
        for (hi, row) in h.iter_mut().zip(self.w.chunks_exact(d)) {
            *hi = row.iter().zip(g).map(|(w, g)| w * g).sum();
        }
    }

    /// One application on preallocated buffers; `phi` receives the monomial
    /// values of `z`. Returns a divergence error if the output is not finite.
    pub(crate) fn apply_into(&self, z: &[f64], phi: &mut [f64], out: &mut [f64]) -> Result<()> {
        self.basis.eval_into(z, phi);
        self.combine(phi, out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::Divergence {
                step: None,
                row: None,
                input: z.to_vec(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_state(z)?;
        let mut phi = vec![0.0; self.n_rows()];
        let mut out = vec![0.0; self.dim()];
        self.apply_into(z, &mut phi, &mut out)?;
        Ok(out)
    }

    pub fn apply_with_grads(&self, z: &[f64]) -> Result<MapGradients> {
        self.check_state(z)?;
        let d = self.dim();
        let mut phi = vec![0.0; self.n_rows()];
        let mut output = vec![0.0; d];
        self.apply_into(z, &mut phi, &mut output)?;

        // (Wᵀ J)[j][v] = Σ_i W[i][j] J[i][v]
        let jac = self.basis.jacobian(z)?;
        let mut d_out_d_z = vec![0.0; d * d];
        for (wrow, jrow) in self.w.chunks_exact(d).zip(jac.chunks_exact(d)) {
            for (j, &wij) in wrow.iter().enumerate() {
                if wij == 0.0 {
                    continue;
                }
                for (v, &jiv) in jrow.iter().enumerate() {
                    d_out_d_z[j * d + v] += wij * jiv;
                }
            }
        }
        Ok(MapGradients {
            output,
            d_out_d_z,
            weight_sensitivity: phi,
        })
    }

    fn check_state(&self, z: &[f64]) -> Result<()> {
        self.basis.check_input(z)
    }
}

pub fn identity_weights(dim: usize, order: usize) -> Result<TaylorMapWeights> {
    TaylorMapWeights::identity(dim, order)
}
