//! Reduced monomial basis.
//!
//! A literal Kronecker power `z^[q]` contains every ordered product of `q`
//! state components, so `z1*z2` and `z2*z1` appear twice. The reduced basis
//! keeps one entry per distinct monomial, which is also what the parameter
//! count of a Taylor map counts.
//!
//! Ordering is graded: all monomials of degree 0, then degree 1, and so on.
//! Within a degree, exponent vectors are listed in descending lexicographic
//! order, so `z1^2` comes before `z1*z2`, which comes before `z2^2`. Model
//! files store weight rows in this order.

use std::collections::HashMap;

use crate::error::{Result, TmpnnError};

/// Identifier written into model files for the ordering above.
pub const ORDERING_ID: &str = "graded-desc-lex-v1";

/// One non-zero partial derivative of a monomial: `coef * monomial[lower]`
/// with respect to variable `var`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Partial {
    var: usize,
    coef: f64,
    lower: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    dim: usize,
    order: usize,
    exponents: Vec<Vec<u32>>,
    /// Start row of each degree block; `degree_starts[q]..degree_starts[q + 1]`.
    degree_starts: Vec<usize>,
    /// For every non-constant monomial, `(parent, var)` with
    /// `monomial = monomial[parent] * z[var]`.
    parents: Vec<(usize, usize)>,
    partials: Vec<Vec<Partial>>,
}

/// Binomial coefficient C(n, r) in u128, exact for the sizes we use.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of monomials of degree at most `order` in `dim` variables.
pub fn basis_size(dim: usize, order: usize) -> usize {
    (0..=order)
        .map(|q| binomial(dim - 1 + q, dim - 1) as usize)
        .sum()
}

fn push_degree(dim: usize, degree: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dim {
        prefix.push(degree);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=degree).rev() {
        prefix.push(e);
        push_degree(dim, degree - e, prefix, out);
        prefix.pop();
    }
}

impl MonomialBasis {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(TmpnnError::invalid("basis dimension must be at least 1"));
        }
        if order == 0 {
            return Err(TmpnnError::invalid("basis order must be at least 1"));
        }

        let mut exponents = Vec::with_capacity(basis_size(dim, order));
        let mut degree_starts = Vec::with_capacity(order + 2);
        for q in 0..=order {
            degree_starts.push(exponents.len());
            push_degree(dim, q as u32, &mut Vec::with_capacity(dim), &mut exponents);
        }
        degree_starts.push(exponents.len());

        let index: HashMap<&[u32], usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect();

        let mut parents = vec![(0, 0); exponents.len()];
        let mut partials = Vec::with_capacity(exponents.len());
        let mut scratch = vec![0u32; dim];
        for (i, e) in exponents.iter().enumerate() {
            let mut row = Vec::new();
            for var in 0..dim {
                if e[var] == 0 {
                    continue;
                }
                scratch.copy_from_slice(e);
                scratch[var] -= 1;
                let lower = index[scratch.as_slice()];
                row.push(Partial {
                    var,
                    coef: e[var] as f64,
                    lower,
                });
            }
            if let Some(first) = row.first() {
                parents[i] = (first.lower, first.var);
            }
            partials.push(row);
        }

        Ok(Self {
            dim,
            order,
            exponents,
            degree_starts,
            parents,
            partials,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Row range holding the monomials of total degree `q`.
    pub fn degree_range(&self, q: usize) -> std::ops::Range<usize> {
        assert!(q <= self.order, "degree {q} exceeds basis order {}", self.order);
        self.degree_starts[q]..self.degree_starts[q + 1]
    }

    /// Total degree of monomial `i`.
    pub fn degree_of(&self, i: usize) -> usize {
        self.exponents[i].iter().map(|&e| e as usize).sum()
    }

    /// Row of the degree-1 monomial `z_var`.
    pub fn linear_index(&self, var: usize) -> usize {
        debug_assert!(var < self.dim);
        1 + var
    }

    pub(crate) fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(TmpnnError::DimensionMismatch {
                what: "monomial input",
                expected: self.dim,
                found: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("monomial input"));
        }
        Ok(())
    }

    /// Evaluate every monomial at `z` into `out`. No validation.
    pub fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        out[0] = 1.0;
        for i in 1..out.len() {
            let (parent, var) = self.parents[i];
            out[i] = out[parent] * z[var];
        }
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_input(z)?;
        let mut out = vec![0.0; self.len()];
        self.eval_into(z, &mut out);
        Ok(out)
    }

    /// Jacobian of the monomial vector, row-major `len() × dim`.
    pub fn jacobian(&self, z: &[f64]) -> Result<Vec<f64>> {
        let values = self.eval(z)?;
        let mut jac = vec![0.0; self.len() * self.dim];
        for (i, row) in self.partials.iter().enumerate() {
            for p in row {
                jac[i * self.dim + p.var] = p.coef * values[p.lower];
            }
        }
        Ok(jac)
    }

    /// Computes `Jᵀ h` where `J` is the monomial Jacobian at the point whose
    /// monomial values are `values`. Accumulates into `out`.
    pub(crate) fn jacobian_t_mul(&self, values: &[f64], h: &[f64], out: &mut [f64]) {
        for (i, row) in self.partials.iter().enumerate() {
            let hi = h[i];
            if hi == 0.0 {
                continue;
            }
            for p in row {
                out[p.var] += hi * p.coef * values[p.lower];
            }
        }
    }
}

/// Free-function form of [`MonomialBasis::new`].
pub fn build_basis(dim: usize, order: usize) -> Result<MonomialBasis> {
    MonomialBasis::new(dim, order)
}

pub fn eval_monomials(basis: &MonomialBasis, z: &[f64]) -> Result<Vec<f64>> {
    basis.eval(z)
}

pub fn eval_monomial_jacobian(basis: &MonomialBasis, z: &[f64]) -> Result<Vec<f64>> {
    basis.jacobian(z)
}
