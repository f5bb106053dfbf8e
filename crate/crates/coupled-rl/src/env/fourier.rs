//! Fourier basis features for continuous states.
//!
//! Feature `j` is `cos(π · c_j · x̄)` where `x̄` is the state normalized
//! to `[0,1]^d` and the coefficient vectors `c_j` range over
//! `{0..order}^d` minus the all-zero vector, enumerated in mixed-radix
//! order with the last dimension fastest. The constant term is excluded,
//! giving `(order+1)^d − 1` features.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FourierError {
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("state has {got} dimensions, basis expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bound {0} is empty or reversed")]
    BadBounds(usize),
}

#[derive(Debug, Clone)]
pub struct FourierBasis {
    order: usize,
    bounds: Vec<(f64, f64)>,
}

impl FourierBasis {
    pub fn new(order: usize, bounds: Vec<(f64, f64)>) -> Result<Self, FourierError> {
        if order == 0 {
            return Err(FourierError::ZeroOrder);
        }
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(FourierError::BadBounds(i));
            }
        }
        Ok(FourierBasis { order, bounds })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn state_dim(&self) -> usize {
        self.bounds.len()
    }

    /// `(order+1)^d − 1`.
    pub fn num_features(&self) -> usize {
        (self.order + 1).pow(self.state_dim() as u32) - 1
    }

    /// Features of a state; out-of-bounds components are clamped before
    /// normalization, so every cosine argument stays in range.
    ///
    /// Evaluated as the real parts of running products of
    /// `exp(iπ k x̄_j)`, which visits the coefficient vectors in
    /// mixed-radix order without recomputing any cosine.
    pub fn features(&self, state: &[f64]) -> Result<Vec<f64>, FourierError> {
        let d = self.state_dim();
        if state.len() != d {
            return Err(FourierError::DimensionMismatch {
                expected: d,
                got: state.len(),
            });
        }
        let base = self.order + 1;
        // phases[j][k] = exp(iπ k x̄_j) as (re, im).
        let mut phases = Vec::with_capacity(d);
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            let normalized = ((state[j].clamp(lo, hi)) - lo) / (hi - lo);
            let (sin1, cos1) = (PI * normalized).sin_cos();
            let mut row = Vec::with_capacity(base);
            row.push((1.0, 0.0));
            for k in 1..base {
                let (re, im) = row[k - 1];
                row.push((re * cos1 - im * sin1, re * sin1 + im * cos1));
            }
            phases.push(row);
        }

        let mut out = Vec::with_capacity(self.num_features());
        let mut digits = vec![0usize; d];
        let mut partial: Vec<(f64, f64)> = vec![(1.0, 0.0); d + 1];
        loop {
            // Increment the mixed-radix counter (last dimension fastest).
            let mut pos = d;
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < base {
                    break;
                }
                digits[pos] = 0;
            }
            // Rebuild running products from the changed digit onward.
            for j in pos..d {
                let (pre, pim) = partial[j];
                let (re, im) = phases[j][digits[j]];
                partial[j + 1] = (pre * re - pim * im, pre * im + pim * re);
            }
            out.push(partial[d].0);
        }
    }
}
