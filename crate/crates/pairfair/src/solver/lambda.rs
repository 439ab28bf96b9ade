//! The lambda-player: multiplicative column updates on a stochastic matrix
//! whose stationary distribution is the played lambda.
//!
//! Column `j` is an expert distribution updated by exponentiated gradient
//! with the payoff scaled by `lambda[j]`; the first payoff coordinate is
//! always zero (the objective slot), so no column can concentrate away from
//! row 0 entirely and the stationary distribution stays well defined.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LambdaState {
    /// Column-stochastic `(m+1) x (m+1)` matrix, row-major.
    pub matrix: Vec<f64>,
    pub dim: usize,
    pub lambda: Vec<f64>,
}

impl LambdaState {
    /// Uniform matrix; its stationary distribution is uniform.
    pub fn new(dim: usize) -> LambdaState {
        debug_assert!(dim >= 1);
        LambdaState {
            matrix: vec![1.0 / dim as f64; dim * dim],
            dim,
            lambda: vec![1.0 / dim as f64; dim],
        }
    }
}

/// Fixed point of a column-stochastic matrix by power iteration from the
/// uniform vector; `‖Mλ − λ‖₁ ≤ 1e−8` on return.
pub fn stationary_distribution(matrix: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut x = vec![1.0 / dim as f64; dim];
    let mut next = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    for _ in 0..10_000 {
        for (i, n) in next.iter_mut().enumerate() {
            *n = (0..dim).map(|j| matrix[i * dim + j] * x[j]).sum();
        }
        residual = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        // Renormalize to kill accumulated rounding drift.
        let sum: f64 = next.iter().sum();
        for n in next.iter_mut() {
            *n /= sum;
        }
        std::mem::swap(&mut x, &mut next);
        if residual <= 1e-8 {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        residual,
        iters: 10_000,
    })
}

/// One swap-regret step: multiply column `j` entrywise by
/// `exp(eta * lambda[j] * g[i])`, renormalize columns, recompute lambda.
pub fn swap_regret_update(state: &mut LambdaState, gradient: &[f64], eta: f64) -> Result<()> {
    let dim = state.dim;
    debug_assert_eq!(gradient.len(), dim);
    for j in 0..dim {
        let scale = eta * state.lambda[j];
        // Shift exponents by the column max: the renormalized column is the
        // same in exact arithmetic, while the factors stay in (0, 1] so large
        // payoffs cannot overflow. The floor at exp(-700) keeps every column
        // sum strictly positive even when entries have underflowed to zero.
        let shift = gradient
            .iter()
            .map(|&g| scale * g)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for i in 0..dim {
            let e = (scale * gradient[i] - shift).max(-700.0);
            let v = state.matrix[i * dim + j] * e.exp();
            state.matrix[i * dim + j] = v;
            sum += v;
        }
        for i in 0..dim {
            state.matrix[i * dim + j] /= sum;
        }
    }
    state.lambda = stationary_distribution(&state.matrix, dim)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column_sums(m: &[f64], dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|j| (0..dim).map(|i| m[i * dim + j]).sum())
            .collect()
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = LambdaState::new(4);
        let before = s.matrix.clone();
        let lam = s.lambda.clone();
        swap_regret_update(&mut s, &[0.0; 4], 0.5).unwrap();
        assert_eq!(s.matrix, before);
        assert_eq!(s.lambda, lam);
    }

    #[test]
    fn columns_stay_stochastic() {
        let mut s = LambdaState::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let g = [0.0, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            swap_regret_update(&mut s, &g, 0.3).unwrap();
            for c in column_sums(&s.matrix, 3) {
                assert!((c - 1.0).abs() < 1e-12);
            }
            let lsum: f64 = s.lambda.iter().sum();
            assert!((lsum - 1.0).abs() < 1e-9);
            assert!(s.lambda.iter().all(|&l| l >= 0.0));
        }
    }

    #[test]
    fn persistent_violation_shifts_mass_to_the_constraint() {
        let mut s = LambdaState::new(3);
        let mut prev_l1 = s.lambda[0];
        let mut prev_lc = s.lambda[1];
        for _ in 0..100 {
            swap_regret_update(&mut s, &[0.0, 0.3, -0.1], 0.5).unwrap();
            assert!(s.lambda[1] > prev_lc);
            assert!(s.lambda[0] < prev_l1);
            prev_lc = s.lambda[1];
            prev_l1 = s.lambda[0];
        }
        assert!(s.lambda[1] > 0.8, "lambda = {:?}", s.lambda);
    }

    #[test]
    fn stationary_of_uniform_and_identity() {
        let dim = 4;
        let uniform = vec![1.0 / dim as f64; dim * dim];
        let l = stationary_distribution(&uniform, dim).unwrap();
        for &v in &l {
            assert!((v - 0.25).abs() < 1e-12);
        }
        // Every vector is stationary for the identity; the uniform start is
        // already a fixed point and is returned unchanged.
        let mut id = vec![0.0; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = 1.0;
        }
        let l = stationary_distribution(&id, dim).unwrap();
        for &v in &l {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_matches_repeated_squaring_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let dim = 4;
            let mut m = vec![0.0; dim * dim];
            for j in 0..dim {
                let col: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 0.05).collect();
                let s: f64 = col.iter().sum();
                for i in 0..dim {
                    m[i * dim + j] = col[i] / s;
                }
            }
            let l = stationary_distribution(&m, dim).unwrap();
            // Oracle: square the matrix 40 times; all columns converge to
            // the stationary distribution for strictly positive matrices.
            let mut p = m.clone();
            for _ in 0..40 {
                let mut q = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        q[i * dim + j] =
                            (0..dim).map(|t| p[i * dim + t] * p[t * dim + j]).sum();
                    }
                }
                // Renormalize columns against rounding drift.
                for j in 0..dim {
                    let s: f64 = (0..dim).map(|i| q[i * dim + j]).sum();
                    for i in 0..dim {
                        q[i * dim + j] /= s;
                    }
                }
                p = q;
            }
            for i in 0..dim {
                assert!(
                    (l[i] - p[i * dim]).abs() < 1e-7,
                    "component {}: {} vs {}",
                    i,
                    l[i],
                    p[i * dim]
                );
            }
        }
    }
}
