//! Scoring models over a flat parameter vector.
//!
//! Two families are supported: a linear scorer `w.x + b` and a one-hidden-layer
//! ReLU network `v.relu(Wx + c) + b`. Both expose their parameters as a single
//! flat `theta` so the solver can treat optimization generically. The MLP
//! layout is `[W row-major, c, v, b]`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Mlp { hidden: usize },
}

/// Architecture plus input dimension; fixes the parameter count and layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dim: usize,
}

impl ModelSpec {
    pub fn linear(dim: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Linear,
            dim,
        }
    }

    pub fn mlp(dim: usize, hidden: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp { hidden },
            dim,
        }
    }

    /// Length of the flat parameter vector.
    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::Linear => self.dim + 1,
            ModelKind::Mlp { hidden } => (self.dim + 1) * hidden + hidden + 1,
        }
    }
}

/// A scorer with all parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub theta: Vec<f64>,
}

/// Deterministic initial model for `seed`.
///
/// Linear models start at zero. MLP weight matrices are drawn uniformly from
/// `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` with zero biases, using a seeded
/// ChaCha8 stream so initialization is reproducible across platforms.
pub fn init(spec: &ModelSpec, seed: u64) -> Model {
    let n = spec.param_count();
    let mut theta = vec![0.0; n];
    if let ModelKind::Mlp { hidden } = spec.kind {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w_bound = 1.0 / (spec.dim as f64).sqrt();
        for w in theta.iter_mut().take(hidden * spec.dim) {
            *w = (2.0 * rng.random::<f64>() - 1.0) * w_bound;
        }
        let v_bound = 1.0 / (hidden as f64).sqrt();
        let v_start = hidden * spec.dim + hidden;
        for v in theta.iter_mut().skip(v_start).take(hidden) {
            *v = (2.0 * rng.random::<f64>() - 1.0) * v_bound;
        }
    }
    Model { spec: *spec, theta }
}

impl Model {
    pub fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.spec.dim);
        match self.spec.kind {
            ModelKind::Linear => {
                let dim = self.spec.dim;
                let mut s = self.theta[dim];
                for d in 0..dim {
                    s += self.theta[d] * x[d];
                }
                s
            }
            ModelKind::Mlp { hidden } => {
                let dim = self.spec.dim;
                let (w, rest) = self.theta.split_at(hidden * dim);
                let (c, rest) = rest.split_at(hidden);
                let (v, b) = rest.split_at(hidden);
                let mut s = b[0];
                for k in 0..hidden {
                    let mut pre = c[k];
                    for d in 0..dim {
                        pre += w[k * dim + d] * x[d];
                    }
                    if pre > 0.0 {
                        s += v[k] * pre;
                    }
                }
                s
            }
        }
    }

    /// Adds `coef * d score(x) / d theta` into `out`.
    ///
    /// The ReLU subgradient takes the left-continuous choice: zero at a kink.
    /// Accumulating lets callers fold many per-example contributions into one
    /// pass, which keeps pairwise objectives linear in the number of examples.
    pub fn accumulate_score_gradient(&self, x: &[f64], coef: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.theta.len());
        match self.spec.kind {
            ModelKind::Linear => {
                let dim = self.spec.dim;
                for d in 0..dim {
                    out[d] += coef * x[d];
                }
                out[dim] += coef;
            }
            ModelKind::Mlp { hidden } => {
                let dim = self.spec.dim;
                let (w, rest) = self.theta.split_at(hidden * dim);
                let (c, rest) = rest.split_at(hidden);
                let (v, _b) = rest.split_at(hidden);
                let c_off = hidden * dim;
                let v_off = c_off + hidden;
                let b_off = v_off + hidden;
                for k in 0..hidden {
                    let mut pre = c[k];
                    for d in 0..dim {
                        pre += w[k * dim + d] * x[d];
                    }
                    if pre > 0.0 {
                        let cv = coef * v[k];
                        for d in 0..dim {
                            out[k * dim + d] += cv * x[d];
                        }
                        out[c_off + k] += cv;
                        out[v_off + k] += coef * pre;
                    }
                }
                out[b_off] += coef;
            }
        }
    }

    /// Gradient of `score(x) - score(x2)` with respect to `theta`.
    ///
    /// The bias component cancels exactly, so score differences are invariant
    /// to the bias by construction.
    pub fn score_diff_gradient(&self, x: &[f64], x2: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.theta.len()];
        self.accumulate_score_gradient(x, 1.0, &mut g);
        self.accumulate_score_gradient(x2, -1.0, &mut g);
        g
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|t| t.is_finite())
    }

    /// Plain-text serialization; parsing it back is bit-exact.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.spec.kind {
            ModelKind::Linear => s.push_str(&format!("model linear {}\n", self.spec.dim)),
            ModelKind::Mlp { hidden } => {
                s.push_str(&format!("model mlp {} {}\n", self.spec.dim, hidden))
            }
        }
        s.push_str(&format!("theta {}\n", self.theta.len()));
        for t in &self.theta {
            s.push_str(&format!("{:.16e}\n", t));
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Model> {
        let bad = |msg: &str| Error::ModelFormat {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let spec = match toks.as_slice() {
            ["model", "linear", dim] => ModelSpec::linear(
                dim.parse()
                    .map_err(|_| bad("bad dimension in model header"))?,
            ),
            ["model", "mlp", dim, hidden] => ModelSpec::mlp(
                dim.parse()
                    .map_err(|_| bad("bad dimension in model header"))?,
                hidden
                    .parse()
                    .map_err(|_| bad("bad hidden size in model header"))?,
            ),
            _ => return Err(bad("unrecognized model header")),
        };
        let count_line = lines.next().ok_or_else(|| bad("missing theta header"))?;
        let count: usize = count_line
            .strip_prefix("theta ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad("bad theta header"))?;
        if count != spec.param_count() {
            return Err(bad(&format!(
                "theta count {} does not match spec ({})",
                count,
                spec.param_count()
            )));
        }
        let mut theta = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("truncated theta block"))?;
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| bad(&format!("unparseable parameter {:?}", line)))?;
            if !v.is_finite() {
                return Err(bad("non-finite parameter"));
            }
            theta.push(v);
        }
        Ok(Model { spec, theta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn central_diff(model: &Model, x: &[f64], x2: &[f64], eps: f64) -> Vec<f64> {
        let mut g = vec![0.0; model.theta.len()];
        for i in 0..model.theta.len() {
            let mut hi = model.clone();
            hi.theta[i] += eps;
            let mut lo = model.clone();
            lo.theta[i] -= eps;
            g[i] = ((hi.score(x) - hi.score(x2)) - (lo.score(x) - lo.score(x2))) / (2.0 * eps);
        }
        g
    }

    #[test]
    fn linear_score_by_hand() {
        let m = Model {
            spec: ModelSpec::linear(2),
            theta: vec![1.0, -2.0, 0.5],
        };
        assert_eq!(m.score(&[2.0, 1.0]), 0.5);
    }

    #[test]
    fn param_counts() {
        assert_eq!(ModelSpec::linear(2).param_count(), 3);
        assert_eq!(ModelSpec::mlp(41, 10).param_count(), 431);
    }

    #[test]
    fn init_linear_is_zero() {
        let m = init(&ModelSpec::linear(5), 7);
        assert!(m.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn init_mlp_bounds_and_zero_biases() {
        let dim = 4;
        let hidden = 8;
        let m = init(&ModelSpec::mlp(dim, hidden), 3);
        let wb = 1.0 / (dim as f64).sqrt();
        let vb = 1.0 / (hidden as f64).sqrt();
        for &w in &m.theta[..hidden * dim] {
            assert!(w.abs() <= wb);
        }
        for &c in &m.theta[hidden * dim..hidden * dim + hidden] {
            assert_eq!(c, 0.0);
        }
        for &v in &m.theta[hidden * dim + hidden..hidden * dim + 2 * hidden] {
            assert!(v.abs() <= vb);
        }
        assert_eq!(*m.theta.last().unwrap(), 0.0);
        // Same seed reproduces, different seed does not.
        assert_eq!(init(&ModelSpec::mlp(dim, hidden), 3).theta, m.theta);
        assert_ne!(init(&ModelSpec::mlp(dim, hidden), 4).theta, m.theta);
    }

    #[test]
    fn diff_gradient_matches_finite_differences() {
        let x = [0.3, -1.2, 0.7];
        let x2 = [-0.4, 0.9, 1.5];
        for spec in [ModelSpec::linear(3), ModelSpec::mlp(3, 5)] {
            let mut m = init(&spec, 11);
            // Nudge linear weights off zero so the check is not trivial.
            for (i, t) in m.theta.iter_mut().enumerate() {
                *t += 0.05 * ((i as f64) * 0.7).sin();
            }
            let got = m.score_diff_gradient(&x, &x2);
            let want = central_diff(&m, &x, &x2, 1e-5);
            let num: f64 = got
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!(num <= 1e-4 * den.max(1e-12), "rel err {}", num / den);
        }
    }

    #[test]
    fn diff_gradient_bias_component_is_zero() {
        let m = init(&ModelSpec::mlp(2, 4), 5);
        let g = m.score_diff_gradient(&[1.0, 2.0], &[-0.5, 0.3]);
        assert_eq!(*g.last().unwrap(), 0.0);
        let lin = Model {
            spec: ModelSpec::linear(2),
            theta: vec![0.4, -0.3, 2.0],
        };
        let g = lin.score_diff_gradient(&[1.0, 2.0], &[-0.5, 0.3]);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let path = PathBuf::from("test");
        for spec in [ModelSpec::linear(3), ModelSpec::mlp(3, 4)] {
            let mut m = init(&spec, 9);
            m.theta[0] = 1.0 / 3.0;
            m.theta[1] = -0.0;
            *m.theta.last_mut().unwrap() = 2.5e-17;
            let back = Model::from_text(&m.to_text(), &path).unwrap();
            assert_eq!(back.spec, m.spec);
            for (a, b) in back.theta.iter().zip(&m.theta) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn from_text_rejects_bad_input() {
        let path = PathBuf::from("test");
        assert!(Model::from_text("", &path).is_err());
        assert!(Model::from_text("model cubic 3\ntheta 4\n", &path).is_err());
        assert!(Model::from_text("model linear 2\ntheta 2\n0.0\n0.0\n", &path).is_err());
        assert!(Model::from_text("model linear 1\ntheta 2\nnan\n0.0\n", &path).is_err());
        assert!(Model::from_text("model linear 1\ntheta 2\n0.0\n", &path).is_err());
    }
}
