//! Adam with bias correction, oriented for gradient ascent.

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, params: AdamParams) -> Adam {
        Adam {
            params,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One ascent step over a parameter vector split into two slices; the
    /// moment state spans both, first slice first.
    pub fn step_pair(
        &mut self,
        a: &mut [f64],
        b: &mut [f64],
        grad_a: &[f64],
        grad_b: &[f64],
        lr: f64,
    ) {
        debug_assert_eq!(a.len() + b.len(), self.m.len());
        self.t += 1;
        let AdamParams { beta1, beta2, epsilon } = self.params;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let mut idx = 0;
        let mut apply = |params: &mut [f64], grad: &[f64]| {
            for (p, &g) in params.iter_mut().zip(grad) {
                self.m[idx] = beta1 * self.m[idx] + (1.0 - beta1) * g;
                self.v[idx] = beta2 * self.v[idx] + (1.0 - beta2) * g * g;
                let mhat = self.m[idx] / bc1;
                let vhat = self.v[idx] / bc2;
                *p += lr * mhat / (vhat.sqrt() + epsilon);
                idx += 1;
            }
        };
        apply(a, grad_a);
        apply(b, grad_b);
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step_pair(params, &mut [], grad, &[], lr);
    }
}
