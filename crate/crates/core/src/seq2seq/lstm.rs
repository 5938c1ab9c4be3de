//! A single LSTM layer with hand-written forward and backward steps.
//!
//! Gate rows are stacked `[input, forget, cell, output]`, each `hidden` long:
//!
//! ```text
//! a = W_ih x + W_hh h_prev + b
//! i = σ(a_i)  f = σ(a_f)  g = tanh(a_g)  o = σ(a_o)
//! c = f ⊙ c_prev + i ⊙ g
//! h = o ⊙ tanh(c)
//! ```

use rand::Rng;

use crate::numerics::{gemv_acc, gemv_t_acc, outer_acc, sigmoid, GradBuffer, Matrix, ParamId, ParamStore};

/// Handles to the three tensors of one layer inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmLayerParams {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

/// Deliberate gradient corruption, used to prove the gradient checker catches mistakes.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    /// Negates the forget-gate contribution in every backward step.
    FlipForgetGate,
}

/// Values saved by a forward step for its backward step.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`.
    pub gates: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmLayerParams {
    /// Registers a layer under `prefix`, drawing weights from
    /// `U(-1/sqrt(hidden), 1/sqrt(hidden))`; forget-gate biases start at 1.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut uniform = |rows: usize, cols: usize| {
            let data = (0..rows * cols)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            Matrix::from_vec(rows, cols, data).expect("shape")
        };
        let w_ih = uniform(4 * hidden, input);
        let w_hh = uniform(4 * hidden, hidden);
        let mut bias = Matrix::zeros(4 * hidden, 1);
        for j in hidden..2 * hidden {
            bias.set(j, 0, 1.0);
        }
        Self {
            w_ih: store.insert(format!("{prefix}.w_ih"), w_ih),
            w_hh: store.insert(format!("{prefix}.w_hh"), w_hh),
            bias: store.insert(format!("{prefix}.bias"), bias),
            input,
            hidden,
        }
    }

    /// Looks up an existing layer by name, checking tensor shapes.
    pub fn bind(store: &ParamStore, prefix: &str, input: usize, hidden: usize) -> Option<Self> {
        let w_ih = store.find(&format!("{prefix}.w_ih"))?;
        let w_hh = store.find(&format!("{prefix}.w_hh"))?;
        let bias = store.find(&format!("{prefix}.bias"))?;
        let ok = store.value(w_ih).shape() == (4 * hidden, input)
            && store.value(w_hh).shape() == (4 * hidden, hidden)
            && store.value(bias).shape() == (4 * hidden, 1);
        ok.then_some(Self {
            w_ih,
            w_hh,
            bias,
            input,
            hidden,
        })
    }

    pub(crate) fn forward(&self, store: &ParamStore, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
        let hs = self.hidden;
        debug_assert_eq!(x.len(), self.input);
        let mut a = store.value(self.bias).as_slice().to_vec();
        gemv_acc(store.value(self.w_ih).as_slice(), x, &mut a);
        gemv_acc(store.value(self.w_hh).as_slice(), h_prev, &mut a);

        for v in &mut a[..2 * hs] {
            *v = sigmoid(*v);
        }
        for v in &mut a[2 * hs..3 * hs] {
            *v = v.tanh();
        }
        for v in &mut a[3 * hs..] {
            *v = sigmoid(*v);
        }

        let mut c = vec![0.0; hs];
        let mut tanh_c = vec![0.0; hs];
        let mut h = vec![0.0; hs];
        for j in 0..hs {
            let (i, f, g, o) = (a[j], a[hs + j], a[2 * hs + j], a[3 * hs + j]);
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
        StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates: a,
            tanh_c,
            h,
            c,
        }
    }

    /// Backpropagates one step.
    ///
    /// `dh` and `dc` are the loss gradients w.r.t. this step's `h` and `c`.
    /// They are overwritten with the gradients w.r.t. `h_prev` and `c_prev`.
    /// Returns the gradient w.r.t. `x` when `want_dx` is set.
    pub(crate) fn backward(
        &self,
        store: &ParamStore,
        cache: &StepCache,
        dh: &mut [f64],
        dc: &mut [f64],
        grads: &mut GradBuffer,
        want_dx: bool,
        fault: Option<FaultInjection>,
    ) -> Option<Vec<f64>> {
        let hs = self.hidden;
        let gates = &cache.gates;
        let mut da = vec![0.0; 4 * hs];
        for j in 0..hs {
            let (i, f, g, o) = (gates[j], gates[hs + j], gates[2 * hs + j], gates[3 * hs + j]);
            let tc = cache.tanh_c[j];
            let d_o = dh[j] * tc;
            let d_c = dc[j] + dh[j] * o * (1.0 - tc * tc);
            let d_i = d_c * g;
            let mut d_f = d_c * cache.c_prev[j];
            if fault == Some(FaultInjection::FlipForgetGate) {
                d_f = -d_f;
            }
            let d_g = d_c * i;
            da[j] = d_i * i * (1.0 - i);
            da[hs + j] = d_f * f * (1.0 - f);
            da[2 * hs + j] = d_g * (1.0 - g * g);
            da[3 * hs + j] = d_o * o * (1.0 - o);
            dc[j] = d_c * f;
        }

        outer_acc(&da, &cache.x, grads.get_mut(self.w_ih));
        outer_acc(&da, &cache.h_prev, grads.get_mut(self.w_hh));
        for (g, d) in grads.get_mut(self.bias).iter_mut().zip(&da) {
            *g += d;
        }

        dh.iter_mut().for_each(|v| *v = 0.0);
        gemv_t_acc(store.value(self.w_hh).as_slice(), &da, dh);
        want_dx.then(|| {
            let mut dx = vec![0.0; self.input];
            gemv_t_acc(store.value(self.w_ih).as_slice(), &da, &mut dx);
            dx
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Sum of weighted hidden and cell outputs over a short sequence.
    fn sequence_loss(layer: &LstmLayerParams, store: &ParamStore, xs: &[Vec<f64>], wh: &[f64], wc: &[f64]) -> f64 {
        let hs = layer.hidden;
        let (mut h, mut c) = (vec![0.0; hs], vec![0.0; hs]);
        let mut loss = 0.0;
        for x in xs {
            let step = layer.forward(store, x, &h, &c);
            loss += step.h.iter().zip(wh).map(|(a, b)| a * b).sum::<f64>();
            h = step.h;
            c = step.c;
        }
        loss + c.iter().zip(wc).map(|(a, b)| a * b).sum::<f64>()
    }

    #[test]
    fn single_cell_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut store = ParamStore::new();
        let layer = LstmLayerParams::init(&mut store, "cell", 3, 4, &mut rng);
        let xs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let wh: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wc: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // Analytic gradient via BPTT.
        let mut caches = Vec::new();
        let (mut h, mut c) = (vec![0.0; 4], vec![0.0; 4]);
        for x in &xs {
            let step = layer.forward(&store, x, &h, &c);
            h = step.h.clone();
            c = step.c.clone();
            caches.push(step);
        }
        let mut grads = store.grad_buffer();
        let mut dh = vec![0.0; 4];
        let mut dc = wc.clone();
        for cache in caches.iter().rev() {
            for (d, w) in dh.iter_mut().zip(&wh) {
                *d += w;
            }
            layer.backward(&store, cache, &mut dh, &mut dc, &mut grads, true, None);
        }
        store.accumulate(&grads, 1.0);

        let report = grad_check(|s| sequence_loss(&layer, s, &xs, &wh, &wc), &mut store, 1e-5).unwrap();
        assert!(report.max_relative_error() < 1e-6, "{report:?}");
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let layer = LstmLayerParams::init(&mut store, "l", 2, 3, &mut rng);
        assert_eq!(store.value(layer.bias).as_slice(), &[0., 0., 0., 1., 1., 1., 0., 0., 0., 0., 0., 0.]);
        let bound = 1.0 / 3f64.sqrt();
        assert!(store.value(layer.w_ih).max_abs() <= bound);
        assert_eq!(LstmLayerParams::bind(&store, "l", 2, 3), Some(layer));
        assert_eq!(LstmLayerParams::bind(&store, "l", 3, 3), None);
    }
}
