use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, SeedMode, BOX_DIM};
use super::lstm::{FaultInjection, LstmLayerParams, StepCache};
use crate::data::{NormStats, NormalizedWindow, TrackWindow};
use crate::error::{Error, Result};
use crate::numerics::{
    fill_dropout_mask, gemv_acc, gemv_t_acc, outer_acc, grad_check, GradBuffer, GradCheckReport, Matrix, ParamId, ParamStore,
};
use crate::prediction::PredictionSet;

pub type NormBox = [f64; BOX_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active.
    Train,
    /// Deterministic; dropout disabled.
    Eval,
}

/// Final `(h, c)` of both encoder layers; the decoder's initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderContext {
    pub hidden: [Matrix; 2],
    pub cell: [Matrix; 2],
}

/// Decoder outputs in normalized coordinates, plus the input fed at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub outputs: Vec<NormBox>,
    pub inputs: Vec<NormBox>,
    /// `true` where the step consumed the model's own previous prediction.
    pub self_fed: Vec<bool>,
}

/// A normalized window with its encoder features precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSample {
    pub encoder_inputs: Vec<Vec<f64>>,
    pub boxes: Vec<NormBox>,
}

#[derive(Debug, Clone, Copy)]
struct Layers {
    l0: LstmLayerParams,
    l1: LstmLayerParams,
}

/// Two-layer LSTM encoder, two-layer LSTM decoder and an affine box head.
#[derive(Debug, Clone)]
pub struct Seq2Seq {
    cfg: ModelConfig,
    store: ParamStore,
    encoder: Layers,
    decoder: Layers,
    head_w: ParamId,
    head_b: ParamId,
    fault: Option<FaultInjection>,
}

struct LayerState {
    h: [Vec<f64>; 2],
    c: [Vec<f64>; 2],
}

struct StepTrace {
    l0: StepCache,
    l1: StepCache,
    mask: Option<Vec<f64>>,
}

struct Trace {
    encoder: Vec<StepTrace>,
    decoder: Vec<StepTrace>,
    decoded: Decoded,
}

/// Fresh parameters for `cfg`, deterministic in `seed`.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ParamStore> {
    Ok(Seq2Seq::init(cfg.clone(), seed)?.into_store())
}

impl Seq2Seq {
    pub fn init(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let h = cfg.hidden;
        let encoder = Layers {
            l0: LstmLayerParams::init(&mut store, "encoder.layer0", cfg.encoder_input_width(), h, &mut rng),
            l1: LstmLayerParams::init(&mut store, "encoder.layer1", h, h, &mut rng),
        };
        let decoder = Layers {
            l0: LstmLayerParams::init(&mut store, "decoder.layer0", BOX_DIM, h, &mut rng),
            l1: LstmLayerParams::init(&mut store, "decoder.layer1", h, h, &mut rng),
        };
        let bound = 1.0 / (h as f64).sqrt();
        let w = (0..BOX_DIM * h).map(|_| rng.gen_range(-bound..=bound)).collect();
        let head_w = store.insert("head.weight", Matrix::from_vec(BOX_DIM, h, w)?);
        let head_b = store.insert("head.bias", Matrix::zeros(BOX_DIM, 1));
        Ok(Self {
            cfg,
            store,
            encoder,
            decoder,
            head_w,
            head_b,
            fault: None,
        })
    }

    /// Wraps an existing store (e.g. from a checkpoint), checking every tensor shape.
    pub fn from_store(cfg: ModelConfig, store: ParamStore) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.hidden;
        let bind = |prefix: &str, input: usize| {
            LstmLayerParams::bind(&store, prefix, input, h)
                .ok_or_else(|| Error::config(format!("parameters for `{prefix}` missing or mis-shaped")))
        };
        let encoder = Layers {
            l0: bind("encoder.layer0", cfg.encoder_input_width())?,
            l1: bind("encoder.layer1", h)?,
        };
        let decoder = Layers {
            l0: bind("decoder.layer0", BOX_DIM)?,
            l1: bind("decoder.layer1", h)?,
        };
        let head = |name: &str, shape: (usize, usize)| {
            store
                .find(name)
                .filter(|&id| store.value(id).shape() == shape)
                .ok_or_else(|| Error::config(format!("parameter `{name}` missing or mis-shaped")))
        };
        let head_w = head("head.weight", (BOX_DIM, h))?;
        let head_b = head("head.bias", (BOX_DIM, 1))?;
        Ok(Self {
            cfg,
            store,
            encoder,
            decoder,
            head_w,
            head_b,
            fault: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn into_store(self) -> ParamStore {
        self.store
    }

    #[doc(hidden)]
    pub fn set_fault_injection(&mut self, fault: Option<FaultInjection>) {
        self.fault = fault;
    }

    /// Encoder features for the first `steps` frames: location, then IMU, then pose.
    pub fn encoder_features(&self, window: &NormalizedWindow, steps: usize) -> Result<Vec<Vec<f64>>> {
        if window.len() < steps || window.imu.len() < steps || window.pose.len() < steps {
            return Err(Error::contract(format!(
                "window has {} steps, need {steps}",
                window.len()
            )));
        }
        let f = self.cfg.features;
        Ok((0..steps)
            .map(|t| {
                let mut x = Vec::with_capacity(self.cfg.encoder_input_width());
                x.extend_from_slice(&window.boxes[t]);
                if f.imu {
                    x.extend_from_slice(&window.imu[t]);
                }
                if f.pose {
                    x.extend_from_slice(&window.pose[t]);
                }
                x
            })
            .collect())
    }

    /// Precomputes encoder features for a full observation + prediction window.
    pub fn prepare(&self, window: &NormalizedWindow) -> Result<PreparedSample> {
        let need = self.cfg.window_len();
        if window.len() < need {
            return Err(Error::contract(format!(
                "sample has {} steps, need t_obsv + t_pred = {need}",
                window.len()
            )));
        }
        Ok(PreparedSample {
            encoder_inputs: self.encoder_features(window, self.cfg.t_obsv)?,
            boxes: window.boxes[..need].to_vec(),
        })
    }

    fn dropout_mask<R: Rng + ?Sized>(&self, mode: Mode, rng: &mut R) -> Result<Option<Vec<f64>>> {
        if mode == Mode::Eval || self.cfg.dropout == 0.0 {
            return Ok(None);
        }
        let mut mask = vec![0.0; self.cfg.hidden];
        fill_dropout_mask(&mut mask, self.cfg.dropout, rng)?;
        Ok(Some(mask))
    }

    #[allow(clippy::too_many_arguments)]
    fn step<R: Rng + ?Sized>(
        &self,
        store: &ParamStore,
        layers: &Layers,
        state: &mut LayerState,
        x: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<StepTrace> {
        let l0 = layers.l0.forward(store, x, &state.h[0], &state.c[0]);
        let mask = self.dropout_mask(mode, rng)?;
        let between: Vec<f64> = match &mask {
            Some(m) => l0.h.iter().zip(m).map(|(a, b)| a * b).collect(),
            None => l0.h.clone(),
        };
        let l1 = layers.l1.forward(store, &between, &state.h[1], &state.c[1]);
        state.h = [l0.h.clone(), l1.h.clone()];
        state.c = [l0.c.clone(), l1.c.clone()];
        Ok(StepTrace { l0, l1, mask })
    }

    fn head(&self, store: &ParamStore, h: &[f64]) -> NormBox {
        let mut out = [0.0; BOX_DIM];
        out.copy_from_slice(store.value(self.head_b).as_slice());
        gemv_acc(store.value(self.head_w).as_slice(), h, &mut out);
        out
    }

    fn run_encoder<R: Rng + ?Sized>(
        &self,
        store: &ParamStore,
        inputs: &[Vec<f64>],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(LayerState, Vec<StepTrace>)> {
        let width = self.cfg.encoder_input_width();
        if let Some(bad) = inputs.iter().find(|x| x.len() != width) {
            return Err(Error::Dimension {
                op: "encoder input",
                lhs: (1, width),
                rhs: (1, bad.len()),
            });
        }
        let h = self.cfg.hidden;
        let mut state = LayerState {
            h: [vec![0.0; h], vec![0.0; h]],
            c: [vec![0.0; h], vec![0.0; h]],
        };
        let mut traces = Vec::with_capacity(inputs.len());
        for x in inputs {
            traces.push(self.step(store, &self.encoder, &mut state, x, mode, rng)?);
        }
        Ok((state, traces))
    }

    #[allow(clippy::too_many_arguments)]
    fn run_decoder<R: Rng + ?Sized>(
        &self,
        store: &ParamStore,
        mut state: LayerState,
        seed_box: NormBox,
        teacher: Option<&[NormBox]>,
        tf_prob: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Vec<StepTrace>, Decoded)> {
        if !(0.0..=1.0).contains(&tf_prob) {
            return Err(Error::contract(format!(
                "teacher-forcing probability must lie in [0, 1], got {tf_prob}"
            )));
        }
        let steps = self.cfg.decode_steps();
        if let Some(t) = teacher {
            if t.len() < steps - 1 {
                return Err(Error::contract(format!(
                    "teacher sequence has {} boxes, need {}",
                    t.len(),
                    steps - 1
                )));
            }
        } else if mode == Mode::Train && tf_prob > 0.0 {
            return Err(Error::contract(
                "teacher forcing requested in training mode without a teacher sequence",
            ));
        }

        let mut traces = Vec::with_capacity(steps);
        let mut decoded = Decoded {
            outputs: Vec::with_capacity(steps),
            inputs: Vec::with_capacity(steps),
            self_fed: Vec::with_capacity(steps),
        };
        for k in 0..steps {
            let (input, self_fed) = if k == 0 {
                (seed_box, false)
            } else {
                let forced = match teacher {
                    Some(_) if tf_prob >= 1.0 => true,
                    Some(_) if tf_prob > 0.0 => rng.gen::<f64>() < tf_prob,
                    _ => false,
                };
                match teacher {
                    Some(t) if forced => (t[k - 1], false),
                    _ => (decoded.outputs[k - 1], true),
                }
            };
            let trace = self.step(store, &self.decoder, &mut state, &input, mode, rng)?;
            decoded.outputs.push(self.head(store, &trace.l1.h));
            decoded.inputs.push(input);
            decoded.self_fed.push(self_fed);
            traces.push(trace);
        }
        Ok((traces, decoded))
    }

    /// Runs the encoder over exactly `t_obsv` normalized steps from a zero state.
    pub fn encode(&self, window: &NormalizedWindow) -> Result<EncoderContext> {
        if window.len() != self.cfg.t_obsv {
            return Err(Error::Dimension {
                op: "encode",
                lhs: (self.cfg.t_obsv, BOX_DIM),
                rhs: (window.len(), BOX_DIM),
            });
        }
        let inputs = self.encoder_features(window, self.cfg.t_obsv)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (state, _) = self.run_encoder(&self.store, &inputs, Mode::Eval, &mut rng)?;
        Ok(EncoderContext {
            hidden: [Matrix::column(&state.h[0]), Matrix::column(&state.h[1])],
            cell: [Matrix::column(&state.c[0]), Matrix::column(&state.c[1])],
        })
    }

    /// Decodes `t_pred - 1` boxes starting from `seed_box`.
    ///
    /// With a teacher, each input after the first is the true previous box
    /// with probability `tf_prob` (one coin per step), otherwise the previous
    /// prediction. `teacher[k]` is the true box at offset `+2 + k`.
    pub fn decode<R: Rng + ?Sized>(
        &self,
        ctx: &EncoderContext,
        seed_box: NormBox,
        teacher: Option<&[NormBox]>,
        tf_prob: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Decoded> {
        let h = self.cfg.hidden;
        for m in ctx.hidden.iter().chain(&ctx.cell) {
            if m.shape() != (h, 1) {
                return Err(Error::Dimension {
                    op: "decode context",
                    lhs: (h, 1),
                    rhs: m.shape(),
                });
            }
        }
        let state = LayerState {
            h: [ctx.hidden[0].as_slice().to_vec(), ctx.hidden[1].as_slice().to_vec()],
            c: [ctx.cell[0].as_slice().to_vec(), ctx.cell[1].as_slice().to_vec()],
        };
        Ok(self.run_decoder(&self.store, state, seed_box, teacher, tf_prob, mode, rng)?.1)
    }

    fn trace<R: Rng + ?Sized>(
        &self,
        store: &ParamStore,
        sample: &PreparedSample,
        tf_prob: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Trace> {
        let t0 = self.cfg.t_obsv;
        let (state, encoder) = self.run_encoder(store, &sample.encoder_inputs, mode, rng)?;
        let seed = sample.boxes[t0];
        let teacher = &sample.boxes[t0 + 1..];
        let (decoder, decoded) = self.run_decoder(store, state, seed, Some(teacher), tf_prob, mode, rng)?;
        Ok(Trace {
            encoder,
            decoder,
            decoded,
        })
    }

    fn targets<'a>(&self, sample: &'a PreparedSample) -> &'a [NormBox] {
        let start = self.cfg.t_obsv + 1;
        &sample.boxes[start..start + self.cfg.decode_steps()]
    }

    fn mse(outputs: &[NormBox], targets: &[NormBox]) -> f64 {
        let n = (outputs.len() * BOX_DIM) as f64;
        outputs
            .iter()
            .zip(targets)
            .flat_map(|(o, t)| o.iter().zip(t).map(|(a, b)| (a - b) * (a - b)))
            .sum::<f64>()
            / n
    }

    /// Mean squared error over the `t_pred - 1` decoded boxes and 4 coordinates,
    /// with the decoder seeded by the true box at `t0 + 1`.
    pub fn forward_loss<R: Rng + ?Sized>(
        &self,
        sample: &PreparedSample,
        tf_prob: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<f64> {
        self.forward_loss_on(&self.store, sample, tf_prob, mode, rng)
    }

    /// [`Seq2Seq::forward_loss`] evaluated with the tensors of `store`, which
    /// must share this model's layout (e.g. a perturbed copy).
    pub fn forward_loss_on<R: Rng + ?Sized>(
        &self,
        store: &ParamStore,
        sample: &PreparedSample,
        tf_prob: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<f64> {
        let trace = self.trace(store, sample, tf_prob, mode, rng)?;
        Ok(Self::mse(&trace.decoded.outputs, self.targets(sample)))
    }

    /// Loss plus full backpropagation through time; gradients are added into `grads`.
    ///
    /// Gradients flow through self-fed predictions into earlier decoder steps.
    pub fn loss_and_grad<R: Rng + ?Sized>(
        &self,
        sample: &PreparedSample,
        tf_prob: f64,
        mode: Mode,
        rng: &mut R,
        grads: &mut GradBuffer,
    ) -> Result<f64> {
        let trace = self.trace(&self.store, sample, tf_prob, mode, rng)?;
        let targets = self.targets(sample);
        let outputs = &trace.decoded.outputs;
        let loss = Self::mse(outputs, targets);
        let scale = 2.0 / (outputs.len() * BOX_DIM) as f64;
        let hs = self.cfg.hidden;
        let fault = self.fault;

        let mut dh = [vec![0.0; hs], vec![0.0; hs]];
        let mut dc = [vec![0.0; hs], vec![0.0; hs]];
        let mut fed_grad = [0.0; BOX_DIM];

        for k in (0..trace.decoder.len()).rev() {
            let step = &trace.decoder[k];
            let mut dout = [0.0; BOX_DIM];
            for d in 0..BOX_DIM {
                dout[d] = scale * (outputs[k][d] - targets[k][d]) + fed_grad[d];
            }
            outer_acc(&dout, &step.l1.h, grads.get_mut(self.head_w));
            for (g, d) in grads.get_mut(self.head_b).iter_mut().zip(&dout) {
                *g += d;
            }
            gemv_t_acc(self.store.value(self.head_w).as_slice(), &dout, &mut dh[1]);

            self.backprop_step(&self.decoder, step, &mut dh, &mut dc, grads, fault);
            let want_dx = trace.decoded.self_fed[k];
            let dx = self
                .decoder
                .l0
                .backward(&self.store, &step.l0, &mut dh[0], &mut dc[0], grads, want_dx, fault);
            fed_grad = match dx {
                Some(dx) => [dx[0], dx[1], dx[2], dx[3]],
                None => [0.0; BOX_DIM],
            };
        }

        for step in trace.encoder.iter().rev() {
            self.backprop_step(&self.encoder, step, &mut dh, &mut dc, grads, fault);
            self.encoder
                .l0
                .backward(&self.store, &step.l0, &mut dh[0], &mut dc[0], grads, false, fault);
        }
        Ok(loss)
    }

    /// Compares [`Seq2Seq::loss_and_grad`] against central differences of the
    /// mean training loss over `samples`. Every evaluation reuses an RNG seeded
    /// with `seed`, so teacher-forcing coins and dropout masks stay fixed.
    /// Parameter values are unchanged afterwards; gradients are cleared.
    pub fn gradient_check(
        &mut self,
        samples: &[PreparedSample],
        tf_prob: f64,
        seed: u64,
        h: f64,
    ) -> Result<GradCheckReport> {
        if samples.is_empty() {
            return Err(Error::contract("gradient check needs at least one sample"));
        }
        let scale = 1.0 / samples.len() as f64;
        let mut grads = self.store.grad_buffer();
        for sample in samples {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            self.loss_and_grad(sample, tf_prob, Mode::Train, &mut rng, &mut grads)?;
        }
        let mut store = std::mem::take(&mut self.store);
        store.zero_grad();
        store.accumulate(&grads, scale);
        let this = &*self;
        let report = grad_check(
            |s| {
                samples
                    .iter()
                    .map(|sample| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        this.forward_loss_on(s, sample, tf_prob, Mode::Train, &mut rng)
                            .unwrap_or(f64::NAN)
                    })
                    .sum::<f64>()
                    * scale
            },
            &mut store,
            h,
        );
        store.zero_grad();
        self.store = store;
        report
    }

    /// Backward through layer 1 and the dropout between the layers, leaving
    /// the gradient w.r.t. layer 0's output accumulated in `dh[0]`.
    fn backprop_step(
        &self,
        layers: &Layers,
        step: &StepTrace,
        dh: &mut [Vec<f64>; 2],
        dc: &mut [Vec<f64>; 2],
        grads: &mut GradBuffer,
        fault: Option<FaultInjection>,
    ) {
        let [dh0, dh1] = dh;
        let [_, dc1] = dc;
        let dx1 = layers
            .l1
            .backward(&self.store, &step.l1, dh1, dc1, grads, true, fault)
            .expect("dx requested");
        match &step.mask {
            Some(m) => {
                for ((d, x), mk) in dh0.iter_mut().zip(&dx1).zip(m) {
                    *d += x * mk;
                }
            }
            None => {
                for (d, x) in dh0.iter_mut().zip(&dx1) {
                    *d += x;
                }
            }
        }
    }

    /// Deterministic inference on a pixel-space window.
    ///
    /// The first `t_obsv` frames are observed. `OracleNext` additionally reads
    /// the true box of frame `t_obsv` (offset +1) as the decoder seed. Output
    /// boxes are denormalized and clamped to the frame.
    pub fn predict(&self, window: &TrackWindow, stats: &NormStats, seed_mode: SeedMode) -> Result<PredictionSet> {
        let t0 = self.cfg.t_obsv;
        if window.len() < t0 {
            return Err(Error::contract(format!(
                "window has {} frames, need {t0} observed",
                window.len()
            )));
        }
        let seed_frame = match seed_mode {
            SeedMode::LastObserved => t0 - 1,
            SeedMode::OracleNext => {
                if window.len() <= t0 {
                    return Err(Error::contract(
                        "oracle_next seeding needs the true box at t0+1",
                    ));
                }
                t0
            }
        };
        let norm = stats.normalize(window);
        let inputs = self.encoder_features(&norm, t0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (state, _) = self.run_encoder(&self.store, &inputs, Mode::Eval, &mut rng)?;
        let (_, decoded) = self.run_decoder(&self.store, state, norm.boxes[seed_frame], None, 0.0, Mode::Eval, &mut rng)?;
        let boxes = decoded
            .outputs
            .iter()
            .map(|b| {
                let clamped = b.map(|v| v.clamp(0.0, 1.0));
                stats.denormalize_box(&clamped).clamp(stats.width, stats.height)
            })
            .collect();
        Ok(PredictionSet::from_boxes(boxes))
    }
}
