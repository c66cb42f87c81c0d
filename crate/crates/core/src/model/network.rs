//! Encoder-decoder forward and backward passes.
//!
//! Two encoders read the piece: one over one-hot melody frames, one over the
//! concatenated one-hot beat strength and key. Each encoder stacks
//! `encoder_blocks` blocks of a Bi-LSTM followed by a per-frame `tanh`
//! projection. The last block projects only the final states (forward state
//! at the last frame, backward state at the first frame), giving one summary
//! vector per encoder. The two summaries form a context vector that the
//! unidirectional decoder stack sees at every frame, next to an embedding of
//! the previous chord token.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::lstm::{Lstm, SeqInput, StepCache, StepInput};
use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};
use super::ModelError;
use crate::encoding::{FrameEncoding, BEAT_CLASSES, KEY_CLASSES, MELODY_CLASSES};
use crate::scalar::{argmax, softmax, Scalar};

pub const META_CLASSES: usize = BEAT_CLASSES + KEY_CLASSES;

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderBlock<T> {
    pub fwd: Lstm<T>,
    pub bwd: Lstm<T>,
    /// `[P, 2H]`
    pub proj_w: Tensor<T>,
    pub proj_b: Tensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoder<T> {
    /// Gate weights for the context vector in the first layer, `[4D, 2P]`.
    pub ctx_w: Tensor<T>,
    pub layers: Vec<Lstm<T>>,
    /// `[V, E]`
    pub embedding: Tensor<T>,
    /// `[V, D]`
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
}

/// All trainable tensors. Gradients share this layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub melody: Vec<EncoderBlock<T>>,
    pub meta: Vec<EncoderBlock<T>>,
    pub decoder: Decoder<T>,
}

impl<T: Scalar> Params<T> {
    pub fn init(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let encoder = |input: usize, rng: &mut ChaCha8Rng| -> Vec<EncoderBlock<T>> {
            let mut blocks = Vec::new();
            let mut dim = input;
            for _ in 0..cfg.encoder_blocks {
                blocks.push(EncoderBlock {
                    fwd: Lstm::new(dim, cfg.encoder_hidden, rng),
                    bwd: Lstm::new(dim, cfg.encoder_hidden, rng),
                    proj_w: Tensor::glorot(&[cfg.projection, 2 * cfg.encoder_hidden], rng),
                    proj_b: Tensor::zeros(&[cfg.projection]),
                });
                dim = cfg.projection;
            }
            blocks
        };
        let melody = encoder(MELODY_CLASSES, rng);
        let meta = encoder(META_CLASSES, rng);
        let d = cfg.decoder_hidden;
        let ctx_w = Tensor::glorot(&[4 * d, 2 * cfg.projection], rng);
        let mut layers = Vec::new();
        for l in 0..cfg.decoder_layers {
            let input = if l == 0 { cfg.prev_chord_embedding } else { d };
            layers.push(Lstm::new(input, d, rng));
        }
        let decoder = Decoder {
            ctx_w,
            layers,
            embedding: Tensor::glorot(&[cfg.chord_vocab_size, cfg.prev_chord_embedding], rng),
            out_w: Tensor::glorot(&[cfg.chord_vocab_size, d], rng),
            out_b: Tensor::zeros(&[cfg.chord_vocab_size]),
        };
        Params { melody, meta, decoder }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }

    /// Dotted tensor names in the order of [`Params::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (enc_name, blocks) in [("melody", &self.melody), ("meta", &self.meta)] {
            for k in 0..blocks.len() {
                for dir in ["fwd", "bwd"] {
                    for t in ["w_x", "w_h", "b"] {
                        out.push(format!("{enc_name}.block{k}.{dir}.{t}"));
                    }
                }
                out.push(format!("{enc_name}.block{k}.proj.w"));
                out.push(format!("{enc_name}.block{k}.proj.b"));
            }
        }
        out.push("decoder.ctx_w".into());
        for l in 0..self.decoder.layers.len() {
            for t in ["w_x", "w_h", "b"] {
                out.push(format!("decoder.layer{l}.{t}"));
            }
        }
        out.push("decoder.embedding".into());
        out.push("output.w".into());
        out.push("output.b".into());
        out
    }

    /// All tensors in a fixed order.
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for b in self.melody.iter().chain(&self.meta) {
            for l in [&b.fwd, &b.bwd] {
                out.extend([&l.w_x, &l.w_h, &l.b]);
            }
            out.extend([&b.proj_w, &b.proj_b]);
        }
        let dec = &self.decoder;
        out.push(&dec.ctx_w);
        for l in &dec.layers {
            out.extend([&l.w_x, &l.w_h, &l.b]);
        }
        out.extend([&dec.embedding, &dec.out_w, &dec.out_b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        let Params { melody, meta, decoder } = self;
        for b in melody.iter_mut().chain(meta.iter_mut()) {
            let EncoderBlock {
                fwd,
                bwd,
                proj_w,
                proj_b,
            } = b;
            for l in [fwd, bwd] {
                out.extend([&mut l.w_x, &mut l.w_h, &mut l.b]);
            }
            out.extend([proj_w, proj_b]);
        }
        let Decoder {
            ctx_w,
            layers,
            embedding,
            out_w,
            out_b,
        } = decoder;
        out.push(ctx_w);
        for l in layers.iter_mut() {
            out.extend([&mut l.w_x, &mut l.w_h, &mut l.b]);
        }
        out.extend([embedding, out_w, out_b]);
        out
    }

    pub fn named(&self) -> Vec<(String, &Tensor<T>)> {
        self.tensor_names().into_iter().zip(self.tensors()).collect()
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.tensor_names().into_iter().zip(self.tensors_mut()).collect()
    }

    pub fn cast<U: Scalar>(&self) -> Params<U> {
        let mut out: Params<U> = Params {
            melody: Vec::new(),
            meta: Vec::new(),
            decoder: Decoder {
                ctx_w: self.decoder.ctx_w.cast(),
                layers: Vec::new(),
                embedding: self.decoder.embedding.cast(),
                out_w: self.decoder.out_w.cast(),
                out_b: self.decoder.out_b.cast(),
            },
        };
        let cast_lstm = |l: &Lstm<T>| Lstm {
            w_x: l.w_x.cast(),
            w_h: l.w_h.cast(),
            b: l.b.cast(),
        };
        let cast_block = |b: &EncoderBlock<T>| EncoderBlock {
            fwd: cast_lstm(&b.fwd),
            bwd: cast_lstm(&b.bwd),
            proj_w: b.proj_w.cast(),
            proj_b: b.proj_b.cast(),
        };
        out.melody = self.melody.iter().map(cast_block).collect();
        out.meta = self.meta.iter().map(cast_block).collect();
        out.decoder.layers = self.decoder.layers.iter().map(cast_lstm).collect();
        out
    }
}

/// Inverted dropout masks drawn from a seeded generator.
pub(crate) struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut ChaCha8Rng,
}

impl Dropout<'_> {
    fn mask<T: Scalar>(&mut self, n: usize) -> Vec<T> {
        let keep = T::of(1.0 / (1.0 - self.rate));
        (0..n)
            .map(|_| {
                if self.rng.random::<f64>() < self.rate {
                    T::zero()
                } else {
                    keep
                }
            })
            .collect()
    }
}

fn apply_mask<T: Scalar>(v: &mut [T], mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        for (x, &k) in v.iter_mut().zip(m) {
            *x *= k;
        }
    }
}

enum BlockOutput<T> {
    /// Per-frame projected outputs (after dropout) for intermediate blocks.
    Frames(Vec<Vec<T>>),
    Summary(Vec<T>),
}

struct BlockCache<T> {
    fwd: Vec<StepCache<T>>,
    bwd: Vec<StepCache<T>>,
    /// Projection outputs after `tanh`, before dropout.
    proj: Vec<Vec<T>>,
    masks: Vec<Option<Vec<T>>>,
}

pub(crate) struct EncoderCache<T> {
    blocks: Vec<BlockCache<T>>,
    /// Dense inputs of blocks 1.. (outputs of the previous block).
    dense_inputs: Vec<Vec<Vec<T>>>,
}

fn block_forward<T: Scalar>(
    block: &EncoderBlock<T>,
    input: SeqInput<'_, T>,
    last: bool,
    dropout: &mut Option<Dropout<'_>>,
) -> (BlockOutput<T>, BlockCache<T>) {
    let fwd = block.fwd.run(input, None, false);
    let bwd = block.bwd.run(input, None, true);
    let n = fwd.len();
    let hd = block.fwd.hidden();
    let project = |hf: &[T], hb: &[T]| -> Vec<T> {
        let mut joined = Vec::with_capacity(2 * hd);
        joined.extend_from_slice(hf);
        joined.extend_from_slice(hb);
        let mut y = block.proj_b.data.clone();
        matvec_acc(&block.proj_w, &joined, &mut y);
        y.iter_mut().for_each(|v| *v = v.tanh());
        y
    };
    let mut proj = Vec::new();
    let mut masks = Vec::new();
    let output = if last {
        let y = project(&fwd[n - 1].h, &bwd[0].h);
        let mask = dropout.as_mut().map(|d| d.mask(y.len()));
        let mut out = y.clone();
        apply_mask(&mut out, &mask);
        proj.push(y);
        masks.push(mask);
        BlockOutput::Summary(out)
    } else {
        let mut outs = Vec::with_capacity(n);
        for t in 0..n {
            let y = project(&fwd[t].h, &bwd[t].h);
            let mask = dropout.as_mut().map(|d| d.mask(y.len()));
            let mut out = y.clone();
            apply_mask(&mut out, &mask);
            proj.push(y);
            masks.push(mask);
            outs.push(out);
        }
        BlockOutput::Frames(outs)
    };
    (output, BlockCache { fwd, bwd, proj, masks })
}

pub(crate) fn encoder_forward<T: Scalar>(
    blocks: &[EncoderBlock<T>],
    input: &[Vec<usize>],
    dropout: &mut Option<Dropout<'_>>,
) -> (Vec<T>, EncoderCache<T>) {
    let mut caches = Vec::with_capacity(blocks.len());
    let mut dense_inputs: Vec<Vec<Vec<T>>> = Vec::new();
    let mut summary = Vec::new();
    for (k, block) in blocks.iter().enumerate() {
        let last = k + 1 == blocks.len();
        let seq = if k == 0 {
            SeqInput::Sparse(input)
        } else {
            SeqInput::Dense(dense_inputs.last().expect("previous block output"))
        };
        let (out, cache) = block_forward(block, seq, last, dropout);
        caches.push(cache);
        match out {
            BlockOutput::Frames(f) => dense_inputs.push(f),
            BlockOutput::Summary(s) => summary = s,
        }
    }
    (
        summary,
        EncoderCache {
            blocks: caches,
            dense_inputs,
        },
    )
}

fn encoder_backward<T: Scalar>(
    blocks: &[EncoderBlock<T>],
    input: &[Vec<usize>],
    cache: &EncoderCache<T>,
    d_summary: &[T],
    grads: &mut [EncoderBlock<T>],
) {
    let nb = blocks.len();
    let mut d_out: Vec<Vec<T>> = Vec::new();
    for k in (0..nb).rev() {
        let block = &blocks[k];
        let bc = &cache.blocks[k];
        let g = &mut grads[k];
        let n = bc.fwd.len();
        let hd = block.fwd.hidden();
        let mut dh_f = vec![vec![T::zero(); hd]; n];
        let mut dh_b = vec![vec![T::zero(); hd]; n];

        let mut back_proj = |y: &[T], mask: &Option<Vec<T>>, dy_in: &[T], hf: &[T], hb: &[T]| -> Vec<T> {
            let mut dpre: Vec<T> = dy_in.to_vec();
            apply_mask(&mut dpre, mask);
            for (d, &yv) in dpre.iter_mut().zip(y) {
                *d *= T::one() - yv * yv;
            }
            let mut joined = Vec::with_capacity(2 * hd);
            joined.extend_from_slice(hf);
            joined.extend_from_slice(hb);
            outer_acc(&mut g.proj_w, &dpre, &joined);
            for (gb, &d) in g.proj_b.data.iter_mut().zip(&dpre) {
                *gb += d;
            }
            let mut dj = vec![T::zero(); 2 * hd];
            matvec_t_acc(&block.proj_w, &dpre, &mut dj);
            dj
        };

        if k + 1 == nb {
            let dj = back_proj(&bc.proj[0], &bc.masks[0], d_summary, &bc.fwd[n - 1].h, &bc.bwd[0].h);
            dh_f[n - 1].copy_from_slice(&dj[..hd]);
            dh_b[0].copy_from_slice(&dj[hd..]);
        } else {
            for t in 0..n {
                let dj = back_proj(&bc.proj[t], &bc.masks[t], &d_out[t], &bc.fwd[t].h, &bc.bwd[t].h);
                dh_f[t].copy_from_slice(&dj[..hd]);
                dh_b[t].copy_from_slice(&dj[hd..]);
            }
        }

        let seq = if k == 0 {
            SeqInput::Sparse(input)
        } else {
            SeqInput::Dense(&cache.dense_inputs[k - 1])
        };
        let (dx_f, _) = block.fwd.backward(&bc.fwd, seq, &dh_f, false, &mut g.fwd);
        let (dx_b, _) = block.bwd.backward(&bc.bwd, seq, &dh_b, true, &mut g.bwd);
        if let (Some(mut a), Some(b)) = (dx_f, dx_b) {
            for (ra, rb) in a.iter_mut().zip(&b) {
                for (x, &y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            d_out = a;
        }
    }
}

/// Multi-hot encoder inputs for one piece.
pub(crate) struct EncoderInputs {
    pub melody: Vec<Vec<usize>>,
    pub meta: Vec<Vec<usize>>,
}

impl EncoderInputs {
    pub fn from_encoding(enc: &FrameEncoding) -> Self {
        let melody = enc.melody.iter().map(|&m| vec![m as usize]).collect();
        let meta = enc
            .beat
            .iter()
            .zip(&enc.key)
            .map(|(&b, &k)| vec![b as usize, BEAT_CLASSES + (k as i32 + 7) as usize])
            .collect();
        EncoderInputs { melody, meta }
    }

    /// Melody track reversed in time; meta unchanged.
    #[cfg(test)]
    pub fn reversed_melody(mut self) -> Self {
        self.melody.reverse();
        self
    }
}

/// Recurrent decoder state for step-wise generation.
#[derive(Clone, Debug)]
pub struct DecoderState<T> {
    h: Vec<Vec<T>>,
    c: Vec<Vec<T>>,
}

/// Precomputed context for one piece.
#[derive(Clone, Debug)]
pub struct Context<T> {
    pub vector: Vec<T>,
    /// `ctx_w · vector`, added to the first decoder layer's gates every step.
    gate_bias: Vec<T>,
}

pub(crate) struct ForwardCache<T> {
    melody: EncoderCache<T>,
    meta: EncoderCache<T>,
    context: Vec<T>,
    prev: Vec<usize>,
    emb: Vec<Vec<T>>,
    layer_caches: Vec<Vec<StepCache<T>>>,
    /// Layer outputs after dropout (inputs to the next layer).
    layer_outputs: Vec<Vec<Vec<T>>>,
    layer_masks: Vec<Vec<Option<Vec<T>>>>,
}

pub(crate) struct PieceLoss<T> {
    pub loss: T,
    pub correct: usize,
    pub frames: usize,
}

impl<T: Scalar> Params<T> {
    pub fn vocab_size(&self) -> usize {
        self.decoder.out_b.len()
    }

    pub(crate) fn context_of(
        &self,
        inputs: &EncoderInputs,
        dropout: &mut Option<Dropout<'_>>,
    ) -> (Context<T>, EncoderCache<T>, EncoderCache<T>) {
        let (ms, mc) = encoder_forward(&self.melody, &inputs.melody, dropout);
        let (ks, kc) = encoder_forward(&self.meta, &inputs.meta, dropout);
        let mut vector = ms;
        vector.extend(ks);
        let mut gate_bias = vec![T::zero(); self.decoder.ctx_w.rows()];
        matvec_acc(&self.decoder.ctx_w, &vector, &mut gate_bias);
        (Context { vector, gate_bias }, mc, kc)
    }

    pub fn context(&self, enc: &FrameEncoding) -> Context<T> {
        self.context_of(&EncoderInputs::from_encoding(enc), &mut None).0
    }

    pub fn initial_state(&self) -> DecoderState<T> {
        let d = self.decoder.layers[0].hidden();
        let n = self.decoder.layers.len();
        DecoderState {
            h: vec![vec![T::zero(); d]; n],
            c: vec![vec![T::zero(); d]; n],
        }
    }

    /// One decoder step without dropout; returns logits over the vocabulary.
    pub fn decode_step(&self, ctx: &Context<T>, prev: u32, state: &mut DecoderState<T>) -> Vec<T> {
        let dec = &self.decoder;
        let mut x: Vec<T> = dec.embedding.row(prev as usize).to_vec();
        for (l, layer) in dec.layers.iter().enumerate() {
            let extra = (l == 0).then_some(ctx.gate_bias.as_slice());
            let cache = layer.step(StepInput::Dense(&x), extra, &state.h[l], &state.c[l]);
            state.c[l] = cache.c;
            state.h[l] = cache.h.clone();
            x = cache.h;
        }
        let mut logits = dec.out_b.data.clone();
        matvec_acc(&dec.out_w, &x, &mut logits);
        logits
    }

    /// Teacher-forced forward pass with caches for the backward pass.
    pub(crate) fn forward_train(
        &self,
        inputs: &EncoderInputs,
        targets: &[u32],
        dropout: &mut Option<Dropout<'_>>,
    ) -> (Vec<Vec<T>>, ForwardCache<T>) {
        let (ctx, mc, kc) = self.context_of(inputs, dropout);
        let n = targets.len();
        let dec = &self.decoder;
        let prev: Vec<usize> = (0..n)
            .map(|t| if t == 0 { 0 } else { targets[t - 1] as usize })
            .collect();
        let emb: Vec<Vec<T>> = prev.iter().map(|&p| dec.embedding.row(p).to_vec()).collect();

        let mut layer_caches = Vec::with_capacity(dec.layers.len());
        let mut layer_outputs: Vec<Vec<Vec<T>>> = Vec::with_capacity(dec.layers.len());
        let mut layer_masks = Vec::with_capacity(dec.layers.len());
        for (l, layer) in dec.layers.iter().enumerate() {
            let input = if l == 0 { &emb } else { &layer_outputs[l - 1] };
            let extra = (l == 0).then_some(ctx.gate_bias.as_slice());
            let caches = layer.run(SeqInput::Dense(input), extra, false);
            let mut outs = Vec::with_capacity(n);
            let mut masks = Vec::with_capacity(n);
            for c in &caches {
                let mask = dropout.as_mut().map(|d| d.mask(c.h.len()));
                let mut h = c.h.clone();
                apply_mask(&mut h, &mask);
                outs.push(h);
                masks.push(mask);
            }
            layer_caches.push(caches);
            layer_outputs.push(outs);
            layer_masks.push(masks);
        }
        let top = layer_outputs.last().expect("at least one decoder layer");
        let logits: Vec<Vec<T>> = top
            .iter()
            .map(|h| {
                let mut z = dec.out_b.data.clone();
                matvec_acc(&dec.out_w, h, &mut z);
                z
            })
            .collect();
        (
            logits,
            ForwardCache {
                melody: mc,
                meta: kc,
                context: ctx.vector,
                prev,
                emb,
                layer_caches,
                layer_outputs,
                layer_masks,
            },
        )
    }

    /// Backward pass given `dlogits[t]`; accumulates into `grads`.
    pub(crate) fn backward(
        &self,
        inputs: &EncoderInputs,
        cache: &ForwardCache<T>,
        dlogits: &[Vec<T>],
        grads: &mut Params<T>,
    ) {
        let dec = &self.decoder;
        let n = dlogits.len();
        let nl = dec.layers.len();
        let top = &cache.layer_outputs[nl - 1];
        let d = dec.layers[0].hidden();
        let mut dh: Vec<Vec<T>> = vec![vec![T::zero(); d]; n];
        for t in 0..n {
            outer_acc(&mut grads.decoder.out_w, &dlogits[t], &top[t]);
            for (g, &v) in grads.decoder.out_b.data.iter_mut().zip(&dlogits[t]) {
                *g += v;
            }
            matvec_t_acc(&dec.out_w, &dlogits[t], &mut dh[t]);
        }
        let mut dz0 = Vec::new();
        for l in (0..nl).rev() {
            for (d, mask) in dh.iter_mut().zip(&cache.layer_masks[l]) {
                apply_mask(d, mask);
            }
            let input = if l == 0 {
                &cache.emb
            } else {
                &cache.layer_outputs[l - 1]
            };
            let (dx, dz_sum) = dec.layers[l].backward(
                &cache.layer_caches[l],
                SeqInput::Dense(input),
                &dh,
                false,
                &mut grads.decoder.layers[l],
            );
            let dx = dx.expect("dense decoder input");
            if l == 0 {
                for (t, row) in dx.iter().enumerate() {
                    for (g, &v) in grads.decoder.embedding.row_mut(cache.prev[t]).iter_mut().zip(row) {
                        *g += v;
                    }
                }
                dz0 = dz_sum;
            } else {
                dh = dx;
            }
        }
        outer_acc(&mut grads.decoder.ctx_w, &dz0, &cache.context);
        let mut dctx = vec![T::zero(); cache.context.len()];
        matvec_t_acc(&dec.ctx_w, &dz0, &mut dctx);
        let p = dctx.len() / 2;
        encoder_backward(
            &self.melody,
            &inputs.melody,
            &cache.melody,
            &dctx[..p],
            &mut grads.melody,
        );
        encoder_backward(&self.meta, &inputs.meta, &cache.meta, &dctx[p..], &mut grads.meta);
    }

    /// Cross-entropy summed over frames, with gradients scaled by
    /// `grad_scale` accumulated into `grads` when given.
    pub(crate) fn piece_loss(
        &self,
        enc: &FrameEncoding,
        dropout: &mut Option<Dropout<'_>>,
        grads: Option<(&mut Params<T>, T)>,
    ) -> PieceLoss<T> {
        let inputs = EncoderInputs::from_encoding(enc);
        let (logits, cache) = self.forward_train(&inputs, &enc.chord, dropout);
        let mut loss = T::zero();
        let mut correct = 0;
        let mut dlogits = Vec::with_capacity(logits.len());
        for (row, &target) in logits.iter().zip(&enc.chord) {
            let p = softmax(row);
            loss -= p[target as usize].max(T::min_positive_value()).ln();
            if argmax(row) == target as usize {
                correct += 1;
            }
            let mut d = p;
            d[target as usize] -= T::one();
            dlogits.push(d);
        }
        if let Some((g, scale)) = grads {
            for row in &mut dlogits {
                row.iter_mut().for_each(|v| *v *= scale);
            }
            self.backward(&inputs, &cache, &dlogits, g);
        }
        PieceLoss {
            loss,
            correct,
            frames: enc.chord.len(),
        }
    }

    /// Per-frame logits. With `teacher` the decoder conditions on the given
    /// previous chords; otherwise on its own greedy choices.
    pub fn forward(
        &self,
        cfg_dropout: f64,
        enc: &FrameEncoding,
        teacher: Option<&[u32]>,
        dropout_on: bool,
        seed: u64,
    ) -> Result<Vec<Vec<T>>, ModelError> {
        let n = enc.len();
        if enc.beat.len() != n || enc.key.len() != n || enc.chord.len() != n {
            return Err(ModelError::Shape(format!(
                "encoding tracks differ in length: melody {n}, beat {}, key {}, chord {}",
                enc.beat.len(),
                enc.key.len(),
                enc.chord.len()
            )));
        }
        if n == 0 {
            return Err(ModelError::Shape("empty encoding".into()));
        }
        let vocab = self.vocab_size();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dropout = (dropout_on && cfg_dropout > 0.0).then_some(Dropout {
            rate: cfg_dropout,
            rng: &mut rng,
        });
        let inputs = EncoderInputs::from_encoding(enc);
        match teacher {
            Some(t) => {
                if t.len() != n {
                    return Err(ModelError::Shape(format!("teacher length {} != {n}", t.len())));
                }
                if let Some(&bad) = t.iter().find(|&&c| c as usize >= vocab) {
                    return Err(ModelError::Shape(format!("teacher token {bad} >= vocabulary {vocab}")));
                }
                Ok(self.forward_train(&inputs, t, &mut dropout).0)
            }
            None => {
                let (ctx, _, _) = self.context_of(&inputs, &mut dropout);
                let mut state = self.initial_state();
                let mut prev = 0u32;
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let logits = self.decode_step(&ctx, prev, &mut state);
                    prev = argmax(&logits) as u32;
                    out.push(logits);
                }
                Ok(out)
            }
        }
    }
}
