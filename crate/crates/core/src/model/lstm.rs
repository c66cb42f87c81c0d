//! Single-direction LSTM with explicit per-step caches for backpropagation
//! through time. Gate rows are laid out `[input, forget, cell, output]`.

use rand::Rng;

use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};
use crate::scalar::{sigmoid, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Lstm<T> {
    /// `[4H, input]`
    pub w_x: Tensor<T>,
    /// `[4H, H]`
    pub w_h: Tensor<T>,
    /// `[4H]`
    pub b: Tensor<T>,
}

/// Sequence input: multi-hot index lists or dense vectors, one per step.
#[derive(Clone, Copy)]
pub enum SeqInput<'a, T> {
    Sparse(&'a [Vec<usize>]),
    Dense(&'a [Vec<T>]),
}

impl<T> SeqInput<'_, T> {
    pub fn len(&self) -> usize {
        match self {
            SeqInput::Sparse(s) => s.len(),
            SeqInput::Dense(d) => d.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepCache<T> {
    pub h_prev: Vec<T>,
    pub c_prev: Vec<T>,
    /// Activated gates, `4H`.
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> Lstm<T> {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data[hidden..2 * hidden].iter_mut().for_each(|v| *v = T::one());
        Lstm {
            w_x: Tensor::glorot(&[4 * hidden, input], rng),
            w_h: Tensor::glorot(&[4 * hidden, hidden], rng),
            b,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Lstm {
            w_x: Tensor::zeros(&self.w_x.shape),
            w_h: Tensor::zeros(&self.w_h.shape),
            b: Tensor::zeros(&self.b.shape),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols()
    }

    pub fn input(&self) -> usize {
        self.w_x.cols()
    }

    /// One step. `extra` is added to the gate pre-activations (used for
    /// inputs that are constant across the sequence).
    pub fn step(&self, x: StepInput<'_, T>, extra: Option<&[T]>, h_prev: &[T], c_prev: &[T]) -> StepCache<T> {
        let hd = self.hidden();
        let mut z = self.b.data.clone();
        if let Some(e) = extra {
            for (zi, &ei) in z.iter_mut().zip(e) {
                *zi += ei;
            }
        }
        match x {
            StepInput::Sparse(idx) => {
                let cols = self.input();
                for &j in idx {
                    for (r, zr) in z.iter_mut().enumerate() {
                        *zr += self.w_x.data[r * cols + j];
                    }
                }
            }
            StepInput::Dense(v) => matvec_acc(&self.w_x, v, &mut z),
        }
        matvec_acc(&self.w_h, h_prev, &mut z);

        let mut gates = z;
        for (k, g) in gates.iter_mut().enumerate() {
            *g = if (2 * hd..3 * hd).contains(&k) {
                g.tanh()
            } else {
                sigmoid(*g)
            };
        }
        let mut c = vec![T::zero(); hd];
        let mut tanh_c = vec![T::zero(); hd];
        let mut h = vec![T::zero(); hd];
        for k in 0..hd {
            let (i, f, g, o) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
            c[k] = f * c_prev[k] + i * g;
            tanh_c[k] = c[k].tanh();
            h[k] = o * tanh_c[k];
        }
        StepCache {
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            c,
            tanh_c,
            h,
        }
    }

    /// Runs the whole sequence; caches are indexed by time step regardless of
    /// direction.
    pub fn run(&self, input: SeqInput<'_, T>, extra: Option<&[T]>, reverse: bool) -> Vec<StepCache<T>> {
        let n = input.len();
        let hd = self.hidden();
        let mut out: Vec<Option<StepCache<T>>> = (0..n).map(|_| None).collect();
        let mut h = vec![T::zero(); hd];
        let mut c = vec![T::zero(); hd];
        for k in 0..n {
            let t = if reverse { n - 1 - k } else { k };
            let cache = self.step(input.at(t), extra, &h, &c);
            h.clone_from(&cache.h);
            c.clone_from(&cache.c);
            out[t] = Some(cache);
        }
        out.into_iter().map(|c| c.expect("every step visited")).collect()
    }

    /// Backpropagation through time. `dh[t]` is the loss gradient arriving at
    /// `h_t` from outside the recurrence. Accumulates into `grad`; returns
    /// input gradients for dense inputs, plus the gate gradients summed over
    /// time (the gradient of `extra`).
    pub fn backward(
        &self,
        caches: &[StepCache<T>],
        input: SeqInput<'_, T>,
        dh: &[Vec<T>],
        reverse: bool,
        grad: &mut Lstm<T>,
    ) -> (Option<Vec<Vec<T>>>, Vec<T>) {
        let n = caches.len();
        let hd = self.hidden();
        let mut dx_all: Option<Vec<Vec<T>>> = match input {
            SeqInput::Dense(_) => Some(vec![vec![T::zero(); self.input()]; n]),
            SeqInput::Sparse(_) => None,
        };
        let mut dz_sum = vec![T::zero(); 4 * hd];
        let mut dh_next = vec![T::zero(); hd];
        let mut dc_next = vec![T::zero(); hd];
        let mut dz = vec![T::zero(); 4 * hd];
        for k in 0..n {
            // reverse of the forward processing order
            let t = if reverse { k } else { n - 1 - k };
            let cache = &caches[t];
            let mut dc_prev = vec![T::zero(); hd];
            for j in 0..hd {
                let (i, f, g, o) = (
                    cache.gates[j],
                    cache.gates[hd + j],
                    cache.gates[2 * hd + j],
                    cache.gates[3 * hd + j],
                );
                let dhj = dh[t][j] + dh_next[j];
                let tc = cache.tanh_c[j];
                let dc = dhj * o * (T::one() - tc * tc) + dc_next[j];
                let d_o = dhj * tc;
                let d_i = dc * g;
                let d_g = dc * i;
                let d_f = dc * cache.c_prev[j];
                dc_prev[j] = dc * f;
                dz[j] = d_i * i * (T::one() - i);
                dz[hd + j] = d_f * f * (T::one() - f);
                dz[2 * hd + j] = d_g * (T::one() - g * g);
                dz[3 * hd + j] = d_o * o * (T::one() - o);
            }
            for (s, &d) in dz_sum.iter_mut().zip(&dz) {
                *s += d;
            }
            match input {
                SeqInput::Sparse(rows) => {
                    let cols = self.input();
                    for &j in &rows[t] {
                        for (r, &d) in dz.iter().enumerate() {
                            grad.w_x.data[r * cols + j] += d;
                        }
                    }
                }
                SeqInput::Dense(rows) => {
                    outer_acc(&mut grad.w_x, &dz, &rows[t]);
                    if let Some(dx) = dx_all.as_mut() {
                        matvec_t_acc(&self.w_x, &dz, &mut dx[t]);
                    }
                }
            }
            outer_acc(&mut grad.w_h, &dz, &cache.h_prev);
            let mut dhp = vec![T::zero(); hd];
            matvec_t_acc(&self.w_h, &dz, &mut dhp);
            dh_next = dhp;
            dc_next = dc_prev;
        }
        for (g, &s) in grad.b.data.iter_mut().zip(&dz_sum) {
            *g += s;
        }
        (dx_all, dz_sum)
    }
}

#[derive(Clone, Copy)]
pub enum StepInput<'a, T> {
    Sparse(&'a [usize]),
    Dense(&'a [T]),
}

impl<'a, T> SeqInput<'a, T> {
    pub fn at(&self, t: usize) -> StepInput<'a, T> {
        match *self {
            SeqInput::Sparse(s) => StepInput::Sparse(&s[t]),
            SeqInput::Dense(d) => StepInput::Dense(&d[t]),
        }
    }
}
