use rand::Rng;

use crate::scalar::Scalar;

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, taking the last axis as
    /// fan-in and the first as fan-out.
    pub fn glorot<R: Rng>(shape: &[usize], rng: &mut R) -> Self {
        let fan_out = shape[0];
        let fan_in = *shape.last().unwrap();
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Tensor {
            shape: shape.to_vec(),
            data: (0..shape.iter().product::<usize>())
                .map(|_| T::of(rng.random_range(-limit..limit)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() > 1 {
            self.shape[1]
        } else {
            1
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn sum_squares(&self) -> T {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn scale(&mut self, s: T) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::of(x.to_f64_lossy())).collect(),
        }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    // Eight independent accumulators let the compiler vectorize the loop.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `out += W x` for a row-major `W` of shape `[out.len(), x.len()]`.
#[inline]
pub(crate) fn matvec_acc<T: Scalar>(w: &Tensor<T>, x: &[T], out: &mut [T]) {
    debug_assert_eq!(w.cols(), x.len());
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(w.row(r), x);
    }
}

/// `out += Wᵀ y`.
#[inline]
pub(crate) fn matvec_t_acc<T: Scalar>(w: &Tensor<T>, y: &[T], out: &mut [T]) {
    debug_assert_eq!(w.rows(), y.len());
    for (r, &yr) in y.iter().enumerate() {
        if yr == T::zero() {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(w.row(r)) {
            *o += wv * yr;
        }
    }
}

/// `G += y xᵀ`.
#[inline]
pub(crate) fn outer_acc<T: Scalar>(g: &mut Tensor<T>, y: &[T], x: &[T]) {
    for (r, &yr) in y.iter().enumerate() {
        if yr == T::zero() {
            continue;
        }
        for (gv, &xv) in g.row_mut(r).iter_mut().zip(x) {
            *gv += yr * xv;
        }
    }
}
