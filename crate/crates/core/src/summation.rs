//! Compensated accumulation and chunked reductions whose result does not
//! depend on how many threads execute them.

use num_complex::Complex64;
use rayon::prelude::*;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping both compensation terms.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Splits `[lo, hi)` into consecutive chunks of `chunk` integers.
pub fn chunk_bounds(lo: u64, hi: u64, chunk: u64) -> Vec<(u64, u64)> {
    assert!(chunk > 0);
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = hi.min(a.saturating_add(chunk));
        out.push((a, b));
        a = b;
    }
    out
}

/// Evaluates `f` on each chunk of `[lo, hi)` in parallel and merges the
/// partials left to right. Chunk boundaries depend only on `chunk`, so the
/// result is bit-identical for any thread count.
pub fn par_chunked<T, F, M>(lo: u64, hi: u64, chunk: u64, f: F, mut merge: M) -> Option<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
    M: FnMut(&mut T, T),
{
    let parts: Vec<T> = chunk_bounds(lo, hi, chunk)
        .into_par_iter()
        .map(|(a, b)| f(a, b))
        .collect();
    let mut iter = parts.into_iter();
    let mut acc = iter.next()?;
    for p in iter {
        merge(&mut acc, p);
    }
    Some(acc)
}
