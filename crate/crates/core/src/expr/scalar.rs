//! Number types the expression tape can be evaluated over.
//!
//! All derivative-carrying types are truncated Taylor expansions propagated in
//! forward mode. An empty gradient/Hessian stands for an exact zero, which
//! keeps constants allocation-free.

use smallvec::SmallVec;

pub trait Scalar: Clone {
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.value()`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    #[inline]
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
}

/// Value plus one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual1 {
    pub v: f64,
    pub d: f64,
}

impl Dual1 {
    pub fn var(v: f64) -> Self {
        Self { v, d: 1.0 }
    }
}

impl Scalar for Dual1 {
    #[inline]
    fn constant(c: f64) -> Self {
        Self { v: c, d: 0.0 }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            v: self.v + rhs.v,
            d: self.d + rhs.d,
        }
    }
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            v: self.v - rhs.v,
            d: self.d - rhs.d,
        }
    }
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self {
            v: self.v * rhs.v,
            d: self.d * rhs.v + self.v * rhs.d,
        }
    }
    #[inline]
    fn chain(self, f0: f64, f1: f64, _f2: f64) -> Self {
        Self {
            v: f0,
            d: f1 * self.d,
        }
    }
}

type Vecf = SmallVec<[f64; 8]>;

fn axpy_into(out: &mut Vecf, a: f64, x: &[f64]) {
    if out.len() < x.len() {
        out.resize(x.len(), 0.0);
    }
    for (o, xi) in out.iter_mut().zip(x) {
        *o += a * xi;
    }
}

fn scaled(a: f64, x: &[f64]) -> Vecf {
    x.iter().map(|xi| a * xi).collect()
}

/// Value plus full gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Vecf,
}

impl Jet {
    pub fn var(v: f64, index: usize, dim: usize) -> Self {
        let mut g: Vecf = SmallVec::from_elem(0.0, dim);
        g[index] = 1.0;
        Self { v, g }
    }

    pub fn gradient(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        out[..self.g.len()].copy_from_slice(&self.g);
        out
    }
}

impl Scalar for Jet {
    fn constant(c: f64) -> Self {
        Self {
            v: c,
            g: SmallVec::new(),
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(mut self, rhs: Self) -> Self {
        axpy_into(&mut self.g, 1.0, &rhs.g);
        self.v += rhs.v;
        self
    }
    fn sub(mut self, rhs: Self) -> Self {
        axpy_into(&mut self.g, -1.0, &rhs.g);
        self.v -= rhs.v;
        self
    }
    fn mul(self, rhs: Self) -> Self {
        let mut g = scaled(rhs.v, &self.g);
        axpy_into(&mut g, self.v, &rhs.g);
        Self {
            v: self.v * rhs.v,
            g,
        }
    }
    fn chain(self, f0: f64, f1: f64, _f2: f64) -> Self {
        Self {
            v: f0,
            g: scaled(f1, &self.g),
        }
    }
}

/// Value, gradient and Hessian (row-major, `dim × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    dim: usize,
}

impl Jet2 {
    pub fn var(v: f64, index: usize, dim: usize) -> Self {
        let mut g = vec![0.0; dim];
        g[index] = 1.0;
        Self {
            v,
            g,
            h: vec![0.0; dim * dim],
            dim,
        }
    }

    fn dim_of(a: &Self, b: &Self) -> usize {
        a.dim.max(b.dim)
    }

    fn padded(mut self, dim: usize) -> Self {
        if self.dim < dim {
            self.g.resize(dim, 0.0);
            self.h.resize(dim * dim, 0.0);
            self.dim = dim;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Self {
            v: c,
            g: Vec::new(),
            h: Vec::new(),
            dim: 0,
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(self, rhs: Self) -> Self {
        let n = Self::dim_of(&self, &rhs);
        let mut a = self.padded(n);
        let b = rhs.padded(n);
        a.v += b.v;
        a.g.iter_mut().zip(&b.g).for_each(|(x, y)| *x += y);
        a.h.iter_mut().zip(&b.h).for_each(|(x, y)| *x += y);
        a
    }
    fn sub(self, rhs: Self) -> Self {
        let n = Self::dim_of(&self, &rhs);
        let mut a = self.padded(n);
        let b = rhs.padded(n);
        a.v -= b.v;
        a.g.iter_mut().zip(&b.g).for_each(|(x, y)| *x -= y);
        a.h.iter_mut().zip(&b.h).for_each(|(x, y)| *x -= y);
        a
    }
    fn mul(self, rhs: Self) -> Self {
        let n = Self::dim_of(&self, &rhs);
        let a = self.padded(n);
        let b = rhs.padded(n);
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            g[i] = a.v * b.g[i] + b.v * a.g[i];
            for j in 0..n {
                let ij = i * n + j;
                h[ij] = a.v * b.h[ij] + b.v * a.h[ij] + a.g[i] * b.g[j] + b.g[i] * a.g[j];
            }
        }
        Self {
            v: a.v * b.v,
            g,
            h,
            dim: n,
        }
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim;
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = f1 * self.h[i * n + j] + f2 * self.g[i] * self.g[j];
            }
        }
        Self {
            v: f0,
            g: scaled(f1, &self.g).to_vec(),
            h,
            dim: n,
        }
    }
}
