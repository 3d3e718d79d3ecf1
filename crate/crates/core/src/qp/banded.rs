//! Symmetric banded matrices and an unpivoted LDLᵀ factorization.
//!
//! Without pivoting the factorization exists for positive definite and for
//! quasi-definite matrices, which covers both linear systems the solver
//! builds.

#[derive(Clone, Debug)]
pub(crate) struct SymBand {
    n: usize,
    bw: usize,
    /// Row `i` stores columns `i - bw ..= i` at offsets `0 ..= bw`.
    data: Vec<f64>,
}

impl SymBand {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        if d > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and its mirror).
    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub(crate) fn mul(&self, x: &[f64], out: &mut [f64]) {
        let w = self.bw + 1;
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let lo = i.saturating_sub(self.bw);
            let mut s = row[self.bw] * x[i];
            for j in lo..i {
                let v = row[self.bw - (i - j)];
                s += v * x[j];
                out[j] += v * x[i];
            }
            out[i] += s;
        }
    }

    /// `L D Lᵀ` factors, or `None` if a pivot vanishes.
    pub(crate) fn ldlt(&self) -> Option<Ldlt> {
        let (n, bw) = (self.n, self.bw);
        let mut l = vec![0.0; n * (bw + 1)];
        let mut d = vec![0.0; n];
        let at = |i: usize, j: usize| i * (bw + 1) + (bw - (i - j));
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut djj = self.get(j, j);
            for k in lo..j {
                let ljk = l[at(j, k)];
                djj -= ljk * ljk * d[k];
            }
            if djj == 0.0 || !djj.is_finite() {
                return None;
            }
            d[j] = djj;
            for i in (j + 1)..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw);
                let mut s = self.get(i, j);
                for k in lo_i.max(lo)..j {
                    s -= l[at(i, k)] * l[at(j, k)] * d[k];
                }
                l[at(i, j)] = s / djj;
            }
        }
        Some(Ldlt { n, bw, l, d })
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Ldlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let lo = i.saturating_sub(self.bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.l[self.at(i, k)] * b[k];
            }
            b[i] = s;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let hi = (i + self.bw).min(n - 1);
            let mut s = b[i];
            for k in (i + 1)..=hi {
                s -= self.l[self.at(k, i)] * b[k];
            }
            b[i] = s;
        }
    }

    /// Number of negative pivots (the inertia's negative count).
    #[cfg(test)]
    pub(crate) fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|x| **x < 0.0).count()
    }
}
