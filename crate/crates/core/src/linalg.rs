//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for selected
//! eigenvalues, inverse iteration for the corresponding vectors.

use crate::error::{Error, Result};

const LANES: usize = 8;

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Dimension(format!(
                "tridiagonal matrix with {} diagonal and {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Gershgorin bounds enclosing the spectrum.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let pad = 1e-12 * (hi.abs().max(lo.abs())).max(1e-300);
        (lo - pad, hi + pad)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0.. {
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.len() {
                break;
            }
            let e = self.off[i];
            q = self.diag[i + 1] - x - e * e / q;
        }
        count
    }

    /// Eigenvalue of the given rank, 0 being the smallest, to full precision.
    pub fn eigenvalue(&self, rank: usize) -> f64 {
        let (mut lo, mut hi) = self.spectrum_bounds();
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > rank {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues strictly above `threshold`, in descending order.
    pub fn eigenvalues_above(&self, threshold: f64) -> Vec<f64> {
        let n = self.len();
        let below = self.count_below(threshold);
        let ranks: Vec<usize> = (below..n).rev().collect();
        let mut out = Vec::with_capacity(ranks.len());
        for chunk in ranks.chunks(LANES) {
            out.extend_from_slice(&self.eigenvalue_batch(chunk));
        }
        out
    }

    /// The `count` largest eigenvalues, in descending order.
    pub fn largest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let n = self.len();
        let ranks: Vec<usize> = (n.saturating_sub(count)..n).rev().collect();
        let mut out = Vec::with_capacity(ranks.len());
        for chunk in ranks.chunks(LANES) {
            out.extend_from_slice(&self.eigenvalue_batch(chunk));
        }
        out
    }

    /// Counts for several shifts at once. The Sturm recurrence is a chain of
    /// dependent divisions; interleaving independent shifts hides latency.
    fn count_below_lanes(&self, x: &[f64; LANES]) -> [usize; LANES] {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = [0usize; LANES];
        let mut q = [0.0; LANES];
        for l in 0..LANES {
            q[l] = self.diag[0] - x[l];
        }
        let n = self.len();
        for i in 0..n {
            for l in 0..LANES {
                if q[l] == 0.0 {
                    q[l] = -tiny;
                }
                count[l] += (q[l] < 0.0) as usize;
            }
            if i + 1 == n {
                break;
            }
            let e2 = self.off[i] * self.off[i];
            let d = self.diag[i + 1];
            for l in 0..LANES {
                q[l] = d - x[l] - e2 / q[l];
            }
        }
        count
    }

    /// Bisection for up to `LANES` ranks simultaneously.
    fn eigenvalue_batch(&self, ranks: &[usize]) -> Vec<f64> {
        let (glo, ghi) = self.spectrum_bounds();
        let mut lo = [glo; LANES];
        let mut hi = [ghi; LANES];
        let mut done = [true; LANES];
        for l in 0..ranks.len() {
            done[l] = false;
        }
        for _ in 0..2000 {
            let mut mid = [0.0; LANES];
            for l in 0..LANES {
                mid[l] = 0.5 * (lo[l] + hi[l]);
                if mid[l] <= lo[l] || mid[l] >= hi[l] {
                    done[l] = true;
                }
            }
            if done.iter().all(|&d| d) {
                break;
            }
            let counts = self.count_below_lanes(&mid);
            for l in 0..ranks.len() {
                if done[l] {
                    continue;
                }
                if counts[l] > ranks[l] {
                    hi[l] = mid[l];
                } else {
                    lo[l] = mid[l];
                }
            }
        }
        (0..ranks.len()).map(|l| 0.5 * (lo[l] + hi[l])).collect()
    }

    /// Unit eigenvector for an accurately known eigenvalue.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.diag.iter().chain(self.off.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        // Start away from any particular eigenvector.
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.618_033_988_7).fract()).collect();
        for _ in 0..4 {
            let mut y = self.shifted_solve(lambda, &x, scale);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut y {
                *v /= norm;
            }
            x = y;
        }
        x
    }

    /// Solves `(T - shift I) y = rhs` by Gaussian elimination with partial
    /// pivoting. Exactly singular pivots are nudged, as inverse iteration
    /// requires.
    fn shifted_solve(&self, shift: f64, rhs: &[f64], scale: f64) -> Vec<f64> {
        let n = self.len();
        let nudge = f64::EPSILON * scale.max(1e-300);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        if n == 1 {
            let p = if d[0] == 0.0 { nudge } else { d[0] };
            return vec![b[0] / p];
        }
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = nudge;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - fact * tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                du[i] = tmp;
                b.swap(i, i + 1);
                b[i + 1] -= fact * b[i];
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = nudge;
        }
        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_matrix(n: usize, seed: u64) -> SymTridiagonal {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let diag = (0..n).map(|_| 4.0 * next()).collect();
        let off = (0..n - 1).map(|_| next()).collect();
        SymTridiagonal::new(diag, off).unwrap()
    }

    #[test]
    fn matches_dense_symmetric_eigen() {
        for (n, seed) in [(1, 1), (2, 7), (9, 3), (40, 11)] {
            let t = random_matrix(n, seed);
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = t.diag()[i];
                if i + 1 < n {
                    m[(i, i + 1)] = t.off()[i];
                    m[(i + 1, i)] = t.off()[i];
                }
            }
            let dense = m.clone().symmetric_eigen();
            let mut expected: Vec<f64> = dense.eigenvalues.iter().copied().collect();
            expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let got = t.eigenvalues_above(f64::NEG_INFINITY);
            assert_eq!(got.len(), n);
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-12, "{g} vs {e}");
            }
            for &lambda in &got {
                let v = t.eigenvector(lambda);
                let mv = &m * nalgebra::DVector::from_vec(v.clone());
                for i in 0..n {
                    assert!((mv[i] - lambda * v[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn count_below_is_monotone() {
        let t = random_matrix(30, 5);
        let (lo, hi) = t.spectrum_bounds();
        assert_eq!(t.count_below(lo), 0);
        assert_eq!(t.count_below(hi), 30);
        let mut prev = 0;
        for k in 0..=100 {
            let x = lo + (hi - lo) * k as f64 / 100.0;
            let c = t.count_below(x);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn rejects_mismatched_sizes() {
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
    }
}
