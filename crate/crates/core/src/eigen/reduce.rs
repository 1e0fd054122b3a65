//! Orthogonal reduction of a symmetric matrix to tridiagonal form.
//!
//! Two routes produce `T = Qᵀ M Q`: Householder reflections for general
//! dense input and Givens bulge chasing for narrow-band input. Both keep
//! the factors of `Q` so that eigenvectors of `T` can be mapped back.

use crate::model::SymmetricMatrix;

/// Tridiagonal form plus the transformation needed to map vectors back.
pub(crate) struct Reduction {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub transform: Transform,
}

pub(crate) enum Transform {
    Identity,
    /// Reflector `k` acts on components `k+1..` as `I - beta·v·vᵀ`.
    Householder(Vec<(f64, Vec<f64>)>),
    /// Rotations in planes `(p, p+1)`, in the order they were applied.
    Givens(Vec<Rotation>),
    /// Only eigenvalues were requested.
    Discarded,
}

#[derive(Clone, Copy)]
pub(crate) struct Rotation {
    pub p: u32,
    pub c: f64,
    pub s: f64,
}

impl Transform {
    /// Maps an eigenvector of `T` to an eigenvector of `M`.
    pub fn apply(&self, y: &mut [f64]) {
        match self {
            Transform::Identity => {}
            Transform::Householder(reflectors) => {
                for (k, (beta, v)) in reflectors.iter().enumerate().rev() {
                    if *beta == 0.0 {
                        continue;
                    }
                    let tail = &mut y[k + 1..];
                    let proj: f64 = tail.iter().zip(v).map(|(a, b)| a * b).sum();
                    let f = beta * proj;
                    tail.iter_mut().zip(v).for_each(|(a, b)| *a -= f * b);
                }
            }
            Transform::Givens(rotations) => {
                for r in rotations.iter().rev() {
                    let p = r.p as usize;
                    let (yp, yq) = (y[p], y[p + 1]);
                    y[p] = r.c * yp - r.s * yq;
                    y[p + 1] = r.s * yp + r.c * yq;
                }
            }
            Transform::Discarded => panic!("reduction was computed without its transform"),
        }
    }
}

/// Already tridiagonal input: copy the bands.
pub(crate) fn copy_tridiagonal(m: &SymmetricMatrix) -> Reduction {
    let n = m.dim();
    Reduction {
        diag: (0..n).map(|i| m.get(i, i)).collect(),
        offdiag: (0..n.saturating_sub(1)).map(|i| m.get(i + 1, i)).collect(),
        transform: Transform::Identity,
    }
}

/// Householder tridiagonalisation, `O(n³)`.
pub(crate) fn householder(m: &SymmetricMatrix, keep_transform: bool) -> Reduction {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut reflectors = Vec::new();
    let mut offdiag = vec![0.0; n.saturating_sub(1)];

    for k in 0..n.saturating_sub(1) {
        let len = n - k - 1;
        let mut v: Vec<f64> = (0..len).map(|i| a[(k + 1 + i) * n + k]).collect();
        let tail_sq: f64 = v[1..].iter().map(|x| x * x).sum();
        if tail_sq == 0.0 {
            offdiag[k] = v[0];
            if keep_transform {
                reflectors.push((0.0, Vec::new()));
            }
            continue;
        }
        let x0 = v[0];
        let norm = (x0 * x0 + tail_sq).sqrt();
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|x| x * x).sum::<f64>();
        offdiag[k] = alpha;

        // p = beta · A22 · v
        let mut p = vec![0.0; len];
        for i in 0..len {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            p[i] = beta * row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let kappa = 0.5 * beta * p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for i in 0..len {
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            let (vi, wi) = (v[i], w[i]);
            for j in 0..len {
                row[j] -= vi * w[j] + wi * v[j];
            }
        }
        if keep_transform {
            reflectors.push((beta, v));
        }
    }

    Reduction {
        diag: (0..n).map(|i| a[i * n + i]).collect(),
        offdiag,
        transform: if keep_transform {
            Transform::Householder(reflectors)
        } else {
            Transform::Discarded
        },
    }
}

/// Symmetric band matrix with room for one bulge beyond the band.
struct BandWork {
    n: usize,
    w: usize,
    stride: usize,
    data: Vec<f64>,
}

impl BandWork {
    fn from_matrix(m: &SymmetricMatrix, bandwidth: usize) -> Self {
        let n = m.dim();
        let w = bandwidth + 1;
        let stride = 2 * w + 1;
        let mut data = vec![0.0; n * stride];
        for i in 0..n {
            let lo = i.saturating_sub(bandwidth);
            let hi = (i + bandwidth).min(n - 1);
            for j in lo..=hi {
                data[i * stride + j + w - i] = m.get(i, j);
            }
        }
        BandWork { n, w, stride, data }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.w, "({i}, {j}) outside band");
        i * self.stride + j + self.w - i
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// `A ← G A Gᵀ` with `G` rotating rows/columns `p` and `p + 1`.
    fn rotate(&mut self, p: usize, c: f64, s: f64) {
        let q = p + 1;
        let lo = q.saturating_sub(self.w);
        let hi = (p + self.w).min(self.n - 1);
        // rows
        for j in lo..=hi {
            let ip = self.idx(p, j);
            let iq = self.idx(q, j);
            let (ap, aq) = (self.data[ip], self.data[iq]);
            self.data[ip] = c * ap + s * aq;
            self.data[iq] = -s * ap + c * aq;
        }
        // columns
        for i in lo..=hi {
            let ip = self.idx(i, p);
            let iq = self.idx(i, q);
            let (ap, aq) = (self.data[ip], self.data[iq]);
            self.data[ip] = c * ap + s * aq;
            self.data[iq] = -s * ap + c * aq;
        }
    }

    /// Zeroes `(row, col)` with a rotation in plane `(row - 1, row)`.
    fn annihilate(&mut self, row: usize, col: usize, rotations: &mut Option<Vec<Rotation>>) {
        let a = self.get(row - 1, col);
        let b = self.get(row, col);
        if b == 0.0 {
            return;
        }
        let r = a.hypot(b);
        let (c, s) = (a / r, b / r);
        self.rotate(row - 1, c, s);
        let iz = self.idx(row, col);
        self.data[iz] = 0.0;
        let iz = self.idx(col, row);
        self.data[iz] = 0.0;
        if let Some(list) = rotations {
            list.push(Rotation {
                p: (row - 1) as u32,
                c,
                s,
            });
        }
    }
}

/// Givens reduction of a band matrix with half-bandwidth `bandwidth`.
///
/// Entries below the first subdiagonal are removed column by column, outer
/// diagonal first; each rotation pushes a bulge `bandwidth` rows down which
/// is chased off the end of the matrix before the next elimination.
pub(crate) fn band(m: &SymmetricMatrix, bandwidth: usize, keep_transform: bool) -> Reduction {
    let n = m.dim();
    let mut work = BandWork::from_matrix(m, bandwidth);
    let mut rotations = keep_transform.then(Vec::new);

    if bandwidth >= 2 {
        for col in 0..n.saturating_sub(2) {
            let outer = (col + bandwidth).min(n - 1);
            for row in (col + 2..=outer).rev() {
                work.annihilate(row, col, &mut rotations);
                // bulge at (row - 1 + bandwidth + 1, row - 1)
                let mut bulge_col = row - 1;
                let mut bulge_row = row + bandwidth;
                while bulge_row < n {
                    work.annihilate(bulge_row, bulge_col, &mut rotations);
                    bulge_col = bulge_row - 1;
                    bulge_row += bandwidth;
                }
            }
        }
    }

    Reduction {
        diag: (0..n).map(|i| work.get(i, i)).collect(),
        offdiag: (0..n.saturating_sub(1)).map(|i| work.get(i + 1, i)).collect(),
        transform: match rotations {
            Some(list) => Transform::Givens(list),
            None => Transform::Discarded,
        },
    }
}
