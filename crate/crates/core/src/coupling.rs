//! Two-body coupling kernels and their compiled per-lattice weight tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    None,
    NearestNeighbor,
    PowerLaw,
}

/// Pair coupling `J^{ij}` as a function of graph distance.
///
/// Power-law weight is `J · d(i,j)^(-alpha)`; nearest-neighbour is the same
/// restricted to `d = 1`. No Kac normalisation is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingKernel {
    pub kind: KernelKind,
    pub strength: f64,
    pub alpha: f64,
    pub cutoff: Option<usize>,
}

impl Default for CouplingKernel {
    fn default() -> Self {
        Self::none()
    }
}

impl CouplingKernel {
    pub fn none() -> Self {
        Self {
            kind: KernelKind::None,
            strength: 0.0,
            alpha: 0.0,
            cutoff: None,
        }
    }

    pub fn nearest_neighbor(strength: f64) -> Self {
        Self {
            kind: KernelKind::NearestNeighbor,
            strength,
            alpha: 0.0,
            cutoff: None,
        }
    }

    pub fn power_law(strength: f64, alpha: f64) -> Self {
        Self {
            kind: KernelKind::PowerLaw,
            strength,
            alpha,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength.is_finite() {
            return Err(Error::InvalidArgument(
                "coupling strength must be finite".into(),
            ));
        }
        if self.kind == KernelKind::PowerLaw && !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "power-law exponent must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.kind == KernelKind::None || self.strength == 0.0
    }

    /// Distance dependence without the strength; `None` for an absent kernel.
    pub fn shape(&self) -> Option<KernelShape> {
        match self.kind {
            KernelKind::None => None,
            KernelKind::NearestNeighbor => Some(KernelShape::NearestNeighbor),
            KernelKind::PowerLaw => Some(KernelShape::PowerLaw {
                alpha: self.alpha,
                cutoff: self.cutoff,
            }),
        }
    }

    pub fn weight(&self, d: usize) -> f64 {
        match self.shape() {
            None => 0.0,
            Some(s) => self.strength * s.unit_weight(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelShape {
    NearestNeighbor,
    PowerLaw { alpha: f64, cutoff: Option<usize> },
}

impl KernelShape {
    pub fn unit_weight(&self, d: usize) -> f64 {
        if d == 0 {
            return 0.0;
        }
        match *self {
            KernelShape::NearestNeighbor => {
                if d == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelShape::PowerLaw { alpha, cutoff } => {
                if cutoff.is_some_and(|c| d > c) {
                    0.0
                } else {
                    (d as f64).powf(-alpha)
                }
            }
        }
    }

    pub fn same_as(&self, other: &KernelShape) -> bool {
        match (self, other) {
            (KernelShape::NearestNeighbor, KernelShape::NearestNeighbor) => true,
            (
                KernelShape::PowerLaw {
                    alpha: a,
                    cutoff: c,
                },
                KernelShape::PowerLaw {
                    alpha: b,
                    cutoff: d,
                },
            ) => a.to_bits() == b.to_bits() && c == d,
            _ => false,
        }
    }

    /// Compiles the unit weights `w_ij` on a lattice.
    pub fn compile(&self, lattice: &LatticeSpec) -> CouplingMatrix {
        let n = lattice.n_sites();
        match *self {
            KernelShape::NearestNeighbor => {
                let rows = (0..n)
                    .map(|i| lattice.neighbors(i).into_iter().map(|j| (j, 1.0)).collect())
                    .collect();
                CouplingMatrix::sparse(rows)
            }
            KernelShape::PowerLaw { cutoff, .. } => {
                let dense = cutoff.is_none_or(|c| 4 * c >= lattice.max_distance());
                if dense {
                    let mut w = vec![0.0; n * n];
                    for i in 0..n {
                        for j in 0..n {
                            w[i * n + j] = self.unit_weight(lattice.distance(i, j));
                        }
                    }
                    CouplingMatrix::Dense { n, weights: w }
                } else {
                    let rows = (0..n)
                        .map(|i| {
                            (0..n)
                                .filter_map(|j| {
                                    let w = self.unit_weight(lattice.distance(i, j));
                                    (w != 0.0).then_some((j, w))
                                })
                                .collect()
                        })
                        .collect();
                    CouplingMatrix::sparse(rows)
                }
            }
        }
    }
}

/// Symmetric weight table `w_ij` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingMatrix {
    Sparse {
        offsets: Vec<usize>,
        cols: Vec<usize>,
        weights: Vec<f64>,
    },
    Dense {
        n: usize,
        weights: Vec<f64>,
    },
}

impl CouplingMatrix {
    fn sparse(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in rows {
            for (j, w) in row {
                cols.push(j);
                weights.push(w);
            }
            offsets.push(cols.len());
        }
        CouplingMatrix::Sparse {
            offsets,
            cols,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            CouplingMatrix::Sparse { offsets, .. } => offsets.len() - 1,
            CouplingMatrix::Dense { n, .. } => *n,
        }
    }

    /// `out_i = scale · Σ_j w_ij x_j`, overwriting `out`.
    pub fn apply(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            CouplingMatrix::Sparse {
                offsets,
                cols,
                weights,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for k in offsets[i]..offsets[i + 1] {
                        acc += weights[k] * x[cols[k]];
                    }
                    *o = scale * acc;
                }
            }
            CouplingMatrix::Dense { n, weights } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = scale * dot(&weights[i * n..(i + 1) * n], x);
                }
            }
        }
    }

    /// `Σ_j w_ij x_j` for a single row.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        match self {
            CouplingMatrix::Sparse {
                offsets,
                cols,
                weights,
            } => (offsets[i]..offsets[i + 1])
                .map(|k| weights[k] * x[cols[k]])
                .sum(),
            CouplingMatrix::Dense { n, weights } => dot(&weights[i * n..(i + 1) * n], x),
        }
    }

    /// `Σ_j w_ij S_j` for a single row.
    #[inline]
    pub fn row_vec_sum(&self, i: usize, spins: &[Vec3]) -> Vec3 {
        match self {
            CouplingMatrix::Sparse {
                offsets,
                cols,
                weights,
            } => {
                let mut acc = Vec3::ZERO;
                for k in offsets[i]..offsets[i + 1] {
                    acc += spins[cols[k]] * weights[k];
                }
                acc
            }
            CouplingMatrix::Dense { n, weights } => {
                let row = &weights[i * n..(i + 1) * n];
                let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
                for (w, s) in row.iter().zip(spins) {
                    x += w * s.x;
                    y += w * s.y;
                    z += w * s.z;
                }
                Vec3::new(x, y, z)
            }
        }
    }

    pub fn row_abs_sum(&self, i: usize) -> f64 {
        match self {
            CouplingMatrix::Sparse {
                offsets, weights, ..
            } => weights[offsets[i]..offsets[i + 1]]
                .iter()
                .map(|w| w.abs())
                .sum(),
            CouplingMatrix::Dense { n, weights } => {
                weights[i * n..(i + 1) * n].iter().map(|w| w.abs()).sum()
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            CouplingMatrix::Sparse {
                offsets,
                cols,
                weights,
            } => (offsets[i]..offsets[i + 1])
                .find(|&k| cols[k] == j)
                .map_or(0.0, |k| weights[k]),
            CouplingMatrix::Dense { n, weights } => weights[i * n + j],
        }
    }
}

/// Dot product with eight independent accumulators so the loop vectorises.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn power_law_weights() {
        let k = CouplingKernel::power_law(2.0, 1.5);
        assert_eq!(k.weight(0), 0.0);
        assert_eq!(k.weight(1), 2.0);
        assert!((k.weight(4) - 2.0 / 8.0).abs() < 1e-15);
        assert_eq!(k.with_cutoff(3).weight(4), 0.0);
        let nn = CouplingKernel::nearest_neighbor(-1.0);
        assert_eq!(nn.weight(1), -1.0);
        assert_eq!(nn.weight(2), 0.0);
        assert!(CouplingKernel::power_law(1.0, -1.0).validate().is_err());
    }

    #[test]
    fn dense_and_sparse_agree() {
        let l = LatticeSpec::chain(37, Boundary::Periodic).unwrap();
        let dense = KernelShape::PowerLaw {
            alpha: 1.8,
            cutoff: None,
        }
        .compile(&l);
        let sparse = KernelShape::PowerLaw {
            alpha: 1.8,
            cutoff: Some(3),
        }
        .compile(&l);
        assert!(matches!(dense, CouplingMatrix::Dense { .. }));
        assert!(matches!(sparse, CouplingMatrix::Sparse { .. }));
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut out = vec![0.0; 37];
        dense.apply(&x, 1.0, &mut out);
        for i in 0..37 {
            let brute: f64 = (0..37)
                .map(|j| {
                    let d = l.distance(i, j);
                    if d == 0 {
                        0.0
                    } else {
                        (d as f64).powf(-1.8) * x[j]
                    }
                })
                .sum();
            assert!((out[i] - brute).abs() < 1e-12);
            assert!((dense.row_dot(i, &x) - brute).abs() < 1e-12);
        }
        assert_eq!(sparse.get(0, 3), 3f64.powf(-1.8));
        assert_eq!(sparse.get(0, 4), 0.0);
    }
}
