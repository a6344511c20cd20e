//! Chains and square lattices with periodic or open boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// A one-dimensional chain (`dimension = 1`, `N = L`) or a square lattice
/// (`dimension = 2`, `N = L × L`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    dimension: usize,
    extent: usize,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(dimension: usize, extent: usize, boundary: Boundary) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::InvalidLattice(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if extent < 2 {
            return Err(Error::InvalidLattice(format!(
                "extent must be at least 2, got {extent}"
            )));
        }
        Ok(Self {
            dimension,
            extent,
            boundary,
        })
    }

    pub fn chain(n: usize, boundary: Boundary) -> Result<Self> {
        Self::new(1, n, boundary)
    }

    pub fn square(l: usize, boundary: Boundary) -> Result<Self> {
        Self::new(2, l, boundary)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.extent.pow(self.dimension as u32)
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        if self.dimension == 1 {
            (i, 0)
        } else {
            (i % self.extent, i / self.extent)
        }
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        if self.dimension == 1 {
            x
        } else {
            y * self.extent + x
        }
    }

    fn axis_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        match self.boundary {
            Boundary::Periodic => d.min(self.extent - d),
            Boundary::Open => d,
        }
    }

    /// Graph distance between two sites: minimum-image for periodic boundaries,
    /// Manhattan distance on the square lattice.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let (xi, yi) = self.coords(i);
        let (xj, yj) = self.coords(j);
        self.axis_distance(xi, xj) + self.axis_distance(yi, yj)
    }

    /// Largest graph distance that occurs on this lattice.
    pub fn max_distance(&self) -> usize {
        let per_axis = match self.boundary {
            Boundary::Periodic => self.extent / 2,
            Boundary::Open => self.extent - 1,
        };
        per_axis * self.dimension
    }

    /// Distinct nearest neighbours of site `i`, in ascending order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let l = self.extent;
        let (x, y) = self.coords(i);
        let mut out = Vec::with_capacity(2 * self.dimension);
        for axis in 0..self.dimension {
            let coord = if axis == 0 { x } else { y };
            let candidates = match self.boundary {
                Boundary::Periodic => [Some((coord + l - 1) % l), Some((coord + 1) % l)],
                Boundary::Open => [coord.checked_sub(1), (coord + 1 < l).then_some(coord + 1)],
            };
            for c in candidates.into_iter().flatten() {
                let j = if axis == 0 {
                    self.site(c, y)
                } else {
                    self.site(x, c)
                };
                if j != i {
                    out.push(j);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Unordered nearest-neighbour bonds `(i, j)` with `i < j`, each listed once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_sites() {
            for j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Consecutive triples `(a, b, c)` along each lattice axis, `b` being the centre site.
    pub fn triples(&self) -> Result<Vec<[usize; 3]>> {
        if self.boundary == Boundary::Periodic && self.extent < 3 {
            return Err(Error::InvalidLattice(
                "three-site terms need extent >= 3 on a periodic lattice".into(),
            ));
        }
        let l = self.extent;
        let mut out = Vec::new();
        let rows = if self.dimension == 1 { 1 } else { l };
        for axis in 0..self.dimension {
            for row in 0..rows {
                let centres: Box<dyn Iterator<Item = usize>> = match self.boundary {
                    Boundary::Periodic => Box::new(0..l),
                    Boundary::Open => Box::new(1..l - 1),
                };
                for c in centres {
                    let prev = (c + l - 1) % l;
                    let next = (c + 1) % l;
                    let site = |p: usize| {
                        if axis == 0 {
                            self.site(p, row)
                        } else {
                            self.site(row, p)
                        }
                    };
                    out.push([site(prev), site(c), site(next)]);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(LatticeSpec::new(3, 4, Boundary::Open).is_err());
        assert!(LatticeSpec::chain(1, Boundary::Open).is_err());
        assert!(LatticeSpec::square(1, Boundary::Periodic).is_err());
    }

    #[test]
    fn periodic_chain_uses_minimum_image() {
        let l = LatticeSpec::chain(10, Boundary::Periodic).unwrap();
        assert_eq!(l.distance(0, 9), 1);
        assert_eq!(l.distance(2, 8), 4);
        assert_eq!(l.max_distance(), 5);
        let o = LatticeSpec::chain(10, Boundary::Open).unwrap();
        assert_eq!(o.distance(0, 9), 9);
    }

    #[test]
    fn square_lattice_distance_is_manhattan() {
        let l = LatticeSpec::square(4, Boundary::Periodic).unwrap();
        assert_eq!(l.n_sites(), 16);
        assert_eq!(l.distance(l.site(0, 0), l.site(3, 3)), 2);
        assert_eq!(l.distance(l.site(0, 0), l.site(2, 1)), 3);
        assert_eq!(l.bonds().len(), 32);
    }

    #[test]
    fn two_site_periodic_chain_has_one_bond() {
        let l = LatticeSpec::chain(2, Boundary::Periodic).unwrap();
        assert_eq!(l.bonds(), vec![(0, 1)]);
    }

    #[test]
    fn triples_counts() {
        let open = LatticeSpec::chain(3, Boundary::Open).unwrap();
        assert_eq!(open.triples().unwrap(), vec![[0, 1, 2]]);
        let ring = LatticeSpec::chain(5, Boundary::Periodic).unwrap();
        let t = ring.triples().unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0], [4, 0, 1]);
        let sq = LatticeSpec::square(3, Boundary::Periodic).unwrap();
        assert_eq!(sq.triples().unwrap().len(), 18);
        assert!(LatticeSpec::chain(2, Boundary::Periodic)
            .unwrap()
            .triples()
            .is_err());
    }
}
