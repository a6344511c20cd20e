//! Axis-resolved spin Hamiltonians: term sets, general coefficient tensors and
//! compiled per-lattice evaluators for energies and local fields.
//!
//! Pair sums run over unordered pairs `i < j`, each counted once, so a
//! coupling `J` is the coefficient of a single `S^μ_i S^μ_j` product.

use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingKernel, CouplingMatrix, KernelShape};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::state::SpinState;
use crate::vec3::{Axis, Mat3, Vec3};

pub type Tensor3 = [[[f64; 3]; 3]; 3];

/// Terms that all act along one spin axis: a two-body kernel, a nearest-neighbour
/// three-body product and a uniform field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermSet {
    pub axis: Axis,
    pub two_body: CouplingKernel,
    pub three_body: f64,
    pub field: f64,
}

impl TermSet {
    pub fn new(axis: Axis) -> Self {
        Self {
            axis,
            two_body: CouplingKernel::none(),
            three_body: 0.0,
            field: 0.0,
        }
    }

    pub fn with_two_body(mut self, kernel: CouplingKernel) -> Self {
        self.two_body = kernel;
        self
    }

    pub fn with_three_body(mut self, j: f64) -> Self {
        self.three_body = j;
        self
    }

    pub fn with_field(mut self, h: f64) -> Self {
        self.field = h;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.two_body.is_zero() && self.three_body == 0.0 && self.field == 0.0
    }
}

/// A two-body term `Σ_{i<j} w_ij S_i^T C S_j` with unit kernel weights `w_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub shape: KernelShape,
    /// Symmetric axis-coefficient matrix.
    pub coeffs: Mat3,
}

/// A static Hamiltonian in the fixed `{x, y, z}` component basis:
///
/// `prefactor · [ Σ_i h·S_i + Σ_pairs Σ_{i<j} w_ij S_i^T C S_j
///               + Σ_{(a,b,c)} T_{μνρ} S^μ_a S^ν_b S^ρ_c ]`
///
/// where `(a, b, c)` runs over consecutive triples along each lattice axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticHamiltonian {
    pub prefactor: f64,
    pub field: Vec3,
    pub pairs: Vec<PairTerm>,
    pub triple: Tensor3,
}

impl Default for StaticHamiltonian {
    fn default() -> Self {
        Self::zero()
    }
}

impl StaticHamiltonian {
    pub fn zero() -> Self {
        Self {
            prefactor: 1.0,
            field: Vec3::ZERO,
            pairs: Vec::new(),
            triple: [[[0.0; 3]; 3]; 3],
        }
    }

    pub fn from_term_sets(terms: &[TermSet]) -> Self {
        let mut h = Self::zero();
        for t in terms {
            h.add_term_set(t, 1.0);
        }
        h
    }

    pub fn with_prefactor(mut self, prefactor: f64) -> Self {
        self.prefactor = prefactor;
        self
    }

    fn pair_slot(&mut self, shape: KernelShape) -> &mut Mat3 {
        let pos = self.pairs.iter().position(|p| p.shape.same_as(&shape));
        let idx = match pos {
            Some(i) => i,
            None => {
                self.pairs.push(PairTerm {
                    shape,
                    coeffs: Mat3::ZERO,
                });
                self.pairs.len() - 1
            }
        };
        &mut self.pairs[idx].coeffs
    }

    /// Adds `weight × term` (in units where this Hamiltonian's prefactor is 1).
    pub fn add_term_set(&mut self, term: &TermSet, weight: f64) {
        let a = term.axis.index();
        let scale = weight / self.prefactor;
        if let Some(shape) = term.two_body.shape() {
            if term.two_body.strength != 0.0 {
                self.pair_slot(shape).0[a][a] += scale * term.two_body.strength;
            }
        }
        self.triple[a][a][a] += scale * term.three_body;
        let mut f = self.field.as_array();
        f[a] += scale * term.field;
        self.field = Vec3::from_array(f);
    }

    /// Adds `weight × other` coefficient-wise.
    pub fn add_scaled(&mut self, other: &StaticHamiltonian, weight: f64) {
        let scale = weight * other.prefactor / self.prefactor;
        self.field += other.field * scale;
        for p in &other.pairs {
            let slot = self.pair_slot(p.shape);
            for r in 0..3 {
                for c in 0..3 {
                    slot.0[r][c] += scale * p.coeffs.0[r][c];
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    self.triple[a][b][c] += scale * other.triple[a][b][c];
                }
            }
        }
    }

    /// Folds the prefactor into the coefficients.
    pub fn normalized(&self) -> StaticHamiltonian {
        let mut out = StaticHamiltonian::zero();
        out.add_scaled(self, 1.0);
        out
    }

    /// The Hamiltonian `H'(S) = H(R S)` with `R` applied to every spin.
    pub fn transformed(&self, r: &Mat3) -> StaticHamiltonian {
        let rt = r.transpose();
        let mut out = self.clone();
        out.field = rt.mul_vec(self.field);
        for p in &mut out.pairs {
            p.coeffs = rt.mul(&p.coeffs).mul(r);
        }
        let t = &self.triple;
        let mut nt = [[[0.0; 3]; 3]; 3];
        for (a, plane) in nt.iter_mut().enumerate() {
            for (b, row) in plane.iter_mut().enumerate() {
                for (c, out_v) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            for k in 0..3 {
                                acc += t[i][j][k] * r.0[i][a] * r.0[j][b] * r.0[k][c];
                            }
                        }
                    }
                    *out_v = acc;
                }
            }
        }
        out.triple = nt;
        out
    }

    /// `H'(S) = H(R_axis(angle) S)`.
    pub fn rotated(&self, axis: Axis, angle: f64) -> StaticHamiltonian {
        self.transformed(&Mat3::rotation(axis, angle))
    }

    /// Zeroes coefficients with magnitude below `tol` and drops empty pair terms.
    pub fn pruned(&self, tol: f64) -> StaticHamiltonian {
        let clip = |v: f64| if v.abs() < tol { 0.0 } else { v };
        let mut out = self.clone();
        out.field = Vec3::new(clip(out.field.x), clip(out.field.y), clip(out.field.z));
        for p in &mut out.pairs {
            for v in p.coeffs.0.iter_mut().flatten() {
                *v = clip(*v);
            }
        }
        out.pairs.retain(|p| p.coeffs.max_abs() > 0.0);
        for v in out.triple.iter_mut().flatten().flatten() {
            *v = clip(*v);
        }
        out
    }

    pub fn has_triple(&self) -> bool {
        self.triple.iter().flatten().flatten().any(|v| *v != 0.0)
    }

    /// Largest absolute coefficient difference after folding prefactors.
    pub fn max_coeff_diff(&self, other: &StaticHamiltonian) -> f64 {
        let mut diff = self.normalized();
        diff.add_scaled(other, -1.0);
        let mut m = diff.field.max_abs_diff(Vec3::ZERO);
        for p in &diff.pairs {
            m = m.max(p.coeffs.max_abs());
        }
        for v in diff.triple.iter().flatten().flatten() {
            m = m.max(v.abs());
        }
        m
    }

    pub fn compile(&self, lattice: &LatticeSpec) -> Result<CompiledHamiltonian> {
        CompiledHamiltonian::new(self, lattice)
    }
}

struct CompiledPair {
    matrix: CouplingMatrix,
    coeffs: Mat3,
    /// Spin components that appear in the coupling (nonzero columns of `coeffs`).
    active: Vec<usize>,
}

/// A Hamiltonian bound to a lattice, ready for repeated evaluation.
pub struct CompiledHamiltonian {
    n: usize,
    prefactor: f64,
    field: Vec3,
    pairs: Vec<CompiledPair>,
    triples: Vec<[usize; 3]>,
    tensor: Tensor3,
    /// For each site, the triples containing it and the site's position in each.
    site_triples: Vec<Vec<(usize, usize)>>,
}

impl CompiledHamiltonian {
    pub fn new(h: &StaticHamiltonian, lattice: &LatticeSpec) -> Result<Self> {
        let n = lattice.n_sites();
        let pairs = h
            .pairs
            .iter()
            .filter(|p| p.coeffs.max_abs() > 0.0)
            .map(|p| {
                let sym = symmetrized(&p.coeffs);
                let active = (0..3)
                    .filter(|&c| (0..3).any(|r| sym.0[r][c] != 0.0))
                    .collect();
                CompiledPair {
                    matrix: p.shape.compile(lattice),
                    coeffs: sym,
                    active,
                }
            })
            .collect();
        let (triples, site_triples) = if h.has_triple() {
            let triples = lattice.triples()?;
            let mut site_triples = vec![Vec::new(); n];
            for (t, tri) in triples.iter().enumerate() {
                for (pos, &s) in tri.iter().enumerate() {
                    site_triples[s].push((t, pos));
                }
            }
            (triples, site_triples)
        } else {
            (Vec::new(), vec![Vec::new(); n])
        };
        Ok(Self {
            n,
            prefactor: h.prefactor,
            field: h.field,
            pairs,
            triples,
            tensor: h.triple,
            site_triples,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    fn check_len(&self, spins: &[Vec3]) -> Result<()> {
        if spins.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "{} spins for a Hamiltonian compiled on {} sites",
                spins.len(),
                self.n
            )));
        }
        Ok(())
    }

    #[inline]
    fn triple_gradient(&self, spins: &[Vec3], t: usize, pos: usize) -> Vec3 {
        let [a, b, c] = self.triples[t];
        let (sa, sb, sc) = (
            spins[a].as_array(),
            spins[b].as_array(),
            spins[c].as_array(),
        );
        let tt = &self.tensor;
        let mut g = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = tt[i][j][k];
                    if v == 0.0 {
                        continue;
                    }
                    match pos {
                        0 => g[i] += v * sb[j] * sc[k],
                        1 => g[j] += v * sa[i] * sc[k],
                        _ => g[k] += v * sa[i] * sb[j],
                    }
                }
            }
        }
        Vec3::from_array(g)
    }

    fn triple_energy(&self, spins: &[Vec3], t: usize) -> f64 {
        let [a, _, _] = self.triples[t];
        self.triple_gradient(spins, t, 0).dot(spins[a])
    }

    /// `∂H/∂S_i`, without bounds checking.
    #[inline]
    pub fn field_at(&self, spins: &[Vec3], i: usize) -> Vec3 {
        let mut b = self.field;
        for p in &self.pairs {
            let v = p.matrix.row_vec_sum(i, spins);
            b += p.coeffs.mul_vec(v);
        }
        for &(t, pos) in &self.site_triples[i] {
            b += self.triple_gradient(spins, t, pos);
        }
        b * self.prefactor
    }

    pub fn local_field(&self, spins: &[Vec3], i: usize) -> Result<Vec3> {
        self.check_len(spins)?;
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        Ok(self.field_at(spins, i))
    }

    /// All local fields at once; `out` must have one entry per site.
    pub fn local_fields(&self, spins: &[Vec3], out: &mut [Vec3], scratch: &mut FieldScratch) {
        debug_assert_eq!(spins.len(), self.n);
        out.fill(self.field);
        scratch.ensure(self.n);
        for p in &self.pairs {
            for &nu in &p.active {
                for (x, s) in scratch.comp.iter_mut().zip(spins) {
                    *x = s.as_array()[nu];
                }
                p.matrix.apply(&scratch.comp, 1.0, &mut scratch.out);
                let (cx, cy, cz) = (p.coeffs.0[0][nu], p.coeffs.0[1][nu], p.coeffs.0[2][nu]);
                for (b, &v) in out.iter_mut().zip(&scratch.out) {
                    b.x += cx * v;
                    b.y += cy * v;
                    b.z += cz * v;
                }
            }
        }
        for t in 0..self.triples.len() {
            for pos in 0..3 {
                let s = self.triples[t][pos];
                out[s] += self.triple_gradient(spins, t, pos);
            }
        }
        if self.prefactor != 1.0 {
            for b in out.iter_mut() {
                *b = *b * self.prefactor;
            }
        }
    }

    pub fn energy_of(&self, spins: &[Vec3]) -> Result<f64> {
        self.check_len(spins)?;
        let mut e = 0.0;
        for (i, s) in spins.iter().enumerate() {
            let mut b = self.field;
            for p in &self.pairs {
                b += p.coeffs.mul_vec(p.matrix.row_vec_sum(i, spins)) * 0.5;
            }
            e += b.dot(*s);
        }
        for t in 0..self.triples.len() {
            e += self.triple_energy(spins, t);
        }
        Ok(self.prefactor * e)
    }

    pub fn energy(&self, state: &SpinState) -> Result<f64> {
        self.energy_of(state.spins())
    }

    pub fn energy_density(&self, state: &SpinState) -> Result<f64> {
        Ok(self.energy(state)? / state.n_sites() as f64)
    }

    /// Energy of all terms whose support lies inside `sites`.
    pub fn local_energy(&self, spins: &[Vec3], sites: &[usize]) -> f64 {
        let mut e = 0.0;
        for (k, &i) in sites.iter().enumerate() {
            e += self.field.dot(spins[i]);
            for &j in &sites[k + 1..] {
                for p in &self.pairs {
                    let w = p.matrix.get(i, j);
                    if w != 0.0 {
                        e += w * p.coeffs.bilinear(spins[i], spins[j]);
                    }
                }
            }
        }
        for t in 0..self.triples.len() {
            if self.triples[t].iter().all(|s| sites.contains(s)) {
                e += self.triple_energy(spins, t);
            }
        }
        self.prefactor * e
    }

    /// Maximal per-site sum of term magnitudes.
    pub fn j_local(&self) -> f64 {
        let field: f64 = self.field.as_array().iter().map(|v| v.abs()).sum();
        let tensor: f64 = self
            .tensor
            .iter()
            .flatten()
            .flatten()
            .map(|v| v.abs())
            .sum();
        (0..self.n)
            .map(|i| {
                let pairs: f64 = self
                    .pairs
                    .iter()
                    .map(|p| p.matrix.row_abs_sum(i) * p.coeffs.abs_sum())
                    .sum();
                pairs + tensor * self.site_triples[i].len() as f64 + field
            })
            .fold(0.0, f64::max)
            * self.prefactor.abs()
    }
}

/// Reusable buffers for [`CompiledHamiltonian::local_fields`].
#[derive(Debug, Default, Clone)]
pub struct FieldScratch {
    comp: Vec<f64>,
    out: Vec<f64>,
}

impl FieldScratch {
    fn ensure(&mut self, n: usize) {
        if self.comp.len() != n {
            self.comp = vec![0.0; n];
            self.out = vec![0.0; n];
        }
    }
}

fn symmetrized(m: &Mat3) -> Mat3 {
    let mut s = Mat3::ZERO;
    for r in 0..3 {
        for c in 0..3 {
            s.0[r][c] = 0.5 * (m.0[r][c] + m.0[c][r]);
        }
    }
    s
}

/// `∂H/∂S_i`, so that `dS_i/dt = B_i × S_i`.
pub fn local_field(state: &SpinState, h: &StaticHamiltonian, i: usize) -> Result<Vec3> {
    h.compile(state.lattice())?.local_field(state.spins(), i)
}

/// Total energy with each unordered pair counted once.
pub fn energy(state: &SpinState, h: &StaticHamiltonian) -> Result<f64> {
    h.compile(state.lattice())?.energy(state)
}

/// Maximal local energy scale: `max_i` of the summed magnitudes of all terms touching site `i`.
pub fn j_local(h: &StaticHamiltonian, lattice: &LatticeSpec) -> Result<f64> {
    Ok(h.compile(lattice)?.j_local())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn chain(n: usize, b: Boundary) -> LatticeSpec {
        LatticeSpec::chain(n, b).unwrap()
    }

    /// Independent double loop over all pairs and triples.
    fn brute_energy(spins: &[Vec3], lattice: &LatticeSpec, terms: &[TermSet]) -> f64 {
        let n = spins.len();
        let mut e = 0.0;
        for t in terms {
            let a = t.axis;
            for i in 0..n {
                e += t.field * spins[i][a];
                for j in (i + 1)..n {
                    e += t.two_body.weight(lattice.distance(i, j)) * spins[i][a] * spins[j][a];
                }
            }
            if t.three_body != 0.0 {
                for [p, q, r] in lattice.triples().unwrap() {
                    e += t.three_body * spins[p][a] * spins[q][a] * spins[r][a];
                }
            }
        }
        e
    }

    #[test]
    fn two_site_field_example() {
        let l = chain(2, Boundary::Periodic);
        let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z)
            .with_two_body(CouplingKernel::nearest_neighbor(1.0))
            .with_field(0.06)]);
        let s = SpinState::polarized(l, Vec3::Z).unwrap();
        let b = local_field(&s, &h, 0).unwrap();
        assert!(b.max_abs_diff(Vec3::new(0.0, 0.0, 1.06)) < 1e-15);
        assert!(local_field(&s, &h, 2).is_err());
    }

    #[test]
    fn pure_field_gives_uniform_local_field() {
        let l = chain(6, Boundary::Periodic);
        let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::X).with_field(0.7)]);
        let s = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(3));
        for i in 0..6 {
            assert_eq!(local_field(&s, &h, i).unwrap(), Vec3::new(0.7, 0.0, 0.0));
        }
    }

    #[test]
    fn three_body_open_chain_example() {
        let l = chain(3, Boundary::Open);
        let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z).with_three_body(0.53)]);
        let s = SpinState::polarized(l, Vec3::Z).unwrap();
        assert!(
            local_field(&s, &h, 1)
                .unwrap()
                .max_abs_diff(Vec3::new(0.0, 0.0, 0.53))
                < 1e-15
        );
        assert!(
            local_field(&s, &h, 0)
                .unwrap()
                .max_abs_diff(Vec3::new(0.0, 0.0, 0.53))
                < 1e-15
        );
        assert!((energy(&s, &h).unwrap() - 0.53).abs() < 1e-15);
    }

    #[test]
    fn energy_examples() {
        let l = chain(2, Boundary::Periodic);
        let h = StaticHamiltonian::from_term_sets(&[
            TermSet::new(Axis::Z).with_two_body(CouplingKernel::nearest_neighbor(1.0))
        ]);
        let s = SpinState::polarized(l, Vec3::Z).unwrap();
        assert_eq!(energy(&s, &h).unwrap(), 1.0);

        // A lone spin in a field: a 2-site open chain with one spin perpendicular.
        let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z).with_field(0.06)]);
        let s = SpinState::new(l, vec![Vec3::Z, Vec3::X]).unwrap();
        assert!((energy(&s, &h).unwrap() - 0.06).abs() < 1e-15);
    }

    fn mixed_terms(alpha: f64) -> Vec<TermSet> {
        vec![
            TermSet::new(Axis::Z)
                .with_two_body(CouplingKernel::power_law(-0.7, alpha))
                .with_three_body(0.53)
                .with_field(0.06),
            TermSet::new(Axis::X)
                .with_two_body(CouplingKernel::nearest_neighbor(0.28))
                .with_field(0.13),
            TermSet::new(Axis::Y)
                .with_two_body(CouplingKernel::power_law(0.2, 2.5).with_cutoff(2))
                .with_three_body(-0.1)
                .with_field(0.09),
        ]
    }

    #[test]
    fn random_power_law_energy_matches_brute_force() {
        let l = chain(8, Boundary::Periodic);
        let terms = [TermSet::new(Axis::Z).with_two_body(CouplingKernel::power_law(1.0, 1.8))];
        let h = StaticHamiltonian::from_term_sets(&terms);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = SpinState::random(l, &mut rng);
            let e = energy(&s, &h).unwrap();
            assert!((e - brute_energy(s.spins(), &l, &terms)).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_matches_brute_force_on_small_lattices() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let lattices = [
            chain(3, Boundary::Open),
            chain(3, Boundary::Periodic),
            chain(7, Boundary::Open),
            chain(12, Boundary::Periodic),
            LatticeSpec::square(3, Boundary::Periodic).unwrap(),
            LatticeSpec::square(3, Boundary::Open).unwrap(),
        ];
        for l in lattices {
            for alpha in [1.5, 1.8, 3.0] {
                let terms = mixed_terms(alpha);
                let h = StaticHamiltonian::from_term_sets(&terms);
                let s = SpinState::random(l, &mut rng);
                let e = energy(&s, &h).unwrap();
                let b = brute_energy(s.spins(), &l, &terms);
                assert!((e - b).abs() < 1e-12, "{l:?} {alpha}: {e} vs {b}");
            }
        }
    }

    /// Energy as an unconstrained multilinear function of the raw components.
    fn energy_raw(h: &CompiledHamiltonian, spins: &[Vec3]) -> f64 {
        h.energy_of(spins).unwrap()
    }

    #[test]
    fn local_field_is_the_energy_gradient() {
        let step = 1e-6;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for l in [
            chain(9, Boundary::Periodic),
            LatticeSpec::square(3, Boundary::Open).unwrap(),
        ] {
            let h = StaticHamiltonian::from_term_sets(&mixed_terms(1.8))
                .rotated(Axis::X, 0.4)
                .compile(&l)
                .unwrap();
            let s = SpinState::random(l, &mut rng);
            let mut fields = vec![Vec3::ZERO; l.n_sites()];
            h.local_fields(s.spins(), &mut fields, &mut FieldScratch::default());
            for i in 0..l.n_sites() {
                let b = h.field_at(s.spins(), i);
                assert!(b.max_abs_diff(fields[i]) < 1e-12);
                let mut num = [0.0; 3];
                for (c, slot) in num.iter_mut().enumerate() {
                    let mut plus = s.spins().to_vec();
                    let mut minus = s.spins().to_vec();
                    let mut p = plus[i].as_array();
                    let mut m = minus[i].as_array();
                    p[c] += step;
                    m[c] -= step;
                    plus[i] = Vec3::from_array(p);
                    minus[i] = Vec3::from_array(m);
                    *slot = (energy_raw(&h, &plus) - energy_raw(&h, &minus)) / (2.0 * step);
                }
                let num = Vec3::from_array(num);
                let scale = b.norm().max(1.0);
                assert!(
                    b.max_abs_diff(num) / scale < 1e-6,
                    "site {i}: {b:?} vs {num:?}"
                );
            }
        }
    }

    #[test]
    fn energy_invariant_under_rotation_about_term_axis() {
        let l = chain(10, Boundary::Periodic);
        let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z)
            .with_two_body(CouplingKernel::power_law(-1.0, 1.5))
            .with_three_body(0.4)
            .with_field(0.2)]);
        let mut s = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(2));
        let e0 = energy(&s, &h).unwrap();
        s.rotate_all(Axis::Z, 1.1);
        assert!((energy(&s, &h).unwrap() - e0).abs() < 1e-12);
    }

    #[test]
    fn j_local_examples() {
        let l = chain(10, Boundary::Periodic);
        let nn = StaticHamiltonian::from_term_sets(&[
            TermSet::new(Axis::Z).with_two_body(CouplingKernel::nearest_neighbor(1.0))
        ]);
        assert!((j_local(&nn, &l).unwrap() - 2.0).abs() < 1e-15);

        let field = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z).with_field(0.06)]);
        assert!((j_local(&field, &l).unwrap() - 0.06).abs() < 1e-15);

        let big = chain(320, Boundary::Periodic);
        let pl = StaticHamiltonian::from_term_sets(&[
            TermSet::new(Axis::Z).with_two_body(CouplingKernel::power_law(1.0, 1.8))
        ]);
        let brute = (0..320)
            .map(|i| {
                (0..320)
                    .filter(|&j| j != i)
                    .map(|j| (big.distance(i, j) as f64).powf(-1.8))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        assert!((j_local(&pl, &big).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn prefactor_and_normalization() {
        let l = chain(5, Boundary::Periodic);
        let terms = mixed_terms(1.5);
        let h = StaticHamiltonian::from_term_sets(&terms).with_prefactor(1.0 / 3.0);
        let s = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(9));
        let e1 = energy(&s, &h).unwrap();
        let e2 = energy(&s, &h.normalized()).unwrap();
        assert!((e1 - e2).abs() < 1e-14);
        assert!((e1 - brute_energy(s.spins(), &l, &terms) / 3.0).abs() < 1e-12);
        assert!(h.max_coeff_diff(&h.normalized()) < 1e-15);
    }

    #[test]
    fn local_energy_on_full_support_is_total_energy() {
        let l = chain(6, Boundary::Open);
        let h = StaticHamiltonian::from_term_sets(&mixed_terms(1.5))
            .compile(&l)
            .unwrap();
        let s = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(4));
        let all: Vec<usize> = (0..6).collect();
        let e = h.energy(&s).unwrap();
        assert!((h.local_energy(s.spins(), &all) - e).abs() < 1e-12);
    }
}
