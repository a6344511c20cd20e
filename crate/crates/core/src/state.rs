use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::vec3::{rotate_axis_sc, Axis, Vec3, UNIT_TOLERANCE};

/// A phase-space point: one unit vector per lattice site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinState {
    lattice: LatticeSpec,
    spins: Vec<Vec3>,
}

impl SpinState {
    /// Builds a state, checking the length and every spin norm.
    pub fn new(lattice: LatticeSpec, spins: Vec<Vec3>) -> Result<Self> {
        if spins.len() != lattice.n_sites() {
            return Err(Error::InvalidArgument(format!(
                "{} spins for a lattice of {} sites",
                spins.len(),
                lattice.n_sites()
            )));
        }
        let state = Self { lattice, spins };
        state.validate()?;
        Ok(state)
    }

    /// Wraps spins without norm validation; the length must still match.
    pub(crate) fn from_raw(lattice: LatticeSpec, spins: Vec<Vec3>) -> Self {
        assert_eq!(spins.len(), lattice.n_sites());
        Self { lattice, spins }
    }

    pub fn polarized(lattice: LatticeSpec, direction: Vec3) -> Result<Self> {
        Self::new(lattice, vec![direction.normalized(); lattice.n_sites()])
    }

    pub fn random<R: Rng + ?Sized>(lattice: LatticeSpec, rng: &mut R) -> Self {
        let spins = (0..lattice.n_sites())
            .map(|_| Vec3::random_unit(rng))
            .collect();
        Self { lattice, spins }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn spins(&self) -> &[Vec3] {
        &self.spins
    }

    /// Mutable access to the spins; callers are responsible for keeping them unit length.
    pub fn spins_mut(&mut self) -> &mut [Vec3] {
        &mut self.spins
    }

    pub fn into_spins(self) -> Vec<Vec3> {
        self.spins
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (index, s) in self.spins.iter().enumerate() {
            let norm = s.norm();
            if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
                return Err(Error::InvalidSpin { index, norm });
            }
        }
        Ok(())
    }

    pub fn renormalize(&mut self) {
        for s in &mut self.spins {
            *s = s.normalized();
        }
    }

    /// Largest deviation of any spin norm from one.
    pub fn max_norm_error(&self) -> f64 {
        self.spins
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Site-averaged spin vector.
    pub fn magnetization(&self) -> Vec3 {
        self.spins.iter().copied().sum::<Vec3>() * (1.0 / self.spins.len() as f64)
    }

    pub fn sz_avg(&self) -> f64 {
        self.magnetization().z
    }

    /// Rotates every spin about a coordinate axis.
    pub fn rotate_all(&mut self, axis: Axis, angle: f64) {
        let (s, c) = angle.sin_cos();
        for v in &mut self.spins {
            *v = rotate_axis_sc(*v, axis, s, c);
        }
    }

    /// Concatenates two states along the chain direction.
    pub fn concat(left: &SpinState, right: &SpinState, lattice: LatticeSpec) -> Result<Self> {
        let mut spins = left.spins.clone();
        spins.extend_from_slice(&right.spins);
        Self::new(lattice, spins)
    }

    pub fn max_abs_diff(&self, other: &SpinState) -> f64 {
        self.spins
            .iter()
            .zip(&other.spins)
            .map(|(a, b)| a.max_abs_diff(*b))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use rand::SeedableRng;

    #[test]
    fn validation() {
        let l = LatticeSpec::chain(3, Boundary::Open).unwrap();
        assert!(SpinState::new(l, vec![Vec3::Z; 2]).is_err());
        let err = SpinState::new(l, vec![Vec3::Z, Vec3::new(0.0, 0.0, 1.1), Vec3::X]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpin { index: 1, .. }));
        let s = SpinState::new(l, vec![Vec3::Z, -Vec3::Z, Vec3::X]).unwrap();
        assert!((s.magnetization() - Vec3::new(1.0 / 3.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_states_are_unit() {
        let l = LatticeSpec::chain(500, Boundary::Periodic).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let s = SpinState::random(l, &mut rng);
        assert!(s.max_norm_error() < 1e-14);
        assert!(s.sz_avg().abs() < 0.2);
    }
}
