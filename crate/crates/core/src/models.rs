//! Parameterised drive protocols used by the experiments.

use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingKernel, KernelKind};
use crate::error::{Error, Result};
use crate::floquet::{DriveProtocol, KickSpec, Segment};
use crate::hamiltonian::TermSet;
use crate::vec3::Axis;

/// Couplings and fields of the driven chain, ordered as
/// `{alpha, j_z, j_zz, j_x, j_y, h_x, h_y, h_z}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub alpha: f64,
    pub j_z: f64,
    pub j_zz: f64,
    pub j_x: f64,
    pub j_y: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub h_z: f64,
    /// Range of the `S^z S^z` coupling.
    pub z_kernel: KernelKind,
    /// Range of the `S^x S^x` coupling.
    pub x_kernel: KernelKind,
    /// Range of the `S^y S^y` coupling.
    pub y_kernel: KernelKind,
    /// Optional maximal distance for power-law kernels.
    pub cutoff: Option<usize>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 1.8,
            j_z: -1.0,
            j_zz: 0.0,
            j_x: 0.3,
            j_y: 0.0,
            h_x: 0.25,
            h_y: 0.15,
            h_z: 0.1,
            z_kernel: KernelKind::PowerLaw,
            x_kernel: KernelKind::NearestNeighbor,
            y_kernel: KernelKind::NearestNeighbor,
            cutoff: None,
        }
    }
}

impl ModelParams {
    fn kernel(&self, kind: KernelKind, strength: f64) -> CouplingKernel {
        let k = match kind {
            KernelKind::None => CouplingKernel::none(),
            KernelKind::NearestNeighbor => CouplingKernel::nearest_neighbor(strength),
            KernelKind::PowerLaw => CouplingKernel::power_law(strength, self.alpha),
        };
        match (kind, self.cutoff) {
            (KernelKind::PowerLaw, Some(c)) => k.with_cutoff(c),
            _ => k,
        }
    }

    pub fn z_terms(&self) -> TermSet {
        TermSet::new(Axis::Z)
            .with_two_body(self.kernel(self.z_kernel, self.j_z))
            .with_three_body(self.j_zz)
            .with_field(self.h_z)
    }

    pub fn y_terms(&self) -> TermSet {
        TermSet::new(Axis::Y)
            .with_two_body(self.kernel(self.y_kernel, self.j_y))
            .with_field(self.h_y)
    }

    pub fn x_terms(&self) -> TermSet {
        TermSet::new(Axis::X)
            .with_two_body(self.kernel(self.x_kernel, self.j_x))
            .with_field(self.h_x)
    }

    pub fn validate(&self) -> Result<()> {
        for t in [self.z_terms(), self.y_terms(), self.x_terms()] {
            t.two_body.validate()?;
        }
        Ok(())
    }
}

/// Ordering of the axis windows within one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// `z`, `y`, `x`, each for `T/3`.
    #[default]
    ThreeWindow,
    /// `z T/6`, `y T/6`, `x T/3`, `y T/6`, `z T/6`.
    FiveWindow,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::ThreeWindow => "three-window",
            Schedule::FiveWindow => "five-window",
        }
    }
}

pub fn build_protocol(
    params: &ModelParams,
    schedule: Schedule,
    omega: f64,
    kick: Option<KickSpec>,
) -> Result<DriveProtocol> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidProtocol(format!(
            "omega must be positive, got {omega}"
        )));
    }
    params.validate()?;
    let t = std::f64::consts::TAU / omega;
    let (z, y, x) = (params.z_terms(), params.y_terms(), params.x_terms());
    let segments = match schedule {
        Schedule::ThreeWindow => vec![
            Segment::new(z, t / 3.0)?,
            Segment::new(y, t / 3.0)?,
            Segment::new(x, t / 3.0)?,
        ],
        Schedule::FiveWindow => vec![
            Segment::new(z, t / 6.0)?,
            Segment::new(y, t / 6.0)?,
            Segment::new(x, t / 3.0)?,
            Segment::new(y, t / 6.0)?,
            Segment::new(z, t / 6.0)?,
        ],
    };
    DriveProtocol::with_period(segments, kick, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::build_effective;

    #[test]
    fn schedules_have_the_same_time_average() {
        let p = ModelParams {
            j_zz: 0.53,
            j_y: 0.225,
            ..ModelParams::default()
        };
        let a = build_effective(&build_protocol(&p, Schedule::ThreeWindow, 5.0, None).unwrap());
        let b = build_effective(&build_protocol(&p, Schedule::FiveWindow, 5.0, None).unwrap());
        assert!(a.max_coeff_diff(&b) < 1e-15);
        let proto = build_protocol(&p, Schedule::FiveWindow, 5.0, None).unwrap();
        assert_eq!(proto.segments().len(), 5);
        assert!((proto.period() - std::f64::consts::TAU / 5.0).abs() < 1e-15);
        assert!(build_protocol(&p, Schedule::ThreeWindow, 0.0, None).is_err());
    }
}
