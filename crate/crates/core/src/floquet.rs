//! Exact stroboscopic evolution under piecewise-constant, axis-aligned drives.
//!
//! During a segment every term acts along one axis `μ`, so each `S^μ_j` is
//! conserved and each local field is constant. The segment is then solved
//! exactly by rotating spin `i` about `μ̂` by `B^μ_i · duration`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::hamiltonian::TermSet;
use crate::lattice::LatticeSpec;
use crate::state::SpinState;
use crate::vec3::{rotate_axis_sc, Axis, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub term_set: TermSet,
    pub duration: f64,
}

impl Segment {
    pub fn new(term_set: TermSet, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidProtocol(format!(
                "segment duration must be positive, got {duration}"
            )));
        }
        Ok(Self { term_set, duration })
    }
}

/// Instantaneous global rotation by `2πk/M` about a coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KickSpec {
    axis: Axis,
    k: u32,
    m: u32,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl KickSpec {
    pub fn new(axis: Axis, k: u32, m: u32) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::InvalidKick(format!(
                "k and M must be positive, got k={k}, M={m}"
            )));
        }
        if gcd(k, m) != 1 {
            return Err(Error::InvalidKick(format!("k={k} is not coprime to M={m}")));
        }
        Ok(Self { axis, k, m })
    }

    /// The period-doubling π rotation about `x̂`.
    pub fn pi_x() -> Self {
        Self {
            axis: Axis::X,
            k: 1,
            m: 2,
        }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Rotation angle `φ = 2πk/M`.
    pub fn angle(&self) -> f64 {
        TAU * self.k as f64 / self.m as f64
    }

    /// The angle of `X^power`, reduced to `[0, 2π)` exactly through integer arithmetic.
    pub fn power_angle(&self, power: i64) -> f64 {
        let m = self.m as i64;
        let steps = (power * self.k as i64).rem_euclid(m);
        TAU * steps as f64 / m as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    segments: Vec<Segment>,
    kick: Option<KickSpec>,
    period: f64,
}

impl DriveProtocol {
    /// Builds a protocol whose period is the sum of the segment durations.
    pub fn new(segments: Vec<Segment>, kick: Option<KickSpec>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidProtocol("no segments".into()));
        }
        let period = segments.iter().map(|s| s.duration).sum();
        Self::with_period(segments, kick, period)
    }

    pub fn with_period(
        segments: Vec<Segment>,
        kick: Option<KickSpec>,
        period: f64,
    ) -> Result<Self> {
        if segments.is_empty() && period > 0.0 {
            return Err(Error::InvalidProtocol("no segments".into()));
        }
        for s in &segments {
            if !(s.duration > 0.0) {
                return Err(Error::InvalidProtocol(
                    "non-positive segment duration".into(),
                ));
            }
            s.term_set.two_body.validate()?;
        }
        let total: f64 = segments.iter().map(|s| s.duration).sum();
        if (total - period).abs() > 1e-12 {
            return Err(Error::InvalidProtocol(format!(
                "segment durations sum to {total}, period is {period}"
            )));
        }
        Ok(Self {
            segments,
            kick,
            period,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn kick(&self) -> Option<&KickSpec> {
        self.kick.as_ref()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        TAU / self.period
    }

    /// Stable 64-bit FNV-1a fingerprint of the protocol definition.
    pub fn fingerprint(&self) -> String {
        let text = format!("{self:?}");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    pub fn compile(&self, lattice: &LatticeSpec) -> Result<FloquetEvolver> {
        FloquetEvolver::new(self, lattice)
    }
}

struct CompiledSegment {
    axis: Axis,
    duration: f64,
    field: f64,
    coupling: Option<(CouplingMatrix, f64)>,
    three_body: f64,
}

/// A drive protocol bound to a lattice, advancing spin arrays in place.
pub struct FloquetEvolver {
    segments: Vec<CompiledSegment>,
    triples: Vec<[usize; 3]>,
    kick: Option<KickSpec>,
    kick_sc: (f64, f64),
    period: f64,
    n: usize,
    comp: Vec<f64>,
    fields: Vec<f64>,
}

impl FloquetEvolver {
    pub fn new(protocol: &DriveProtocol, lattice: &LatticeSpec) -> Result<Self> {
        let needs_triples = protocol
            .segments
            .iter()
            .any(|s| s.term_set.three_body != 0.0);
        let triples = if needs_triples {
            lattice.triples()?
        } else {
            Vec::new()
        };
        let segments = protocol
            .segments
            .iter()
            .map(|s| {
                let t = &s.term_set;
                let coupling = match t.two_body.shape() {
                    Some(shape) if t.two_body.strength != 0.0 => {
                        Some((shape.compile(lattice), t.two_body.strength))
                    }
                    _ => None,
                };
                CompiledSegment {
                    axis: t.axis,
                    duration: s.duration,
                    field: t.field,
                    coupling,
                    three_body: t.three_body,
                }
            })
            .collect();
        let kick_sc = protocol.kick.map_or((0.0, 1.0), |k| k.angle().sin_cos());
        let n = lattice.n_sites();
        Ok(Self {
            segments,
            triples,
            kick: protocol.kick,
            kick_sc,
            period: protocol.period,
            n,
            comp: vec![0.0; n],
            fields: vec![0.0; n],
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kick(&self) -> Option<&KickSpec> {
        self.kick.as_ref()
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    /// Local field component along the segment axis for every site.
    fn segment_fields(&mut self, spins: &[Vec3], index: usize) {
        let seg = &self.segments[index];
        let axis = seg.axis;
        for (c, s) in self.comp.iter_mut().zip(spins) {
            *c = s.component(axis);
        }
        match &seg.coupling {
            Some((m, j)) => m.apply(&self.comp, *j, &mut self.fields),
            None => self.fields.fill(0.0),
        }
        if seg.field != 0.0 {
            for b in &mut self.fields {
                *b += seg.field;
            }
        }
        if seg.three_body != 0.0 {
            let j3 = seg.three_body;
            for &[a, b, c] in &self.triples {
                let (sa, sb, sc) = (self.comp[a], self.comp[b], self.comp[c]);
                self.fields[a] += j3 * sb * sc;
                self.fields[b] += j3 * sa * sc;
                self.fields[c] += j3 * sa * sb;
            }
        }
    }

    /// Evolves under segment `index` for an arbitrary (possibly negative) duration.
    pub fn evolve_segment_by(&mut self, spins: &mut [Vec3], index: usize, duration: f64) {
        debug_assert_eq!(spins.len(), self.n);
        self.segment_fields(spins, index);
        let axis = self.segments[index].axis;
        for (s, &b) in spins.iter_mut().zip(&self.fields) {
            let (sn, cs) = (b * duration).sin_cos();
            *s = rotate_axis_sc(*s, axis, sn, cs);
        }
    }

    pub fn evolve_segment(&mut self, spins: &mut [Vec3], index: usize) {
        let d = self.segments[index].duration;
        self.evolve_segment_by(spins, index, d);
    }

    pub fn apply_kick(&self, spins: &mut [Vec3]) {
        if let Some(k) = &self.kick {
            let (s, c) = self.kick_sc;
            for v in spins.iter_mut() {
                *v = rotate_axis_sc(*v, k.axis, s, c);
            }
        }
    }

    /// One full period: all segments in order, then the kick.
    pub fn evolve_period(&mut self, spins: &mut [Vec3]) {
        for i in 0..self.segments.len() {
            self.evolve_segment(spins, i);
        }
        self.apply_kick(spins);
    }

    pub fn evolve_periods(&mut self, spins: &mut [Vec3], n: u64) {
        for _ in 0..n {
            self.evolve_period(spins);
        }
    }
}

/// Exact evolution of `state` through one segment.
pub fn evolve_segment(state: &SpinState, segment: &Segment) -> Result<SpinState> {
    let protocol = DriveProtocol::new(vec![*segment], None)?;
    let mut ev = protocol.compile(state.lattice())?;
    let mut out = state.clone();
    ev.evolve_segment(out.spins_mut(), 0);
    Ok(out)
}

/// Rotates every spin about the kick axis by the kick angle.
pub fn apply_kick(state: &SpinState, kick: &KickSpec) -> SpinState {
    let mut out = state.clone();
    out.rotate_all(kick.axis(), kick.angle());
    out
}

/// One Floquet period: segments in order, then the kick.
pub fn evolve_period(state: &SpinState, protocol: &DriveProtocol) -> Result<SpinState> {
    let mut ev = protocol.compile(state.lattice())?;
    let mut out = state.clone();
    ev.evolve_period(out.spins_mut());
    Ok(out)
}
