//! Comparisons against brute-force implementations written independently of the library.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use prethermal_core::effective::{project_onto_kick, Rk4};
use prethermal_core::floquet::evolve_period;
use prethermal_core::stats::MeanErr;
use prethermal_core::thermal::{Chain, Proposal};
use prethermal_core::{
    Axis, Boundary, CouplingKernel, DriveProtocol, KickSpec, LatticeSpec, Segment, SpinState,
    StaticHamiltonian, TermSet, Vec3,
};

type V = [f64; 3];

/// One axis-resolved segment of a periodic chain, evaluated by hand.
struct PlainTerms {
    axis: usize,
    weights: Vec<Vec<f64>>,
    three_body: f64,
    field: f64,
}

impl PlainTerms {
    fn new(n: usize, axis: usize, j: f64, alpha: Option<f64>, three_body: f64, field: f64) -> Self {
        let mut weights = vec![vec![0.0; n]; n];
        for (i, row) in weights.iter_mut().enumerate() {
            for (k, w) in row.iter_mut().enumerate() {
                let d = (i as i64 - k as i64).unsigned_abs() as usize;
                let d = d.min(n - d);
                *w = match (d, alpha) {
                    (0, _) => 0.0,
                    (_, Some(a)) => j / (d as f64).powf(a),
                    (1, None) => j,
                    _ => 0.0,
                };
            }
        }
        Self {
            axis,
            weights,
            three_body,
            field,
        }
    }

    /// `∂H/∂S_i`.
    fn fields(&self, s: &[V]) -> Vec<V> {
        let n = s.len();
        let a = self.axis;
        (0..n)
            .map(|i| {
                let mut b = [0.0; 3];
                b[a] = self.field + (0..n).map(|k| self.weights[i][k] * s[k][a]).sum::<f64>();
                // triples (c-1, c, c+1) that contain i
                let l = |k: i64| s[(k.rem_euclid(n as i64)) as usize][a];
                let i = i as i64;
                b[a] += self.three_body
                    * (l(i + 1) * l(i + 2) + l(i - 1) * l(i + 1) + l(i - 2) * l(i - 1));
                b
            })
            .collect()
    }
}

fn cross(a: V, b: V) -> V {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn rk4_segment(s: &mut [V], terms: &PlainTerms, duration: f64, dt: f64) {
    let steps = (duration / dt).ceil() as usize;
    let h = duration / steps as f64;
    let deriv = |x: &[V]| -> Vec<V> {
        let b = terms.fields(x);
        x.iter().zip(&b).map(|(x, b)| cross(*b, *x)).collect()
    };
    let shift = |x: &[V], k: &[V], f: f64| -> Vec<V> {
        x.iter()
            .zip(k)
            .map(|(x, k)| [x[0] + f * k[0], x[1] + f * k[1], x[2] + f * k[2]])
            .collect()
    };
    for _ in 0..steps {
        let k1 = deriv(s);
        let k2 = deriv(&shift(s, &k1, 0.5 * h));
        let k3 = deriv(&shift(s, &k2, 0.5 * h));
        let k4 = deriv(&shift(s, &k3, h));
        for i in 0..s.len() {
            for c in 0..3 {
                s[i][c] += h / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            }
        }
    }
}

fn test_protocol(omega: f64) -> (DriveProtocol, Vec<(usize, f64, Option<f64>, f64, f64)>) {
    // (axis, J, alpha, three-body, field)
    let spec = vec![
        (2, -1.0, Some(1.8), 0.3, 0.1),
        (1, 0.2, None, 0.0, 0.15),
        (0, 0.8, None, 0.0, 0.8),
    ];
    let t = std::f64::consts::TAU / omega;
    let segments = spec
        .iter()
        .map(|&(a, j, alpha, j3, h)| {
            let kernel = match alpha {
                Some(al) => CouplingKernel::power_law(j, al),
                None => CouplingKernel::nearest_neighbor(j),
            };
            Segment::new(
                TermSet::new(Axis::ALL[a])
                    .with_two_body(kernel)
                    .with_three_body(j3)
                    .with_field(h),
                t / 3.0,
            )
            .unwrap()
        })
        .collect();
    (
        DriveProtocol::new(segments, Some(KickSpec::pi_x())).unwrap(),
        spec,
    )
}

#[test]
fn exact_period_matches_rk4_of_the_time_dependent_hamiltonian() {
    let n = 8;
    let omega = 6.0;
    let lattice = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
    let (protocol, spec) = test_protocol(omega);
    let terms: Vec<PlainTerms> = spec
        .iter()
        .map(|&(a, j, alpha, j3, h)| PlainTerms::new(n, a, j, alpha, j3, h))
        .collect();
    let mut state = SpinState::random(lattice, &mut ChaCha8Rng::seed_from_u64(3));
    let mut plain: Vec<V> = state.spins().iter().map(|v| v.as_array()).collect();
    let t = std::f64::consts::TAU / omega;
    for _ in 0..3 {
        state = evolve_period(&state, &protocol).unwrap();
        for seg in &terms {
            rk4_segment(&mut plain, seg, t / 3.0, 1e-4);
        }
        // π about x
        for v in plain.iter_mut() {
            v[1] = -v[1];
            v[2] = -v[2];
        }
    }
    let worst = state
        .spins()
        .iter()
        .zip(&plain)
        .map(|(a, b)| a.max_abs_diff(Vec3::from_array(*b)))
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "max deviation {worst}");
}

/// `(1/M) Σ_m Σ R^m_{da} R^m_{eb} R^m_{fc} T_{def}` with rotations about x written out.
fn averaged_tensor(t: &[[[f64; 3]; 3]; 3], m: usize) -> [[[f64; 3]; 3]; 3] {
    let mut out = [[[0.0; 3]; 3]; 3];
    for p in 0..m {
        let th = std::f64::consts::TAU * p as f64 / m as f64;
        let (s, c) = th.sin_cos();
        let r = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    let mut acc = 0.0;
                    for d in 0..3 {
                        for e in 0..3 {
                            for f in 0..3 {
                                acc += r[d][a] * r[e][b] * r[f][cc] * t[d][e][f];
                            }
                        }
                    }
                    out[a][b][cc] += acc / m as f64;
                }
            }
        }
    }
    out
}

#[test]
fn projected_three_body_tensor_matches_brute_force_average() {
    let mut h = StaticHamiltonian::zero();
    h.add_term_set(&TermSet::new(Axis::Z).with_three_body(0.7), 1.0);
    h.add_term_set(&TermSet::new(Axis::Y).with_three_body(-0.2), 1.0);
    let kick = KickSpec::new(Axis::X, 1, 3).unwrap();
    let projected = project_onto_kick(&h, &kick);
    let expect = averaged_tensor(&h.triple, 3);
    let mut worst: f64 = 0.0;
    let mut mixed = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                worst = worst.max((projected.triple[a][b][c] - expect[a][b][c]).abs());
                if !(a == b && b == c) {
                    mixed += expect[a][b][c].abs();
                }
            }
        }
    }
    assert!(worst < 1e-12, "max coefficient difference {worst}");
    assert!(mixed > 0.1, "the average should mix y and z components");
    // mean of cos^3 over the three angles is 1/4, and y^3 feeds nothing into z z z
    assert!((projected.triple[2][2][2] - 0.7 * 0.25).abs() < 1e-12);
}

#[test]
fn rk4_error_shrinks_sixteenfold_per_halving() {
    let n = 12;
    let lattice = LatticeSpec::chain(n, Boundary::Periodic).unwrap();
    let mut d = StaticHamiltonian::zero();
    d.add_term_set(
        &TermSet::new(Axis::Z)
            .with_two_body(CouplingKernel::nearest_neighbor(-1.0))
            .with_field(0.1),
        1.0,
    );
    d.add_term_set(
        &TermSet::new(Axis::X)
            .with_two_body(CouplingKernel::nearest_neighbor(0.5))
            .with_field(0.6),
        1.0,
    );
    let s0 = SpinState::random(lattice, &mut ChaCha8Rng::seed_from_u64(8));
    let run = |dt: f64, steps: u64| {
        let mut rk = Rk4::new(d.compile(&lattice).unwrap());
        let mut s = s0.spins().to_vec();
        rk.advance(&mut s, dt, steps);
        s
    };
    let horizon = 2.0;
    let reference = run(horizon / 12800.0, 12800);
    let err = |s: Vec<Vec3>| {
        s.iter()
            .zip(&reference)
            .map(|(a, b)| a.max_abs_diff(*b))
            .fold(0.0, f64::max)
    };
    let coarse = err(run(horizon / 100.0, 100));
    let fine = err(run(horizon / 200.0, 200));
    let ratio = coarse / fine;
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

/// Langevin function, `<cos θ>` for weight `e^{x cos θ}`.
fn langevin(x: f64) -> f64 {
    1.0 / x.tanh() - 1.0 / x
}

fn single_spin_moments(field: f64, beta: f64, chains: u64, sweeps: u64) -> (MeanErr, MeanErr) {
    let lattice = LatticeSpec::chain(2, Boundary::Open).unwrap();
    let d = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z).with_field(field)]);
    let h = d.compile(&lattice).unwrap();
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    for c in 0..chains {
        let rng = ChaCha8Rng::seed_from_u64(1000 + c);
        let mut chain = Chain::new(&h, vec![Vec3::Z; 2], rng, Proposal::Uniform).unwrap();
        chain.sweeps(beta, 200);
        let (mut a, mut b) = (0.0, 0.0);
        for _ in 0..sweeps {
            chain.sweep(beta);
            for s in chain.spins() {
                a += s.z;
                b += s.z * s.z;
            }
        }
        let count = (2 * sweeps) as f64;
        m1.push(a / count);
        m2.push(b / count);
    }
    (MeanErr::of(&m1), MeanErr::of(&m2))
}

#[test]
fn single_spin_follows_the_langevin_function() {
    // E = h S^z, so <S^z> = -L(βh).
    for bh in [0.5, 1.0, 2.0] {
        let (m, _) = single_spin_moments(1.0, bh, 16, 20_000);
        let expect = -langevin(bh);
        assert!(
            (m.mean - expect).abs() <= 3.0 * m.err,
            "βh={bh}: {} ± {} vs {expect}",
            m.mean,
            m.err
        );
    }
}

#[test]
fn infinite_temperature_moments() {
    let (m1, m2) = single_spin_moments(1.0, 0.0, 16, 20_000);
    assert!(
        m1.mean.abs() <= 3.0 * m1.err,
        "<S^z> = {} ± {}",
        m1.mean,
        m1.err
    );
    assert!(
        (m2.mean - 1.0 / 3.0).abs() <= 3.0 * m2.err,
        "<S^z²> = {} ± {}",
        m2.mean,
        m2.err
    );
}

#[test]
fn metropolis_samples_the_boltzmann_density_of_cos_theta() {
    // Detailed balance fixes the stationary density of u = S^z to ∝ e^{-βh u} on [-1, 1].
    let beta = 1.3;
    let lattice = LatticeSpec::chain(2, Boundary::Open).unwrap();
    let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z).with_field(1.0)])
        .compile(&lattice)
        .unwrap();
    let mut chain = Chain::new(
        &h,
        vec![Vec3::X; 2],
        ChaCha8Rng::seed_from_u64(77),
        Proposal::Cone { half_angle: 1.0 },
    )
    .unwrap();
    chain.sweeps(beta, 1000);
    let mut u = Vec::new();
    for k in 0..200_000 {
        chain.sweep(beta);
        if k % 5 == 0 {
            u.push(chain.spins()[0].z);
        }
    }
    u.sort_by(f64::total_cmp);
    let cdf = |x: f64| ((-beta * (x + 1.0)).exp_m1()) / ((-2.0 * beta).exp_m1());
    let n = u.len() as f64;
    let ks = u
        .iter()
        .enumerate()
        .map(|(k, x)| {
            ((k as f64 + 1.0) / n - cdf(*x))
                .abs()
                .max((k as f64 / n - cdf(*x)).abs())
        })
        .fold(0.0, f64::max);
    // well above the 1% critical value for this many weakly correlated draws
    assert!(ks < 0.02, "KS distance {ks}");
}
