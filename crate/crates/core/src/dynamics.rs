//! Multi-time integration and the numerical checks built on it: brackets,
//! involutivity, flow commutativity, conserved quantities, the closure
//! relation of the Lagrangian one-form and Euler-Lagrange/Lax agreement.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::algebra::SquareMatrix;
use crate::error::{Error, Result};
use crate::gaudin::{self, FlowId};
use crate::models::{ModelKind, PhaseState};
use crate::scalar::{C64, Dual, gradient, seed_direction};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default offset for the outer central differences of the closure check.
pub const DEFAULT_DELTA: f64 = 1e-4;
/// Coordinates beyond this size count as divergence.
pub const BLOWUP: f64 = 1e100;
/// Safety factor on rounding estimates when deciding that a refinement ratio
/// is below resolution.
pub const ROUNDOFF_FACTOR: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub flow: FlowId,
    pub duration: f64,
    pub steps: usize,
}

/// Ordered flow segments: a piecewise straight curve in multi-time.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !s.duration.is_finite() || s.duration < 0.0 {
                return Err(Error::InvalidConfig("segment duration must be finite and non-negative"));
            }
            if s.steps == 0 {
                return Err(Error::InvalidConfig("segment needs at least one step"));
            }
        }
        Ok(Schedule { segments })
    }

    /// Step counts chosen so each step is as close to `h` as possible.
    pub fn with_step(parts: &[(FlowId, f64)], h: f64) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidConfig("step size must be positive"));
        }
        let segments = parts
            .iter()
            .map(|&(flow, duration)| Segment { flow, duration, steps: (libm::round(duration / h) as usize).max(1) })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_steps(&self) -> usize {
        self.segments.iter().filter(|s| s.duration > 0.0).map(|s| s.steps).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Segment index; `None` for the initial sample.
    pub seg: Option<usize>,
    pub flow: Option<FlowId>,
    pub t_local: f64,
    /// Elapsed time per flow so far, in first-use order.
    pub times: Vec<(FlowId, f64)>,
    pub state: PhaseState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub samples: Vec<Sample>,
    /// Largest step size used.
    pub h: f64,
}

impl Trajectory {
    pub fn last(&self) -> &PhaseState {
        &self.samples.last().expect("trajectory starts with the initial state").state
    }
}

/// Integration stopped early; `partial` ends at the last finite sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub partial: Trajectory,
    pub error: Error,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} after {} samples", self.error, self.partial.samples.len())
    }
}

impl core::error::Error for Divergence {}

/// One classical RK4 step of size `h` along `scale` times the flow `f`.
pub fn rk4_step(s: &PhaseState, f: FlowId, h: f64, scale: f64) -> Result<PhaseState> {
    let z = s.coords();
    let field = |z: &[C64]| -> Result<Vec<C64>> {
        let mut v = s.flow_velocity(f, z)?;
        if scale != 1.0 {
            v.iter_mut().for_each(|x| *x *= scale);
        }
        Ok(v)
    };
    let shift = |k: &[C64], a: f64| -> Vec<C64> { z.iter().zip(k).map(|(x, v)| x + v * a).collect() };
    let k1 = field(&z)?;
    let k2 = field(&shift(&k1, h / 2.0))?;
    let k3 = field(&shift(&k2, h / 2.0))?;
    let k4 = field(&shift(&k3, h))?;
    let next: Vec<C64> = (0..z.len()).map(|i| z[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0)).collect();
    s.with_coords(&next)
}

fn finite_and_bounded(s: &PhaseState) -> bool {
    s.coords().iter().all(|z| z.re.is_finite() && z.im.is_finite() && z.norm() < BLOWUP)
}

fn run(s0: &PhaseState, sched: &Schedule, scale: f64, keep: bool) -> core::result::Result<Trajectory, Divergence> {
    let mut times: Vec<(FlowId, f64)> = Vec::new();
    let mut samples = vec![Sample { seg: None, flow: None, t_local: 0.0, times: times.clone(), state: s0.clone() }];
    let mut h_max: f64 = 0.0;
    let mut state = s0.clone();
    let mut step_count = 0;
    let mut last_seg = None;
    for (si, seg) in sched.segments().iter().enumerate() {
        if seg.duration == 0.0 {
            continue;
        }
        let h = seg.duration / seg.steps as f64;
        h_max = h_max.max(h);
        let slot = match times.iter().position(|(f, _)| *f == seg.flow) {
            Some(i) => i,
            None => {
                times.push((seg.flow, 0.0));
                times.len() - 1
            }
        };
        let start = times[slot].1;
        for n in 1..=seg.steps {
            step_count += 1;
            let next = rk4_step(&state, seg.flow, h, scale)
                .and_then(|s| if finite_and_bounded(&s) { Ok(s) } else { Err(Error::Diverged { step: step_count }) });
            match next {
                Ok(s) => state = s,
                Err(error) => {
                    let error = match error {
                        Error::Diverged { .. } => error,
                        _ if !finite_and_bounded(&state) => Error::Diverged { step: step_count },
                        e => e,
                    };
                    if !keep {
                        samples.push(Sample {
                            seg: Some(si),
                            flow: Some(seg.flow),
                            t_local: h * (n - 1) as f64,
                            times: times.clone(),
                            state: state.clone(),
                        });
                    }
                    return Err(Divergence { partial: Trajectory { kind: s0.kind(), samples, h: h_max }, error });
                }
            }
            let t_local = if n == seg.steps { seg.duration } else { h * n as f64 };
            times[slot].1 = start + t_local;
            if keep {
                samples.push(Sample {
                    seg: Some(si),
                    flow: Some(seg.flow),
                    t_local,
                    times: times.clone(),
                    state: state.clone(),
                });
            } else if n == seg.steps {
                last_seg = Some((si, seg.flow, t_local));
            }
        }
    }
    if let (false, Some((si, flow, t_local))) = (keep, last_seg) {
        samples.push(Sample { seg: Some(si), flow: Some(flow), t_local, times, state });
    }
    Ok(Trajectory { kind: s0.kind(), samples, h: h_max })
}

/// Fixed-step RK4 along each segment in turn, recording every step.
pub fn integrate(s0: &PhaseState, sched: &Schedule) -> core::result::Result<Trajectory, Divergence> {
    run(s0, sched, 1.0, true)
}

/// End state of `integrate` without storing intermediate samples.
pub fn endpoint(s0: &PhaseState, sched: &Schedule) -> Result<PhaseState> {
    endpoint_scaled(s0, sched, 1.0)
}

/// As `endpoint`, with every flow's Hamiltonian multiplied by `scale`.
pub fn endpoint_scaled(s0: &PhaseState, sched: &Schedule, scale: f64) -> Result<PhaseState> {
    match run(s0, sched, scale, false) {
        Ok(t) => Ok(t.last().clone()),
        Err(d) => Err(d.error),
    }
}

/// `{F, G}` for observables given as dual-number functions of the coordinates.
pub fn poisson_bracket<F, G>(s: &PhaseState, f: F, g: G) -> Result<C64>
where
    F: Fn(&[Dual]) -> Result<Dual>,
    G: Fn(&[Dual]) -> Result<Dual>,
{
    let z = s.coords();
    let (_, df) = gradient(f, &z)?;
    let (_, dg) = gradient(g, &z)?;
    Ok(s.bracket_from_gradients(&df, &dg))
}

/// `{H_f, H_g}` at `s`.
pub fn hamiltonian_bracket(s: &PhaseState, f: FlowId, g: FlowId) -> Result<C64> {
    let z = s.coords();
    let (_, df) = s.hamiltonian_gradient(f, &z)?;
    let (_, dg) = s.hamiltonian_gradient(g, &z)?;
    Ok(s.bracket_from_gradients(&df, &dg))
}

/// `|{H_f, H_g}|` for every pair; zero diagonal and symmetric by construction.
pub fn involutivity_matrix(s: &PhaseState, flows: &[FlowId]) -> Result<Vec<Vec<f64>>> {
    let z = s.coords();
    let grads = flows.iter().map(|&f| s.hamiltonian_gradient(f, &z).map(|(_, g)| g)).collect::<Result<Vec<_>>>()?;
    let n = flows.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let b = s.bracket_from_gradients(&grads[i], &grads[j]).norm();
            out[i][j] = b;
            out[j][i] = b;
        }
    }
    Ok(out)
}

/// Max-abs endpoint difference between flowing `A` then `B` and `B` then `A`.
pub fn commutativity_defect(s0: &PhaseState, fa: FlowId, fb: FlowId, tau: f64, h: f64) -> Result<f64> {
    let ab = endpoint(s0, &Schedule::with_step(&[(fa, tau), (fb, tau)], h)?)?;
    let ba = endpoint(s0, &Schedule::with_step(&[(fb, tau), (fa, tau)], h)?)?;
    Ok(ab.distance(&ba))
}

/// Ratio of a coarse to a refined error estimate. When the refined value is
/// already at the rounding floor the ratio carries no information and is
/// reported as infinite (converged).
pub fn refinement_ratio(coarse: f64, refined: f64, floor: f64) -> f64 {
    if refined <= floor { f64::INFINITY } else { coarse / refined }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutativityStudy {
    pub defect: f64,
    pub defect_half_step: f64,
    pub ratio: f64,
    pub floor: f64,
}

/// Defect at `h` and `h/2` and their ratio (about 16 for RK4).
pub fn commutativity_study(s0: &PhaseState, fa: FlowId, fb: FlowId, tau: f64, h: f64) -> Result<CommutativityStudy> {
    let defect = commutativity_defect(s0, fa, fb, tau, h)?;
    let defect_half_step = commutativity_defect(s0, fa, fb, tau, h / 2.0)?;
    // Rounding accumulates like a random walk over the refined run's steps.
    let steps = 2.0 * libm::ceil(2.0 * tau / h);
    let floor = ROUNDOFF_FACTOR * f64::EPSILON * libm::sqrt(steps) * (1.0 + s0.max_abs());
    Ok(CommutativityStudy { defect, defect_half_step, ratio: refinement_ratio(defect, defect_half_step, floor), floor })
}

/// `Tr L(λ)^m` for `m = 1..=m_max`.
pub fn spectral_traces(s: &PhaseState, lambda: C64, m_max: usize) -> Result<Vec<C64>> {
    let l = s.lax()?.eval(lambda)?;
    let mut acc = SquareMatrix::identity(l.dim());
    let mut out = Vec::with_capacity(m_max);
    for _ in 0..m_max {
        acc = &acc * &l;
        out.push(acc.trace());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftEntry {
    pub probe: C64,
    pub m: usize,
    pub drift: f64,
}

/// Conserved quantities specific to a model: `Σp` and `Πa` for Toda-type
/// sectors, `Tr K1 = Σ x_i X_i` for DST-type sectors.
pub fn model_invariants(s: &PhaseState) -> Vec<(&'static str, C64)> {
    match s {
        PhaseState::Toda(t) => {
            vec![("sum_p", C64::new(t.p.iter().sum(), 0.0)), ("prod_a", C64::new(t.a().iter().product(), 0.0))]
        }
        PhaseState::Dst(d) => vec![("trace_k1", d.trace_k1())],
        PhaseState::Coupled(c) => vec![
            ("sum_p", c.p.iter().sum()),
            ("prod_a", c.a().iter().product()),
            ("trace_k1", c.x.iter().zip(&c.big_x).map(|(a, b)| a * b).sum()),
        ],
    }
}

/// Max over samples of `|Tr L(λ*)^m - initial| / (1 + |initial|)` for each
/// probe and `m ≤ m_max`.
pub fn conservation_drift(traj: &Trajectory, probes: &[C64], m_max: usize) -> Result<Vec<DriftEntry>> {
    let first = &traj.samples[0].state;
    let config = first.pole_config()?;
    let mut out = Vec::new();
    for &probe in probes {
        let d = config.distance_to_poles(probe);
        if d <= crate::ratmat::POLE_EPS {
            return Err(Error::AtPole { distance: d });
        }
        let init = spectral_traces(first, probe, m_max)?;
        let mut worst = vec![0.0f64; m_max];
        for s in &traj.samples[1..] {
            let now = spectral_traces(&s.state, probe, m_max)?;
            for m in 0..m_max {
                worst[m] = worst[m].max((now[m] - init[m]).norm() / (1.0 + init[m].norm()));
            }
        }
        out.extend(worst.into_iter().enumerate().map(|(m, drift)| DriftEntry { probe, m: m + 1, drift }));
    }
    Ok(out)
}

/// Absolute drift of each `model_invariants` entry over the trajectory.
pub fn invariant_drift(traj: &Trajectory) -> Vec<(&'static str, f64)> {
    let init = model_invariants(&traj.samples[0].state);
    let mut worst: Vec<(&'static str, f64)> = init.iter().map(|(n, _)| (*n, 0.0)).collect();
    for s in &traj.samples[1..] {
        for (k, (_, v)) in model_invariants(&s.state).into_iter().enumerate() {
            worst[k].1 = worst[k].1.max((v - init[k].1).norm());
        }
    }
    worst
}

/// `|H_f(t) - H_f(0)|` along a trajectory.
pub fn energy_drift(traj: &Trajectory, f: FlowId) -> Result<f64> {
    let h0 = traj.samples[0].state.hamiltonian(f)?;
    let mut worst: f64 = 0.0;
    for s in &traj.samples[1..] {
        worst = worst.max((s.state.hamiltonian(f)? - h0).norm());
    }
    Ok(worst)
}

/// On-shell `𝓛_f` at `s`: the velocity is the flow's own field.
pub fn on_shell_lagrangian(s: &PhaseState, f: FlowId) -> Result<C64> {
    let z = s.coords();
    let v = s.flow_velocity(f, &z)?;
    s.lagrangian_at(f, &z, &v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureOptions {
    pub h: f64,
    pub delta: f64,
    /// Multiplies `H_B` on the arcs used for `∂_B 𝓛_A`. Anything but 1 is a
    /// deliberately wrong flow, used as a control.
    pub hamiltonian_scale_b: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions { h: DEFAULT_STEP, delta: DEFAULT_DELTA, hamiltonian_scale_b: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureOutcome {
    /// Richardson-extrapolated `|∂_B 𝓛_A - ∂_A 𝓛_B|`.
    pub residual: f64,
    /// Plain central-difference residuals at `δ` and `δ/2`.
    pub raw: f64,
    pub raw_half: f64,
    /// `raw / raw_half`, about 4 while the O(δ²) term dominates.
    pub ratio: f64,
    pub floor: f64,
}

/// Central difference of `𝓛_target` along arcs of `along`, at offset `delta`.
fn arc_derivative(s0: &PhaseState, target: FlowId, along: FlowId, delta: f64, h: f64, scale: f64) -> Result<C64> {
    let sched = Schedule::with_step(&[(along, delta)], h)?;
    let plus = endpoint_scaled(s0, &sched, scale)?;
    let minus = endpoint_scaled(s0, &sched, -scale)?;
    Ok((on_shell_lagrangian(&plus, target)? - on_shell_lagrangian(&minus, target)?) / (2.0 * delta))
}

/// `∂_{t_B} 𝓛_A - ∂_{t_A} 𝓛_B` at `s0`, which vanishes on solutions.
pub fn closure_residual(s0: &PhaseState, fa: FlowId, fb: FlowId, opts: ClosureOptions) -> Result<ClosureOutcome> {
    if !(opts.delta > 0.0 && opts.delta.is_finite()) {
        return Err(Error::InvalidConfig("closure offset must be positive"));
    }
    let diff = |delta: f64| -> Result<C64> {
        let b_of_a = arc_derivative(s0, fa, fb, delta, opts.h, opts.hamiltonian_scale_b)?;
        let a_of_b = arc_derivative(s0, fb, fa, delta, opts.h, 1.0)?;
        Ok(b_of_a - a_of_b)
    };
    let d1 = diff(opts.delta)?;
    let d2 = diff(opts.delta / 2.0)?;
    let residual = ((d2 * 4.0 - d1) / 3.0).norm();
    let scale = 1.0 + on_shell_lagrangian(s0, fa)?.norm() + on_shell_lagrangian(s0, fb)?.norm();
    // Rounding in a central difference at offset δ/2.
    let floor = ROUNDOFF_FACTOR * f64::EPSILON * scale / (opts.delta / 2.0);
    let (raw, raw_half) = (d1.norm(), d2.norm());
    Ok(ClosureOutcome { residual, raw, raw_half, ratio: refinement_ratio(raw, raw_half, floor), floor })
}

/// Max-abs difference between the coefficient derivatives predicted by the
/// Lax equation and those obtained by pushing the flow field through the
/// coefficient map.
pub fn el_lax_agreement(s: &PhaseState, f: FlowId) -> Result<f64> {
    let config = s.pole_config()?;
    let (_, from_lax) = gaudin::lax_rhs(f, &s.lax()?, &config)?;
    let z = s.coords();
    let v = s.flow_velocity(f, &z)?;
    let pushed = s.coefficients_at(&seed_direction(&z, &v));
    let tangent = crate::gaudin::GaudinCoefficients {
        a0_0: pushed.a0_0.map(|d| d.eps),
        a0_1: pushed.a0_1.map(|d| d.eps),
        a_r: pushed.a_r.iter().map(|m| m.map(|d| d.eps)).collect(),
        a_inf: pushed.a_inf.map(|d| d.eps),
    };
    Ok(from_lax.dist(&tangent))
}

/// Per-check tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub cybe: f64,
    pub averaging: f64,
    pub sklyanin: f64,
    pub projection: f64,
    pub explicit: f64,
    pub residue_sum: f64,
    pub involutivity: f64,
    pub spectral_drift: f64,
    pub invariant_drift: f64,
    pub energy_drift: f64,
    pub spectral_invariance: f64,
    pub commutativity: f64,
    pub commutativity_ratio: f64,
    pub closure: f64,
    pub closure_ratio: f64,
    pub closure_control: f64,
    pub gauge: f64,
    pub coupled_limit: f64,
    pub el_lax: f64,
    pub equivariance: f64,
    pub arithmetic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cybe: 1e-12,
            averaging: 1e-12,
            sklyanin: 1e-9,
            projection: 1e-10,
            explicit: 1e-11,
            residue_sum: 1e-10,
            involutivity: 1e-9,
            spectral_drift: 1e-8,
            invariant_drift: 1e-12,
            energy_drift: 1e-9,
            spectral_invariance: 1e-11,
            commutativity: 1e-8,
            commutativity_ratio: 12.0,
            closure: 1e-6,
            closure_ratio: 3.0,
            closure_control: 1e-3,
            gauge: 1e-11,
            coupled_limit: 1e-12,
            el_lax: 1e-10,
            equivariance: 1e-12,
            arithmetic: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseResult {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CaseResult {
    /// Passes when `residual ≤ tol`.
    pub fn at_most(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        CaseResult { name: name.into(), residual, tol, pass: residual <= tol }
    }

    /// Passes when `residual ≥ tol` (ratios, controls).
    pub fn at_least(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        CaseResult { name: name.into(), residual, tol, pass: residual >= tol }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub cases: Vec<CaseResult>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        VerificationReport { suite: suite.into(), seed, cases: Vec::new(), pass: true }
    }

    pub fn push(&mut self, case: CaseResult) {
        self.pass &= case.pass;
        self.cases.push(case);
    }

    /// Sorts cases by name and recomputes the overall flag.
    pub fn finish(mut self) -> Self {
        self.cases.sort_by(|a, b| a.name.cmp(&b.name));
        self.pass = self.cases.iter().all(|c| c.pass);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CoupledState, DstState, TodaState, dst_from_orbit};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn toda3() -> PhaseState {
        PhaseState::Toda(TodaState::new(vec![0.2, -0.3, 0.1], vec![0.5, -0.2, 0.4]).unwrap())
    }

    fn dst2() -> PhaseState {
        let m = SquareMatrix::from_fn(2, |i, j| c(if i == j { 1.2 } else { 0.3 + 0.1 * i as f64 }, 0.05 * j as f64));
        PhaseState::Dst(dst_from_orbit(&m, vec![c(0.2, 0.0), c(-0.1, 0.0)], c(1.1, 0.2)).unwrap())
    }

    fn coupled2() -> PhaseState {
        PhaseState::Coupled(
            CoupledState::new(
                vec![c(0.1, 0.0), c(-0.2, 0.0)],
                vec![c(0.3, 0.0), c(-0.1, 0.0)],
                vec![c(0.6, 0.1), c(0.5, -0.1)],
                vec![c(0.9, 0.0), c(0.8, 0.1)],
                vec![c(0.2, 0.0), c(-0.1, 0.0)],
                c(1.2, 0.3),
                0.5,
            )
            .unwrap(),
        )
    }

    #[test]
    fn zero_duration_keeps_initial_state() {
        let s = toda3();
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 0), 0.0)], 1e-3).unwrap()).unwrap();
        assert_eq!(t.samples.len(), 1);
        assert_eq!(t.samples[0].state, s);
    }

    #[test]
    fn static_toda_point_is_fixed() {
        let s = PhaseState::Toda(TodaState::new(vec![0.0; 3], vec![0.0; 3]).unwrap());
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 0), 0.1)], 1e-3).unwrap()).unwrap();
        assert!(t.last().max_abs() < 1e-14);
    }

    #[test]
    fn sample_count_matches_steps() {
        let s = toda3();
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 0), 0.05)], 1e-3).unwrap()).unwrap();
        assert_eq!(t.samples.len(), 51);
        assert!((t.samples[50].times[0].1 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn toda_energy_conserved() {
        let s = toda3();
        let f = FlowId::new(1, 0);
        let t = integrate(&s, &Schedule::with_step(&[(f, 1.0)], 1e-3).unwrap()).unwrap();
        assert!(energy_drift(&t, f).unwrap() < 1e-10);
    }

    #[test]
    fn integration_is_deterministic() {
        let s = coupled2();
        let sched = Schedule::with_step(&[(FlowId::new(1, 1), 0.02), (FlowId::new(2, 0), 0.02)], 1e-3).unwrap();
        let a = endpoint(&s, &sched).unwrap();
        let b = endpoint(&s, &sched).unwrap();
        assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn divergence_is_reported_with_partial_trajectory() {
        // H_{1,0} for Toda is bounded, so force blow-up with an absurd step.
        let s = PhaseState::Toda(TodaState::new(vec![0.0, 40.0], vec![0.0, 0.0]).unwrap());
        let err = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 0), 50.0)], 1.0).unwrap()).unwrap_err();
        assert!(!err.partial.samples.is_empty());
    }

    #[test]
    fn coordinate_brackets() {
        let s = toda3();
        let coord = |k: usize| move |z: &[Dual]| -> Result<Dual> { Ok(z[k]) };
        // {p_1, q_1} = 1, {q_1, p_2} = 0
        assert_eq!(poisson_bracket(&s, coord(3), coord(0)).unwrap(), c(1.0, 0.0));
        assert_eq!(poisson_bracket(&s, coord(0), coord(4)).unwrap(), c(0.0, 0.0));
        let h = |z: &[Dual]| s.hamiltonian_at(FlowId::new(1, 0), z);
        assert!(poisson_bracket(&s, h, h).unwrap().norm() < 1e-15);
    }

    #[test]
    fn dst_first_hamiltonians_commute() {
        let m = SquareMatrix::from_fn(3, |i, j| c(if i == j { 1.3 } else { 0.2 * (i + j) as f64 }, 0.1 * i as f64));
        let s = PhaseState::Dst(dst_from_orbit(&m, vec![c(0.1, 0.0), c(0.3, 0.1), c(-0.2, 0.0)], c(0.8, 0.4)).unwrap());
        assert!(hamiltonian_bracket(&s, FlowId::new(1, 0), FlowId::new(1, 1)).unwrap().norm() < 1e-9);
    }

    #[test]
    fn involutivity_grid() {
        for s in [toda3(), dst2(), coupled2()] {
            let flows = s.admissible_flows(3);
            let grid = involutivity_matrix(&s, &flows).unwrap();
            for (i, row) in grid.iter().enumerate() {
                assert_eq!(row[i], 0.0);
                for v in row {
                    assert!(*v <= 1e-9, "{:?}: {v}", s.kind());
                }
            }
        }
    }

    #[test]
    fn identical_flows_commute_exactly() {
        let f = FlowId::new(1, 1);
        assert!(commutativity_defect(&coupled2(), f, f, 0.1, 1e-2).unwrap() <= 1e-13);
    }

    #[test]
    fn coupled_flows_commute() {
        let st = commutativity_study(&coupled2(), FlowId::new(1, 0), FlowId::new(1, 1), 1.0, 1e-3).unwrap();
        assert!(st.defect <= 1e-8, "{st:?}");
        assert!(st.ratio >= 12.0, "{st:?}");
    }

    #[test]
    fn dst_trace_k1_conserved() {
        let s = dst2();
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 1), 0.3)], 1e-3).unwrap()).unwrap();
        for (_, d) in invariant_drift(&t) {
            assert!(d <= 1e-12, "{d}");
        }
    }

    #[test]
    fn toda_spectral_drift() {
        let s = toda3();
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 0), 1.0)], 1e-3).unwrap()).unwrap();
        let probes = crate::ratmat::probe_points(5);
        for e in conservation_drift(&t, &probes, 4).unwrap() {
            assert!(e.drift <= 1e-8, "{e:?}");
        }
        for (name, d) in invariant_drift(&t) {
            assert!(d <= 1e-12, "{name}: {d}");
        }
    }

    #[test]
    fn constant_trajectory_has_no_drift() {
        let s = PhaseState::Toda(TodaState::new(vec![0.0; 2], vec![0.0; 2]).unwrap());
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 0), 0.01)], 1e-3).unwrap()).unwrap();
        for e in conservation_drift(&t, &[c(0.7, 0.2)], 3).unwrap() {
            assert_eq!(e.drift, 0.0);
        }
    }

    #[test]
    fn probe_on_pole_rejected() {
        let s = dst2();
        let t = integrate(&s, &Schedule::with_step(&[(FlowId::new(1, 1), 0.0)], 1e-3).unwrap()).unwrap();
        let DstState { zeta, .. } = match &s {
            PhaseState::Dst(d) => d.clone(),
            _ => unreachable!(),
        };
        assert!(conservation_drift(&t, &[-zeta], 2).is_err());
    }

    #[test]
    fn closure_for_coupled_pair() {
        let (fa, fb) = (FlowId::new(1, 0), FlowId::new(1, 1));
        let out = closure_residual(&coupled2(), fa, fb, ClosureOptions::default()).unwrap();
        assert!(out.residual <= 1e-6, "{out:?}");
        assert!(out.ratio >= 3.0, "{out:?}");
        let control = closure_residual(
            &coupled2(),
            fa,
            fb,
            ClosureOptions { hamiltonian_scale_b: 1.1, ..ClosureOptions::default() },
        )
        .unwrap();
        assert!(control.residual > 1e-3, "{control:?}");
    }

    #[test]
    fn closure_same_flow_is_zero() {
        let f = FlowId::new(1, 1);
        assert_eq!(closure_residual(&dst2(), f, f, ClosureOptions::default()).unwrap().residual, 0.0);
    }

    #[test]
    fn el_lax_agreement_cases() {
        assert!(el_lax_agreement(&toda3(), FlowId::new(1, 0)).unwrap() <= 1e-10);
        assert!(el_lax_agreement(&dst2(), FlowId::new(1, 0)).unwrap() == 0.0);
        for f in coupled2().admissible_flows(2) {
            let r = el_lax_agreement(&coupled2(), f).unwrap();
            assert!(r <= 1e-10, "{f}: {r}");
        }
    }

    #[test]
    fn report_flags() {
        let mut r = VerificationReport::new("x", 1);
        r.push(CaseResult::at_most("b", 1.0, 2.0));
        r.push(CaseResult::at_least("a", 1.0, 2.0));
        let r = r.finish();
        assert!(!r.pass);
        assert_eq!(r.cases[0].name, "a");
    }
}
