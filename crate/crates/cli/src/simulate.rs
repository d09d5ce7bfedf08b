//! Trajectory simulation and its CSV rendering.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! every value round-trips exactly; lines end with `\n`.

use std::fmt::Write as _;

use gaudin_core::C64;
use gaudin_core::dynamics::{Sample, Schedule, Trajectory, integrate, model_invariants, spectral_traces};
use gaudin_core::gaudin::FlowId;
use gaudin_core::models::{ModelKind, PhaseState};

use crate::CliError;
use crate::config::RunConfig;
use crate::sample::{self, SeedTree};

/// Largest power `m` of `Tr L(λ)^m` tracked in `drift_max`.
pub const DRIFT_POWERS: usize = 4;
/// Number of spectral probes tracked in `drift_max`.
pub const DRIFT_PROBES: usize = 5;

/// Parses `p:r:duration` triples separated by commas.
pub fn parse_schedule(text: &str) -> Result<Vec<(FlowId, f64)>, CliError> {
    let bad = |part: &str, why: &str| CliError::Usage(format!("schedule entry `{part}`: {why}"));
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Usage("empty schedule".into()));
    }
    text.split(',')
        .map(|part| {
            let fields: Vec<&str> = part.trim().split(':').collect();
            if fields.len() != 3 {
                return Err(bad(part, "expected p:r:duration"));
            }
            let p: usize = fields[0].parse().map_err(|_| bad(part, "p must be a positive integer"))?;
            let r: usize = fields[1].parse().map_err(|_| bad(part, "r must be a non-negative integer"))?;
            let d: f64 = fields[2].parse().map_err(|_| bad(part, "duration must be a number"))?;
            if p == 0 {
                return Err(bad(part, "p must be at least 1"));
            }
            if !(d.is_finite() && d >= 0.0) {
                return Err(bad(part, "duration must be finite and non-negative"));
            }
            Ok((FlowId::new(p, r), d))
        })
        .collect()
}

/// Parses a flow pair `p:r,p:r`.
pub fn parse_pair(text: &str) -> Result<(FlowId, FlowId), CliError> {
    let flows: Vec<FlowId> = text
        .split(',')
        .map(|part| {
            let fields: Vec<&str> = part.trim().split(':').collect();
            let parsed = match fields.as_slice() {
                [p, r] => p.parse::<usize>().ok().zip(r.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((p, r)) if p > 0 => Ok(FlowId::new(p, r)),
                _ => Err(CliError::Usage(format!("flow `{part}`: expected p:r with p ≥ 1"))),
            }
        })
        .collect::<Result<_, _>>()?;
    match flows.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::Usage(format!("flow pair `{text}`: expected two flows p:r,p:r"))),
    }
}

fn real_parts(kind: ModelKind) -> bool {
    kind == ModelKind::Toda
}

/// Column names for a model of order `t`.
pub fn header(state: &PhaseState, depth: usize) -> Vec<String> {
    let t = state.order();
    let mut cols: Vec<String> =
        ["sample", "seg", "flow_p", "flow_r", "t_local"].iter().map(|s| s.to_string()).collect();
    let complex_block = |cols: &mut Vec<String>, name: &str| {
        for i in 1..=t {
            cols.push(format!("{name}_re{i}"));
            cols.push(format!("{name}_im{i}"));
        }
    };
    match state.kind() {
        ModelKind::Toda => {
            cols.extend((1..=t).map(|i| format!("q{i}")));
            cols.extend((1..=t).map(|i| format!("p{i}")));
        }
        ModelKind::Dst => {
            complex_block(&mut cols, "x");
            complex_block(&mut cols, "X");
        }
        ModelKind::Coupled => {
            for name in ["q", "p", "x", "X"] {
                complex_block(&mut cols, name);
            }
        }
    }
    for f in state.admissible_flows(depth) {
        if real_parts(state.kind()) {
            cols.push(format!("H_{}_{}", f.p, f.r));
        } else {
            cols.push(format!("H_{}_{}_re", f.p, f.r));
            cols.push(format!("H_{}_{}_im", f.p, f.r));
        }
    }
    cols.push("drift_max".into());
    cols
}

fn num(out: &mut String, v: f64) {
    write!(out, ",{v:.16e}").expect("writing to a String");
}

/// Reference values for `drift_max`: traces at the probes and model invariants.
struct DriftBaseline {
    probes: Vec<C64>,
    traces: Vec<Vec<C64>>,
    invariants: Vec<C64>,
}

impl DriftBaseline {
    fn new(s0: &PhaseState, probes: Vec<C64>) -> gaudin_core::Result<Self> {
        let traces = probes.iter().map(|&p| spectral_traces(s0, p, DRIFT_POWERS)).collect::<Result<_, _>>()?;
        let invariants = model_invariants(s0).into_iter().map(|(_, v)| v).collect();
        Ok(DriftBaseline { probes, traces, invariants })
    }

    /// Largest relative spectral drift or absolute invariant drift.
    fn drift(&self, s: &PhaseState) -> gaudin_core::Result<f64> {
        let mut worst: f64 = 0.0;
        for (&p, init) in self.probes.iter().zip(&self.traces) {
            for (now, was) in spectral_traces(s, p, DRIFT_POWERS)?.iter().zip(init) {
                worst = worst.max((now - was).norm() / (1.0 + was.norm()));
            }
        }
        for ((_, now), was) in model_invariants(s).iter().zip(&self.invariants) {
            worst = worst.max((now - was).norm());
        }
        Ok(worst)
    }
}

fn row(idx: usize, sample: &Sample, first: FlowId, depth: usize, base: &DriftBaseline) -> gaudin_core::Result<String> {
    let st = &sample.state;
    let seg = sample.seg.unwrap_or(0);
    let flow = sample.flow.unwrap_or(first);
    let mut out = format!("{idx},{seg},{},{}", flow.p, flow.r);
    num(&mut out, sample.t_local);
    let real = real_parts(st.kind());
    for z in st.coords() {
        num(&mut out, z.re);
        if !real {
            num(&mut out, z.im);
        }
    }
    for f in st.admissible_flows(depth) {
        let h = st.hamiltonian(f)?;
        num(&mut out, h.re);
        if !real {
            num(&mut out, h.im);
        }
    }
    num(&mut out, base.drift(st)?);
    out.push('\n');
    Ok(out)
}

/// CSV text of a simulation; `diverged` is set when integration stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOutput {
    pub csv: String,
    pub diverged: Option<String>,
}

/// Renders a trajectory. Rows that cannot be evaluated end the table early.
pub fn render(traj: &Trajectory, first: FlowId, depth: usize, probes: Vec<C64>) -> (String, Option<String>) {
    let s0 = &traj.samples[0].state;
    let mut csv = header(s0, depth).join(",");
    csv.push('\n');
    let base = match DriftBaseline::new(s0, probes) {
        Ok(b) => b,
        Err(e) => return (csv, Some(e.to_string())),
    };
    for (idx, s) in traj.samples.iter().enumerate() {
        match row(idx, s, first, depth, &base) {
            Ok(line) => csv.push_str(&line),
            Err(e) => return (csv, Some(format!("sample {idx}: {e}"))),
        }
    }
    (csv, None)
}

/// Integrates the schedule from the configured initial state.
pub fn simulate(cfg: &RunConfig, schedule: &str) -> Result<SimulationOutput, CliError> {
    let parts = parse_schedule(schedule)?;
    let model = cfg.model.ok_or_else(|| CliError::Config("simulate needs --model".into()))?;
    let s0 = sample::initial_state(cfg, model).map_err(|e| CliError::Config(e.to_string()))?;
    for (f, _) in &parts {
        s0.check_flow(*f).map_err(|e| CliError::Usage(e.to_string()))?;
        if f.p > cfg.depth {
            return Err(CliError::Usage(format!("flow ({},{}) exceeds depth {}", f.p, f.r, cfg.depth)));
        }
    }
    let sched = Schedule::with_step(&parts, cfg.h).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = s0.pole_config().map_err(|e| CliError::Config(e.to_string()))?;
    let mut rng = SeedTree::new(cfg.seed).stream("simulate.probes");
    let probes: Vec<C64> = (0..DRIFT_PROBES).map(|_| sample::spectral_point(&mut rng, &config, 0.2)).collect();
    let first = parts[0].0;
    let (traj, diverged) = match integrate(&s0, &sched) {
        Ok(t) => (t, None),
        Err(d) => (d.partial, Some(d.error.to_string())),
    };
    let (mut csv, render_err) = render(&traj, first, cfg.depth, probes);
    let diverged = diverged.or(render_err);
    if diverged.is_some() {
        csv.push_str("# diverged\n");
    }
    Ok(SimulationOutput { csv, diverged })
}
