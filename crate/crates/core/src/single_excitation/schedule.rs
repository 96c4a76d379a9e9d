//! Piecewise-constant switching schedules and the shipped shuttling protocols.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::{evolution_matrix, AmplitudeState, NORM_TOL};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::modes::{CouplingBasis, LambdaMatrix};

/// Optical population below which a switch instant counts as valid.
pub const SWITCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Couplings `g_1..g_{N-1}` held during the segment.
    pub g: Vec<Complex64>,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Self {
        Schedule { segments }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (k, s) in self.segments.iter().enumerate() {
            if s.g.len() != n - 1 {
                return Err(Error::param(format!("segment {k}: expected {} couplings, got {}", n - 1, s.g.len())));
            }
            if !(s.duration >= 0.0 && s.duration.is_finite()) {
                return Err(Error::param(format!("segment {k}: duration must be finite and >= 0")));
            }
            if s.g.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
                return Err(Error::param(format!("segment {k}: couplings must be finite")));
            }
        }
        Ok(())
    }

    /// End time of every segment, `τ₁, τ₂, …`.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                t += s.duration;
                t
            })
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn concat(&self, other: &Schedule) -> Schedule {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Schedule { segments }
    }

    /// `points` evenly spaced samples per segment, segment ends included.
    pub fn sample_grid(&self, points: usize) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut start = 0.0;
        for s in &self.segments {
            let points = points.max(1);
            if s.duration > 0.0 {
                for k in 1..points {
                    out.push(start + s.duration * k as f64 / points as f64);
                }
            }
            start += s.duration;
            // the segment end is accumulated exactly as in `total_duration`
            if s.duration > 0.0 {
                out.push(start);
            }
        }
        out
    }

    /// Full-segment evolution matrices.
    pub fn segment_unitaries(&self, basis: &CouplingBasis) -> Result<Vec<CMatrix>> {
        self.validate(basis.n())?;
        self.segments
            .iter()
            .map(|s| evolution_matrix(&LambdaMatrix::from_couplings(basis, &s.g)?, s.duration))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub time: f64,
    /// Index of the segment ending at this instant.
    pub segment: usize,
    pub optical_population: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeState>,
    /// Segment active at each sample; a sample on a boundary belongs to the
    /// segment that ends there.
    pub segment_index: Vec<usize>,
    pub switch_events: Vec<SwitchEvent>,
    pub final_state: AmplitudeState,
}

impl Trajectory {
    pub fn all_switches_valid(&self) -> bool {
        self.switch_events.iter().all(|e| e.valid)
    }

    /// Validity of the switch at `times[k]`, if one happens there.
    pub fn switch_at(&self, k: usize) -> Option<bool> {
        let t = self.times[k];
        self.switch_events.iter().find(|e| e.time == t).map(|e| e.valid)
    }
}

/// Applies the schedule to `initial`, sampling at `times` (non-decreasing,
/// within `[0, total duration]`), and records the optical population at
/// every segment end.
pub fn run_schedule(
    basis: &CouplingBasis,
    schedule: &Schedule,
    initial: &AmplitudeState,
    times: &[f64],
) -> Result<Trajectory> {
    let n = basis.n();
    if initial.n() != n {
        return Err(Error::param("initial state size does not match the basis"));
    }
    let norm = initial.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::contract(format!("initial state has squared norm {norm}, expected 1")));
    }
    let total = schedule.total_duration();
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0 && *t <= total)) {
        return Err(Error::param(format!("sample times must be sorted within [0, {total}]")));
    }
    let unitaries = schedule.segment_unitaries(basis)?;
    let ends = schedule.switch_times();

    let mut starts = vec![initial.clone()];
    let mut switch_events = Vec::with_capacity(unitaries.len());
    for (k, u) in unitaries.iter().enumerate() {
        let next = starts[k].evolved(u);
        let pop = next.optical_population();
        switch_events.push(SwitchEvent { time: ends[k], segment: k, optical_population: pop, valid: pop < SWITCH_TOL });
        starts.push(next);
    }
    let final_state = starts.last().cloned().expect("at least the initial state");

    let lambdas: Vec<LambdaMatrix> =
        schedule.segments.iter().map(|s| LambdaMatrix::from_couplings(basis, &s.g)).collect::<Result<_>>()?;
    let mut states = Vec::with_capacity(times.len());
    let mut segment_index = Vec::with_capacity(times.len());
    for &t in times {
        if schedule.segments.is_empty() {
            states.push(initial.clone());
            segment_index.push(0);
            continue;
        }
        // first segment whose end is not before t and that actually spans it
        let k = (0..ends.len())
            .find(|&k| t <= ends[k] && (schedule.segments[k].duration > 0.0 || t == ends[k]))
            .unwrap_or(ends.len() - 1);
        let start = ends[k] - schedule.segments[k].duration;
        let state = if t == ends[k] {
            starts[k + 1].clone()
        } else if t == start {
            starts[k].clone()
        } else {
            starts[k].evolved(&evolution_matrix(&lambdas[k], t - start)?)
        };
        states.push(state);
        segment_index.push(k);
    }
    Ok(Trajectory { times: times.to_vec(), states, segment_index, switch_events, final_state })
}

/// Shuttling protocols for a four-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Element 1 to element 4 through the first optical mode, then the second.
    TransferOneToFour,
    /// Element 1 to element 4 with the first two optical modes driven together.
    JointTransfer,
    /// A superposition of elements 1 and 4 is moved onto elements 2 and 3 and
    /// then exchanged with the light fields as a polariton.
    Polariton,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::TransferOneToFour, Protocol::JointTransfer, Protocol::Polariton];

    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::TransferOneToFour => "transfer_1_to_4",
            Protocol::JointTransfer => "joint_transfer",
            Protocol::Polariton => "polariton",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::param(format!("unknown protocol '{s}'")))
    }
}

/// Schedule and initial state of a shipped protocol with coupling magnitude `omega`.
pub fn protocol(p: Protocol, omega: f64) -> Result<(Schedule, AmplitudeState)> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::param("coupling magnitude must be positive"));
    }
    let on = Complex64::new(omega, 0.0);
    let off = Complex64::new(0.0, 0.0);
    let half = PI / omega;
    let seg = |g: [Complex64; 3], duration: f64| Segment { g: g.to_vec(), duration };
    Ok(match p {
        Protocol::TransferOneToFour => {
            (Schedule::new(vec![seg([on, off, off], half), seg([off, on, off], half)]), AmplitudeState::phonon(4, 1)?)
        }
        Protocol::JointTransfer => (Schedule::new(vec![seg([on, on, off], half)]), AmplitudeState::phonon(4, 1)?),
        Protocol::Polariton => {
            let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
            let z = Complex64::new(0.0, 0.0);
            (
                Schedule::new(vec![seg([on, off, off], half), seg([on, on, off], 2.0 * half)]),
                AmplitudeState::mechanical(&[r, z, z, -r])?,
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::build_basis;
    use nalgebra::DVector;

    #[test]
    fn single_segment_equals_evolution_matrix() {
        let basis = build_basis(3).unwrap();
        let g = vec![Complex64::new(0.1, 0.05), Complex64::new(0.0, 0.2)];
        let sched = Schedule::new(vec![Segment { g: g.clone(), duration: 4.0 }]);
        let init = AmplitudeState::phonon(3, 1).unwrap();
        let traj = run_schedule(&basis, &sched, &init, &[0.0, 1.5, 4.0]).unwrap();
        let lam = LambdaMatrix::from_couplings(&basis, &g).unwrap();
        let expected = init.evolved(&evolution_matrix(&lam, 1.5).unwrap());
        assert!((&traj.states[1].amplitudes - &expected.amplitudes).norm() < 1e-15);
        assert_eq!(traj.states[0], init);
        assert_eq!(traj.states[2], traj.final_state);
    }

    #[test]
    fn shipped_protocols() {
        let basis = build_basis(4).unwrap();
        for p in Protocol::ALL {
            let (sched, init) = protocol(p, 0.1).unwrap();
            let grid = sched.sample_grid(50);
            let traj = run_schedule(&basis, &sched, &init, &grid).unwrap();
            assert!(traj.all_switches_valid(), "{p}");
            for s in &traj.states {
                assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
            let mech = traj.final_state.mechanical_populations();
            match p {
                Protocol::TransferOneToFour | Protocol::JointTransfer => assert!(mech[3] > 1.0 - 1e-10),
                Protocol::Polariton => {
                    assert!((mech[1] - 0.5).abs() < 1e-10 && (mech[2] - 0.5).abs() < 1e-10);
                }
            }
        }
        assert_eq!("joint_transfer".parse::<Protocol>().unwrap(), Protocol::JointTransfer);
        assert!("teleport".parse::<Protocol>().is_err());
    }

    #[test]
    fn hold_and_switch_passes_through_superposition() {
        let basis = build_basis(4).unwrap();
        let (sched, init) = protocol(Protocol::TransferOneToFour, 0.1).unwrap();
        let traj = run_schedule(&basis, &sched, &init, &[PI / 0.1]).unwrap();
        let mid = traj.states[0].mechanical_populations();
        for p in mid {
            assert!((p - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn concatenation_is_product() {
        let basis = build_basis(4).unwrap();
        let a = Schedule::new(vec![Segment {
            g: vec![Complex64::new(0.1, 0.0), Complex64::new(0.02, 0.03), Complex64::new(0.0, 0.0)],
            duration: 3.3,
        }]);
        let b = Schedule::new(vec![Segment {
            g: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.1), Complex64::new(0.05, 0.0)],
            duration: 7.1,
        }]);
        let init = AmplitudeState::phonon(4, 2).unwrap();
        let joint = run_schedule(&basis, &a.concat(&b), &init, &[]).unwrap();
        let ua = a.segment_unitaries(&basis).unwrap();
        let ub = b.segment_unitaries(&basis).unwrap();
        let expected = &ub[0] * (&ua[0] * &init.amplitudes);
        assert!((&joint.final_state.amplitudes - expected).norm() < 1e-14);
        assert_eq!(joint.switch_events.len(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let basis = build_basis(2).unwrap();
        let sched = Schedule::new(vec![Segment { g: vec![Complex64::new(0.1, 0.0)], duration: 1.0 }]);
        let bad = AmplitudeState::from_amplitudes(2, DVector::from_element(3, Complex64::new(1.0, 0.0))).unwrap();
        assert!(matches!(run_schedule(&basis, &sched, &bad, &[0.0]), Err(Error::Contract(_))));
        let ok = AmplitudeState::phonon(2, 1).unwrap();
        assert!(run_schedule(&basis, &sched, &ok, &[2.0]).is_err());
        let neg = Schedule::new(vec![Segment { g: vec![Complex64::new(0.1, 0.0)], duration: -1.0 }]);
        assert!(neg.validate(2).is_err());
    }

    #[test]
    fn mid_segment_switch_is_flagged() {
        let basis = build_basis(2).unwrap();
        let sched = Schedule::new(vec![Segment { g: vec![Complex64::new(0.1, 0.0)], duration: PI / 0.2 }]);
        let traj = run_schedule(&basis, &sched, &AmplitudeState::phonon(2, 1).unwrap(), &[]).unwrap();
        assert!(!traj.all_switches_valid());
        assert!((traj.switch_events[0].optical_population - 0.5).abs() < 1e-10);
    }
}
