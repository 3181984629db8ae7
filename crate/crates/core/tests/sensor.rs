use lg4nmr_core::constants::GAMMA_ELECTRON;
use lg4nmr_core::dynamics::SignalTrace;
use lg4nmr_core::sensor::{accumulated_phase_analytic, evolve_nv, SensorSequence, DEFAULT_MW_RABI};
use lg4nmr_core::sequence::{build_lg4_schedule, Axis, Lg4Schedule};

const TAU: f64 = std::f64::consts::TAU;

fn schedule(n_blocks: usize) -> Lg4Schedule {
    build_lg4_schedule(TAU * 150e3, 55f64.to_radians(), n_blocks).unwrap()
}

fn sampled(schedule: &Lg4Schedule, per_segment: usize, f: impl Fn(f64) -> f64) -> SignalTrace {
    let dt = schedule.segment_duration() / per_segment as f64;
    let n = 4 * per_segment * schedule.n_blocks() + 1;
    SignalTrace { dt, start_time: 0.0, samples: (0..n).map(|k| f(k as f64 * dt)).collect() }
}

#[test]
fn static_field_is_refocused() {
    let sched = schedule(6);
    let seq = SensorSequence::tailored(&sched, DEFAULT_MW_RABI).unwrap();
    let trace = sampled(&sched, 400, |_| 2e-9);
    let records = evolve_nv(&trace, &seq, None).unwrap();
    assert_eq!(records.len(), 6);
    for r in &records {
        assert!(r.phase.abs() < 1e-9, "block {}: {}", r.block, r.phase);
    }
    // the same holds for a static frequency offset entered as crosstalk
    let silent = sampled(&sched, 400, |_| 0.0);
    let offset = vec![TAU * 50.0; silent.len()];
    for r in evolve_nv(&silent, &seq, Some(&offset)).unwrap() {
        assert!(r.phase.abs() < 1e-9);
    }
}

#[test]
fn synthetic_cosine_matches_analytic_phase() {
    let sched = schedule(3);
    let omega_bar = sched.effective_rabi();
    let (gamma, phi0) = (1.5e-9, 0.7);
    for seq in [
        SensorSequence::tailored(&sched, DEFAULT_MW_RABI).unwrap(),
        SensorSequence::cpmg(&sched, DEFAULT_MW_RABI).unwrap(),
    ] {
        let trace = sampled(&sched, 2000, |t| gamma * (omega_bar * t + phi0).cos() + 3e-10);
        let expected: f64 = [Axis::A, Axis::ABar, Axis::BBar]
            .iter()
            .map(|&ax| accumulated_phase_analytic(gamma, phi0, seq.t1(ax).unwrap(), omega_bar, GAMMA_ELECTRON))
            .sum();
        assert!(expected.abs() > 1e-4);
        for r in evolve_nv(&trace, &seq, None).unwrap() {
            assert!((r.phase / expected - 1.0).abs() < 0.01, "{} vs {expected}", r.phase);
            assert!((r.sigma_z - r.phase.sin()).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_signal_reads_zero() {
    let sched = schedule(4);
    let seq = SensorSequence::cpmg(&sched, DEFAULT_MW_RABI).unwrap();
    let records = evolve_nv(&sampled(&sched, 64, |_| 0.0), &seq, None).unwrap();
    assert!(records.iter().all(|r| r.phase.abs() < 1e-15 && r.sigma_z.abs() < 1e-15));
}

#[test]
fn short_trace_and_mismatched_crosstalk_are_rejected() {
    let sched = schedule(1);
    let seq = SensorSequence::cpmg(&sched, DEFAULT_MW_RABI).unwrap();
    let trace = sampled(&sched, 64, |_| 0.0);
    assert!(evolve_nv(&trace, &seq, Some(&[0.0; 3])).is_err());
    let short = SignalTrace { dt: trace.dt, start_time: 0.0, samples: trace.samples[..100].to_vec() };
    assert!(evolve_nv(&short, &seq, None).is_err());
}
