mod common;

use gkw_core::{Algorithm, ScheduleMode, StreamSummary};

fn pair(alg: Algorithm, ell: u64) -> (StreamSummary<i64>, StreamSummary<i64>) {
    let a = StreamSummary::with_ell(ell, alg, ScheduleMode::Delayed).unwrap();
    let mut b = a.clone();
    b.enable_smoothing().unwrap();
    (a, b)
}

#[test]
fn smoothed_run_ends_in_the_amortized_state() {
    for alg in Algorithm::ALL {
        let w = if alg.is_weighted() { "uniform(30)" } else { "unit" };
        for order in ["random", "sorted", "dup"] {
            for ell in [2, 10, 50] {
                let data = common::items(&format!("{order}:{w}:17:20000"));
                let (mut a, mut b) = pair(alg, ell);
                for it in &data {
                    a.process(it.value, it.weight).unwrap();
                    b.process(it.value, it.weight).unwrap();
                    b.summary().check_invariant().unwrap();
                }
                a.flush();
                b.flush();
                assert_eq!(b.buffered(), 0);
                assert_eq!(a.summary().entries(), b.summary().entries(), "{alg} {order} ell={ell}");
                assert_eq!(a.deletion_steps(), b.deletion_steps());
            }
        }
    }
}

#[test]
fn buffer_is_empty_when_the_next_window_opens() {
    let data = common::items("random:unit:3:200000");
    for alg in [Algorithm::GkWeighted, Algorithm::GkUnweighted, Algorithm::GreedyWeighted] {
        let (_, mut s) = pair(alg, 100);
        let mut largest_summary = 0;
        for it in &data {
            let was_running = s.step_in_progress();
            let buffered = s.buffered();
            s.process(it.value, 1).unwrap();
            largest_summary = largest_summary.max(s.summary().len());
            if !was_running && s.step_in_progress() {
                assert_eq!(buffered, 0, "{alg}: items still buffered at a trigger");
            }
        }
        assert!(s.max_buffered() <= 2 * largest_summary + 2, "{alg}: buffer {}", s.max_buffered());
    }
}

#[test]
fn smoothing_needs_delayed_schedule() {
    let mut s = StreamSummary::<i64>::with_ell(10, Algorithm::GkUnweighted, ScheduleMode::EveryStep).unwrap();
    assert!(s.enable_smoothing().is_err());
    let mut s = StreamSummary::<i64>::with_ell(10, Algorithm::GkUnweighted, ScheduleMode::Delayed).unwrap();
    s.enable_smoothing().unwrap();
    assert!(s.set_schedule(ScheduleMode::EveryStep).is_err());
}
