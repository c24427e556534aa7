mod support;

use support::{gradient_suite, GRAD_TOL, INSTANCES};

#[test]
fn every_op_matches_central_differences() {
    let (results, elapsed) = gradient_suite(2024);
    for r in &results {
        println!(
            "{:<32} {:>3} instances {:>6} entries  worst {:.2e}",
            r.op, r.instances, r.entries, r.worst
        );
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed()).collect();
    assert!(
        failed.is_empty(),
        "above {GRAD_TOL} or fewer than {INSTANCES} instances: {failed:?}"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
}

#[test]
fn other_seeds_pass_too() {
    let (results, _) = gradient_suite(99);
    assert!(results.iter().all(|r| r.passed()), "{results:?}");
}
