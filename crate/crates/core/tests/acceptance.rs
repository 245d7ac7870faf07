//! End-to-end acceptance criteria, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Duration;

use transjump::validate::{
    fig2_trend, prior_only, quadrature, ratio_cancellation, sorted_equivalence, toy_stationarity,
    Fig2Params, PriorOnlyParams, QuadratureParams, RatioParams, SortedParams, SuiteReport,
    ToyParams,
};

struct Criterion {
    id: usize,
    title: &'static str,
    limit: Duration,
    run: fn() -> transjump::Result<SuiteReport>,
}

const CRITERIA: [Criterion; 6] = [
    Criterion {
        id: 1,
        title: "toy stationarity and detailed balance",
        limit: Duration::from_secs(5),
        run: || toy_stationarity(&ToyParams::default()),
    },
    Criterion {
        id: 2,
        title: "birth ratio equals its closed form",
        limit: Duration::from_secs(10),
        run: || ratio_cancellation(&RatioParams::default()),
    },
    Criterion {
        id: 3,
        title: "prior-only order laws, corrected vs legacy",
        limit: Duration::from_secs(60),
        run: || prior_only(&PriorOnlyParams::default()),
    },
    Criterion {
        id: 4,
        title: "order posterior against quadrature",
        limit: Duration::from_secs(120),
        run: || quadrature(&QuadratureParams::default()),
    },
    Criterion {
        id: 5,
        title: "three-tone replications, legacy shift",
        limit: Duration::from_secs(900),
        run: || fig2_trend(&Fig2Params::default()),
    },
    Criterion {
        id: 6,
        title: "sorted and unsorted representations agree",
        limit: Duration::from_secs(60),
        run: || sorted_equivalence(&SortedParams::default()),
    },
];

/// Criteria that fail for this model and are reported without failing the
/// target. An unexpected pass is reported too.
const KNOWN_FAILURES: [usize; 1] = [5];

fn main() -> ExitCode {
    let mut passed = 0;
    let mut unexpected = Vec::new();
    for c in &CRITERIA {
        match (c.run)() {
            Ok(report) => {
                let in_time = report.elapsed < c.limit;
                let ok = report.pass() && in_time;
                passed += usize::from(ok);
                let known = KNOWN_FAILURES.contains(&c.id);
                if ok == known {
                    unexpected.push(c.id);
                }
                println!(
                    "{} criterion {}: {} ({:.2} s, limit {} s){}",
                    if ok { "PASS" } else { "FAIL" },
                    c.id,
                    c.title,
                    report.elapsed.as_secs_f64(),
                    c.limit.as_secs(),
                    match (ok, known) {
                        (false, true) => " [known failure]",
                        (true, true) => " [unexpected pass]",
                        _ => "",
                    }
                );
                for check in &report.checks {
                    println!("    {check}");
                }
            }
            Err(e) => {
                unexpected.push(c.id);
                println!("FAIL criterion {}: {} (error: {e})", c.id, c.title);
            }
        }
    }
    println!(
        "acceptance: {passed}/{} criteria passed; known failures {KNOWN_FAILURES:?}; unexpected {unexpected:?}",
        CRITERIA.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
