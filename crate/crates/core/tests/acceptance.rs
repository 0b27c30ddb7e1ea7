//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Each criterion runs its scenario at default parameters and checks the
//! relevant assertions, sample counts and wall-clock budget.

use std::collections::HashMap;
use std::process::ExitCode;

use nullgeo::scenario::{run_with, Report};
use serde_json::Value;

struct Criterion {
    id: u32,
    title: &'static str,
    scenario: &'static str,
    budget_s: f64,
    assertions: &'static [&'static str],
    /// Extra `(result path, minimum)` count requirements.
    counts: &'static [(&'static str, u64)],
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "Minkowski minus origin: two limit classes",
        scenario: "minkowski-minus-point",
        budget_s: 10.0,
        assertions: &["distinct limit classes", "limit separation", "hausdorff violation", "full Minkowski limit classes"],
        counts: &[],
    },
    Criterion {
        id: 2,
        title: "revolution product: non-Hausdorff under both auxiliary metrics",
        scenario: "revolution-hausdorff",
        budget_s: 60.0,
        assertions: &[
            "distinct limit classes (wick-flip)",
            "limit separation (wick-flip)",
            "distinct limit classes (euclidean)",
            "limit separation (euclidean)",
            "verdict stable under aux swap",
        ],
        counts: &[],
    },
    Criterion {
        id: 3,
        title: "J+ closedness on seeded convergent sequences",
        scenario: "revolution-hausdorff",
        budget_s: 60.0,
        assertions: &["J+ closedness probe"],
        counts: &[("closedness/outcome/Pass/sequences", 200)],
    },
    Criterion {
        id: 4,
        title: "E+ witness on Minkowski minus origin, pass on full Minkowski",
        scenario: "minkowski-minus-point",
        budget_s: 10.0,
        assertions: &["E+ closedness with origin deleted", "E+ closedness in full Minkowski"],
        counts: &[],
    },
    Criterion {
        id: 5,
        title: "cylinder geodesic meets the region twice",
        scenario: "cylinder-embedding",
        budget_s: 5.0,
        assertions: &["start state is future null", "intersection components"],
        counts: &[],
    },
    Criterion {
        id: 6,
        title: "causal oracle vs shooting and grid evidence",
        scenario: "revolution-hausdorff",
        budget_s: 120.0,
        assertions: &["grid oracle hard disagreements", "shooting evidence failures"],
        counts: &[("grid_oracle/pairs", 500), ("shooting/shots", 500)],
    },
    Criterion {
        id: 7,
        title: "circle length, band distance and near-end minimizers",
        scenario: "revolution-distances",
        budget_s: 30.0,
        assertions: &[
            "circle_length(0.5) vs quadrature",
            "circle_length(0.5) vs 1/4",
            "band_distance < |dx| cases",
            "near-end minimizers confined to the open band",
        ],
        counts: &[("band_bound/pairs", 100)],
    },
    Criterion {
        id: 8,
        title: "Clairaut and energy conservation over span 20",
        scenario: "revolution-distances",
        budget_s: 30.0,
        assertions: &["Clairaut drift", "energy drift"],
        counts: &[("conservation/geodesics", 100)],
    },
    Criterion {
        id: 9,
        title: "conjugate points vs index form definiteness",
        scenario: "jacobi-sphere",
        budget_s: 60.0,
        assertions: &[
            "conjugate point at pi",
            "index verdict, flat segment",
            "index verdict, length 3.5",
            "index verdict, length pi - 0.1",
            "conjugate/index disagreements",
        ],
        counts: &[("equivalence/segments", 50)],
    },
    Criterion {
        id: 10,
        title: "leaf functions reproduce the Minkowski cone",
        scenario: "flat-2d-leaves",
        budget_s: 5.0,
        assertions: &["analytic leaf functions vs cone disagreements"],
        counts: &[("analytic/pairs", 10_000)],
    },
    Criterion {
        id: 11,
        title: "contact identities on random null states",
        scenario: "contact-residuals",
        budget_s: 10.0,
        assertions: &["max |theta(X_g)|", "max |theta(xi)|", "min |nu|"],
        counts: &[("states", 1000)],
    },
];

fn evaluate(c: &Criterion, report: &Report) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    if let Some(done) = report.assertion("completed") {
        return (false, format!("scenario error: {}", done.actual));
    }
    for name in c.assertions {
        match report.assertion(name) {
            Some(a) => {
                ok &= a.pass;
                notes.push(format!("{name} = {} (want {})", a.actual, a.expected));
            }
            None => {
                ok = false;
                notes.push(format!("{name}: missing"));
            }
        }
    }
    for (path, min) in c.counts {
        let got = report.result(path).and_then(Value::as_u64);
        let pass = got.is_some_and(|n| n >= *min);
        ok &= pass;
        notes.push(format!("{path} = {} (want >= {min})", got.map_or("missing".into(), |n| n.to_string())));
    }
    let within = report.elapsed_seconds < c.budget_s;
    ok &= within;
    notes.push(format!("{:.2} s (budget {} s)", report.elapsed_seconds, c.budget_s));
    (ok, notes.join("; "))
}

fn main() -> ExitCode {
    let mut reports: HashMap<&str, Report> = HashMap::new();
    let mut failed = 0;
    for c in CRITERIA {
        if !reports.contains_key(c.scenario) {
            match run_with(c.scenario, &[]) {
                Ok(r) => {
                    reports.insert(c.scenario, r);
                }
                Err(e) => {
                    println!("criterion {:>2} FAIL  {}: {e}", c.id, c.title);
                    failed += 1;
                    continue;
                }
            }
        }
        let (ok, detail) = evaluate(c, &reports[c.scenario]);
        failed += !ok as usize;
        println!("criterion {:>2} {}  {} [{}]: {detail}", c.id, if ok { "PASS" } else { "FAIL" }, c.title, c.scenario);
    }
    println!("acceptance: {} of {} criteria pass", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
