use std::fmt::Write;

use adastop::engine::Action;
use adastop::io::render_decision_table;
use adastop::{AdaStop, InterimBoundaries, InterimDecisionReport, Status};

fn pair(test: &AdaStop, j: usize) -> String {
    let c = test.graph().comparison(j);
    let agents = test.store().agents();
    format!("{} vs {}", agents[c.first], agents[c.second])
}

fn boundary_row(e: &InterimBoundaries) -> String {
    let accept = match e.accept {
        Some(a) if a.is_infinite() => "inf".to_string(),
        Some(a) => format!("{a:.6}"),
        None => "-".to_string(),
    };
    format!(
        "{:>7}  {:>14.6}  {:>14}  {:>9}/{}",
        e.interim, e.reject, accept, e.survivors, e.reject_budget.pool_size
    )
}

const BOUNDARY_HEADER: &str = "interim          reject          accept  survivors";

pub fn interim(test: &AdaStop, report: &InterimDecisionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "interim {}/{}", report.interim, test.config().interims);
    for a in &report.actions {
        match a.action {
            Action::Reject => {
                let larger = match test.graph().status(a.comparison) {
                    Status::Rejected { larger, .. } => test.store().agents()[larger].as_str(),
                    _ => "?",
                };
                let _ = writeln!(
                    s,
                    "  reject  {}: {} larger (statistic {:.6} > {:.6})",
                    pair(test, a.comparison),
                    larger,
                    a.statistic,
                    a.boundary
                );
            }
            Action::EarlyAccept => {
                let _ = writeln!(
                    s,
                    "  accept  {}: equal (statistic {:.6} < {:.6})",
                    pair(test, a.comparison),
                    a.statistic,
                    a.boundary
                );
            }
        }
    }
    for &j in &report.accepted_at_end {
        let _ = writeln!(s, "  accept  {}: equal (budget exhausted)", pair(test, j));
    }
    if let Some(e) = test.ledger().get(report.interim) {
        let _ = writeln!(s, "{BOUNDARY_HEADER}\n{}", boundary_row(e));
    }
    if report.stopped {
        let _ = writeln!(s, "stopped: all decisions made");
    } else {
        let undecided: Vec<String> = report.undecided.iter().map(|&j| pair(test, j)).collect();
        let _ = writeln!(s, "undecided: {}", undecided.join(", "));
    }
    s
}

pub fn status(test: &AdaStop) -> String {
    let c = test.config();
    let mut s = String::new();
    let _ = writeln!(s, "interim {}", test.interim());
    let _ = writeln!(
        s,
        "N={} K={} alpha={} beta={} permutations={} seed={}",
        c.group_size, c.interims, c.alpha, c.beta, c.permutations, c.seed
    );
    if !test.ledger().entries.is_empty() {
        let _ = writeln!(s, "{BOUNDARY_HEADER}");
        for e in &test.ledger().entries {
            let _ = writeln!(s, "{}", boundary_row(e));
        }
    }
    let undecided: Vec<String> = test.graph().undecided().into_iter().map(|j| pair(test, j)).collect();
    if test.is_stopped() {
        let _ = writeln!(s, "stopped: all decisions made\n");
    } else {
        let _ = writeln!(s, "undecided: {}\n", undecided.join(", "));
    }
    s.push_str(&render_decision_table(test.graph(), test.store()));
    s
}
