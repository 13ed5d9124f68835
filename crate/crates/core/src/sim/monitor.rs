// SPDX-License-Identifier: Apache-2.0

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::graph::UnknownSignalError;
use crate::expr::Expr;
use crate::sva::{Assertion, Implication, Sequence};

use super::{Node, Trace};

/// Outcome of the attempt started at one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    NotAttempted,
    VacuousPass,
    Pass,
    Fail,
    Pending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    /// Cycle where the attempt started.
    pub start: usize,
    /// Cycle where the consequent term evaluated false.
    pub cycle: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub attempts: usize,
    pub vacuous_passes: usize,
    pub non_vacuous_passes: usize,
    pub failures: usize,
    pub pending_at_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionVerdict {
    pub name: String,
    /// Indexed by attempt start cycle.
    pub statuses: Vec<Status>,
    pub failures: Vec<Failure>,
    pub summary: VerdictSummary,
    pub warnings: Vec<String>,
}

impl AssertionVerdict {
    pub fn failed(&self) -> bool {
        self.summary.failures > 0
    }
}

struct Compiled {
    disable: Option<Node>,
    antecedent: Vec<(u32, Node)>,
    consequent: Vec<(u32, Node)>,
    shift: u32,
}

fn compile(trace: &Trace, a: &Assertion) -> Result<Compiled, UnknownSignalError> {
    let layout = &trace.layout;
    let c = |e: &Expr| -> Result<Node, UnknownSignalError> {
        Node::compile(e, &|n: &str| layout.binding(n)).map_err(|_| {
            let mut missing = String::new();
            e.visit_identifiers(&mut |id| {
                if missing.is_empty() && layout.binding(id).is_none() {
                    missing = id.to_string();
                }
            });
            UnknownSignalError(missing)
        })
    };
    if let Some(clk) = &a.clock {
        if layout.slot(&clk.net).is_none() {
            return Err(UnknownSignalError(clk.net.clone()));
        }
    }
    let seq = |s: &Sequence| -> Result<Vec<(u32, Node)>, UnknownSignalError> {
        s.steps.iter().map(|st| Ok((st.delay, c(&st.expr)?))).collect()
    };
    Ok(Compiled {
        disable: a.disable.as_ref().map(c).transpose()?,
        antecedent: seq(&a.antecedent)?,
        consequent: seq(&a.consequent)?,
        shift: match a.implication {
            Implication::Overlapped => 0,
            Implication::NonOverlapped => 1,
        },
    })
}

enum Step {
    Ok,
    False,
    Cancelled,
    Beyond,
}

/// Checks each assertion against the trace, starting one attempt per cycle.
///
/// An attempt at cycle `t` is not attempted when the disable condition holds
/// at `t`, and is silently cancelled when it holds at any later cycle the
/// attempt reaches. Attempts that need cycles past the end are pending.
/// `$past` before cycle 0 reads 0 and adds a warning.
pub fn check_assertions(
    trace: &Trace,
    assertions: &[Assertion],
) -> Result<Vec<AssertionVerdict>, UnknownSignalError> {
    assertions.iter().map(|a| check_one(trace, a)).collect()
}

fn check_one(trace: &Trace, a: &Assertion) -> Result<AssertionVerdict, UnknownSignalError> {
    let comp = compile(trace, a)?;
    let len = trace.cycles();
    let early_past = Cell::new(None::<usize>);
    let eval = |n: &Node, cycle: usize| {
        let read = |slot: u32, back: u32| {
            if cycle >= back as usize {
                trace.at(cycle - back as usize, slot)
            } else {
                if early_past.get().is_none() {
                    early_past.set(Some(cycle));
                }
                0
            }
        };
        n.eval(&read, 0) != 0
    };
    let disabled = |cycle: usize| comp.disable.as_ref().is_some_and(|d| eval(d, cycle));

    let mut statuses = Vec::with_capacity(len);
    let mut failures = Vec::new();
    let mut summary = VerdictSummary::default();
    for t in 0..len {
        if disabled(t) {
            statuses.push(Status::NotAttempted);
            continue;
        }
        // Advances to `to`, checking disable on the cycles crossed.
        let advance = |from: usize, to: usize, node: &Node| -> Step {
            for c in (from + 1)..=to.min(len.saturating_sub(1)) {
                if disabled(c) {
                    return Step::Cancelled;
                }
            }
            if to >= len {
                Step::Beyond
            } else if eval(node, to) {
                Step::Ok
            } else {
                Step::False
            }
        };
        let mut cycle = t;
        let mut status = None;
        for (delay, node) in &comp.antecedent {
            let to = cycle + *delay as usize;
            match advance(cycle, to, node) {
                Step::Ok => cycle = to,
                Step::False => status = Some(Status::VacuousPass),
                Step::Cancelled => status = Some(Status::NotAttempted),
                Step::Beyond => status = Some(Status::Pending),
            }
            if status.is_some() {
                break;
            }
        }
        if status.is_none() {
            let mut first = true;
            for (delay, node) in &comp.consequent {
                let extra = if first { comp.shift } else { 0 };
                first = false;
                let to = cycle + (*delay + extra) as usize;
                match advance(cycle, to, node) {
                    Step::Ok => cycle = to,
                    Step::False => {
                        failures.push(Failure { start: t, cycle: to });
                        status = Some(Status::Fail);
                    }
                    Step::Cancelled => status = Some(Status::NotAttempted),
                    Step::Beyond => status = Some(Status::Pending),
                }
                if status.is_some() {
                    break;
                }
            }
        }
        let status = status.unwrap_or(Status::Pass);
        match status {
            Status::NotAttempted => {}
            Status::VacuousPass => summary.vacuous_passes += 1,
            Status::Pass => summary.non_vacuous_passes += 1,
            Status::Fail => summary.failures += 1,
            Status::Pending => summary.pending_at_end += 1,
        }
        if status != Status::NotAttempted {
            summary.attempts += 1;
        }
        statuses.push(status);
    }
    let warnings = early_past
        .get()
        .map(|c| format!("`$past` reached before cycle 0 (first at cycle {c}); read as 0"))
        .into_iter()
        .collect();
    Ok(AssertionVerdict {
        name: a.name.clone(),
        statuses,
        failures,
        summary,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_design;
    use crate::sim::{simulate, Stimulus};
    use crate::sva::parse_assertion;

    const PASS_THROUGH: &str = "module t(input logic clk, input logic rst, input logic a, input logic b, output logic y);\n assign y = a & b;\nendmodule";

    fn trace(a: &[u64], b: &[u64], rst: &[u64]) -> Trace {
        let n = parse_design(PASS_THROUGH).unwrap();
        let mut s = Stimulus::idle(&n, a.len());
        for c in 0..a.len() {
            s.set(c, "a", a[c]);
            s.set(c, "b", b[c]);
            s.set(c, "rst", rst.get(c).copied().unwrap_or(0));
        }
        simulate(&n, &s).unwrap()
    }

    fn check(t: &Trace, src: &str) -> AssertionVerdict {
        check_assertions(t, &[parse_assertion(src).unwrap()]).unwrap().remove(0)
    }

    #[test]
    fn tautology_never_fails() {
        let t = trace(&[1, 0, 1, 1, 0], &[0; 5], &[]);
        let v = check(&t, "assert property (@(posedge clk) a |-> a);");
        assert_eq!(v.summary.failures, 0);
        assert_eq!(v.summary.non_vacuous_passes, 3);
        assert_eq!(v.summary.attempts, 5);
    }

    #[test]
    fn delayed_consequent() {
        let t = trace(&[0, 1, 0, 0, 0], &[0, 0, 0, 1, 0], &[]);
        let v = check(&t, "assert property (@(posedge clk) a |-> ##2 b);");
        assert_eq!(v.statuses[1], Status::Pass);
        assert_eq!(v.summary.failures, 0);
        let t = trace(&[0, 1, 0, 0, 0], &[0, 0, 0, 0, 0], &[]);
        let v = check(&t, "assert property (@(posedge clk) a |-> ##2 b);");
        assert_eq!(v.failures, vec![Failure { start: 1, cycle: 3 }]);
    }

    #[test]
    fn pending_at_end() {
        let t = trace(&[0, 0, 0, 1], &[0; 4], &[]);
        let v = check(&t, "assert property (@(posedge clk) a |=> b);");
        assert_eq!(v.statuses[3], Status::Pending);
        assert_eq!(v.summary.pending_at_end, 1);
    }

    #[test]
    fn disable_cancels_silently() {
        let t = trace(&[1, 1, 0, 0], &[0, 0, 0, 0], &[0, 0, 1, 0]);
        let v = check(&t, "assert property (@(posedge clk) disable iff (rst) a |-> ##2 b);");
        assert_eq!(v.statuses[0], Status::NotAttempted);
        assert_eq!(v.statuses[1], Status::NotAttempted);
        assert_eq!(v.statuses[2], Status::NotAttempted);
        assert_eq!(v.summary.failures, 0);
        let s = v.summary;
        assert_eq!(s.attempts, s.vacuous_passes + s.non_vacuous_passes + s.failures + s.pending_at_end);
    }

    #[test]
    fn past_before_start_warns() {
        let t = trace(&[1, 1, 1], &[0; 3], &[]);
        let v = check(&t, "assert property (@(posedge clk) a |-> $past(a, 2));");
        assert_eq!(v.failures.len(), 2);
        assert_eq!(v.statuses[2], Status::Pass);
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn unknown_signal() {
        let t = trace(&[0], &[0], &[]);
        let err = check_assertions(&t, &[parse_assertion("assert property (@(posedge clk) zz |-> a);").unwrap()]).unwrap_err();
        assert_eq!(err.0, "zz");
    }
}
