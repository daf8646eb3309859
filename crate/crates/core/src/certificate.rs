//! Grid certificates: an inequality `q > 0` proved on every cell of a tiling,
//! with adaptive bisection of cells whose enclosure is not conclusive.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Pass only if both pass; any failure dominates inconclusiveness.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// Enclosure lower bound strictly positive.
    Pass,
    /// The claim imposes nothing on this cell.
    Vacuous,
    /// Cell lies outside the claim's region.
    Outside,
    Fail,
}

/// What a cell evaluator reports about one box.
#[derive(Clone, Copy, Debug)]
pub enum CellEval {
    Value(Interval),
    Vacuous,
    Outside,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellRecord {
    pub c: Interval,
    pub cell: [Interval; 2],
    pub value: Option<Interval>,
    pub status: CellStatus,
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub leaves: u64,
    pub passed: u64,
    pub vacuous: u64,
    pub outside: u64,
    pub failed: u64,
    /// Root cells left unevaluated after a failure had already been found.
    pub skipped: u64,
    pub bisections: u64,
    pub max_depth_used: usize,
}

impl Tally {
    fn merge(&mut self, o: &Tally) {
        self.leaves += o.leaves;
        self.passed += o.passed;
        self.vacuous += o.vacuous;
        self.outside += o.outside;
        self.failed += o.failed;
        self.skipped += o.skipped;
        self.bisections += o.bisections;
        self.max_depth_used = self.max_depth_used.max(o.max_depth_used);
    }
}

/// Failing cells kept in full; the count is always exact.
pub const MAX_FAILURE_RECORDS: usize = 64;

/// Order-dependent only through tie-breaking, and callers merge in a fixed
/// order, so the result is independent of scheduling.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub tally: Tally,
    /// Passing leaf with the smallest lower bound.
    pub global_min: Option<CellRecord>,
    pub failures: Vec<CellRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellRecord>,
}

impl Summary {
    pub fn merge(&mut self, o: Summary) {
        self.tally.merge(&o.tally);
        if let Some(m) = o.global_min {
            let better = match &self.global_min {
                None => true,
                Some(cur) => m.value.map(|v| v.lo()) < cur.value.map(|v| v.lo()),
            };
            if better {
                self.global_min = Some(m);
            }
        }
        for f in o.failures {
            if self.failures.len() < MAX_FAILURE_RECORDS {
                self.failures.push(f);
            }
        }
        self.cells.extend(o.cells);
    }

    pub fn verdict(&self) -> Verdict {
        if self.tally.failed > 0 || self.tally.skipped > 0 {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    fn leaf(&mut self, record: CellRecord, keep: bool) {
        self.tally.leaves += 1;
        self.tally.max_depth_used = self.tally.max_depth_used.max(record.depth);
        match record.status {
            CellStatus::Pass => {
                self.tally.passed += 1;
                let lo = record.value.map(|v| v.lo());
                if self.global_min.as_ref().is_none_or(|m| lo < m.value.map(|v| v.lo())) {
                    self.global_min = Some(record.clone());
                }
            }
            CellStatus::Vacuous => self.tally.vacuous += 1,
            CellStatus::Outside => self.tally.outside += 1,
            CellStatus::Fail => {
                self.tally.failed += 1;
                if self.failures.len() < MAX_FAILURE_RECORDS {
                    self.failures.push(record.clone());
                }
            }
        }
        if keep {
            self.cells.push(record);
        }
    }
}

/// Which coordinates a failing cell is bisected along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Both,
    First,
}

#[derive(Clone, Copy, Debug)]
pub struct Refinement {
    pub max_depth: usize,
    pub split: Split,
    pub keep_cells: bool,
}

/// Certify `q > 0` on a cell, bisecting inconclusive cells up to `max_depth`.
/// Evaluation errors count as inconclusive at that level.
pub fn certify_cell<F>(c: Interval, cell: [Interval; 2], eval: &F, refine: Refinement) -> Summary
where
    F: Fn([Interval; 2]) -> Result<CellEval>,
{
    let mut summary = Summary::default();
    certify_rec(c, cell, eval, refine, 0, None, &mut summary);
    summary
}

fn certify_rec<F>(
    c: Interval,
    cell: [Interval; 2],
    eval: &F,
    refine: Refinement,
    depth: usize,
    stop_after: Option<u64>,
    out: &mut Summary,
) where
    F: Fn([Interval; 2]) -> Result<CellEval>,
{
    if stop_after.is_some_and(|n| out.tally.failed >= n) {
        out.tally.skipped += 1;
        return;
    }
    let (value, status, note) = match eval(cell) {
        Ok(CellEval::Outside) => (None, CellStatus::Outside, None),
        Ok(CellEval::Vacuous) => (None, CellStatus::Vacuous, None),
        Ok(CellEval::Value(v)) if v.lo() > 0.0 => (Some(v), CellStatus::Pass, None),
        Ok(CellEval::Value(v)) => (Some(v), CellStatus::Fail, None),
        Err(e) => (None, CellStatus::Fail, Some(e.to_string())),
    };
    // an enclosure entirely at or below zero is a counterexample; bisection cannot rescue it
    let refutable = value.is_none_or(|v| v.hi() > 0.0);
    if status == CellStatus::Fail && refutable && depth < refine.max_depth {
        let splittable = |i: Interval| !i.is_point() && i.mid() > i.lo() && i.mid() < i.hi();
        let (a0, a1) = cell[0].bisect();
        let children: Vec<[Interval; 2]> = match refine.split {
            Split::Both if splittable(cell[1]) => {
                let (b0, b1) = cell[1].bisect();
                vec![[a0, b0], [a1, b0], [a0, b1], [a1, b1]]
            }
            _ if splittable(cell[0]) => vec![[a0, cell[1]], [a1, cell[1]]],
            _ => vec![],
        };
        if !children.is_empty() {
            out.tally.bisections += 1;
            for child in children {
                certify_rec(c, child, eval, refine, depth + 1, stop_after, out);
            }
            return;
        }
    }
    out.leaf(CellRecord { c, cell, value, status, depth, note }, refine.keep_cells);
}

/// Result of one c-subinterval of a grid run.
#[derive(Clone, Debug, Serialize)]
pub struct SubintervalResult {
    pub c: Interval,
    /// Region-specific anchor, e.g. the `t_c` lower bound of the tiling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Interval>,
    pub verdict: Verdict,
    pub tally: Tally,
    pub min_lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Machine-checkable record that an inequality holds on every cell.
#[derive(Clone, Debug, Serialize)]
pub struct GridCertificate {
    pub claim: String,
    pub quantity: String,
    pub axes: [String; 2],
    pub c_subintervals: Vec<SubintervalResult>,
    pub grid: (usize, usize),
    pub max_depth: usize,
    /// Truncation indices, ellipse parameters and bounds used.
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub summary: Summary,
    pub verdict: Verdict,
}

impl GridCertificate {
    /// Smallest certified lower bound over all passing cells.
    pub fn min_lower_bound(&self) -> Option<f64> {
        self.summary.global_min.as_ref().and_then(|m| m.value).map(|v| v.lo())
    }
}

/// Certify a row of root cells in order, stopping once `stop_after`
/// failing leaves are recorded; unvisited cells and children are counted as
/// skipped.
pub fn certify_cells<F>(
    c: Interval,
    cells: impl IntoIterator<Item = [Interval; 2]>,
    eval: &F,
    refine: Refinement,
    stop_after: Option<u64>,
) -> Summary
where
    F: Fn([Interval; 2]) -> Result<CellEval>,
{
    let mut summary = Summary::default();
    for cell in cells {
        certify_rec(c, cell, eval, refine, 0, stop_after, &mut summary);
    }
    summary
}

/// Tile `[lo, hi]` into `n` cells sharing endpoints.
pub fn tile(range: Interval, n: usize) -> Vec<Interval> {
    range.split(n.max(1))
}
