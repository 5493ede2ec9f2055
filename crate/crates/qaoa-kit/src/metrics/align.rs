//! One-to-one alignment of predicted calls against gold calls.
//!
//! Each gold call may be consumed by at most one prediction. The assignment
//! maximizes, in priority order, the number of strict matches, then flexible
//! matches, then name-only matches — the same objective as an exhaustive
//! search over assignments, computed as a max-weight bipartite matching with
//! lexicographic weights. Predictions left over carry an all-false verdict;
//! when there are fewer predictions than gold calls, the prediction list is
//! padded with nulls so omissions are penalized.

use crate::matching::{cascaded_match, MatchVerdict};
use crate::model::FunctionCall;

/// One row of an alignment: a prediction slot (real or padded) with the gold
/// call it consumed, if any.
#[derive(Debug, Clone)]
pub struct AlignedCall {
    /// Index into the prediction list; `None` for a padding slot.
    pub pred_index: Option<usize>,
    /// Index into the gold list consumed by this prediction.
    pub gold_index: Option<usize>,
    pub verdict: MatchVerdict,
}

/// Alignment of one instance's predictions against its gold calls.
#[derive(Debug, Clone)]
pub struct Alignment {
    /// One entry per prediction slot, padded slots last.
    pub slots: Vec<AlignedCall>,
    /// Number of real (unpadded) predictions.
    pub p_unpadded: usize,
    /// |P| after padding: `max(|P|, |G|)`.
    pub p_size: usize,
    pub g_size: usize,
}

impl Alignment {
    pub fn n_name(&self) -> usize {
        self.slots.iter().filter(|s| s.verdict.name_match).count()
    }

    pub fn n_strict(&self) -> usize {
        self.slots.iter().filter(|s| s.verdict.strict_match).count()
    }

    pub fn n_flex(&self) -> usize {
        self.slots.iter().filter(|s| s.verdict.flexible_match).count()
    }
}

/// Aligns predictions to gold calls one-to-one.
pub fn align_calls(preds: &[FunctionCall], golds: &[FunctionCall], threshold: f64) -> Alignment {
    let n = preds.len();
    let m = golds.len();
    let base = (n.max(m) + 1) as i64;

    let verdicts: Vec<Vec<MatchVerdict>> = preds
        .iter()
        .map(|p| golds.iter().map(|g| cascaded_match(p, g, threshold)).collect())
        .collect();
    let weights: Vec<Vec<i64>> = verdicts
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    i64::from(v.strict_match) * base * base
                        + i64::from(v.flexible_match) * base
                        + i64::from(v.name_match)
                })
                .collect()
        })
        .collect();

    let assignment = max_weight_assignment(&weights, n, m);

    let mut slots: Vec<AlignedCall> = Vec::with_capacity(n.max(m));
    for (i, gold) in assignment.into_iter().enumerate() {
        match gold {
            Some(j) if weights[i][j] > 0 => slots.push(AlignedCall {
                pred_index: Some(i),
                gold_index: Some(j),
                verdict: verdicts[i][j].clone(),
            }),
            _ => slots.push(AlignedCall {
                pred_index: Some(i),
                gold_index: None,
                verdict: MatchVerdict::none(),
            }),
        }
    }
    for _ in n..m {
        slots.push(AlignedCall { pred_index: None, gold_index: None, verdict: MatchVerdict::none() });
    }

    Alignment { slots, p_unpadded: n, p_size: n.max(m), g_size: m }
}

/// Maximum-weight assignment of `rows` predictions to `cols` golds
/// (Kuhn–Munkres with potentials on a square matrix padded with zeros).
/// Returns, per row, the assigned column.
fn max_weight_assignment(weights: &[Vec<i64>], rows: usize, cols: usize) -> Vec<Option<usize>> {
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let max_w = weights
        .iter()
        .flat_map(|row| row.iter().copied())
        .max()
        .unwrap_or(0);
    // Convert to a min-cost problem; padding cells carry the max cost.
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max_w - weights[i][j]
        } else {
            max_w
        }
    };

    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // per column (1-based), 0 = free
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = assigned_row[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::DEFAULT_SEMANTIC_THRESHOLD;
    use serde_json::json;

    fn call(name: &str, args: &[(&str, serde_json::Value)]) -> FunctionCall {
        let mut c = FunctionCall::new(name);
        for (k, v) in args {
            c = c.with_arg(*k, v.clone());
        }
        c
    }

    fn align(p: &[FunctionCall], g: &[FunctionCall]) -> Alignment {
        align_calls(p, g, DEFAULT_SEMANTIC_THRESHOLD)
    }

    #[test]
    fn identity_pair_is_a_strict_assignment() {
        let p = vec![call("f", &[("a", json!(1))])];
        let g = vec![call("f", &[("a", json!(1))])];
        let a = align(&p, &g);
        assert_eq!((a.n_strict(), a.n_flex(), a.n_name()), (1, 1, 1));
        assert_eq!(a.slots[0].gold_index, Some(0));
    }

    #[test]
    fn consumed_gold_is_not_reused_for_name_matches() {
        // Two predictions share a name with one gold call; the strict pair
        // wins the gold and the other prediction gets nothing.
        let p = vec![call("f", &[("a", json!(2))]), call("f", &[("a", json!(1))])];
        let g = vec![call("f", &[("a", json!(1))])];
        let a = align(&p, &g);
        assert_eq!(a.n_strict(), 1);
        assert_eq!(a.n_name(), 1);
        assert_eq!(a.slots[1].gold_index, Some(0));
        assert_eq!(a.slots[0].gold_index, None);
        assert_eq!(a.p_size, 2);
        assert_eq!(a.p_unpadded, 2);
    }

    #[test]
    fn empty_prediction_set_is_padded_with_nulls() {
        let g = vec![call("f", &[])];
        let a = align(&[], &g);
        assert_eq!(a.p_size, 1);
        assert_eq!(a.p_unpadded, 0);
        assert_eq!((a.n_strict(), a.n_flex(), a.n_name()), (0, 0, 0));
        assert_eq!(a.slots[0].pred_index, None);
    }

    #[test]
    fn crossed_strict_pairs_both_assign() {
        let p = vec![call("f", &[("a", json!(1))]), call("f", &[("a", json!(2))])];
        let g = vec![call("f", &[("a", json!(2))]), call("f", &[("a", json!(1))])];
        let a = align(&p, &g);
        assert_eq!(a.n_strict(), 2);
        assert_eq!(a.slots[0].gold_index, Some(1));
        assert_eq!(a.slots[1].gold_index, Some(0));
    }

    #[test]
    fn flexible_wedge_is_resolved_optimally() {
        // p0 flex-matches both golds, p1 flex-matches only g0: a greedy
        // prediction-order pass would strand p1; the assignment must not.
        let p = vec![
            call("f", &[("t", json!("alpha beta gamma delta"))]),
            call("f", &[("t", json!("alpha beta gamma epsilon"))]),
        ];
        let g = vec![
            call("f", &[("t", json!("alpha beta gamma delta epsilon"))]),
            call("f", &[("t", json!("alpha beta gamma delta zeta"))]),
        ];
        let a = align(&p, &g);
        assert_eq!(a.n_flex(), 2, "{:?}", a.slots);
        assert_eq!(a.slots[0].gold_index, Some(1));
        assert_eq!(a.slots[1].gold_index, Some(0));
    }
}
