//! Bottleneck assignment: the perfect matching minimizing the largest cost.

/// Square cost matrix, row-major.
pub(crate) struct CostMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl CostMatrix {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }
}

/// Smallest `t` for which a perfect matching exists using only entries `<= t`.
/// Returns `None` when that value exceeds `cap`.
pub(crate) fn bottleneck(cost: &CostMatrix, cap: f64) -> Option<f64> {
    let n = cost.n;
    if n == 0 {
        return Some(0.0);
    }
    // Every row and every column must be matched, so the worst of the
    // per-row and per-column minima bounds the answer from below.
    let mut lower = 0.0_f64;
    for r in 0..n {
        let m = (0..n).map(|c| cost.at(r, c)).fold(f64::INFINITY, f64::min);
        lower = lower.max(m);
    }
    for c in 0..n {
        let m = (0..n).map(|r| cost.at(r, c)).fold(f64::INFINITY, f64::min);
        lower = lower.max(m);
    }
    if lower > cap {
        return None;
    }
    if perfect_matching(cost, lower) {
        return Some(lower);
    }
    let mut levels: Vec<f64> =
        cost.data.iter().copied().filter(|&v| v > lower && v <= cap).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.is_empty() || !perfect_matching(cost, *levels.last().unwrap()) {
        return None;
    }
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(cost, levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(levels[lo])
}

// Kuhn's augmenting-path matching on the threshold graph.
fn perfect_matching(cost: &CostMatrix, threshold: f64) -> bool {
    let n = cost.n;
    let mut match_col = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    for r in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        if !augment(cost, threshold, r, &mut match_col, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(
    cost: &CostMatrix,
    threshold: f64,
    r: usize,
    match_col: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for c in 0..cost.n {
        if seen[c] || cost.at(r, c) > threshold {
            continue;
        }
        seen[c] = true;
        if match_col[c] == usize::MAX || augment(cost, threshold, match_col[c], match_col, seen) {
            match_col[c] = r;
            return true;
        }
    }
    false
}
