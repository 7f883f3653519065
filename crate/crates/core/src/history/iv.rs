use crate::error::{Error, Result};

/// Default number of equal-frequency bins.
pub const DEFAULT_IV_BINS: usize = 10;

const SMOOTHING: f64 = 0.5;

/// Bin index per value: equal-frequency quantile bins, tied values kept together.
fn quantile_bins(column: &[f64], n_bins: usize) -> Vec<usize> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]).then(a.cmp(&b)));
    let mut bins = vec![0; n];
    let mut start = 0;
    while start < n {
        let v = column[order[start]];
        let mut end = start;
        while end < n && column[order[end]] == v {
            end += 1;
        }
        let bin = start * n_bins / n;
        for &i in &order[start..end] {
            bins[i] = bin;
        }
        start = end;
    }
    bins
}

/// Information Value of a feature column against binary labels (1 = revert).
///
/// `IV = Σ_b (g_b/G − b_b/B) · ln((g_b/G) / (b_b/B))` over non-empty
/// equal-frequency bins, with goods = non-reverts and bads = reverts. When any
/// bin has a zero count, every bin count is smoothed by +0.5.
pub fn information_value(column: &[f64], labels: &[u8], n_bins: usize) -> Result<f64> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("n_bins must be ≥ 2, got {n_bins}")));
    }
    if column.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} values for {} labels",
            column.len(),
            labels.len()
        )));
    }
    let bads_total = labels.iter().filter(|&&l| l == 1).count();
    if bads_total == 0 || bads_total == labels.len() {
        return Err(Error::SingleClassIv);
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("IV column".into()));
    }

    let bins = quantile_bins(column, n_bins);
    let mut goods = vec![0.0; n_bins];
    let mut bads = vec![0.0; n_bins];
    let mut used = vec![false; n_bins];
    for (&b, &l) in bins.iter().zip(labels) {
        used[b] = true;
        if l == 1 {
            bads[b] += 1.0;
        } else {
            goods[b] += 1.0;
        }
    }
    let active: Vec<usize> = (0..n_bins).filter(|&b| used[b]).collect();
    if active.iter().any(|&b| goods[b] == 0.0 || bads[b] == 0.0) {
        for &b in &active {
            goods[b] += SMOOTHING;
            bads[b] += SMOOTHING;
        }
    }
    let g_total: f64 = active.iter().map(|&b| goods[b]).sum();
    let b_total: f64 = active.iter().map(|&b| bads[b]).sum();
    let iv = active
        .iter()
        .map(|&b| {
            let g = goods[b] / g_total;
            let r = bads[b] / b_total;
            (g - r) * (g / r).ln()
        })
        .sum::<f64>();
    Ok(iv.max(0.0))
}
