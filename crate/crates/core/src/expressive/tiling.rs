use rand::seq::index;
use rand::Rng;

use super::ExpressiveError;

/// Largest interval count allowed for a span of `quarters` quarter notes.
pub fn max_intervals(quarters: u64, min_intervals: usize) -> usize {
    min_intervals.max((quarters / 8) as usize)
}

/// Splits `[start, end)` into consecutive intervals whose inner boundaries
/// lie on the quarter-note grid (multiples of `ticks_per_quarter`).
///
/// The count is uniform in `[min_intervals, max_intervals]`. With `strict`
/// a span offering too few grid points is an error; otherwise the count is
/// reduced to what the grid allows (at least one interval).
pub fn tile_span<R: Rng + ?Sized>(
    start: u64,
    end: u64,
    ticks_per_quarter: u16,
    min_intervals: usize,
    strict: bool,
    rng: &mut R,
) -> Result<Vec<(u64, u64)>, ExpressiveError> {
    let tpq = u64::from(ticks_per_quarter.max(1));
    let quarters = (end.saturating_sub(start)).div_ceil(tpq);
    // grid points strictly inside the span
    let first = start / tpq + 1;
    let last = if end == 0 { 0 } else { (end - 1) / tpq };
    let grid: Vec<u64> = (first..=last).map(|k| k * tpq).filter(|&t| t > start && t < end).collect();

    if strict && (quarters < min_intervals as u64 || grid.len() + 1 < min_intervals) {
        return Err(ExpressiveError::PieceTooShort { quarters, min_intervals });
    }
    if start >= end {
        return Err(ExpressiveError::PieceTooShort { quarters: 0, min_intervals });
    }
    let hi = max_intervals(quarters, min_intervals).min(grid.len() + 1);
    let lo = min_intervals.min(hi).max(1);
    let count = rng.random_range(lo..=hi);

    let mut cuts: Vec<u64> = index::sample(rng, grid.len(), count - 1).into_iter().map(|i| grid[i]).collect();
    cuts.sort_unstable();
    let mut bounds = Vec::with_capacity(count + 1);
    bounds.push(start);
    bounds.extend(cuts);
    bounds.push(end);
    Ok(bounds.windows(2).map(|w| (w[0], w[1])).collect())
}

/// Checks that `spans` are non-empty, ordered and contiguous from `start`
/// to `end`.
pub fn check_tiling(spans: impl IntoIterator<Item = (u64, u64)>, start: u64, end: u64) -> bool {
    let mut cursor = start;
    let mut any = false;
    for (s, e) in spans {
        if s != cursor || s >= e {
            return false;
        }
        cursor = e;
        any = true;
    }
    any && cursor == end
}
