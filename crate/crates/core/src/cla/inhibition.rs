//! Global inhibition: the `n_win` columns with the greatest
//! `(overlap, -column id)` keys win.

/// Winner budget: `floor(density * columns)`.
pub fn winner_count(density: f64, columns: usize) -> usize {
    // the epsilon absorbs representation error, e.g. 0.02 * 2000 = 39.999...
    ((density * columns as f64) + 1e-9).floor() as usize
}

fn beats(a: (u32, u32), b: (u32, u32)) -> bool {
    // (column, overlap)
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Centralized selection over `(column, overlap)` pairs. Returns the winning
/// column ids in ascending order.
pub fn global_inhibition(overlaps: &[(u32, u32)], n_win: usize) -> Vec<u32> {
    let mut keyed: Vec<(u32, u32)> = overlaps.to_vec();
    let n_win = n_win.min(keyed.len());
    if n_win == 0 {
        return Vec::new();
    }
    if n_win < keyed.len() {
        keyed.select_nth_unstable_by(n_win - 1, |a, b| {
            b.1.cmp(&a.1).then(a.0.cmp(&b.0))
        });
        keyed.truncate(n_win);
    }
    let mut winners: Vec<u32> = keyed.into_iter().map(|(c, _)| c).collect();
    winners.sort_unstable();
    winners
}

/// Decision taken by a single column from the inhibition records it has
/// received. Only columns with positive overlap broadcast a record, so
/// `positive` holds every `(column, overlap)` with overlap > 0 in the
/// inhibition domain, and `domain` lists every column id of that domain in
/// ascending order. A column with zero overlap can still win when fewer than
/// `n_win` columns have positive overlap; zero-overlap columns then rank by id.
pub fn wins_locally(
    column: u32,
    overlap: u32,
    positive: &[(u32, u32)],
    domain: &[u32],
    n_win: usize,
) -> bool {
    if overlap > 0 {
        let stronger = positive
            .iter()
            .filter(|&&other| other.0 != column && beats(other, (column, overlap)))
            .count();
        stronger < n_win
    } else {
        let lower_zero = domain
            .iter()
            .take_while(|&&c| c < column)
            .filter(|c| !positive.iter().any(|p| p.0 == **c))
            .count();
        positive.len() + lower_zero < n_win
    }
}
