//! Piece-count and size bounds for ReLU networks on the real line.

/// `2^{k-1} (w_1 + 1) w_2 ⋯ w_k` for hidden widths `w_1..w_k`; saturates at
/// `u128::MAX`. An empty list (affine net) gives 1.
pub fn pieces_upper_bound(widths: &[usize]) -> u128 {
    let Some((&w1, rest)) = widths.split_first() else {
        return 1;
    };
    let mut acc = (w1 as u128).saturating_add(1);
    for &w in rest {
        acc = acc.saturating_mul(2).saturating_mul(w as u128);
    }
    acc
}

/// `½ k p^{1/k} - 1`: the least size of a depth-`k+1` network with `p` pieces.
pub fn size_lower_bound(p: u64, k: u32) -> f64 {
    let k = f64::from(k);
    0.5 * k * (p as f64).powf(1.0 / k) - 1.0
}

/// `(2s/k)^k`: the most pieces a depth-`k+1` network of size `s` can have.
pub fn pieces_cap(s: u64, k: u32) -> f64 {
    (2.0 * s as f64 / f64::from(k)).powi(k as i32)
}

/// `½ k' w^{k/k'} - 1`: size needed at depth `k'+1` to match the `w^k`-piece
/// sawtooth of depth `k+1`.
pub fn depth_gap_size_bound(w: u32, k: u32, k_shallow: u32) -> f64 {
    let ks = f64::from(k_shallow);
    0.5 * ks * f64::from(w).powf(f64::from(k) / ks) - 1.0
}
