//! Strictly increasing multi-indices stored as bitmasks, enumerated in
//! lexicographic order of their index tuples.

pub type Mask = u64;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of sorted `k`-tuples from `0..n`.
pub fn count(n: usize, k: usize) -> usize {
    binomial(n, k)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn basis(n: usize, k: usize) -> Vec<Mask> {
    let mut out = Vec::with_capacity(count(n, k));
    fn rec(start: usize, n: usize, left: usize, acc: Mask, out: &mut Vec<Mask>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            rec(i + 1, n, left - 1, acc | (1 << i), out);
        }
    }
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out
}

/// Position of `mask` within `basis(n, popcount(mask))`.
pub fn position(n: usize, mask: Mask) -> usize {
    let idx = indices(mask);
    let k = idx.len();
    let mut rank = 0;
    let mut prev = 0;
    for (m, &i) in idx.iter().enumerate() {
        for j in prev..i {
            rank += binomial(n - 1 - j, k - 1 - m);
        }
        prev = i + 1;
    }
    rank
}

pub fn indices(mask: Mask) -> Vec<usize> {
    (0..64).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn degree(mask: Mask) -> usize {
    mask.count_ones() as usize
}

/// Sign of `dx^I ^ dx^J = sign dx^(I u J)`, or `None` when they overlap.
pub fn wedge_sign(left: Mask, right: Mask) -> Option<f64> {
    if left & right != 0 {
        return None;
    }
    // one transposition per pair (i in I, j in J) with i > j
    let mut inversions = 0;
    for j in indices(right) {
        inversions += (left >> (j + 1)).count_ones();
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

/// Sign of sorting an arbitrary index tuple, or `None` if it repeats.
pub fn sort_sign(tuple: &[usize]) -> Option<(Mask, f64)> {
    let mut mask = 0;
    let mut inversions = 0;
    for (p, &i) in tuple.iter().enumerate() {
        if mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
        inversions += tuple[p + 1..].iter().filter(|&&j| j < i).count();
    }
    Some((mask, if inversions % 2 == 0 { 1.0 } else { -1.0 }))
}

/// `dx^I(v_1, .., v_k) = det[v_m^(i_l)]`.
pub fn evaluate_on(mask: Mask, vectors: &[&[f64]]) -> f64 {
    let idx = indices(mask);
    debug_assert_eq!(idx.len(), vectors.len());
    let k = idx.len();
    let m: Vec<Vec<f64>> = (0..k)
        .map(|r| (0..k).map(|c| vectors[c][idx[r]]).collect())
        .collect();
    determinant(m)
}

/// Dense determinant by partial-pivot elimination.
pub fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty range");
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// All permutations of `0..n` with their signs (Heap's algorithm order is
/// not guaranteed; callers only sum over them).
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            let (_, s) = sort_sign(prefix).expect("permutation has no repeats");
            out.push((prefix.clone(), s));
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_and_positions_agree() {
        for n in 1..7 {
            for k in 0..=n {
                let b = basis(n, k);
                assert_eq!(b.len(), count(n, k));
                for (p, m) in b.iter().enumerate() {
                    assert_eq!(position(n, *m), p);
                }
            }
        }
        assert_eq!(basis(3, 2), vec![0b011, 0b101, 0b110]);
        assert!(basis(2, 3).is_empty());
    }

    #[test]
    fn signs() {
        assert_eq!(wedge_sign(0b010, 0b001), Some(-1.0));
        assert_eq!(wedge_sign(0b001, 0b110), Some(1.0));
        assert_eq!(wedge_sign(0b100, 0b011), Some(1.0));
        assert_eq!(wedge_sign(0b011, 0b010), None);
        assert_eq!(sort_sign(&[2, 0, 1]), Some((0b111, 1.0)));
        assert_eq!(sort_sign(&[1, 0]), Some((0b11, -1.0)));
        assert_eq!(sort_sign(&[1, 1]), None);
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(3).iter().map(|(_, s)| s).sum::<f64>(), 0.0);
    }

    #[test]
    fn determinant_matches_cofactors() {
        let m = vec![vec![2.0, -1.0, 0.5], vec![0.3, 4.0, 1.0], vec![-2.0, 0.0, 1.5]];
        let cof = 2.0 * (4.0 * 1.5 - 0.0) + 1.0 * (0.3 * 1.5 + 2.0) + 0.5 * (0.0 + 8.0);
        assert!((determinant(m) - cof).abs() < 1e-12);
        assert_eq!(evaluate_on(0b11, &[&[1.0, 0.0], &[0.0, 1.0]]), 1.0);
        assert_eq!(evaluate_on(0, &[]), 1.0);
    }
}
