//! Generalized Kronecker symbols and enumeration of their support.

/// `δ^{upper}_{lower}`: the determinant of the matrix `[δ(upper_a, lower_b)]`.
///
/// The matrix has at most one unit entry per row and column when the upper
/// indices are distinct, so the determinant is the sign of the permutation
/// carrying `upper` onto `lower` when both tuples hold the same distinct
/// indices, and zero otherwise.
pub fn gen_kronecker(upper: &[usize], lower: &[usize]) -> i32 {
    assert_eq!(upper.len(), lower.len(), "Kronecker symbol needs equal index counts");
    let m = upper.len();
    // perm[a] = position of upper[a] inside lower
    let mut perm = Vec::with_capacity(m);
    for (a, u) in upper.iter().enumerate() {
        if upper[..a].contains(u) {
            return 0;
        }
        match lower.iter().position(|l| l == u) {
            Some(b) => perm.push(b),
            None => return 0,
        }
    }
    for (b, l) in lower.iter().enumerate() {
        if lower[..b].contains(l) {
            return 0;
        }
    }
    permutation_sign(&perm)
}

fn permutation_sign(perm: &[usize]) -> i32 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// All permutations of `0..m` with their signs.
fn permutations(m: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out.into_iter()
        .map(|p| {
            let s = permutation_sign(&p);
            (p, s)
        })
        .collect()
}

/// Visit every ordered tuple of distinct indices in `0..n` of length `m`
/// satisfying `accept` on each completed tuple.
fn distinct_tuples(n: usize, m: usize, accept: &dyn Fn(&[usize]) -> bool, f: &mut dyn FnMut(&[usize])) {
    fn rec(
        n: usize,
        m: usize,
        t: &mut Vec<usize>,
        used: &mut [bool],
        accept: &dyn Fn(&[usize]) -> bool,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if t.len() == m {
            if accept(t) {
                f(t);
            }
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                t.push(i);
                rec(n, m, t, used, accept, f);
                t.pop();
                used[i] = false;
            }
        }
    }
    rec(n, m, &mut Vec::with_capacity(m), &mut vec![false; n], accept, f);
}

/// Call `f(upper, lower, sign)` for every pair of index tuples of length `m`
/// over `0..n` where `δ^{upper}_{lower} = sign ≠ 0`.
pub fn for_each_nonzero(n: usize, m: usize, mut f: impl FnMut(&[usize], &[usize], i32)) {
    if m > n {
        return;
    }
    let perms = permutations(m);
    let mut lower = vec![0; m];
    distinct_tuples(n, m, &|_| true, &mut |upper| {
        for (p, s) in &perms {
            for (b, &a) in p.iter().enumerate() {
                lower[b] = upper[a];
            }
            f(upper, &lower, *s);
        }
    });
}

/// Support enumeration for contractions whose tuple is `lead` free indices
/// followed by `pairs` index pairs, each contracted against a factor that is
/// antisymmetric within the pair on both levels (like `R^{ab}_{cd}`).
///
/// Only tuples whose pairs are increasing on both levels are visited; the
/// caller multiplies the sum by `4^pairs` to recover the full contraction.
pub fn for_each_nonzero_paired(
    n: usize,
    lead: usize,
    pairs: usize,
    mut f: impl FnMut(&[usize], &[usize], i32),
) {
    let m = lead + 2 * pairs;
    if m > n {
        return;
    }
    let increasing = move |t: &[usize]| (0..pairs).all(|q| t[lead + 2 * q] < t[lead + 2 * q + 1]);
    let perms = permutations(m);
    let mut lower = vec![0; m];
    distinct_tuples(n, m, &increasing, &mut |upper| {
        for (p, s) in &perms {
            for (b, &a) in p.iter().enumerate() {
                lower[b] = upper[a];
            }
            if increasing(&lower) {
                f(upper, &lower, *s);
            }
        }
    });
}
