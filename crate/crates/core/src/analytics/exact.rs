//! Finite-system access probability: first-iteration recovery and recovery
//! after one cancellation round, each as a numerator over a power of
//! `C(QR, QK)`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::combinatorics::binomial_int;

/// Sizes the sums depend on.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Dims {
    pub q: u64,
    pub qk: u64,
    pub qr: u64,
    pub n: u64,
}

/// Signed weight `Σ_{j=Q}^{k} (-1)^{k-j} C(k, j) = (-1)^{k-Q} C(k-1, Q-1)`.
pub(crate) fn recovery_weight(k: u64, q: u64) -> BigInt {
    if k < q {
        return BigInt::zero();
    }
    let v = binomial_int(k - 1, (q - 1) as i64);
    if (k - q).is_multiple_of(2) {
        v
    } else {
        -v
    }
}

/// Target-side coefficient for `c` partners and `kn` target RBs: the sum
/// over the target's exclusive count and the exact partner count, with
/// the placement factor `C(QK-c, kn)`.
pub(crate) fn target_coefficient(c: u64, kn: u64, q: u64, qk: u64) -> BigInt {
    if kn + c > qk {
        return BigInt::zero();
    }
    let mut acc = BigInt::zero();
    for ex in 0..=kn.min(q - 1) {
        for exact in q.saturating_sub(ex).max(1)..=c {
            let term = binomial_int(c, exact as i64) * binomial_int(kn, ex as i64);
            if ((kn - ex) + (c - exact)).is_multiple_of(2) {
                acc += term;
            } else {
                acc -= term;
            }
        }
    }
    acc * binomial_int(qk - c, kn as i64)
}

/// `Σ_{Q≤j≤k≤QK} (-1)^{k-j} C(k,j) C(QK,k) C(QR-k,QK)^{N-1}`.
pub(crate) fn first_iteration_numerator<S: Scalar>(d: Dims) -> (S, u64) {
    let mut acc = S::nil();
    let mut terms = 0;
    for k in d.q..=d.qk {
        let tail = S::choose(d.qk, k).times(&S::placement(d.qr - k, d.qk, d.qr, d.qk, d.n - 1));
        for j in d.q..=k {
            let coeff = binomial_int(k, j as i64);
            let signed = if (k - j) % 2 == 0 { coeff } else { -coeff };
            acc.accumulate(&S::from_int(&signed).times(&tail));
            terms += 1;
        }
    }
    (acc, terms)
}

/// One term of the nested second-iteration sum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexTuple {
    /// Partners recoverable in the first iteration that the target couples to.
    pub coupled: u64,
    /// Partners counted exactly in the inclusion–exclusion.
    pub coupled_exact: u64,
    /// RBs the target shares with nobody but partners.
    pub target_total: u64,
    /// Of those, RBs exclusive to the target.
    pub target_exclusive: u64,
    pub partner_totals: Vec<u64>,
    pub partner_exclusive: Vec<u64>,
}

impl IndexTuple {
    pub fn kappa(&self) -> u64 {
        self.partner_totals.iter().sum()
    }

    pub fn kappa_exclusive(&self) -> u64 {
        self.partner_exclusive.iter().sum()
    }

    /// `k_n + C + κ`.
    pub fn g(&self) -> u64 {
        self.target_total + self.coupled + self.kappa()
    }

    /// `ℂ + 𝕂 + 𝕜_n`.
    pub fn g_exclusive(&self) -> u64 {
        self.coupled_exact + self.kappa_exclusive() + self.target_exclusive
    }

    /// Whether the tuple satisfies every index-range constraint.
    pub fn is_valid(&self, q: u64, qk: u64) -> bool {
        let c = self.coupled;
        self.partner_totals.len() as u64 == c
            && self.partner_exclusive.len() as u64 == c
            && q <= self.target_exclusive + self.coupled_exact
            && 1 <= self.coupled_exact
            && self.coupled_exact <= c
            && c <= qk
            && self.target_exclusive < q
            && self.target_exclusive <= self.target_total
            && self.target_total + c <= qk
            && self
                .partner_totals
                .iter()
                .zip(&self.partner_exclusive)
                .all(|(&k, &e)| q <= e && e <= k && k < qk)
    }

    /// Every valid tuple with at most `max_coupled` partners.
    pub fn enumerate(q: u64, qk: u64, max_coupled: u64) -> Vec<IndexTuple> {
        let mut out = Vec::new();
        if q >= qk {
            return out;
        }
        for c in 1..=max_coupled.min(qk) {
            let mut totals = vec![q; c as usize];
            loop {
                let mut excl = vec![q; c as usize];
                loop {
                    for kn in 0..=qk - c {
                        for ex in 0..=kn.min(q - 1) {
                            for exact in q.saturating_sub(ex).max(1)..=c {
                                out.push(IndexTuple {
                                    coupled: c,
                                    coupled_exact: exact,
                                    target_total: kn,
                                    target_exclusive: ex,
                                    partner_totals: totals.clone(),
                                    partner_exclusive: excl.clone(),
                                });
                            }
                        }
                    }
                    if !advance(&mut excl, |i| totals[i], q) {
                        break;
                    }
                }
                if !advance(&mut totals, |_| qk - 1, q) {
                    break;
                }
            }
        }
        out
    }
}

/// Odometer step over `lo..=hi(i)` per digit; false when exhausted.
pub(crate) fn advance(digits: &mut [u64], hi: impl Fn(usize) -> u64, lo: u64) -> bool {
    for i in (0..digits.len()).rev() {
        if digits[i] < hi(i) {
            digits[i] += 1;
            return true;
        }
        digits[i] = lo;
    }
    false
}

/// Coefficient and placement weight of one tuple, both exact.
#[cfg(test)]
fn literal_term(t: &IndexTuple, d: Dims) -> BigInt {
    let c = t.coupled;
    let kappa = t.kappa();
    let g = t.g();
    if d.n < c + 1 || g > d.qr {
        return BigInt::zero();
    }
    let mut h = binomial_int(d.n - 1, c as i64)
        * binomial_int(c, t.coupled_exact as i64)
        * binomial_int(t.target_total, t.target_exclusive as i64)
        * binomial_int(d.qk + kappa, (c + kappa) as i64)
        * binomial_int(d.qk - c, t.target_total as i64);
    let mut suffix = kappa;
    for (j, (&k, &e)) in t.partner_totals.iter().zip(&t.partner_exclusive).enumerate() {
        h *= BigInt::from(c - j as u64 + kappa) * binomial_int(k, e as i64) * binomial_int(suffix, k as i64);
        suffix -= k;
    }
    if (g - t.g_exclusive()) % 2 == 1 {
        h = -h;
    }
    let mut w = num_traits::pow(binomial_int(d.qr - g, d.qk as i64), (d.n - c - 1) as usize)
        * binomial_int(d.qr, (d.qk + kappa) as i64);
    for &k in &t.partner_totals {
        w *= binomial_int(d.qr - g, (d.qk - 1 - k) as i64);
    }
    h * w
}

/// Reference evaluation: every index tuple, one at a time.
#[cfg(test)]
pub(crate) fn second_iteration_literal(d: Dims) -> (BigInt, u64) {
    let tuples = IndexTuple::enumerate(d.q, d.qk, d.n.saturating_sub(1));
    let mut acc = BigInt::zero();
    for t in &tuples {
        acc += literal_term(t, d);
    }
    (acc, tuples.len() as u64)
}

/// Nested sum over partner RB counts with the per-partner exclusive counts
/// folded into [`recovery_weight`].
pub(crate) fn second_iteration_naive<S: Scalar>(d: Dims) -> (S, u64) {
    let weights: Vec<BigInt> = (0..d.qk).map(|k| recovery_weight(k, d.q)).collect();
    let mut acc = S::nil();
    let mut terms = 0u64;
    let max_c = d.qk.min(d.n.saturating_sub(1));
    for c in 1..=max_c {
        let mut ks = vec![d.q; c as usize];
        if d.q > d.qk - 1 {
            break;
        }
        loop {
            let kappa: u64 = ks.iter().sum();
            let mut inner = BigInt::one();
            let mut suffix = kappa;
            for (j, &k) in ks.iter().enumerate() {
                inner *= BigInt::from(c - j as u64 + kappa) * binomial_int(suffix, k as i64) * &weights[k as usize];
                suffix -= k;
            }
            let inner = inner * binomial_int(d.n - 1, c as i64) * binomial_int(d.qk + kappa, (c + kappa) as i64);
            for kn in 0..=d.qk - c {
                let g = kn + c + kappa;
                terms += 1;
                let coeff = target_coefficient(c, kn, d.q, d.qk);
                if coeff.is_zero() || g > d.qr {
                    continue;
                }
                let mut t = S::from_int(&(coeff * &inner))
                    .times(&S::placement(d.qr - g, d.qk, d.qr, d.qk, d.n - c - 1))
                    .times(&S::placement(d.qr, d.qk + kappa, d.qr, d.qk, 1));
                for &k in &ks {
                    t = t.times(&S::placement(d.qr - g, d.qk - 1 - k, d.qr, d.qk, 1));
                }
                acc.accumulate(&t);
            }
            if !advance(&mut ks, |_| d.qk - 1, d.q) {
                break;
            }
        }
    }
    (acc, terms)
}

/// Work units of [`second_iteration_naive`].
pub(crate) fn naive_cost(d: Dims) -> u128 {
    if d.q >= d.qk {
        return 1;
    }
    let span = (d.qk - d.q) as u128;
    let mut total = 0u128;
    let mut tuples = 1u128;
    for c in 1..=d.qk.min(d.n.saturating_sub(1)) {
        tuples = tuples.saturating_mul(span);
        total = total.saturating_add(tuples.saturating_mul((d.qk - c + 1) as u128));
    }
    total
}

fn dp_bounds(d: Dims) -> (u64, u64) {
    let g_min = 1 + d.q;
    let g_max = d.qk + d.qk.min(d.n.saturating_sub(1)) * (d.qk - 1);
    (g_min, g_max.min(d.qr))
}

fn dp_max_coupled(d: Dims, g: u64) -> u64 {
    d.qk.min(d.n.saturating_sub(1)).min(g / (d.q + 1))
}

/// Work units of [`second_iteration_dp`].
pub(crate) fn dp_cost(d: Dims) -> u128 {
    if d.q >= d.qk || d.n < 2 {
        return 1;
    }
    let span = (d.qk - d.q) as u128;
    let (g_min, g_max) = dp_bounds(d);
    let mut total = 0u128;
    for g in g_min..=g_max {
        for c in 1..=dp_max_coupled(d, g) {
            let hi = (c * (d.qk - 1)).min(g - c);
            let width = (hi + 1).saturating_sub(c * d.q) as u128;
            total += width * span + (d.qk - c + 1) as u128;
        }
    }
    total
}

/// Binomial convolution table: row `c` holds `Σ_{k_1+…+k_c=n} n!/∏k_j! ∏a(k_j)`.
pub(crate) struct Convolution<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> Convolution<S> {
    /// `a[k]` is the per-partner weight for `k` RBs, zero below `lo`.
    pub(crate) fn build(a: &[S], lo: u64, max_rows: u64, max_n: u64, pascal: &[Vec<S>]) -> (Self, u64) {
        let mut rows = vec![vec![S::nil(); max_n as usize + 1]];
        rows[0][0] = S::unit();
        let mut ops = 0;
        let hi = a.len() as u64 - 1;
        for c in 1..=max_rows {
            let prev = &rows[c as usize - 1];
            let mut row = vec![S::nil(); max_n as usize + 1];
            let start = c * lo;
            let end = (c * hi).min(max_n);
            for n in start..=end {
                let mut acc = S::nil();
                for k in lo..=hi.min(n) {
                    let rest = (n - k) as usize;
                    if prev[rest].vanishes() || a[k as usize].vanishes() {
                        continue;
                    }
                    acc.accumulate(&pascal[n as usize][k as usize].times(&a[k as usize]).times(&prev[rest]));
                    ops += 1;
                }
                row[n as usize] = acc;
            }
            rows.push(row);
        }
        (Self { rows }, ops)
    }

    pub(crate) fn get(&self, c: u64, n: u64) -> &S {
        &self.rows[c as usize][n as usize]
    }
}

/// `pascal[n][k] = C(n, k)` for `n <= max_n`, `k <= max_k`.
pub(crate) fn pascal<S: Scalar>(max_n: u64, max_k: u64) -> Vec<Vec<S>> {
    (0..=max_n)
        .map(|n| (0..=max_k).map(|k| S::choose(n, k)).collect())
        .collect()
}

/// Partner-count convolution: for each `G = k_n + C + κ`, the partners'
/// joint weight depends on their RB counts only through `κ`, so the sum
/// over `(k_1..k_C)` collapses to one entry of a convolution table.
pub(crate) fn second_iteration_dp<S: Scalar>(d: Dims) -> (S, u64) {
    if d.q >= d.qk || d.n < 2 {
        return (S::nil(), 0);
    }
    let (g_min, g_max) = dp_bounds(d);
    let kappa_cap = d.qk.min(d.n - 1) * (d.qk - 1);
    let table = pascal::<S>(kappa_cap, d.qk);
    let weights: Vec<BigInt> = (0..d.qk).map(|k| recovery_weight(k, d.q)).collect();
    let per_g = |g: u64| -> (S, u64) {
        let c_max = dp_max_coupled(d, g);
        if c_max == 0 {
            return (S::nil(), 0);
        }
        let a: Vec<S> = (0..d.qk)
            .map(|k| {
                if k < d.q {
                    S::nil()
                } else {
                    S::from_int(&weights[k as usize]).times(&S::placement(d.qr - g, d.qk - 1 - k, d.qr, d.qk, 1))
                }
            })
            .collect();
        let max_n = (g - 1).min(c_max * (d.qk - 1));
        let (conv, mut ops) = Convolution::build(&a, d.q, c_max, max_n, &table);
        let mut total = S::nil();
        for c in 1..=c_max {
            let mut acc = S::nil();
            for kn in 0..=d.qk - c {
                ops += 1;
                let Some(kappa) = g.checked_sub(kn + c) else { continue };
                if kappa < c * d.q || kappa > c * (d.qk - 1) {
                    continue;
                }
                let tuple_sum = conv.get(c, kappa);
                if tuple_sum.vanishes() {
                    continue;
                }
                let coeff = target_coefficient(c, kn, d.q, d.qk);
                if coeff.is_zero() {
                    continue;
                }
                let t = S::from_int(&(coeff * binomial_int(d.qk + kappa, (c + kappa) as i64)))
                    .times(&S::placement(d.qr, d.qk + kappa, d.qr, d.qk, 1))
                    .times(&S::falling(c + kappa, kappa))
                    .times(tuple_sum);
                acc.accumulate(&t);
            }
            if acc.vanishes() {
                continue;
            }
            let scaled =
                acc.times(&S::choose(d.n - 1, c))
                    .times(&S::placement(d.qr - g, d.qk, d.qr, d.qk, d.n - c - 1));
            total.accumulate(&scaled);
        }
        (total, ops)
    };
    let parts = map_range(g_min, g_max, per_g);
    let mut acc = S::nil();
    let mut ops = 0;
    for (v, o) in parts {
        acc.accumulate(&v);
        ops += o;
    }
    (acc, ops)
}

/// Maps `lo..=hi` in order, in parallel when available.
pub(crate) fn map_range<T: Send>(lo: u64, hi: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    if lo > hi {
        return Vec::new();
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (lo..=hi).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (lo..=hi).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(r: u64, n: u64, k: u64, q: u64) -> Dims {
        Dims {
            q,
            qk: q * k,
            qr: q * r,
            n,
        }
    }

    #[test]
    fn weight_closed_form() {
        for q in 1..5u64 {
            for k in q..12 {
                let direct: BigInt = (q..=k)
                    .map(|j| {
                        let v = binomial_int(k, j as i64);
                        if (k - j) % 2 == 0 {
                            v
                        } else {
                            -v
                        }
                    })
                    .sum();
                assert_eq!(recovery_weight(k, q), direct, "k={k} q={q}");
            }
        }
    }

    #[test]
    fn tuples_are_valid() {
        let tuples = IndexTuple::enumerate(2, 4, 3);
        assert!(!tuples.is_empty());
        assert!(tuples.iter().all(|t| t.is_valid(2, 4)));
        assert!(IndexTuple::enumerate(1, 1, 5).is_empty());
    }

    #[test]
    fn three_evaluators_agree() {
        for &(r, n, k, q) in &[
            (4u64, 3u64, 2u64, 1u64),
            (5, 4, 2, 2),
            (6, 3, 3, 1),
            (9, 5, 2, 2),
            (7, 6, 3, 2),
        ] {
            let d = dims(r, n, k, q);
            let (lit, _) = second_iteration_literal(d);
            let (naive, _) = second_iteration_naive::<BigInt>(d);
            let (dp, _) = second_iteration_dp::<BigInt>(d);
            assert_eq!(lit, naive, "literal vs naive {r} {n} {k} {q}");
            assert_eq!(naive, dp, "naive vs dp {r} {n} {k} {q}");
        }
    }
}
