//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the code under test except for plain matrix
//! construction and accessors.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssnmf::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries in [-2, 2); with `coarse` they are rounded to halves so ties and
/// exact zeros show up often.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, coarse: bool) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let v: f64 = rng.gen_range(-2.0..2.0);
        if coarse {
            (v * 2.0).round() / 2.0
        } else {
            v
        }
    })
}

pub fn random_nonneg(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.05..2.0))
}

/// All subsets of `0..n` with at most `k` elements.
pub fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    fn grow(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            return;
        }
        for i in start..n {
            cur.push(i);
            out.push(cur.clone());
            grow(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    grow(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Squared distance from `v` to the best non-negative vector supported on
/// `support`: clamped values on the support, zero elsewhere.
fn restricted_gap(v: &[f64], support: &[usize]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            if support.contains(&i) {
                let c = x.min(0.0);
                c * c
            } else {
                x * x
            }
        })
        .sum()
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn cols_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| m.get(i, j)).collect())
        .collect()
}

/// Minimum of `‖M − W‖²` over non-negative `W` with at most `k` non-zero rows.
pub fn brute_row_sparse(m: &DenseMatrix, k: usize) -> f64 {
    let rows = rows_of(m);
    subsets_up_to(m.rows(), k)
        .iter()
        .map(|s| {
            rows.iter()
                .enumerate()
                .map(|(i, r)| {
                    if s.contains(&i) {
                        restricted_gap(r, &(0..r.len()).collect::<Vec<_>>())
                    } else {
                        restricted_gap(r, &[])
                    }
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum over non-negative `W` with at most `k` non-zeros per column; the
/// objective and the constraint both split by column.
pub fn brute_col_sparse(m: &DenseMatrix, k: usize) -> f64 {
    let subsets = subsets_up_to(m.rows(), k);
    cols_of(m)
        .iter()
        .map(|c| {
            subsets
                .iter()
                .map(|s| restricted_gap(c, s))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Minimum over non-negative `W` with at most `budget` non-zeros overall.
pub fn brute_entry_sparse(m: &DenseMatrix, budget: usize) -> f64 {
    let flat: Vec<f64> = cols_of(m).concat();
    subsets_up_to(flat.len(), budget)
        .iter()
        .map(|s| restricted_gap(&flat, s))
        .fold(f64::INFINITY, f64::min)
}

pub fn dist_sq(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let d = a.get(i, j) - b.get(i, j);
            acc += d * d;
        }
    }
    acc
}

/// `t[l][h]`, cluster sizes and class sizes keyed by raw label values.
struct Counts {
    joint: BTreeMap<(usize, usize), f64>,
    clusters: BTreeMap<usize, f64>,
    classes: BTreeMap<usize, f64>,
    n: f64,
}

fn counts(pred: &[usize], truth: &[usize]) -> Counts {
    let mut c = Counts {
        joint: BTreeMap::new(),
        clusters: BTreeMap::new(),
        classes: BTreeMap::new(),
        n: pred.len() as f64,
    };
    for (p, t) in pred.iter().zip(truth) {
        *c.joint.entry((*p, *t)).or_default() += 1.0;
        *c.clusters.entry(*p).or_default() += 1.0;
        *c.classes.entry(*t).or_default() += 1.0;
    }
    c
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Mutual information over the geometric mean of the two marginal
/// entropies (natural logs), with the degenerate cases resolved by partition
/// equality.
pub fn nmi_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let c = counts(pred, truth);
    let mut num = 0.0;
    for (&(l, h), &t) in &c.joint {
        num += t * (c.n * t / (c.clusters[&l] * c.classes[&h])).ln();
    }
    let a: f64 = c.clusters.values().map(|t| t * (t / c.n).ln()).sum();
    let b: f64 = c.classes.values().map(|t| t * (t / c.n).ln()).sum();
    if a == 0.0 || b == 0.0 {
        return if same_partition(pred, truth) {
            1.0
        } else {
            0.0
        };
    }
    num / (a * b).sqrt()
}

pub fn purity_oracle(pred: &[usize], truth: &[usize]) -> f64 {
    let c = counts(pred, truth);
    let mut hits = 0.0;
    for &l in c.clusters.keys() {
        let best = c
            .classes
            .keys()
            .map(|h| c.joint.get(&(l, *h)).copied().unwrap_or(0.0))
            .fold(0.0, f64::max);
        hits += best;
    }
    hits / c.n
}

/// `None` when fewer than two true classes are present.
pub fn entropy_oracle(pred: &[usize], truth: &[usize]) -> Option<f64> {
    let c = counts(pred, truth);
    let d = c.classes.len() as f64;
    if d < 2.0 {
        return None;
    }
    let mut acc = 0.0;
    for (&(l, _), &t) in &c.joint {
        acc += t * (t / c.clusters[&l]).log2();
    }
    Some(-acc / (c.n * d.log2()))
}

/// Central differences of `f` with respect to every entry of `m`.
pub fn finite_difference(m: &DenseMatrix, mut f: impl FnMut(&DenseMatrix) -> f64) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            let step = 1e-5 * v.abs().max(1.0);
            let mut plus = m.clone();
            plus.set(i, j, v + step);
            let mut minus = m.clone();
            minus.set(i, j, v - step);
            g.set(i, j, (f(&plus) - f(&minus)) / (2.0 * step));
        }
    }
    g
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn subset_enumeration_counts() {
    // 1 + 6 + 15 + 20
    assert_eq!(subsets_up_to(6, 3).len(), 42);
    assert_eq!(subsets_up_to(3, 0), vec![Vec::<usize>::new()]);
    assert_eq!(subsets_up_to(2, 5).len(), 4);
}

#[test]
fn oracle_spot_values() {
    assert_eq!(purity_oracle(&[1, 1, 2, 2], &[1, 1, 1, 2]), 0.75);
    assert_eq!(entropy_oracle(&[0, 0, 0, 0], &[0, 0, 1, 1]), Some(1.0));
    assert_eq!(nmi_oracle(&[1, 2, 1, 2], &[1, 1, 2, 2]), 0.0);
    assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
}
