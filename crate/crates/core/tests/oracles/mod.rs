//! Brute-force reference implementations. Deliberately naive and independent
//! of the library code paths they check.

#![allow(dead_code, clippy::needless_range_loop, clippy::manual_is_multiple_of)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn naive_compose(r: &Dense, s: &Dense) -> Dense {
    let n = r.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut best = 0.0f64;
            for k in 0..n {
                best = best.max(r[i][k].min(s[k][j]));
            }
            out[i][j] = best;
        }
    }
    out
}

/// `R ∪ R^2 ∪ ... ∪ R^n` with element-wise max as union.
pub fn power_union_closure(r: &Dense) -> Dense {
    let n = r.len();
    let mut union = r.clone();
    let mut power = r.clone();
    for _ in 2..=n {
        power = naive_compose(&power, r);
        for i in 0..n {
            for j in 0..n {
                union[i][j] = union[i][j].max(power[i][j]);
            }
        }
    }
    union
}

/// Widest-path (bottleneck) closure, Floyd-Warshall style.
pub fn bottleneck_closure(r: &Dense) -> Dense {
    let n = r.len();
    let mut t = r.clone();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = t[i][k].min(t[k][j]);
                if via > t[i][j] {
                    t[i][j] = via;
                }
            }
        }
    }
    t
}

pub fn is_maxmin_transitive(t: &Dense) -> bool {
    let n = t.len();
    (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| t[i][k].min(t[k][j]) <= t[i][j])))
}

pub fn is_crisp_equivalence(c: &[Vec<bool>]) -> bool {
    let n = c.len();
    (0..n).all(|i| c[i][i])
        && (0..n).all(|i| (0..n).all(|j| c[i][j] == c[j][i]))
        && (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| !(c[i][k] && c[k][j]) || c[i][j])))
}

/// Random reflexive symmetric relation. Entries come from a coarse grid so
/// ties occur.
pub fn random_relation<R: Rng>(rng: &mut R, n: usize) -> Dense {
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = f64::from(rng.gen_range(0..=20u32)) / 20.0;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Count of every itemset over all `2^|I|` subsets of the item universe,
/// keeping those meeting `minsup`.
pub fn brute_frequent(db: &[Vec<String>], minsup: f64) -> BTreeMap<Vec<String>, usize> {
    let universe: Vec<String> = db
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(universe.len() <= 16, "oracle is exponential");
    let sets: Vec<BTreeSet<&String>> = db.iter().map(|t| t.iter().collect()).collect();
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << universe.len()) {
        let items: Vec<String> = (0..universe.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| universe[k].clone())
            .collect();
        let count = sets
            .iter()
            .filter(|t| items.iter().all(|i| t.contains(i)))
            .count();
        if count as f64 / db.len() as f64 >= minsup {
            out.insert(items, count);
        }
    }
    out
}

/// `(antecedent, consequent, count(X∪Y), count(X))` for every split of every
/// frequent itemset meeting `minconf`.
pub fn brute_rules(
    db: &[Vec<String>],
    minsup: f64,
    minconf: f64,
) -> BTreeSet<(Vec<String>, Vec<String>, usize, usize)> {
    let frequent = brute_frequent(db, minsup);
    let sets: Vec<BTreeSet<&String>> = db.iter().map(|t| t.iter().collect()).collect();
    let count = |items: &[String]| {
        sets.iter()
            .filter(|t| items.iter().all(|i| t.contains(i)))
            .count()
    };
    let mut out = BTreeSet::new();
    for (z, &zc) in &frequent {
        for mask in 1u32..(1 << z.len()) - 1 {
            let x: Vec<String> = (0..z.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| z[k].clone())
                .collect();
            let y: Vec<String> = (0..z.len())
                .filter(|k| mask >> k & 1 == 0)
                .map(|k| z[k].clone())
                .collect();
            let xc = count(&x);
            if zc as f64 / xc as f64 >= minconf {
                out.insert((x, y, zc, xc));
            }
        }
    }
    out
}

pub fn random_baskets<R: Rng>(rng: &mut R, max_items: usize, max_tx: usize) -> Vec<Vec<String>> {
    let items = rng.gen_range(1..=max_items);
    let n = rng.gen_range(1..=max_tx);
    // skew item popularity so several levels are frequent
    let p: Vec<f64> = (0..items).map(|_| rng.gen_range(0.2..0.9)).collect();
    (0..n)
        .map(|_| {
            let t: Vec<String> = (0..items)
                .filter(|&k| rng.gen_bool(p[k]))
                .map(|k| format!("i{k:02}"))
                .collect();
            if t.is_empty() {
                vec!["i00".to_string()]
            } else {
                t
            }
        })
        .collect()
}

fn determinant(mut m: Dense) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[pivot][c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            m.swap(pivot, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

fn solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.len();
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(pivot, c);
        b.swap(pivot, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// Perron root of a positive matrix by bisection on `det(A - λI)` over
/// `[n, n * max entry]`, then its eigenvector from the linear system with
/// the last component fixed to 1, normalized to sum 1.
pub fn perron_eigen(a: &Dense) -> (f64, Vec<f64>) {
    let n = a.len();
    let char_poly = |lambda: f64| {
        let mut m = a.clone();
        for i in 0..n {
            m[i][i] -= lambda;
        }
        determinant(m)
    };
    let mut lo = n as f64;
    let mut hi = n as f64 * a.iter().flatten().copied().fold(1.0, f64::max) + 1.0;
    // the Perron root is the largest real root; the sign of det(A - λI) for
    // λ above it is (-1)^n
    let above = if n % 2 == 0 { 1.0 } else { -1.0 };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if char_poly(mid) * above > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let sub: Dense = (0..n - 1)
        .map(|i| {
            (0..n - 1)
                .map(|j| a[i][j] - if i == j { lambda } else { 0.0 })
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..n - 1).map(|i| -a[i][n - 1]).collect();
    let mut v = solve(sub, rhs);
    v.push(1.0);
    let s: f64 = v.iter().sum();
    (lambda, v.iter().map(|x| x / s).collect())
}

/// Geometric-mean (logarithmic least squares) priorities.
pub fn geometric_mean_weights(a: &Dense) -> Vec<f64> {
    let n = a.len() as f64;
    let g: Vec<f64> = a
        .iter()
        .map(|r| r.iter().map(|x| x.ln()).sum::<f64>() / n)
        .map(f64::exp)
        .collect();
    let s: f64 = g.iter().sum();
    g.iter().map(|x| x / s).collect()
}
