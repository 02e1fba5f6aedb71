//! Enumeration of embedding requests by complexity.
//!
//! The complexity of a request `(E, F, f, n)` is the largest of `dim F`, the
//! number of functional pairs of `F`, `n`, and the total encoding weights of
//! the functionals of `F`, of the echelon basis of `E` and of the matrix of
//! `f` (see [`weight`]). Every one of these is bounded by the level, so each
//! level is finite and contained in the next.

use crate::exact::rational::{bit_sizes, of_weight, total_weight, weight};
use crate::exact::sign_normalized;
use crate::spaces::{PolyhedralSpace, Subspace};
use crate::{Matrix, Rational, Vector};

use super::{ChainStage, EmbeddingRequest};

fn within_bits(x: &Rational, bit_cap: u32) -> bool {
    let (p, q) = bit_sizes(x);
    p <= bit_cap as u64 && q <= bit_cap as u64
}

/// All vectors of length `len` with total weight at most `budget` and every
/// entry within `bit_cap` bits.
pub(crate) fn weighted_vectors(len: usize, budget: u64, bit_cap: u32) -> Vec<Vector> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(len);
    fill(len, budget, bit_cap, &mut prefix, &mut out);
    out
}

fn fill(len: usize, budget: u64, bit_cap: u32, prefix: &mut Vector, out: &mut Vec<Vector>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for w in 0..=budget {
        for x in of_weight(w) {
            if within_bits(&x, bit_cap) {
                prefix.push(x);
                fill(len, budget - w, bit_cap, prefix, out);
                prefix.pop();
            }
        }
    }
}

/// Canonical spaces of dimension `d` whose canonical functionals number at
/// most `level` and have total weight at most `level`.
fn candidate_spaces(d: usize, level: u64, bit_cap: u32) -> Vec<PolyhedralSpace> {
    let mut funcs: Vec<Vector> = weighted_vectors(d, level, bit_cap)
        .into_iter()
        .filter(|v| sign_normalized(v).as_ref() == Some(v))
        .collect();
    funcs.sort_by(|a, b| b.cmp(a));
    let weights: Vec<u64> = funcs.iter().map(total_weight).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    subsets(
        &funcs,
        &weights,
        0,
        level,
        level as usize,
        &mut chosen,
        &mut |list: &[usize]| {
            if list.len() < d {
                return;
            }
            let fs: Vec<Vector> = list.iter().map(|&k| funcs[k].clone()).collect();
            if let Ok(space) = PolyhedralSpace::from_functionals(d, fs.clone()) {
                if space.functionals() == fs {
                    out.push(space);
                }
            }
        },
    );
    out
}

fn subsets(
    items: &[Vector],
    weights: &[u64],
    start: usize,
    budget: u64,
    max_len: usize,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    visit(chosen);
    if chosen.len() == max_len {
        return;
    }
    for k in start..items.len() {
        if weights[k] <= budget {
            chosen.push(k);
            subsets(
                items,
                weights,
                k + 1,
                budget - weights[k],
                max_len,
                chosen,
                visit,
            );
            chosen.pop();
        }
    }
}

/// Reduced column echelon bases of `e`-dimensional subspaces of `Q^d` with
/// total weight at most `budget`.
fn echelon_bases(d: usize, e: usize, budget: u64, bit_cap: u32) -> Vec<Matrix> {
    let mut out = Vec::new();
    if e as u64 > budget {
        return out;
    }
    for pivots in combinations(d, e) {
        // Free entries of column j: rows below its pivot that are not pivots.
        let free: Vec<(usize, usize)> = (0..e)
            .flat_map(|j| {
                let pivots = &pivots;
                (pivots[j] + 1..d)
                    .filter(move |r| !pivots.contains(r))
                    .map(move |r| (r, j))
            })
            .collect();
        for values in weighted_vectors(free.len(), budget - e as u64, bit_cap) {
            let mut m = Matrix::zeros(d, e);
            for (j, &p) in pivots.iter().enumerate() {
                m[(p, j)] = Rational::from_i64(1);
            }
            for (&(r, j), x) in free.iter().zip(values) {
                m[(r, j)] = x;
            }
            out.push(m);
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, 0, &mut Vec::new(), &mut out);
    out
}

fn col_major(m: &Matrix) -> Vec<Rational> {
    m.col_vecs().into_iter().flatten().collect()
}

/// Requests over `stage` of complexity at most `level`, ordered by
/// complexity and then by their data.
pub fn enumerate_requests(
    stage: &ChainStage,
    level: u32,
    dim_cap: usize,
    bit_cap: u32,
) -> Vec<EmbeddingRequest> {
    let c = level as u64;
    let s = stage.space.dim();
    let mut keyed = Vec::new();
    for d in 1..=dim_cap.min(level as usize) {
        let spaces = candidate_spaces(d, c, bit_cap);
        for e in 0..=d {
            let bases = echelon_bases(d, e, c, bit_cap);
            let maps = weighted_vectors(s * e, c, bit_cap);
            for space in &spaces {
                let k = space.functionals().len() as u64;
                let wf_space = total_weight(space.functionals().iter().flatten());
                for basis in &bases {
                    let wb = total_weight(basis.entries());
                    for entries in &maps {
                        let wm: u64 = entries.iter().map(weight).sum();
                        let base = [d as u64, k, wf_space, wb, wm]
                            .into_iter()
                            .max()
                            .unwrap_or(0);
                        for n in 1..=level {
                            let complexity = base.max(n as u64) as u32;
                            let f_matrix = Matrix::from_cols(
                                s,
                                entries
                                    .chunks(s.max(1))
                                    .take(e)
                                    .map(<[_]>::to_vec)
                                    .collect(),
                            )
                            .expect("columns have the stage dimension");
                            let key = (
                                complexity,
                                d,
                                space.functionals().to_vec(),
                                e,
                                col_major(basis),
                                entries.clone(),
                                n,
                            );
                            let req = EmbeddingRequest {
                                e: Subspace::new(space.clone(), basis.clone())
                                    .expect("echelon bases are independent"),
                                f_matrix,
                                n,
                                complexity,
                            };
                            keyed.push((key, req));
                        }
                    }
                }
            }
        }
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, ratio};

    fn stage(space: PolyhedralSpace) -> ChainStage {
        ChainStage::initial_with(space)
    }

    #[test]
    fn first_level_over_linf1() {
        let reqs = enumerate_requests(&stage(PolyhedralSpace::linf(1).unwrap()), 1, 3, 6);
        assert_eq!(reqs.len(), 4);
        let linf1 = PolyhedralSpace::linf(1).unwrap();
        assert!(reqs.iter().any(|r| r.f_space() == &linf1
            && r.e.dim() == 1
            && r.f_matrix == Matrix::identity(1)
            && r.n == 1));
        assert!(reqs.iter().all(|r| r.complexity == 1));
    }

    #[test]
    fn levels_are_prefixes() {
        let st = stage(PolyhedralSpace::l1(2).unwrap());
        let a = enumerate_requests(&st, 1, 3, 6);
        let b = enumerate_requests(&st, 2, 3, 6);
        assert!(b.len() > a.len());
        assert_eq!(&b[..a.len()], &a[..]);
        assert!(b.windows(2).all(|w| w[0].complexity <= w[1].complexity));
    }

    #[test]
    fn bit_cap_filters_entries() {
        let st = stage(PolyhedralSpace::linf(1).unwrap());
        let capped = enumerate_requests(&st, 2, 3, 1);
        assert!(capped.iter().all(|r| {
            r.f_matrix
                .entries()
                .iter()
                .chain(r.f_space().functionals().iter().flatten())
                .all(|x| x.numer().bits() <= 1 && x.denom().bits() <= 1)
        }));
        assert!(capped.len() < enumerate_requests(&st, 2, 3, 6).len());
    }

    /// Every rational with numerator and denominator below 8, filtered by
    /// weight directly.
    fn small_grid(max_weight: u64) -> Vec<Rational> {
        let mut out = vec![int(0)];
        for p in -7..=7i64 {
            for q in 1..=7i64 {
                let x = ratio(p, q);
                if p != 0 && num_integer::gcd(p, q) == 1 && weight(&x) <= max_weight {
                    out.push(x);
                }
            }
        }
        out
    }

    fn product(grid: &[Rational], len: usize) -> Vec<Vector> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|v| {
                    grid.iter().map(move |x| {
                        let mut w = v.clone();
                        w.push(x.clone());
                        w
                    })
                })
                .collect();
        }
        out
    }

    /// Independent count: all matrices over the grid, echelon and canonical
    /// conditions checked afterwards.
    fn brute_force_count(s: usize, level: u64) -> usize {
        let grid = small_grid(level);
        let mut count = 0;
        for d in 1..=level as usize {
            let vectors = product(&grid, d);
            // functional lists: strictly decreasing, nonzero, sign-normalized
            let mut lists: Vec<Vec<Vector>> = vec![vec![]];
            for _ in 0..level {
                let mut next = Vec::new();
                for l in &lists {
                    for v in &vectors {
                        if l.last().is_none_or(|last| v < last) {
                            let mut m = l.clone();
                            m.push(v.clone());
                            next.push(m);
                        }
                    }
                }
                lists.extend(next);
                lists.sort();
                lists.dedup();
            }
            let spaces: Vec<usize> = lists
                .iter()
                .filter(|l| {
                    l.len() >= d
                        && l.iter().all(|v| sign_normalized(v).as_ref() == Some(v))
                        && total_weight(l.iter().flatten()) <= level
                        && PolyhedralSpace::from_functionals(d, l.to_vec())
                            .is_ok_and(|sp| sp.functionals() == &l[..])
                })
                .map(|l| l.len())
                .collect();
            for e in 0..=d {
                let bases = product(&grid, d * e)
                    .into_iter()
                    .filter(|entries| {
                        let m =
                            Matrix::from_cols(d, entries.chunks(d).map(<[_]>::to_vec).collect())
                                .unwrap();
                        m.cols() == e
                            && m.rank() == e
                            && m.column_echelon().0 == m
                            && total_weight(entries) <= level
                    })
                    .count();
                let maps = product(&grid, s * e)
                    .into_iter()
                    .filter(|v| total_weight(v) <= level)
                    .count();
                count += spaces.len() * bases * maps * level as usize;
            }
        }
        count
    }

    #[test]
    fn level_two_count_matches_brute_force() {
        let st = stage(PolyhedralSpace::linf(1).unwrap());
        let got = enumerate_requests(&st, 2, 3, 6).len();
        assert_eq!(got, brute_force_count(1, 2));
    }
}
