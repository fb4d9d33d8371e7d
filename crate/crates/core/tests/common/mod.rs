//! Straight-from-the-definition reference implementations. These share no
//! code with the library: counts are rebuilt from raw lists on every call.
#![allow(dead_code)]

use fairrank_core::{Dataset, GroupPartition, Instance, Solution};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn opportunity(lists: &[Vec<usize>], group_of: &[usize], g: usize, m: usize, k: usize, x: &[Vec<f64>]) -> Vec<f64> {
    let mut n_jp = vec![vec![0.0f64; g]; m];
    let mut n_p = vec![0.0f64; g];
    for (i, list) in lists.iter().enumerate() {
        n_p[group_of[i]] += 1.0;
        for &j in list {
            n_jp[j][group_of[i]] += 1.0;
        }
    }
    (0..g)
        .map(|p| {
            let mut sum = 0.0;
            for j in 0..m {
                let n_j: f64 = n_jp[j].iter().sum();
                if n_j > 0.0 {
                    sum += n_j * (n_jp[j][p] / n_j - x[j][p]).abs();
                }
            }
            sum / (n_p[p] * k as f64)
        })
        .collect()
}

pub fn group_scores(lists: &[Vec<usize>], group_of: &[usize], g: usize, y: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0; g];
    for (i, list) in lists.iter().enumerate() {
        for &j in list {
            s[group_of[i]] += y[i][j];
        }
    }
    s
}

/// Top-k by exhaustive subset enumeration; returns the best score sum per
/// student.
pub fn brute_force_best_sum(row: &[f64], k: usize) -> f64 {
    let m = row.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize == k {
            let s: f64 = (0..m).filter(|j| mask >> j & 1 == 1).map(|j| row[j]).sum();
            best = best.max(s);
        }
    }
    best
}

pub fn quality(lists: &[Vec<usize>], hsc: &[Vec<usize>], group_of: &[usize], g: usize, y: &[Vec<f64>]) -> Vec<f64> {
    let s = group_scores(lists, group_of, g, y);
    let h = group_scores(hsc, group_of, g, y);
    (0..g).map(|p| if h[p] == 0.0 { 0.0 } else { (h[p] - s[p]) / h[p] }).collect()
}

pub fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `V` with the L-infinity norm, recomputed from scratch.
pub fn value(inst: &Oracle, lists: &[Vec<usize>], alpha: f64) -> f64 {
    let o = opportunity(lists, &inst.group_of, inst.g, inst.m, inst.k, &inst.x);
    let q = quality(lists, &inst.hsc, &inst.group_of, inst.g, &inst.y);
    alpha * linf(&o) + (1.0 - alpha) * linf(&q)
}

/// Raw copy of an instance for the reference functions.
pub struct Oracle {
    pub y: Vec<Vec<f64>>,
    pub group_of: Vec<usize>,
    pub g: usize,
    pub m: usize,
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub hsc: Vec<Vec<usize>>,
}

impl Oracle {
    pub fn of(instance: &Instance, k: usize) -> Self {
        let d = &instance.dataset;
        let m = d.num_courses();
        let g = instance.partition.num_groups();
        let y: Vec<Vec<f64>> = (0..d.num_students()).map(|i| d.row(i).to_vec()).collect();
        let hsc = y
            .iter()
            .map(|row| {
                let mut idx: Vec<usize> = (0..m).collect();
                idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
                let mut top = idx[..k].to_vec();
                top.sort_unstable();
                top
            })
            .collect();
        Self {
            y,
            group_of: instance.partition.assignments().to_vec(),
            g,
            m,
            k,
            x: (0..m).map(|j| (0..g).map(|p| instance.fair.ratio(j, p)).collect()).collect(),
            hsc,
        }
    }

    /// Every single-course replacement of `lists`.
    pub fn neighbours(&self, lists: &[Vec<usize>]) -> Vec<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        for (i, list) in lists.iter().enumerate() {
            for &out_j in list {
                for in_j in (0..self.m).filter(|j| !list.contains(j)) {
                    let mut next = lists.to_vec();
                    next[i].retain(|&j| j != out_j);
                    next[i].push(in_j);
                    next[i].sort_unstable();
                    out.push(next);
                }
            }
        }
        out
    }
}

/// Random instance with scores in [0, 1), every group non-empty and a
/// population-driven target.
pub fn random_instance(seed: u64, n: usize, m: usize, g: usize) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
    let mut group_of: Vec<usize> = (0..n).map(|i| if i < g { i } else { rng.random_range(0..g) }).collect();
    group_of.rotate_left(rng.random_range(0..n));
    let dataset = Dataset::from_rows(&rows).unwrap();
    let partition = GroupPartition::new(group_of, g).unwrap();
    Instance::with_population_target(dataset, partition).unwrap()
}

pub fn random_solution(seed: u64, instance: &Instance, k: usize) -> Solution {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x9e37_79b9);
    let m = instance.dataset.num_courses();
    let lists = (0..instance.dataset.num_students())
        .map(|_| rand::seq::index::sample(&mut rng, m, k).into_vec())
        .collect();
    Solution::from_lists(lists, k, m, &instance.partition).unwrap()
}
