//! Core data model: score matrix, protected-group partition, fair
//! distribution target and the top-k recommendation solution.
//!
//! Students and courses carry opaque string ids at the I/O boundary and dense
//! `usize` indices everywhere else.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance within which a fair-distribution row may deviate from 1 and
/// still be accepted (and renormalized).
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Row-sum tolerance that holds after renormalization.
pub const ROW_SUM_INVARIANT: f64 = 1e-9;

/// Dense `n x m` recommendation score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    m: usize,
    scores: Vec<f64>,
    student_ids: Vec<String>,
    course_ids: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a row-major score buffer.
    pub fn new(student_ids: Vec<String>, course_ids: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        let n = student_ids.len();
        let m = course_ids.len();
        if n == 0 || m == 0 {
            return Err(Error::Dimension(format!(
                "dataset needs at least one student and one course, got {n}x{m}"
            )));
        }
        if scores.len() != n * m {
            return Err(Error::Dimension(format!(
                "score buffer has {} entries, expected {n}x{m}",
                scores.len()
            )));
        }
        if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteScore {
                row: pos / m,
                col: pos % m,
            });
        }
        check_unique(&student_ids)?;
        check_unique(&course_ids)?;
        Ok(Self {
            n,
            m,
            scores,
            student_ids,
            course_ids,
        })
    }

    /// Builds a dataset with generated ids `s0..` and `c0..`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged score rows".into()));
        }
        let scores = rows.iter().flatten().copied().collect();
        Self::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..m).map(|j| format!("c{j}")).collect(),
            scores,
        )
    }

    pub fn num_students(&self) -> usize {
        self.n
    }

    pub fn num_courses(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn score(&self, student: usize, course: usize) -> f64 {
        self.scores[student * self.m + course]
    }

    #[inline]
    pub fn row(&self, student: usize) -> &[f64] {
        &self.scores[student * self.m..(student + 1) * self.m]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn student_ids(&self) -> &[String] {
        &self.student_ids
    }

    pub fn course_ids(&self) -> &[String] {
        &self.course_ids
    }

    pub fn course_index(&self, id: &str) -> Option<usize> {
        self.course_ids.iter().position(|c| c == id)
    }

    pub fn student_index(&self, id: &str) -> Option<usize> {
        self.student_ids.iter().position(|s| s == id)
    }
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Assignment of every student to exactly one protected group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    group_of: Vec<usize>,
    sizes: Vec<usize>,
    members: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl GroupPartition {
    /// Builds a partition from a dense group index per student. Labels default
    /// to the group index.
    pub fn new(group_of: Vec<usize>, num_groups: usize) -> Result<Self> {
        let labels = (0..num_groups).map(|p| p.to_string()).collect();
        Self::with_labels(group_of, labels)
    }

    pub fn with_labels(group_of: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let g = labels.len();
        if g == 0 {
            return Err(Error::Dimension("partition needs at least one group".into()));
        }
        if group_of.is_empty() {
            return Err(Error::Dimension("partition needs at least one student".into()));
        }
        let mut members = vec![Vec::new(); g];
        for (i, &p) in group_of.iter().enumerate() {
            if p >= g {
                return Err(Error::OutOfBounds(format!(
                    "student {i} assigned to group {p}, only {g} groups"
                )));
            }
            members[p].push(i);
        }
        if let Some(p) = members.iter().position(Vec::is_empty) {
            return Err(Error::EmptyGroup(labels[p].clone()));
        }
        let sizes = members.iter().map(Vec::len).collect();
        Ok(Self {
            group_of,
            sizes,
            members,
            labels,
        })
    }

    /// Maps raw labels to dense indices in first-appearance order.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut group_of = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            let p = match names.iter().position(|l| l == label) {
                Some(p) => p,
                None => {
                    names.push(label.to_string());
                    names.len() - 1
                }
            };
            group_of.push(p);
        }
        Self::with_labels(group_of, names)
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_students(&self) -> usize {
        self.group_of.len()
    }

    #[inline]
    pub fn group_of(&self, student: usize) -> usize {
        self.group_of[student]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.group_of
    }

    pub fn size(&self, group: usize) -> usize {
        self.sizes[group]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Students of `group`, in ascending index order.
    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// `m x g` matrix of fair per-course recommendation shares. Every row sums to
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct FairDistribution {
    m: usize,
    g: usize,
    ratios: Vec<f64>,
}

impl FairDistribution {
    /// Population-driven target: every course shares its recommendations in
    /// proportion to group sizes.
    pub fn population(partition: &GroupPartition, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Dimension("fair distribution needs m >= 1".into()));
        }
        let n = partition.num_students() as f64;
        let row: Vec<f64> = partition.sizes().iter().map(|&s| s as f64 / n).collect();
        Ok(Self {
            m,
            g: row.len(),
            ratios: row.repeat(m),
        })
    }

    /// Validates explicit rows. A single row is broadcast to all `m` courses.
    /// Rows whose sum is within [`ROW_SUM_TOLERANCE`] of 1 are renormalized.
    pub fn from_rows(rows: &[Vec<f64>], m: usize, g: usize) -> Result<Self> {
        if rows.len() != 1 && rows.len() != m {
            return Err(Error::Dimension(format!(
                "fair distribution has {} rows, expected 1 or {m}",
                rows.len()
            )));
        }
        let mut normalized = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            if row.len() != g {
                return Err(Error::Dimension(format!(
                    "fair distribution row {r} has {} entries, expected {g}",
                    row.len()
                )));
            }
            for (c, &x) in row.iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::NegativeRatio {
                        row: r,
                        col: c,
                        value: x,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: r, sum });
            }
            normalized.push(row.iter().map(|x| x / sum).collect::<Vec<_>>());
        }
        let ratios = if normalized.len() == 1 {
            normalized[0].repeat(m)
        } else {
            normalized.concat()
        };
        Ok(Self { m, g, ratios })
    }

    pub fn num_courses(&self) -> usize {
        self.m
    }

    pub fn num_groups(&self) -> usize {
        self.g
    }

    #[inline]
    pub fn ratio(&self, course: usize, group: usize) -> f64 {
        self.ratios[course * self.g + group]
    }

    pub fn row(&self, course: usize) -> &[f64] {
        &self.ratios[course * self.g..(course + 1) * self.g]
    }
}

/// Replace `course_out` by `course_in` in one student's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub student: usize,
    pub course_out: usize,
    pub course_in: usize,
}

impl Move {
    pub fn new(student: usize, course_out: usize, course_in: usize) -> Self {
        Self {
            student,
            course_out,
            course_in,
        }
    }

    pub fn reversed(self) -> Self {
        Self::new(self.student, self.course_in, self.course_out)
    }
}

/// Per-student top-k course sets with cached per-course and per-group counts.
///
/// Each list is kept sorted by course index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    k: usize,
    m: usize,
    g: usize,
    lists: Vec<Vec<usize>>,
    member: Vec<bool>,
    course_counts: Vec<u32>,
    group_course_counts: Vec<u32>,
}

impl Solution {
    /// Builds a solution from explicit lists and derives all counters.
    pub fn from_lists(lists: Vec<Vec<usize>>, k: usize, m: usize, partition: &GroupPartition) -> Result<Self> {
        if k == 0 || k > m {
            return Err(Error::InvalidK { k, m });
        }
        if lists.len() != partition.num_students() {
            return Err(Error::Dimension(format!(
                "{} lists for {} students",
                lists.len(),
                partition.num_students()
            )));
        }
        let g = partition.num_groups();
        let n = lists.len();
        let mut sol = Self {
            k,
            m,
            g,
            lists: Vec::with_capacity(n),
            member: vec![false; n * m],
            course_counts: vec![0; m],
            group_course_counts: vec![0; m * g],
        };
        for (i, mut list) in lists.into_iter().enumerate() {
            if list.len() != k {
                return Err(Error::Dimension(format!(
                    "student {i} has {} courses, expected {k}",
                    list.len()
                )));
            }
            list.sort_unstable();
            for w in list.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::Dimension(format!(
                        "student {i} lists course {} twice",
                        w[0]
                    )));
                }
            }
            let p = partition.group_of(i);
            for &j in &list {
                if j >= m {
                    return Err(Error::OutOfBounds(format!("course {j} for student {i}")));
                }
                sol.member[i * m + j] = true;
                sol.course_counts[j] += 1;
                sol.group_course_counts[j * g + p] += 1;
            }
            sol.lists.push(list);
        }
        Ok(sol)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_students(&self) -> usize {
        self.lists.len()
    }

    pub fn num_courses(&self) -> usize {
        self.m
    }

    pub fn num_groups(&self) -> usize {
        self.g
    }

    pub fn list(&self, student: usize) -> &[usize] {
        &self.lists[student]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    #[inline]
    pub fn contains(&self, student: usize, course: usize) -> bool {
        self.member[student * self.m + course]
    }

    #[inline]
    pub fn course_count(&self, course: usize) -> u32 {
        self.course_counts[course]
    }

    pub fn course_counts(&self) -> &[u32] {
        &self.course_counts
    }

    #[inline]
    pub fn group_course_count(&self, course: usize, group: usize) -> u32 {
        self.group_course_counts[course * self.g + group]
    }

    /// Checks that `mv` can be applied.
    pub fn validate_move(&self, mv: Move) -> Result<()> {
        let bad = |reason: String| Error::InvalidMove {
            student: mv.student,
            reason,
        };
        if mv.student >= self.lists.len() {
            return Err(bad("student out of range".into()));
        }
        if mv.course_out >= self.m || mv.course_in >= self.m {
            return Err(bad("course out of range".into()));
        }
        if mv.course_out == mv.course_in {
            return Err(bad("course_out equals course_in".into()));
        }
        if !self.contains(mv.student, mv.course_out) {
            return Err(bad(format!("course {} is not in the list", mv.course_out)));
        }
        if self.contains(mv.student, mv.course_in) {
            return Err(bad(format!("course {} is already in the list", mv.course_in)));
        }
        Ok(())
    }

    /// Swaps one course in one student's list and shifts the four affected
    /// counter cells.
    pub fn apply_move(&mut self, mv: Move, partition: &GroupPartition) -> Result<()> {
        self.validate_move(mv)?;
        let Move {
            student: i,
            course_out: out,
            course_in: inn,
        } = mv;
        let p = partition.group_of(i);
        let list = &mut self.lists[i];
        let pos = list.binary_search(&out).expect("membership bitmap out of sync");
        list.remove(pos);
        let pos = list.binary_search(&inn).unwrap_err();
        list.insert(pos, inn);
        self.member[i * self.m + out] = false;
        self.member[i * self.m + inn] = true;
        self.course_counts[out] -= 1;
        self.course_counts[inn] += 1;
        self.group_course_counts[out * self.g + p] -= 1;
        self.group_course_counts[inn * self.g + p] += 1;
        Ok(())
    }

    /// Recomputes every counter from the lists and compares with the cache.
    pub fn counters_consistent(&self, partition: &GroupPartition) -> bool {
        let mut cc = vec![0u32; self.m];
        let mut gcc = vec![0u32; self.m * self.g];
        for (i, list) in self.lists.iter().enumerate() {
            let p = partition.group_of(i);
            for &j in list {
                cc[j] += 1;
                gcc[j * self.g + p] += 1;
            }
        }
        let total: u64 = cc.iter().map(|&c| u64::from(c)).sum();
        cc == self.course_counts
            && gcc == self.group_course_counts
            && total == (self.lists.len() * self.k) as u64
    }
}

/// The fairness-unaware baseline: each student's `k` highest-scored courses.
/// Equal scores go to the lower course index.
pub fn hsc_solution(dataset: &Dataset, partition: &GroupPartition, k: usize) -> Result<Solution> {
    let m = dataset.num_courses();
    if k == 0 || k > m {
        return Err(Error::InvalidK { k, m });
    }
    if partition.num_students() != dataset.num_students() {
        return Err(Error::Dimension(format!(
            "partition covers {} students, dataset has {}",
            partition.num_students(),
            dataset.num_students()
        )));
    }
    let mut order: Vec<usize> = Vec::with_capacity(m);
    let lists = (0..dataset.num_students())
        .map(|i| {
            let row = dataset.row(i);
            order.clear();
            order.extend(0..m);
            order.sort_by(|&a, &b| match row[b].total_cmp(&row[a]) {
                Ordering::Equal => a.cmp(&b),
                o => o,
            });
            order[..k].to_vec()
        })
        .collect();
    Solution::from_lists(lists, k, m, partition)
}

/// A validated problem instance: scores, partition and fair target with
/// matching dimensions.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dataset: Dataset,
    pub partition: GroupPartition,
    pub fair: FairDistribution,
}

impl Instance {
    pub fn new(dataset: Dataset, partition: GroupPartition, fair: FairDistribution) -> Result<Self> {
        if partition.num_students() != dataset.num_students() {
            return Err(Error::Dimension(format!(
                "partition covers {} students, dataset has {}",
                partition.num_students(),
                dataset.num_students()
            )));
        }
        if fair.num_courses() != dataset.num_courses() || fair.num_groups() != partition.num_groups() {
            return Err(Error::Dimension(format!(
                "fair distribution is {}x{}, expected {}x{}",
                fair.num_courses(),
                fair.num_groups(),
                dataset.num_courses(),
                partition.num_groups()
            )));
        }
        Ok(Self {
            dataset,
            partition,
            fair,
        })
    }

    /// Instance with the population-driven fair distribution.
    pub fn with_population_target(dataset: Dataset, partition: GroupPartition) -> Result<Self> {
        let fair = FairDistribution::population(&partition, dataset.num_courses())?;
        Self::new(dataset, partition, fair)
    }

    pub fn hsc(&self, k: usize) -> Result<Solution> {
        hsc_solution(&self.dataset, &self.partition, k)
    }

    /// Checks that `solution` was built for this instance.
    pub fn check_solution(&self, solution: &Solution) -> Result<()> {
        if solution.num_students() != self.dataset.num_students()
            || solution.num_courses() != self.dataset.num_courses()
            || solution.num_groups() != self.partition.num_groups()
        {
            return Err(Error::Dimension(format!(
                "solution shape {}x{} with {} groups does not match the instance",
                solution.num_students(),
                solution.num_courses(),
                solution.num_groups()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_groups(n: usize) -> GroupPartition {
        GroupPartition::new((0..n).map(|i| i % 2).collect(), 2).unwrap()
    }

    #[test]
    fn hsc_picks_top_k() {
        let ds = Dataset::from_rows(&[vec![0.9, 0.2, 0.7]]).unwrap();
        let part = GroupPartition::new(vec![0], 1).unwrap();
        let sol = hsc_solution(&ds, &part, 2).unwrap();
        assert_eq!(sol.list(0), &[0, 2]);
    }

    #[test]
    fn hsc_ties_prefer_lower_index() {
        let ds = Dataset::from_rows(&[vec![0.5, 0.5, 0.5]]).unwrap();
        let part = GroupPartition::new(vec![0], 1).unwrap();
        let sol = hsc_solution(&ds, &part, 2).unwrap();
        assert_eq!(sol.list(0), &[0, 1]);
    }

    #[test]
    fn hsc_rejects_bad_k() {
        let ds = Dataset::from_rows(&[vec![0.5, 0.5, 0.5]]).unwrap();
        let part = GroupPartition::new(vec![0], 1).unwrap();
        assert!(matches!(hsc_solution(&ds, &part, 0), Err(Error::InvalidK { .. })));
        assert!(matches!(hsc_solution(&ds, &part, 4), Err(Error::InvalidK { .. })));
    }

    #[test]
    fn population_distribution_matches_group_shares() {
        let part = GroupPartition::new(vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1], 2).unwrap();
        let fair = FairDistribution::population(&part, 4).unwrap();
        for j in 0..4 {
            assert_eq!(fair.row(j), &[0.7, 0.3]);
        }

        let part = two_groups(600);
        let fair = FairDistribution::population(&part, 60).unwrap();
        assert!((0..60).all(|j| fair.row(j) == [0.5, 0.5]));

        let part = GroupPartition::new(vec![0; 5], 1).unwrap();
        let fair = FairDistribution::population(&part, 3).unwrap();
        assert!((0..3).all(|j| fair.row(j) == [1.0]));
    }

    #[test]
    fn fair_rows_broadcast_and_renormalize() {
        let fair = FairDistribution::from_rows(&[vec![0.6, 0.4]], 3, 2).unwrap();
        assert!((0..3).all(|j| fair.row(j) == [0.6, 0.4]));

        let fair = FairDistribution::from_rows(&[vec![0.5000005, 0.5]], 1, 2).unwrap();
        let sum: f64 = fair.row(0).iter().sum();
        assert!((sum - 1.0).abs() <= ROW_SUM_INVARIANT);

        let err = FairDistribution::from_rows(&[vec![0.5, 0.4]], 1, 2).unwrap_err();
        assert!(err.to_string().contains("row sum"));

        assert!(matches!(
            FairDistribution::from_rows(&[vec![1.2, -0.2]], 1, 2),
            Err(Error::NegativeRatio { .. })
        ));
        assert!(matches!(
            FairDistribution::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], 3, 2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn partition_from_labels_uses_first_appearance() {
        let part = GroupPartition::from_labels(&["B", "A", "B", "C"]).unwrap();
        assert_eq!(part.assignments(), &[0, 1, 0, 2]);
        assert_eq!(part.labels(), &["B", "A", "C"]);
        assert_eq!(part.sizes(), &[2, 1, 1]);
    }

    #[test]
    fn empty_group_rejected() {
        assert!(matches!(
            GroupPartition::new(vec![0, 0], 2),
            Err(Error::EmptyGroup(_))
        ));
    }

    #[test]
    fn apply_move_shifts_four_cells() {
        let part = two_groups(2);
        let mut sol = Solution::from_lists(vec![vec![0, 1], vec![0, 3]], 2, 4, &part).unwrap();
        let before = sol.clone();
        sol.apply_move(Move::new(0, 1, 2), &part).unwrap();
        assert_eq!(sol.list(0), &[0, 2]);
        assert_eq!(sol.course_count(1), before.course_count(1) - 1);
        assert_eq!(sol.course_count(2), before.course_count(2) + 1);
        assert_eq!(sol.group_course_count(1, 0), 0);
        assert_eq!(sol.group_course_count(2, 0), 1);
        assert_eq!(sol.course_count(0), 2);
        assert!(sol.counters_consistent(&part));

        sol.apply_move(Move::new(0, 2, 1), &part).unwrap();
        assert_eq!(sol, before);
    }

    #[test]
    fn apply_move_rejects_invalid() {
        let part = two_groups(2);
        let mut sol = Solution::from_lists(vec![vec![0, 1], vec![0, 3]], 2, 4, &part).unwrap();
        assert!(matches!(
            sol.apply_move(Move::new(0, 2, 0), &part),
            Err(Error::InvalidMove { .. })
        ));
        assert!(matches!(
            sol.apply_move(Move::new(0, 0, 1), &part),
            Err(Error::InvalidMove { .. })
        ));
        assert!(matches!(
            sol.apply_move(Move::new(0, 1, 1), &part),
            Err(Error::InvalidMove { .. })
        ));
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(matches!(
            Dataset::from_rows(&[vec![1.0, f64::NAN]]),
            Err(Error::NonFiniteScore { row: 0, col: 1 })
        ));
    }
}
