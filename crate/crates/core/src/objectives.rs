//! Opportunity and quality objectives and their weighted combination.
//!
//! Per group `p`, the opportunity value is the fraction of the group's `n_p * k`
//! recommendations that push some course away from its fair share:
//!
//! ```text
//! o_p = 1/(n_p k) * sum_j n_j * | n_jp / n_j - x_jp |  =  1/(n_p k) * sum_j | n_jp - x_jp * n_j |
//! ```
//!
//! and the quality value is the fractional loss of summed scores relative to
//! the highest-scored (HSC) lists. Both vectors are aggregated with an l-norm
//! and mixed as `V = alpha * O + (1 - alpha) * Q`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hsc_solution, Dataset, FairDistribution, GroupPartition, Instance, Move, Solution};

/// Norm used to aggregate per-group objective vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    #[default]
    LInf,
}

impl NormKind {
    /// Aggregates an iterator of entries without allocating.
    #[inline]
    fn fold(self, values: impl Iterator<Item = f64>) -> f64 {
        match self {
            NormKind::LInf => values.fold(0.0, |acc, v| acc.max(v.abs())),
            NormKind::L2 => values.map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(NormKind::L2),
            "linf" | "l-inf" | "inf" => Ok(NormKind::LInf),
            other => Err(Error::InvalidParameter(format!("unknown norm {other:?} (expected l2 or linf)"))),
        }
    }
}

/// Per-group opportunity (`o`) and quality-loss (`q`) fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVectors {
    pub o: Vec<f64>,
    pub q: Vec<f64>,
}

/// Weight, norm and the per-group HSC quality used as the quality-loss
/// denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConfig {
    alpha: f64,
    norm: NormKind,
    hsc_group_quality: Vec<f64>,
}

impl ObjectiveConfig {
    pub fn new(alpha: f64, norm: NormKind, hsc_group_quality: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        for (p, &h) in hsc_group_quality.iter().enumerate() {
            if !h.is_finite() || h < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "HSC quality of group {p} is {h}; scores must give a non-negative group total"
                )));
            }
            if h == 0.0 {
                log::warn!("group {p} has zero HSC quality; its quality loss is reported as 0");
            }
        }
        Ok(Self {
            alpha,
            norm,
            hsc_group_quality,
        })
    }

    /// Computes the HSC denominators for `instance` with list length `k`.
    pub fn for_instance(instance: &Instance, k: usize, alpha: f64, norm: NormKind) -> Result<Self> {
        let hsc = hsc_solution(&instance.dataset, &instance.partition, k)?;
        Self::new(
            alpha,
            norm,
            group_quality(&instance.dataset, &instance.partition, &hsc)?,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(())
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    pub fn hsc_group_quality(&self) -> &[f64] {
        &self.hsc_group_quality
    }

    /// `V = alpha * |o| + (1 - alpha) * |q|`.
    pub fn combine(&self, o: &[f64], q: &[f64]) -> Result<f64> {
        combined_objective(o, q, self)
    }

    #[inline]
    fn mix(&self, big_o: f64, big_q: f64) -> f64 {
        self.alpha * big_o + (1.0 - self.alpha) * big_q
    }

    #[inline]
    fn loss_fraction(&self, group: usize, quality: f64) -> f64 {
        let h = self.hsc_group_quality[group];
        if h == 0.0 {
            0.0
        } else {
            (h - quality) / h
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must be in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Absolute contribution of one (course, group) cell to the opportunity sum.
#[inline]
fn cell_term(count: u32, group_count: u32, ratio: f64) -> f64 {
    (f64::from(group_count) - ratio * f64::from(count)).abs()
}

fn check_shapes(partition: &GroupPartition, fair: &FairDistribution, solution: &Solution) -> Result<()> {
    let (m, g) = (solution.num_courses(), partition.num_groups());
    if fair.num_courses() != m || fair.num_groups() != g || solution.num_groups() != g {
        return Err(Error::Dimension(format!(
            "fair distribution {}x{}, solution {} courses / {} groups, partition {} groups",
            fair.num_courses(),
            fair.num_groups(),
            m,
            solution.num_groups(),
            g
        )));
    }
    if solution.num_students() != partition.num_students() {
        return Err(Error::Dimension(format!(
            "solution has {} students, partition {}",
            solution.num_students(),
            partition.num_students()
        )));
    }
    Ok(())
}

/// Unnormalized opportunity sums `sum_j |n_jp - x_jp n_j|`, accumulated in
/// ascending course order.
fn opportunity_sums(fair: &FairDistribution, solution: &Solution) -> Vec<f64> {
    let g = fair.num_groups();
    let mut sums = vec![0.0; g];
    for j in 0..solution.num_courses() {
        let count = solution.course_count(j);
        for (p, sum) in sums.iter_mut().enumerate() {
            *sum += cell_term(count, solution.group_course_count(j, p), fair.ratio(j, p));
        }
    }
    sums
}

/// Per-group opportunity values `o_p`. A course nobody is recommended
/// contributes nothing.
pub fn opportunity_per_group(partition: &GroupPartition, fair: &FairDistribution, solution: &Solution) -> Result<Vec<f64>> {
    check_shapes(partition, fair, solution)?;
    let k = solution.k() as f64;
    Ok(opportunity_sums(fair, solution)
        .into_iter()
        .zip(partition.sizes())
        .map(|(s, &np)| s / (np as f64 * k))
        .collect())
}

/// Summed recommended scores per group, accumulated in ascending student
/// order.
pub fn group_quality(dataset: &Dataset, partition: &GroupPartition, solution: &Solution) -> Result<Vec<f64>> {
    if dataset.num_students() != solution.num_students() || dataset.num_courses() != solution.num_courses() {
        return Err(Error::Dimension("solution does not match dataset".into()));
    }
    if partition.num_students() != dataset.num_students() {
        return Err(Error::Dimension("partition does not match dataset".into()));
    }
    let mut totals = vec![0.0; partition.num_groups()];
    for (i, list) in solution.lists().iter().enumerate() {
        totals[partition.group_of(i)] += list.iter().map(|&j| dataset.score(i, j)).sum::<f64>();
    }
    Ok(totals)
}

/// Per-group fractional quality loss `q_p` against the HSC totals in `config`.
pub fn quality_per_group(
    dataset: &Dataset,
    partition: &GroupPartition,
    solution: &Solution,
    config: &ObjectiveConfig,
) -> Result<Vec<f64>> {
    if config.hsc_group_quality.len() != partition.num_groups() {
        return Err(Error::Dimension(format!(
            "objective config has {} groups, partition {}",
            config.hsc_group_quality.len(),
            partition.num_groups()
        )));
    }
    Ok(group_quality(dataset, partition, solution)?
        .into_iter()
        .enumerate()
        .map(|(p, s)| config.loss_fraction(p, s))
        .collect())
}

/// `LInf` is the largest magnitude; `L2` the Euclidean length.
pub fn aggregate_norm(v: &[f64], norm: NormKind) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(norm.fold(v.iter().copied()))
}

pub fn combined_objective(o: &[f64], q: &[f64], config: &ObjectiveConfig) -> Result<f64> {
    if o.len() != q.len() {
        return Err(Error::Dimension(format!("o has {} entries, q has {}", o.len(), q.len())));
    }
    Ok(config.mix(aggregate_norm(o, config.norm)?, aggregate_norm(q, config.norm)?))
}

/// Signed imbalance `n_j * (n_jp / n_j - x_jp)` of course `j` in group `p`.
/// Positive means the course is over-recommended to the group.
pub fn course_group_imbalance(solution: &Solution, fair: &FairDistribution, p: usize, j: usize) -> Result<f64> {
    if p >= fair.num_groups() || p >= solution.num_groups() {
        return Err(Error::OutOfBounds(format!("group {p}")));
    }
    if j >= fair.num_courses() || j >= solution.num_courses() {
        return Err(Error::OutOfBounds(format!("course {j}")));
    }
    Ok(signed_imbalance(solution, fair, p, j))
}

#[inline]
pub(crate) fn signed_imbalance(solution: &Solution, fair: &FairDistribution, p: usize, j: usize) -> f64 {
    f64::from(solution.group_course_count(j, p)) - fair.ratio(j, p) * f64::from(solution.course_count(j))
}

/// Full objective evaluation of a solution.
pub fn evaluate(instance: &Instance, solution: &Solution, config: &ObjectiveConfig) -> Result<(ObjectiveVectors, f64)> {
    instance.check_solution(solution)?;
    let o = opportunity_per_group(&instance.partition, &instance.fair, solution)?;
    let q = quality_per_group(&instance.dataset, &instance.partition, solution, config)?;
    let v = combined_objective(&o, &q, config)?;
    Ok((ObjectiveVectors { o, q }, v))
}

/// Cached objective state that prices a candidate move in `O(g)` instead of
/// rescanning every course and student.
#[derive(Debug, Clone)]
pub struct ObjectiveTracker {
    opp_sums: Vec<f64>,
    opp_scale: Vec<f64>,
    group_scores: Vec<f64>,
    vectors: ObjectiveVectors,
    value: f64,
}

impl ObjectiveTracker {
    pub fn new(instance: &Instance, solution: &Solution, config: &ObjectiveConfig) -> Result<Self> {
        instance.check_solution(solution)?;
        if config.hsc_group_quality.len() != instance.partition.num_groups() {
            return Err(Error::Dimension("objective config group count mismatch".into()));
        }
        let k = solution.k() as f64;
        let opp_scale = instance
            .partition
            .sizes()
            .iter()
            .map(|&np| 1.0 / (np as f64 * k))
            .collect();
        let group_scores = group_quality(&instance.dataset, &instance.partition, solution)?;
        let mut tracker = Self {
            opp_sums: opportunity_sums(&instance.fair, solution),
            opp_scale,
            group_scores,
            vectors: ObjectiveVectors { o: Vec::new(), q: Vec::new() },
            value: 0.0,
        };
        tracker.refresh(config);
        Ok(tracker)
    }

    fn refresh(&mut self, config: &ObjectiveConfig) {
        self.vectors.o = self
            .opp_sums
            .iter()
            .zip(&self.opp_scale)
            .map(|(s, c)| s * c)
            .collect();
        self.vectors.q = self
            .group_scores
            .iter()
            .enumerate()
            .map(|(p, &s)| config.loss_fraction(p, s))
            .collect();
        let norm = config.norm;
        self.value = config.mix(
            norm.fold(self.vectors.o.iter().copied()),
            norm.fold(self.vectors.q.iter().copied()),
        );
    }

    /// Re-derives `V` after the weight changed.
    pub fn reweight(&mut self, config: &ObjectiveConfig) {
        self.refresh(config);
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn vectors(&self) -> &ObjectiveVectors {
        &self.vectors
    }

    /// `V` of the solution reached by applying `mv`. The move must be valid;
    /// the solution is not modified.
    #[inline]
    pub fn value_after(&self, instance: &Instance, solution: &Solution, config: &ObjectiveConfig, mv: Move) -> f64 {
        let fair = &instance.fair;
        let group = instance.partition.group_of(mv.student);
        let (out, inn) = (mv.course_out, mv.course_in);
        let (n_out, n_in) = (solution.course_count(out), solution.course_count(inn));

        let opp = (0..self.opp_sums.len()).map(|p| {
            let g_out = solution.group_course_count(out, p);
            let g_in = solution.group_course_count(inn, p);
            let (g_out_new, g_in_new) = if p == group { (g_out - 1, g_in + 1) } else { (g_out, g_in) };
            let delta = cell_term(n_out - 1, g_out_new, fair.ratio(out, p)) - cell_term(n_out, g_out, fair.ratio(out, p))
                + cell_term(n_in + 1, g_in_new, fair.ratio(inn, p))
                - cell_term(n_in, g_in, fair.ratio(inn, p));
            (self.opp_sums[p] + delta) * self.opp_scale[p]
        });
        let big_o = config.norm.fold(opp);

        let ds = &instance.dataset;
        let new_score = self.group_scores[group] - ds.score(mv.student, out) + ds.score(mv.student, inn);
        let q_group = config.loss_fraction(group, new_score);
        let big_q = config.norm.fold(
            self.vectors
                .q
                .iter()
                .enumerate()
                .map(|(p, &q)| if p == group { q_group } else { q }),
        );
        config.mix(big_o, big_q)
    }

    /// Updates the caches after `mv` has been applied to `solution`.
    pub fn commit(&mut self, instance: &Instance, solution: &Solution, config: &ObjectiveConfig, mv: Move) {
        let group = instance.partition.group_of(mv.student);
        let ds = &instance.dataset;
        self.group_scores[group] += ds.score(mv.student, mv.course_in) - ds.score(mv.student, mv.course_out);
        self.opp_sums = opportunity_sums(&instance.fair, solution);
        self.refresh(config);
    }
}
