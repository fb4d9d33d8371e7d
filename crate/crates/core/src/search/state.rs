use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Move, Solution};
use crate::objectives::{signed_imbalance, ObjectiveConfig, ObjectiveTracker, ObjectiveVectors};

/// Counters kept across a search run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub moves_evaluated: u64,
    pub moves_applied: u64,
    pub positive_moves: u64,
    pub negative_moves: u64,
}

/// One applied move, as written to the trace CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub step: u64,
    pub student: usize,
    pub course_out: usize,
    pub course_in: usize,
    pub v_before: f64,
    pub v_after: f64,
    pub positive: bool,
    /// The move was on the tabu list and admitted by aspiration.
    pub aspiration: bool,
    pub alpha: f64,
}

impl MoveRecord {
    pub fn as_move(&self) -> Move {
        Move::new(self.student, self.course_out, self.course_in)
    }
}

/// Work done by one target-neighborhood step of GHC(Gc).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCost {
    pub group: usize,
    pub course: usize,
    /// Groups plus courses inspected while choosing the target.
    pub scanned: u64,
    /// Candidate moves priced.
    pub evaluated: u64,
    /// Students of the target group holding the target course.
    pub holders: u64,
}

/// A solution under refinement, with objective caches and the visited sets
/// of the target-driven sweep.
#[derive(Debug, Clone)]
pub struct SearchState<'a> {
    instance: &'a Instance,
    solution: Solution,
    objective: ObjectiveConfig,
    tracker: ObjectiveTracker,
    visited_courses: Vec<bool>,
    visited_course_count: usize,
    visited_groups: Vec<bool>,
    visited_group_count: usize,
    stats: SearchStats,
    trace: Vec<MoveRecord>,
}

impl<'a> SearchState<'a> {
    pub fn new(instance: &'a Instance, solution: Solution, objective: ObjectiveConfig) -> Result<Self> {
        let tracker = ObjectiveTracker::new(instance, &solution, &objective)?;
        let m = instance.dataset.num_courses();
        let g = instance.partition.num_groups();
        Ok(Self {
            instance,
            solution,
            objective,
            tracker,
            visited_courses: vec![false; m],
            visited_course_count: 0,
            visited_groups: vec![false; g],
            visited_group_count: 0,
            stats: SearchStats::default(),
            trace: Vec::new(),
        })
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn into_parts(self) -> (Solution, SearchStats, Vec<MoveRecord>) {
        (self.solution, self.stats, self.trace)
    }

    pub fn objective(&self) -> &ObjectiveConfig {
        &self.objective
    }

    /// Current combined objective `V`.
    pub fn value(&self) -> f64 {
        self.tracker.value()
    }

    pub fn vectors(&self) -> &ObjectiveVectors {
        self.tracker.vectors()
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    pub fn trace(&self) -> &[MoveRecord] {
        &self.trace
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        self.objective.set_alpha(alpha)?;
        self.tracker.reweight(&self.objective);
        Ok(())
    }

    /// `V` after applying `mv`, priced from the caches. Does not count as an
    /// evaluation and does not modify the state.
    pub fn delta_objective(&self, mv: Move) -> Result<f64> {
        self.solution.validate_move(mv)?;
        Ok(self.price(mv))
    }

    #[inline]
    pub(crate) fn price(&self, mv: Move) -> f64 {
        self.tracker
            .value_after(self.instance, &self.solution, &self.objective, mv)
    }

    /// Applies `mv`, logs it and clears both visited sets.
    pub fn apply(&mut self, mv: Move, aspiration: bool) -> Result<()> {
        let before = self.value();
        self.solution.apply_move(mv, &self.instance.partition)?;
        self.tracker
            .commit(self.instance, &self.solution, &self.objective, mv);
        let after = self.value();
        let positive = after < before;
        self.stats.moves_applied += 1;
        if positive {
            self.stats.positive_moves += 1;
        } else {
            self.stats.negative_moves += 1;
        }
        self.trace.push(MoveRecord {
            step: self.stats.moves_applied,
            student: mv.student,
            course_out: mv.course_out,
            course_in: mv.course_in,
            v_before: before,
            v_after: after,
            positive,
            aspiration,
            alpha: self.objective.alpha(),
        });
        self.clear_visited();
        Ok(())
    }

    pub fn clear_visited(&mut self) {
        self.visited_courses.fill(false);
        self.visited_course_count = 0;
        self.visited_groups.fill(false);
        self.visited_group_count = 0;
    }

    pub fn is_course_visited(&self, course: usize) -> bool {
        self.visited_courses[course]
    }

    pub fn is_group_visited(&self, group: usize) -> bool {
        self.visited_groups[group]
    }

    pub fn visit_course(&mut self, course: usize) {
        if !std::mem::replace(&mut self.visited_courses[course], true) {
            self.visited_course_count += 1;
        }
    }

    /// Marks `group` as exhausted and resets the course set for the next
    /// target group.
    pub fn visit_group(&mut self, group: usize) {
        if !std::mem::replace(&mut self.visited_groups[group], true) {
            self.visited_group_count += 1;
        }
        self.visited_courses.fill(false);
        self.visited_course_count = 0;
    }

    /// Unvisited group with the largest `o_p`; ties go to the lower index.
    pub fn select_target_group(&self) -> Result<usize> {
        let o = &self.vectors().o;
        let mut best: Option<usize> = None;
        for p in (0..o.len()).filter(|&p| !self.visited_groups[p]) {
            if best.is_none_or(|b| o[p] > o[b]) {
                best = Some(p);
            }
        }
        best.ok_or(Error::GroupsExhausted)
    }

    /// Unvisited course most over-recommended to `group` (largest signed
    /// imbalance); ties go to the lower index.
    pub fn select_target_course(&self, group: usize) -> Result<usize> {
        if group >= self.instance.partition.num_groups() {
            return Err(Error::OutOfBounds(format!("group {group}")));
        }
        let fair = &self.instance.fair;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..self.solution.num_courses()).filter(|&j| !self.visited_courses[j]) {
            let imbalance = signed_imbalance(&self.solution, fair, group, j);
            if best.is_none_or(|(_, b)| imbalance > b) {
                best = Some((j, imbalance));
            }
        }
        best.map(|(j, _)| j).ok_or(Error::CoursesExhausted)
    }

    /// Every single-course replacement for every student: `n * k * (m - k)`
    /// moves in ascending (student, course_out, course_in) order.
    pub fn enumerate_moves_none(&self) -> impl Iterator<Item = Move> + '_ {
        let sol = &self.solution;
        let m = sol.num_courses();
        (0..sol.num_students()).flat_map(move |i| {
            sol.list(i).iter().flat_map(move |&out| {
                (0..m)
                    .filter(move |&inn| !sol.contains(i, inn))
                    .map(move |inn| Move::new(i, out, inn))
            })
        })
    }

    /// Moves that take `course` away from a student of `group`:
    /// `n_{course,group} * (m - k)` of them.
    pub fn enumerate_moves_gc(&self, group: usize, course: usize) -> impl Iterator<Item = Move> + '_ {
        let sol = &self.solution;
        let m = sol.num_courses();
        self.instance
            .partition
            .members(group)
            .iter()
            .copied()
            .filter(move |&i| sol.contains(i, course))
            .flat_map(move |i| {
                (0..m)
                    .filter(move |&inn| !sol.contains(i, inn))
                    .map(move |inn| Move::new(i, course, inn))
            })
    }

    /// Lowest-`V` admissible move among `moves`; the first one wins ties.
    /// Returns the winner and the number of candidates priced.
    fn scan<I>(&self, moves: I, admissible: &dyn Fn(Move, f64) -> bool) -> (Option<(Move, f64)>, u64)
    where
        I: IntoIterator<Item = Move>,
    {
        let mut best: Option<(Move, f64)> = None;
        let mut evaluated = 0u64;
        for mv in moves {
            evaluated += 1;
            let v = self.price(mv);
            if best.is_none_or(|(_, b)| v < b) && admissible(mv, v) {
                best = Some((mv, v));
            }
        }
        (best, evaluated)
    }

    /// Best admissible move over the whole move set.
    pub(crate) fn best_move_none(&mut self, admissible: &dyn Fn(Move, f64) -> bool) -> (Option<(Move, f64)>, u64) {
        let result = self.scan(self.enumerate_moves_none(), admissible);
        self.stats.moves_evaluated += result.1;
        result
    }

    /// Best admissible move in the (group, course) neighborhood.
    pub(crate) fn best_move_gc(
        &mut self,
        group: usize,
        course: usize,
        admissible: &dyn Fn(Move, f64) -> bool,
    ) -> (Option<(Move, f64)>, u64) {
        let result = self.scan(self.enumerate_moves_gc(group, course), admissible);
        self.stats.moves_evaluated += result.1;
        result
    }

    /// Full recomputation of `V` from the solution, bypassing the caches.
    pub fn recompute_value(&self) -> Result<f64> {
        crate::objectives::evaluate(self.instance, &self.solution, &self.objective).map(|(_, v)| v)
    }
}
