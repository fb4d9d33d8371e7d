use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Instance, Move, Solution};
use crate::objectives::{self, ObjectiveConfig};

use super::ghc::{descend_targeted, MoveFilter};
use super::state::SearchState;
use super::{check_initial, Method, SearchConfig, SearchOutcome};

/// Fixed-capacity FIFO of `(student, course)` pairs whose removal is
/// forbidden.
#[derive(Debug, Clone, Default)]
pub struct TabuList {
    capacity: usize,
    queue: VecDeque<(usize, usize)>,
    counts: HashMap<(usize, usize), u32>,
}

impl TabuList {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            queue: VecDeque::with_capacity(capacity),
            counts: HashMap::with_capacity(capacity),
        }
    }

    /// Records that `course` was just inserted into `student`'s list,
    /// evicting the oldest entry when full.
    pub fn push(&mut self, student: usize, course: usize) {
        if self.capacity == 0 {
            return;
        }
        if self.queue.len() == self.capacity {
            if let Some(old) = self.queue.pop_front() {
                if let Some(c) = self.counts.get_mut(&old) {
                    *c -= 1;
                    if *c == 0 {
                        self.counts.remove(&old);
                    }
                }
            }
        }
        self.queue.push_back((student, course));
        *self.counts.entry((student, course)).or_insert(0) += 1;
    }

    pub fn contains(&self, student: usize, course: usize) -> bool {
        self.counts.contains_key(&(student, course))
    }

    /// A move is tabu when it takes back a recently inserted course.
    pub fn forbids(&self, mv: Move) -> bool {
        self.contains(mv.student, mv.course_out)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.queue.iter()
    }
}

/// Tabu list plus the best `V` seen so far, for the aspiration test.
struct TabuMemory {
    list: TabuList,
    best_value: f64,
    epsilon: f64,
}

impl MoveFilter for TabuMemory {
    fn admissible(&self, mv: Move, value: f64) -> bool {
        !self.list.forbids(mv) || value < self.best_value - self.epsilon
    }

    fn is_tabu(&self, mv: Move) -> bool {
        self.list.forbids(mv)
    }

    fn on_apply(&mut self, mv: Move, value_after: f64) {
        self.list.push(mv.student, mv.course_in);
        if value_after < self.best_value {
            self.best_value = value_after;
        }
    }
}

/// Least-degrading admissible move, taken from the first target
/// neighborhood (in GHC(Gc) sweep order) that has one.
fn escape_move(state: &mut SearchState<'_>, memory: &TabuMemory) -> Result<Option<(Move, f64)>> {
    state.clear_visited();
    loop {
        let group = match state.select_target_group() {
            Ok(p) => p,
            Err(Error::GroupsExhausted) => return Ok(None),
            Err(e) => return Err(e),
        };
        let course = match state.select_target_course(group) {
            Ok(j) => j,
            Err(Error::CoursesExhausted) => {
                state.visit_group(group);
                continue;
            }
            Err(e) => return Err(e),
        };
        let (best, _) = state.best_move_gc(group, course, &|mv, v| memory.admissible(mv, v));
        if best.is_some() {
            return Ok(best);
        }
        state.visit_course(course);
    }
}

/// GHC(Gc) that keeps going past local minima: at each one it applies the
/// least-degrading admissible move, until `max_negative_moves` escapes have
/// been spent. Returns the best solution seen.
pub fn ghc_tabu(instance: &Instance, initial: Solution, config: &SearchConfig) -> Result<SearchOutcome> {
    check_initial(instance, &initial, config)?;
    if config.method != Method::Tabu {
        return Err(Error::InvalidParameter(format!("ghc_tabu called with method {}", config.method)));
    }
    let objective = ObjectiveConfig::for_instance(instance, config.k, config.alpha, config.norm)?;
    let mut state = SearchState::new(instance, initial, objective.clone())?;
    let mut memory = TabuMemory {
        list: TabuList::new(config.tabu_capacity),
        best_value: state.value(),
        epsilon: config.improvement_epsilon,
    };
    let mut best_solution = state.solution().clone();
    let mut best_value = state.value();
    let mut steps = Vec::new();
    let mut escaped_minima = Vec::new();
    let mut negative_used = 0usize;

    loop {
        descend_targeted(
            &mut state,
            config.improvement_epsilon,
            &mut memory,
            config.record_steps.then_some(&mut steps),
        )?;
        if state.value() < best_value {
            best_value = state.value();
            best_solution = state.solution().clone();
        }
        if negative_used >= config.max_negative_moves {
            break;
        }
        let Some((mv, _)) = escape_move(&mut state, &memory)? else {
            break;
        };
        escaped_minima.push(state.value());
        let aspiration = memory.is_tabu(mv);
        state.apply(mv, aspiration)?;
        memory.on_apply(mv, state.value());
        negative_used += 1;
    }

    let (vectors, value) = objectives::evaluate(instance, &best_solution, &objective)?;
    let (_, stats, trace) = state.into_parts();
    Ok(SearchOutcome {
        solution: best_solution,
        vectors,
        value,
        stats,
        trace,
        inner_runs: Vec::new(),
        escaped_minima,
        steps,
    })
}
