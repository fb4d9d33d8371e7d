use crate::error::{Error, Result};
use crate::model::{Instance, Move, Solution};
use crate::objectives::ObjectiveConfig;

use super::state::{SearchState, StepCost};
use super::{check_initial, finish, Method, SearchConfig, SearchOutcome};

/// Decides which candidate moves may be taken and observes applied moves.
pub(crate) trait MoveFilter {
    fn admissible(&self, mv: Move, value: f64) -> bool;

    /// Whether `mv` is forbidden absent aspiration.
    fn is_tabu(&self, _mv: Move) -> bool {
        false
    }

    fn on_apply(&mut self, _mv: Move, _value_after: f64) {}
}

pub(crate) struct Unrestricted;

impl MoveFilter for Unrestricted {
    fn admissible(&self, _mv: Move, _value: f64) -> bool {
        true
    }
}

fn improves(state: &SearchState<'_>, value: f64, epsilon: f64) -> bool {
    value < state.value() - epsilon
}

/// Steepest descent over the full move set until no move improves `V`.
pub(crate) fn descend_full(state: &mut SearchState<'_>, epsilon: f64, filter: &mut dyn MoveFilter) -> Result<()> {
    loop {
        let (best, _) = state.best_move_none(&|mv, v| filter.admissible(mv, v));
        match best {
            Some((mv, v)) if improves(state, v, epsilon) => {
                let aspiration = filter.is_tabu(mv);
                state.apply(mv, aspiration)?;
                filter.on_apply(mv, state.value());
            }
            _ => return Ok(()),
        }
    }
}

/// Target-driven descent: repeatedly search the neighborhood of the most
/// unbalanced (group, course) pair, moving on to the next target whenever a
/// neighborhood holds no improving move. Stops once every group is exhausted.
pub(crate) fn descend_targeted(
    state: &mut SearchState<'_>,
    epsilon: f64,
    filter: &mut dyn MoveFilter,
    steps: Option<&mut Vec<StepCost>>,
) -> Result<()> {
    let mut steps = steps;
    let g = state.instance().partition.num_groups() as u64;
    let m = state.instance().dataset.num_courses() as u64;
    state.clear_visited();
    loop {
        let group = match state.select_target_group() {
            Ok(p) => p,
            Err(Error::GroupsExhausted) => return Ok(()),
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
        let holders = u64::from(state.solution().group_course_count(course, group));
        let (best, evaluated) = state.best_move_gc(group, course, &|mv, v| filter.admissible(mv, v));
        if let Some(log) = steps.as_deref_mut() {
            log.push(StepCost {
                group,
                course,
                scanned: g + m,
                evaluated,
                holders,
            });
        }
        match best {
            Some((mv, v)) if improves(state, v, epsilon) => {
                let aspiration = filter.is_tabu(mv);
                state.apply(mv, aspiration)?;
                filter.on_apply(mv, state.value());
            }
            _ => state.visit_course(course),
        }
    }
}

/// Greedy hill climbing with the `None` (full) or `Gc` (targeted)
/// neighborhood. The result is a local minimum of `V` under that
/// neighborhood and never worse than `initial`.
pub fn ghc_refine(instance: &Instance, initial: Solution, config: &SearchConfig) -> Result<SearchOutcome> {
    check_initial(instance, &initial, config)?;
    if !matches!(config.method, Method::None | Method::Gc) {
        return Err(Error::InvalidParameter(format!(
            "ghc_refine runs none or gc, not {}",
            config.method
        )));
    }
    let objective = ObjectiveConfig::for_instance(instance, config.k, config.alpha, config.norm)?;
    let mut state = SearchState::new(instance, initial, objective)?;
    let mut steps = Vec::new();
    match config.method {
        Method::None => descend_full(&mut state, config.improvement_epsilon, &mut Unrestricted)?,
        _ => descend_targeted(
            &mut state,
            config.improvement_epsilon,
            &mut Unrestricted,
            config.record_steps.then_some(&mut steps),
        )?,
    }
    finish(state, steps)
}
