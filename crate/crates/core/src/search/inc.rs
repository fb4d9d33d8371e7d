use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Solution};
use crate::objectives::{aggregate_norm, evaluate, ObjectiveConfig};

use super::ghc::{descend_targeted, Unrestricted};
use super::state::SearchState;
use super::{check_initial, finish, Method, SearchConfig, SearchOutcome, ZERO_OPPORTUNITY};

const GRID_TOLERANCE: f64 = 1e-9;

/// One GHC(Gc) pass inside GHC-Inc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerRun {
    pub alpha: f64,
    /// Skipped because the opportunity objective had already reached zero.
    pub skipped: bool,
    pub moves_applied: u64,
    pub opportunity: f64,
    pub quality: f64,
    /// Trace index of the first move applied by this run.
    pub first_trace_index: usize,
}

/// Weights `alpha0, alpha0 + step, ...` up to `alpha`. Grid points within
/// 1e-9 of `alpha` snap to it; if the grid misses `alpha` a final step at
/// exactly `alpha` is appended.
pub fn alpha_schedule(alpha0: f64, step: f64, alpha: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha step must be positive, got {step}")));
    }
    if alpha0 > alpha {
        return Err(Error::InvalidParameter(format!(
            "alpha0 ({alpha0}) must not exceed alpha ({alpha})"
        )));
    }
    let mut grid = Vec::new();
    for i in 0u32.. {
        let a = alpha0 + f64::from(i) * step;
        if a > alpha + GRID_TOLERANCE {
            break;
        }
        grid.push(if (a - alpha).abs() <= GRID_TOLERANCE { alpha } else { a });
    }
    if grid.last().is_none_or(|&a| a < alpha) {
        grid.push(alpha);
    }
    Ok(grid)
}

/// Incremental GHC: GHC(Gc) at each weight of [`alpha_schedule`], each run
/// continuing from the previous run's solution. Once the opportunity
/// objective hits zero the remaining weights are skipped.
pub fn ghc_inc(instance: &Instance, initial: Solution, config: &SearchConfig) -> Result<SearchOutcome> {
    check_initial(instance, &initial, config)?;
    if config.method != Method::Inc {
        return Err(Error::InvalidParameter(format!("ghc_inc called with method {}", config.method)));
    }
    let schedule = alpha_schedule(config.alpha0, config.alpha_step, config.alpha)?;
    let objective = ObjectiveConfig::for_instance(instance, config.k, schedule[0], config.norm)?;
    let mut state = SearchState::new(instance, initial, objective)?;
    let mut steps = Vec::new();
    let mut runs = Vec::with_capacity(schedule.len());
    let mut done = false;

    for &alpha in &schedule {
        state.set_alpha(alpha)?;
        let before = state.stats().moves_applied;
        let first_trace_index = state.trace().len();
        if !done {
            descend_targeted(
                &mut state,
                config.improvement_epsilon,
                &mut Unrestricted,
                config.record_steps.then_some(&mut steps),
            )?;
        }
        let (vectors, _) = evaluate(instance, state.solution(), state.objective())?;
        let opportunity = aggregate_norm(&vectors.o, config.norm)?;
        let quality = aggregate_norm(&vectors.q, config.norm)?;
        runs.push(InnerRun {
            alpha,
            skipped: done,
            moves_applied: state.stats().moves_applied - before,
            opportunity,
            quality,
            first_trace_index,
        });
        if opportunity <= ZERO_OPPORTUNITY {
            done = true;
        }
    }
    state.set_alpha(config.alpha)?;
    let mut outcome = finish(state, steps)?;
    outcome.inner_runs = runs;
    Ok(outcome)
}
