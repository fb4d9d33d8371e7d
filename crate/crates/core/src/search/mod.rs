//! Greedy hill-climbing refinement of a top-k solution.
//!
//! Four variants share one engine:
//!
//! * `None` prices every single-course replacement and applies the best one.
//! * `Gc` only looks at moves that take the most over-recommended course away
//!   from students of the most unbalanced group, sweeping through the other
//!   (group, course) targets before giving up.
//! * `Inc` chains `Gc` runs while the opportunity weight grows from `alpha0`
//!   to `alpha`.
//! * `Tabu` continues `Gc` past local minima with least-degrading moves,
//!   guarded by a FIFO tabu list with an aspiration override.
//!
//! A move is applied only when it lowers `V` by more than
//! `improvement_epsilon`; every iteration order is ascending by index, so runs
//! are reproducible without a seed.

mod ghc;
mod inc;
mod state;
mod tabu;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ghc::ghc_refine;
pub use inc::{alpha_schedule, ghc_inc, InnerRun};
pub use state::{MoveRecord, SearchState, SearchStats, StepCost};
pub use tabu::{ghc_tabu, TabuList};

use crate::error::{Error, Result};
use crate::model::{Instance, Solution};
use crate::objectives::{NormKind, ObjectiveVectors};

/// Opportunity value at or below which GHC-Inc stops raising the weight.
pub const ZERO_OPPORTUNITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    None,
    Gc,
    Inc,
    Tabu,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::None, Method::Gc, Method::Inc, Method::Tabu];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Gc => "gc",
            Method::Inc => "inc",
            Method::Tabu => "tabu",
        }
    }

    /// Name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Method::None => "GHC(NoNe)",
            Method::Gc => "GHC(Gc)",
            Method::Inc => "GHC-Inc",
            Method::Tabu => "GHC-Tabu",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "ghc(none)" => Ok(Method::None),
            "gc" | "ghc(gc)" => Ok(Method::Gc),
            "inc" | "ghc-inc" => Ok(Method::Inc),
            "tabu" | "ghc-tabu" => Ok(Method::Tabu),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected none, gc, inc or tabu)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub method: Method,
    pub alpha: f64,
    pub norm: NormKind,
    pub k: usize,
    pub alpha0: f64,
    pub alpha_step: f64,
    pub tabu_capacity: usize,
    pub max_negative_moves: usize,
    pub improvement_epsilon: f64,
    /// Keep a per-step cost log for GHC(Gc) based methods.
    #[serde(default)]
    pub record_steps: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            method: Method::Tabu,
            alpha: 0.5,
            norm: NormKind::LInf,
            k: 5,
            alpha0: 0.1,
            alpha_step: 0.1,
            tabu_capacity: 50,
            max_negative_moves: 150,
            improvement_epsilon: 1e-12,
            record_steps: false,
        }
    }
}

impl SearchConfig {
    pub fn with_method(method: Method, alpha: f64) -> Self {
        Self {
            method,
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must be in [0, 1], got {}", self.alpha));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.improvement_epsilon >= 0.0) {
            return bad(format!(
                "improvement epsilon must be non-negative, got {}",
                self.improvement_epsilon
            ));
        }
        if self.method == Method::Inc {
            if !(self.alpha_step > 0.0) {
                return bad(format!("alpha step must be positive, got {}", self.alpha_step));
            }
            if !(0.0..=1.0).contains(&self.alpha0) {
                return bad(format!("alpha0 must be in [0, 1], got {}", self.alpha0));
            }
            if self.alpha0 > self.alpha {
                return bad(format!(
                    "alpha0 ({}) must not exceed alpha ({})",
                    self.alpha0, self.alpha
                ));
            }
        }
        Ok(())
    }
}

/// Result of one search run.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub solution: Solution,
    pub vectors: ObjectiveVectors,
    /// `V` of `solution` at the configured `alpha`.
    pub value: f64,
    pub stats: SearchStats,
    pub trace: Vec<MoveRecord>,
    /// GHC-Inc inner runs, in order.
    pub inner_runs: Vec<InnerRun>,
    /// `V` at each local minimum GHC-Tabu escaped from.
    pub escaped_minima: Vec<f64>,
    pub steps: Vec<StepCost>,
}

/// Runs the configured method from `initial`.
pub fn optimize(instance: &Instance, initial: Solution, config: &SearchConfig) -> Result<SearchOutcome> {
    match config.method {
        Method::None | Method::Gc => ghc_refine(instance, initial, config),
        Method::Inc => ghc_inc(instance, initial, config),
        Method::Tabu => ghc_tabu(instance, initial, config),
    }
}

/// Runs the configured method starting from the HSC solution.
pub fn optimize_from_hsc(instance: &Instance, config: &SearchConfig) -> Result<SearchOutcome> {
    optimize(instance, instance.hsc(config.k)?, config)
}

fn check_initial(instance: &Instance, initial: &Solution, config: &SearchConfig) -> Result<()> {
    config.validate()?;
    instance.check_solution(initial)?;
    if initial.k() != config.k {
        return Err(Error::Dimension(format!(
            "initial solution has k = {}, config says {}",
            initial.k(),
            config.k
        )));
    }
    Ok(())
}

/// Reported objectives are recomputed from scratch so that equal solutions
/// always report bit-equal values, whatever path reached them.
fn finish(state: SearchState<'_>, steps: Vec<StepCost>) -> Result<SearchOutcome> {
    let (vectors, value) = crate::objectives::evaluate(state.instance(), state.solution(), state.objective())?;
    let (solution, stats, trace) = state.into_parts();
    Ok(SearchOutcome {
        solution,
        vectors,
        value,
        stats,
        trace,
        inner_runs: Vec::new(),
        escaped_minima: Vec::new(),
        steps,
    })
}
