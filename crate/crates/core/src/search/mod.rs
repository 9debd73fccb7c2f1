//! The co-optimization loop: pick the latency bottleneck, try its best pruned
//! directive point, and escalate through online packing, offline re-packing,
//! look-ahead and look-back until a legal floorplan is found or the bottleneck is
//! excluded.

mod lookahead;
mod steps;

pub use lookahead::{compute_lookahead_n, nest_terms, LevelBound, DEFAULT_LOOKAHEAD};
pub use steps::{
    lockstep, look_ahead_window, look_back_window, prune, select_bottleneck, Bottleneck, Pruned,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorplan::{balanced_initial, min_cut_initial};
use crate::model::{design_latency, fits_within, Configuration};
use crate::packer::{offline_repack, online_pack, Move, PackState};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    #[default]
    Mincut,
    Balanced,
}

/// Boots a legal state on the baseline configuration.
pub fn boot(problem: &Problem, initial: Initial) -> Result<PackState> {
    let config = Configuration::baseline(&problem.instance.qor);
    let fp = match initial {
        Initial::Mincut => min_cut_initial(problem, &config)?.0,
        Initial::Balanced => balanced_initial(problem, &config)?,
    };
    PackState::new(problem, fp, config)
        .map_err(|e| Error::Infeasible(format!("booting floorplan: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Overrides the look-ahead step number derived from loop metadata.
    pub lookahead: Option<usize>,
    pub level_bound: LevelBound,
    /// Defaults to ten iterations per function.
    pub iteration_cap: Option<usize>,
    /// Keep every function on its booting slot: only in-place fits are accepted.
    pub frozen_floorplan: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            lookahead: None,
            level_bound: LevelBound::Min,
            iteration_cap: None,
            frozen_floorplan: false,
        }
    }
}

/// Escalation level at which an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Online,
    Offline,
    LookAhead,
    LookBack,
    /// No faster point exists below the next latency level.
    NoCandidate,
    /// Every stage failed.
    Exhausted,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Online => "online",
            Stage::Offline => "offline",
            Stage::LookAhead => "look_ahead",
            Stage::LookBack => "look_back",
            Stage::NoCandidate => "no_candidate",
            Stage::Exhausted => "exhausted",
        }
    }

    pub fn accepted(self) -> bool {
        matches!(
            self,
            Stage::Online | Stage::Offline | Stage::LookAhead | Stage::LookBack
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub stage: Stage,
    pub function: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Bottleneck functions that had a candidate point.
    pub batch: Vec<String>,
    /// Bottleneck functions excluded for lack of a faster point.
    pub dropped: Vec<String>,
    pub stage: Stage,
    /// Accepted point id per batch member; empty when the batch was excluded.
    pub accepted: Vec<String>,
    pub design_latency: u64,
    pub max_utilization: f64,
    pub max_sll_utilization: f64,
    pub moves: Vec<MoveRecord>,
}

#[derive(Debug, Clone)]
pub struct SearchState {
    pub pack: PackState,
    pub excluded: Vec<bool>,
    pub log: Vec<IterationRecord>,
    pub lookahead: usize,
    pub cap_reached: bool,
}

impl SearchState {
    pub fn new(problem: &Problem, pack: PackState, lookahead: usize) -> Self {
        SearchState {
            pack,
            excluded: vec![false; problem.num_functions()],
            log: Vec::new(),
            lookahead,
            cap_reached: false,
        }
    }

    pub fn design_latency(&self, problem: &Problem) -> u64 {
        design_latency(
            &problem.instance.design,
            &self.pack.config,
            &problem.instance.qor,
        )
        .expect("complete configuration")
    }
}

/// Points assigned to a batch and the floorplan moves that made room.
struct Fit {
    stage: Stage,
    moves: Vec<(Stage, Move)>,
}

struct Attempt<'a> {
    problem: &'a Problem,
    frozen: bool,
    /// Offline re-packing of the iteration's starting state, computed on demand.
    repacked: Option<(PackState, Vec<Move>)>,
}

impl Attempt<'_> {
    fn in_place(&self, state: &mut PackState, targets: &[(usize, usize)]) -> bool {
        let qor = &self.problem.instance.qor;
        let mut trial = state.floorplan.clone();
        for &(f, p) in targets {
            trial.swap_resources(f, state.config.resources(qor, f), qor.point(f, p).resources);
        }
        let device = &self.problem.instance.device;
        let ok = targets.iter().all(|&(f, _)| {
            let s = trial.slot_of(f);
            fits_within(
                trial.usage(s),
                device.capacity(s),
                self.problem.util_limit(),
            )
        });
        if ok {
            state.floorplan = trial;
            for &(f, p) in targets {
                state.config.set(f, p);
            }
        }
        ok
    }

    /// Online packing on the current state, then on its offline re-packing.
    fn try_targets(
        &mut self,
        state: &mut PackState,
        targets: &[(usize, usize)],
        stage: Stage,
    ) -> Result<Option<Fit>> {
        if self.frozen {
            return Ok(self.in_place(state, targets).then(|| Fit {
                stage,
                moves: Vec::new(),
            }));
        }
        let out = online_pack(self.problem, state, targets)?;
        if out.fit {
            return Ok(Some(Fit {
                stage,
                moves: out.moves.into_iter().map(|m| (stage, m)).collect(),
            }));
        }
        if self.repacked.is_none() {
            let mut alt = state.clone();
            let focus: Vec<usize> = targets.iter().map(|&(f, _)| f).collect();
            let moves = offline_repack(self.problem, &mut alt, &focus);
            self.repacked = Some((alt, moves));
        }
        let (alt, repack_moves) = self.repacked.as_mut().expect("just set");
        if repack_moves.is_empty() {
            return Ok(None);
        }
        let out = online_pack(self.problem, alt, targets)?;
        if !out.fit {
            return Ok(None);
        }
        let stage = if stage == Stage::Online {
            Stage::Offline
        } else {
            stage
        };
        let (alt, repack_moves) = self.repacked.take().expect("present");
        *state = alt;
        let mut moves: Vec<(Stage, Move)> = repack_moves
            .into_iter()
            .map(|m| (Stage::Offline, m))
            .collect();
        moves.extend(out.moves.into_iter().map(|m| (stage, m)));
        Ok(Some(Fit { stage, moves }))
    }
}

/// Runs the optimization loop from a booted state.
pub fn run(problem: &Problem, pack: PackState, options: &SearchOptions) -> Result<SearchState> {
    run_observed(problem, pack, options, |_, _| {})
}

/// Like [`run`], calling `observe` after every iteration with the state and the
/// record just appended.
pub fn run_observed(
    problem: &Problem,
    pack: PackState,
    options: &SearchOptions,
    mut observe: impl FnMut(&SearchState, &IterationRecord),
) -> Result<SearchState> {
    let qor = &problem.instance.qor;
    let design = &problem.instance.design;
    let n = options.lookahead.unwrap_or_else(|| {
        compute_lookahead_n(qor, design, options.level_bound, DEFAULT_LOOKAHEAD)
    });
    let cap = options
        .iteration_cap
        .unwrap_or(10 * problem.num_functions());
    let mut st = SearchState::new(problem, pack, n);

    let mut iter = 0;
    loop {
        let Some(b) = select_bottleneck(qor, &st.pack.config, &st.excluded) else {
            break;
        };
        if iter >= cap {
            st.cap_reached = true;
            log::info!("iteration cap {cap} reached");
            break;
        }
        iter += 1;

        // Members with nothing faster below the next level are dropped from the batch.
        let mut batch = Vec::new();
        let mut dps = Vec::new();
        let mut dropped = Vec::new();
        for &f in &b.batch {
            match prune(qor, &st.pack.config, f, b.l1, b.l2).dp {
                Some(dp) => {
                    batch.push(f);
                    dps.push(dp);
                }
                None => {
                    st.excluded[f] = true;
                    dropped.push(f);
                }
            }
        }
        let mut fit = None;
        if !batch.is_empty() {
            let mut attempt = Attempt {
                problem,
                frozen: options.frozen_floorplan,
                repacked: None,
            };
            let primary: Vec<(usize, usize)> =
                batch.iter().copied().zip(dps.iter().copied()).collect();
            fit = attempt.try_targets(&mut st.pack, &primary, Stage::Online)?;
            if fit.is_none() {
                let ahead: Vec<Vec<usize>> = batch
                    .iter()
                    .zip(&dps)
                    .map(|(&f, &dp)| look_ahead_window(qor, f, dp, n))
                    .collect();
                for targets in lockstep(&batch, &ahead) {
                    fit = attempt.try_targets(&mut st.pack, &targets, Stage::LookAhead)?;
                    if fit.is_some() {
                        break;
                    }
                }
            }
            if fit.is_none() {
                let back: Vec<Vec<usize>> = batch
                    .iter()
                    .zip(&dps)
                    .map(|(&f, &dp)| look_back_window(qor, f, dp, b.l1))
                    .collect();
                for targets in lockstep(&batch, &back) {
                    fit = attempt.try_targets(&mut st.pack, &targets, Stage::LookBack)?;
                    if fit.is_some() {
                        break;
                    }
                }
            }
            if fit.is_none() {
                fit = Some(Fit {
                    stage: Stage::Exhausted,
                    moves: Vec::new(),
                });
            }
        }
        let fit = fit.unwrap_or(Fit {
            stage: Stage::NoCandidate,
            moves: Vec::new(),
        });
        let accepted = if fit.stage.accepted() {
            batch
                .iter()
                .map(|&f| st.pack.config.point(qor, f).id.clone())
                .collect()
        } else {
            for &f in &batch {
                st.excluded[f] = true;
            }
            Vec::new()
        };
        let names = |fs: &[usize]| -> Vec<String> {
            fs.iter()
                .map(|&f| design.function_name(f).to_string())
                .collect()
        };
        let record = IterationRecord {
            iter,
            batch: names(&batch),
            dropped: names(&dropped),
            stage: fit.stage,
            accepted,
            design_latency: st.design_latency(problem),
            max_utilization: st.pack.floorplan.max_utilization(problem),
            max_sll_utilization: st.pack.route.max_sll_utilization(&problem.instance.device),
            moves: fit
                .moves
                .iter()
                .map(|(stage, m)| MoveRecord {
                    stage: *stage,
                    function: design.function_name(m.function).to_string(),
                    from: m.from,
                    to: m.to,
                })
                .collect(),
        };
        log::debug!(
            "iter {iter}: {:?} at {} -> latency {}",
            record.batch,
            record.stage.name(),
            record.design_latency
        );
        st.log.push(record);
        observe(&st, st.log.last().expect("pushed"));
    }
    Ok(st)
}
