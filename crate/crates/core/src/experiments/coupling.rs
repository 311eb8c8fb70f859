//! Structural and statistical audits of the adaptive and breadth-first couplings.

use std::sync::Arc;

use super::{
    bool_f, par_tasks, Body, CensoredRow, Check, ExperimentConfig, ExperimentKind, Report,
    ResultTable, SummaryTable, Task,
};
use crate::couplings::audit::{
    at_step, disagreement_mask, percolation_property_holds, replay_trace,
    stopping_set_conditional_audit, table_one_patterns_hold,
};
use crate::couplings::policy::BreadthFirstPolicy;
use crate::couplings::{
    annulus_shifted, breadth_first_coupling, AdaptiveCoupler, CouplingMode, CouplingOutcome, Family,
};
use crate::error::Result;
use crate::field::standard_normal_at;
use crate::gibbs::{ExactGibbs, GibbsSpec};
use crate::ground_state::uniform_boundary;
use crate::lattice::{BoxRegion, RegionGraph, Site};
use crate::rng;
use crate::stats::chi_square_gof;

const DEFAULT_SIZES: [u32; 1] = [4];
const DEFAULT_BETA: f64 = 1.0;
const DEFAULT_REPETITIONS: usize = 20;
const DEFAULT_DELTA: f64 = 0.5;
/// Smallest accepted marginal chi-square p-value across repetitions.
pub const MARGINAL_P_FLOOR: f64 = 0.0005;
/// Stopping-set bins need this many runs to be tested.
pub const STOPPING_MIN_RUNS: usize = 500;
pub const STOPPING_THRESHOLD: f64 = 0.001;
const TAG_RUN: u64 = 0x5255_4e;
const TAG_REP: u64 = 0x5245_50;

fn box_field(g: &RegionGraph, seed: u64, eps: f64) -> Vec<f64> {
    g.sites()
        .iter()
        .map(|&s| eps * standard_normal_at(seed, s))
        .collect()
}

/// Per-chain chi-square p-values of `runs` against the exact marginals.
pub fn marginal_p_values(family: &Family<f64>, runs: &[CouplingOutcome]) -> Result<Vec<f64>> {
    family
        .specs()
        .iter()
        .enumerate()
        .map(|(c, spec)| {
            let exact = ExactGibbs::new(spec)?;
            let mut counts = vec![0u64; exact.states()];
            for r in runs {
                counts[ExactGibbs::<f64>::state_of(&r.configs[c])] += 1;
            }
            let probs: Vec<f64> = (0..exact.states()).map(|s| exact.probability(s)).collect();
            Ok(chi_square_gof(&counts, &probs)?.p_value)
        })
        .collect()
}

/// Four-chain family `(±, h), (±, h + Δ)` on `Λ_1`, with the shift off the origin.
pub fn small_four_family(seed: u64, eps: f64, delta: f64, beta: f64) -> Result<Family<f64>> {
    let g = Arc::new(RegionGraph::from_box(&BoxRegion::centered(1)));
    let h = box_field(&g, seed, eps);
    let ht = annulus_shifted(&g, &h, 1, delta);
    Family::four(g, h, ht, beta)
}

pub(crate) fn body(config: &ExperimentConfig) -> Result<Body> {
    let beta = config.beta.unwrap_or(DEFAULT_BETA);
    let mode = config.params.coupling.unwrap_or(CouplingMode::Auto);
    let sizes = config.sizes_or(&DEFAULT_SIZES);
    let mut completed = 0;
    let mut censored = Vec::new();
    let mut checks = Vec::new();

    let mut bfs = ResultTable::new(
        "breadth_first",
        &[
            "n",
            "origin_disagrees",
            "percolation_ok",
            "admissible",
            "replay_ok",
        ],
    );
    let mut bfs_violations = [0usize; 3];
    for &n in &sizes {
        let g = Arc::new(RegionGraph::from_box(&BoxRegion::centered(n)));
        let results = par_tasks(config.instances, |i| {
            let seed = config.instance_seed(i);
            let h = box_field(&g, seed, config.epsilon);
            let out =
                breadth_first_coupling(n, &h, beta, mode, rng::derive_seed(seed, TAG_RUN, 0))?;
            let c = disagreement_mask(&out.configs, &[(0, 1)]);
            let family = Family::plus_minus(g.clone(), h, beta)?;
            Ok(vec![
                f64::from(n),
                bool_f(c[g.index_of(Site::ORIGIN).expect("origin")]),
                bool_f(percolation_property_holds(&g, &c, Site::ORIGIN)),
                bool_f(family.admissible(&out.configs)),
                bool_f(replay_trace(&out.trace).ok()),
            ])
        })?;
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Task::Done(row) => {
                    completed += 1;
                    for k in 0..3 {
                        bfs_violations[k] += usize::from(row[2 + k] == 0.0);
                    }
                    bfs.push(config.instance_seed(i), row);
                }
                Task::Censored(e) => censored.push(CensoredRow {
                    seed: config.instance_seed(i),
                    n,
                    reason: e,
                }),
            }
        }
    }
    checks.push(Check::assert(
        "percolation_property_zero_violations",
        bfs_violations[0] == 0,
        format!(
            "{} breadth-first runs with an isolated disagreement at the origin",
            bfs_violations[0]
        ),
    ));
    checks.push(Check::assert(
        "breadth_first_admissible_and_replayable",
        bfs_violations[1] + bfs_violations[2] == 0,
        format!(
            "{} order violations, {} replay mismatches",
            bfs_violations[1], bfs_violations[2]
        ),
    ));

    let reps = config.params.repetitions.unwrap_or(DEFAULT_REPETITIONS);
    let delta = config.params.delta.unwrap_or(DEFAULT_DELTA);
    let mut marg = ResultTable::new(
        "marginals",
        &[
            "repetition",
            "p_min",
            "admissible_runs",
            "pattern_runs",
            "runs",
        ],
    );
    let mut p_min = 1.0f64;
    let mut structural = 0usize;
    let mut stopping = None;
    for rep in 0..reps {
        let seed = rng::derive_seed(config.seed, TAG_REP, rep as u64);
        let family = small_four_family(seed, config.epsilon, delta, beta)?;
        let mut coupler = AdaptiveCoupler::new(&family, CouplingMode::Exact)?;
        let runs: Vec<CouplingOutcome> = (0..config.samples)
            .map(|k| {
                coupler.run(
                    &mut BreadthFirstPolicy::new(vec![(0, 1), (2, 3)], 1),
                    rng::derive_seed(seed, TAG_RUN, k as u64),
                )
            })
            .collect::<Result<_>>()?;
        let ps = marginal_p_values(&family, &runs)?;
        let p = ps.iter().copied().fold(1.0, f64::min);
        let admissible = runs
            .iter()
            .filter(|r| family.admissible(&r.configs))
            .count();
        let patterns = runs
            .iter()
            .filter(|r| table_one_patterns_hold(&r.configs))
            .count();
        structural += 2 * runs.len() - admissible - patterns;
        p_min = p_min.min(p);
        marg.push(
            seed,
            vec![
                rep as f64,
                p,
                admissible as f64,
                patterns as f64,
                runs.len() as f64,
            ],
        );
        if rep == 0 {
            stopping = Some(stopping_set_conditional_audit(
                &family,
                &runs,
                &at_step(3),
                STOPPING_MIN_RUNS,
                STOPPING_THRESHOLD,
            )?);
        }
    }
    if reps > 0 {
        checks.push(Check::assert(
            "marginal_chi_square",
            p_min > MARGINAL_P_FLOOR,
            format!("smallest p-value {p_min:.4e} over {reps} repetitions × 4 chains"),
        ));
        checks.push(Check::assert(
            "admissibility_and_patterns",
            structural == 0,
            format!("{structural} runs break the order or the six local patterns"),
        ));
    }
    if let Some(s) = stopping {
        checks.push(Check::assert(
            "stopping_set_audit",
            s.passes(),
            format!(
                "{} of {} bins tested, min p {:.4e}",
                s.tested_bins, s.bins, s.min_p
            ),
        ));
    }

    let mut equal_diff = 0usize;
    {
        let g = Arc::new(RegionGraph::from_box(&BoxRegion::centered(1)));
        let h = box_field(&g, config.seed, config.epsilon);
        let spec = GibbsSpec::new(g.clone(), uniform_boundary(&g, 1), h, beta)?;
        let family = Family::new(vec![spec.clone(), spec])?;
        let mut coupler = AdaptiveCoupler::new(&family, CouplingMode::Exact)?;
        for k in 0..config.samples.min(1000) {
            let out = coupler.run(&mut BreadthFirstPolicy::new(vec![(0, 1)], 1), k as u64)?;
            equal_diff += out.configs[0]
                .iter()
                .zip(&out.configs[1])
                .filter(|(a, b)| a != b)
                .count();
        }
    }
    checks.push(Check::assert(
        "equal_family_identical",
        equal_diff == 0,
        format!("{equal_diff} disagreeing sites between identical chains"),
    ));

    let mut summary = SummaryTable::new(
        "coupling",
        &[
            "runs",
            "percolation_violations",
            "order_violations",
            "replay_mismatches",
            "marginal_p_min",
        ],
    );
    summary.push(vec![
        completed as f64,
        bfs_violations[0] as f64,
        bfs_violations[1] as f64,
        bfs_violations[2] as f64,
        p_min,
    ]);
    Ok(Body {
        tables: vec![bfs, marg],
        summaries: vec![summary],
        checks,
        completed,
        censored,
    })
}

pub fn run_coupling_suite(config: &ExperimentConfig) -> Result<Report> {
    super::run_as(config, ExperimentKind::CouplingSuite)
}
