//! Free-energy inequalities and the derivative identity on small exactly solvable boxes.

use std::sync::Arc;

use super::{
    bool_f, par_tasks, Body, CensoredRow, Check, ExperimentConfig, ExperimentKind, Mode, Report,
    ResultTable, SummaryTable, Task,
};
use crate::cftp::{CftpOptions, MAX_SWEEPS};
use crate::couplings::audit::{random_tuples, HatSampler, HatSetting};
use crate::error::{LabError, Result};
use crate::field::standard_normal_at;
use crate::gibbs::audit::{TwoZoneAudit, AUDIT_TOL};
use crate::gibbs::{free_energy_derivative_check, ConfigPredicate, GibbsSpec, Monotonicity};
use crate::lattice::{RegionGraph, Site, SiteSet};
use crate::rng;

const DEFAULT_SIZES: [u32; 1] = [4];
const DEFAULT_BETAS: [f64; 3] = [0.3, 1.0, 3.0];
pub const DEFAULT_DELTA: f64 = 0.4;
pub const DEFAULT_DELTA_PRIME: f64 = 0.3;
/// Largest accepted relative error of the derivative identity.
pub const DERIVATIVE_TOL: f64 = 1e-6;
const TAG_TUPLES: u64 = 0x5455_504c;
const TAG_HAT: u64 = 0x4841_5453;

const COLUMNS: [&str; 18] = [
    "side",
    "beta",
    "boundary_diff",
    "two_zone_lhs",
    "two_zone_rhs",
    "two_zone_vacuous",
    "two_zone_holds",
    "ordering_holds",
    "step_change",
    "step_bound",
    "step_holds",
    "hat_lower",
    "hat_lower_se",
    "hat_middle",
    "hat_upper",
    "hat_inclusion_violations",
    "hat_passes",
    "derivative_max_rel_err",
];

/// Square of side `side` with lower-left corner `(−side/2, −side/2)`.
pub fn square(side: u32) -> SiteSet {
    let lo = -(side as i32 / 2);
    let hi = lo + side as i32;
    (lo..hi)
        .flat_map(|y| (lo..hi).map(move |x| Site::new(x, y)))
        .collect()
}

fn ring(g: &RegionGraph) -> Vec<usize> {
    (0..g.len())
        .filter(|&i| {
            g.site(i)
                .neighbors4()
                .iter()
                .any(|&v| g.index_of(v).is_none())
        })
        .collect()
}

fn instance(config: &ExperimentConfig, side: u32, beta: f64, seed: u64) -> Result<Vec<f64>> {
    let p = &config.params;
    let delta = p.delta.unwrap_or(DEFAULT_DELTA);
    let delta_prime = p.delta_prime.unwrap_or(DEFAULT_DELTA_PRIME);
    let set = square(side);
    let g = Arc::new(RegionGraph::new(&set));
    let outer = ring(&g);
    let need = (3 * outer.len()).div_ceil(4);
    let (o1, o2) = (outer.clone(), outer.clone());
    let omega_plus =
        ConfigPredicate::new("outer-plus", Monotonicity::Increasing, move |s: &[i8]| {
            o1.iter().filter(|&&i| s[i] == 1).count() >= need
        });
    let omega_minus = ConfigPredicate::new(
        "outer-minus",
        Monotonicity::Decreasing,
        move |s: &[i8]| o2.iter().filter(|&&i| s[i] == -1).count() >= need,
    );
    let zone: SiteSet = (0..g.len())
        .filter(|i| !outer.contains(i))
        .map(|i| g.site(i))
        .collect();
    let rim: SiteSet = outer.iter().map(|&i| g.site(i)).collect();
    let window: SiteSet = zone.iter().take(2).collect();
    if zone.is_empty() {
        return Err(LabError::Geometry(format!(
            "side {side} leaves no interior zone"
        )));
    }

    let h: Vec<f64> = g
        .sites()
        .iter()
        .map(|&s| config.epsilon * standard_normal_at(seed, s))
        .collect();
    let tuples = random_tuples(
        g.boundary_sites().len(),
        rng::derive_seed(seed, TAG_TUPLES, 0),
    );
    let tau_plus: Vec<i8> = tuples.iter().map(|t| t[0]).collect();
    let tau_minus: Vec<i8> = tuples.iter().map(|t| t[1]).collect();
    let diff = tau_plus
        .iter()
        .zip(&tau_minus)
        .filter(|(a, b)| a != b)
        .count() as f64;
    let spec = GibbsSpec::new(g.clone(), tau_minus.clone(), h.clone(), beta)?;

    let two = TwoZoneAudit {
        spec: &spec,
        tau_plus: &tau_plus,
        tau_minus: &tau_minus,
        omega_plus: &omega_plus,
        omega_minus: &omega_minus,
        delta_outer: delta_prime,
        delta,
        zone: &zone,
        window: &window,
    }
    .run()?;
    let step_bound = 16.0 * diff;
    let step_holds = two.step_change <= step_bound + AUDIT_TOL * step_bound.max(1.0);

    let setting = HatSetting {
        graph: g.clone(),
        h: h.clone(),
        zone: rim,
        delta,
        beta,
        tuples,
    };
    let sampler = match config.mode {
        Mode::Cftp => HatSampler::Cftp(CftpOptions { initial_sweeps: 1, max_sweeps: p.max_sweeps.unwrap_or(MAX_SWEEPS) }),
        Mode::T0 | Mode::Exact => HatSampler::Exact,
    };
    let hat = setting.audit_with(config.samples, rng::derive_seed(seed, TAG_HAT, beta.to_bits()), sampler)?;

    let plus_spec = spec.with_boundary(tau_plus.clone())?;
    let mut worst: f64 = 0.0;
    for s in [&spec, &plus_spec] {
        for r in [None, Some(&omega_plus), Some(&omega_minus)] {
            worst =
                worst.max(free_energy_derivative_check(s, &zone, delta, 0.5, r)?.relative_error());
        }
    }

    Ok(vec![
        f64::from(side),
        beta,
        diff,
        two.lhs,
        two.rhs,
        bool_f(two.vacuous),
        bool_f(two.holds),
        bool_f(two.ordering_holds),
        two.step_change,
        step_bound,
        bool_f(step_holds),
        hat.lower,
        hat.lower_se,
        hat.middle,
        hat.upper,
        hat.inclusion_violations as f64,
        bool_f(hat.passes()),
        worst,
    ])
}

pub(crate) fn body(config: &ExperimentConfig) -> Result<Body> {
    let sides = config.sizes_or(&DEFAULT_SIZES);
    let betas: Vec<f64> = if !config.params.betas.is_empty() {
        config.params.betas.clone()
    } else if let Some(b) = config.beta {
        vec![b]
    } else {
        DEFAULT_BETAS.to_vec()
    };
    let mut table = ResultTable::new("free_energy", &COLUMNS);
    let mut summary = SummaryTable::new(
        "free_energy",
        &[
            "side",
            "beta",
            "completed",
            "vacuous",
            "two_zone_violations",
            "step_violations",
            "hat_failures",
            "derivative_max_rel_err",
        ],
    );
    let mut completed = 0;
    let mut censored = Vec::new();
    let mut totals = [0usize; 4];
    let mut worst: f64 = 0.0;
    for &side in &sides {
        for &beta in &betas {
            let results = par_tasks(config.instances, |i| {
                instance(config, side, beta, config.instance_seed(i))
            })?;
            let mut counts = [0usize; 6];
            let mut w: f64 = 0.0;
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Task::Done(row) => {
                        counts[0] += 1;
                        counts[1] += usize::from(row[5] > 0.0);
                        counts[2] += usize::from(row[6] == 0.0 || row[7] == 0.0);
                        counts[3] += usize::from(row[10] == 0.0);
                        counts[4] += usize::from(row[16] == 0.0);
                        w = w.max(row[17]);
                        table.push(config.instance_seed(i), row);
                    }
                    Task::Censored(e) => censored.push(CensoredRow {
                        seed: config.instance_seed(i),
                        n: side,
                        reason: e,
                    }),
                }
            }
            summary.push(vec![
                f64::from(side),
                beta,
                counts[0] as f64,
                counts[1] as f64,
                counts[2] as f64,
                counts[3] as f64,
                counts[4] as f64,
                w,
            ]);
            completed += counts[0];
            for j in 0..3 {
                totals[j] += counts[2 + j];
            }
            totals[3] += counts[1];
            worst = worst.max(w);
        }
    }
    let checks = vec![
        Check::assert(
            "two_zone_zero_violations",
            totals[0] == 0,
            format!("{} instances fail the bound or the ordering", totals[0]),
        ),
        Check::assert(
            "step_bound_zero_violations",
            totals[1] == 0,
            format!("{} instances exceed 16 × #(τ⁺ ≠ τ⁻)", totals[1]),
        ),
        Check::assert(
            "hat_bounds_zero_violations",
            totals[2] == 0,
            format!("{} instances fail a hat audit", totals[2]),
        ),
        Check::assert(
            "derivative_identity",
            worst <= DERIVATIVE_TOL,
            format!("max relative error {worst:.3e} (limit {DERIVATIVE_TOL:e})"),
        ),
        Check::record(
            "two_zone_vacuous",
            totals[3] == 0,
            format!("{} instances with a vacuous two-zone bound", totals[3]),
        ),
    ];
    Ok(Body {
        tables: vec![table],
        summaries: vec![summary],
        checks,
        completed,
        censored,
    })
}

pub fn run_free_energy_suite(config: &ExperimentConfig) -> Result<Report> {
    super::run_as(config, ExperimentKind::FreeEnergy)
}
