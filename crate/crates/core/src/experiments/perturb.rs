//! Per-instance audit of the zero-temperature perturbation statements.

use std::sync::Arc;

use super::{
    bool_f, par_tasks, Body, CensoredRow, Check, ExperimentConfig, ExperimentKind, Report,
    ResultTable, SummaryTable, Task,
};
use crate::error::Result;
use crate::field::sample_field;
use crate::ground_state::{xi_labels_values, zero_component_margins};
use crate::lattice::{BoxRegion, Distance, RegionGraph};
use crate::percolation::lemmas::{percolation_to_boundary, perturbation_incompatibility};
use crate::rng;

const DEFAULT_SIZES: [u32; 1] = [16];
/// `γ = 100 r` with `r = 16` boxes.
pub const DEFAULT_GAMMA: f64 = 1600.0;
const FLIP_TOL: f64 = 1e-9;

const COLUMNS: [&str; 15] = [
    "n",
    "delta",
    "k",
    "disagreements",
    "inner",
    "annulus",
    "distance",
    "cond_a",
    "cond_b",
    "incompatibility_violated",
    "common",
    "stranded",
    "boundary_violated",
    "flip_min_margin",
    "degenerate",
];

pub(crate) fn body(config: &ExperimentConfig) -> Result<Body> {
    let sizes = config.sizes_or(&DEFAULT_SIZES);
    let p = &config.params;
    let x_scale = p.x_scale.unwrap_or(1.0);
    let mut table = ResultTable::new("perturb", &COLUMNS);
    let mut summary = SummaryTable::new(
        "perturb",
        &[
            "n",
            "delta",
            "k",
            "completed",
            "degenerate",
            "nonvacuous",
            "incompatibility_violations",
            "boundary_violations",
            "flip_violations",
        ],
    );
    let mut completed = 0;
    let mut censored = Vec::new();
    let mut totals = [0usize; 3];
    for &n in &sizes {
        let delta = p
            .delta
            .unwrap_or_else(|| p.gamma.unwrap_or(DEFAULT_GAMMA) / f64::from(n));
        let k = p.k.unwrap_or(f64::from(n) / 4.0);
        let region = BoxRegion::centered(n);
        let g = Arc::new(RegionGraph::from_box(&region));
        let results = par_tasks(config.instances, |i| {
            let seed = config.instance_seed(i);
            let field = sample_field(region, config.epsilon, seed)?;
            let inc = perturbation_incompatibility(&field, delta, k)?;
            let x: Vec<f64> = g
                .sites()
                .iter()
                .map(|s| x_scale * rng::uniform(seed, rng::STREAM_AUX, rng::site_word(s.x, s.y), 0))
                .collect();
            let reach = percolation_to_boundary(&field, &x)?;
            let h = field.on_graph(&g)?;
            let xi = xi_labels_values(&g, &h)?;
            let flip = zero_component_margins(&xi, &h)
                .iter()
                .map(|(_, a, b)| a.min(*b))
                .fold(f64::INFINITY, f64::min);
            let distance = match inc.distance {
                Distance::Finite(d) => f64::from(d),
                Distance::Infinite => f64::INFINITY,
            };
            let degenerate = inc.degenerate || reach.degenerate || xi.degenerate;
            Ok(vec![
                f64::from(n),
                delta,
                k,
                inc.disagreements as f64,
                inc.inner as f64,
                inc.annulus as f64,
                distance,
                bool_f(inc.cond_a),
                bool_f(inc.cond_b),
                bool_f(inc.violated()),
                reach.common as f64,
                reach.stranded.len() as f64,
                bool_f(!reach.holds()),
                flip,
                bool_f(degenerate),
            ])
        })?;
        let mut counts = [0usize; 6];
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Task::Done(row) => {
                    let degenerate = row[14] > 0.0;
                    counts[0] += 1;
                    if degenerate {
                        counts[1] += 1;
                    } else {
                        counts[2] += usize::from(row[3] > 0.0);
                        counts[3] += usize::from(row[9] > 0.0);
                        counts[4] += usize::from(row[12] > 0.0);
                        counts[5] += usize::from(row[13] < -FLIP_TOL);
                    }
                    table.push(config.instance_seed(i), row);
                }
                Task::Censored(e) => censored.push(CensoredRow {
                    seed: config.instance_seed(i),
                    n,
                    reason: e,
                }),
            }
        }
        summary.push(vec![
            f64::from(n),
            delta,
            k,
            counts[0] as f64,
            counts[1] as f64,
            counts[2] as f64,
            counts[3] as f64,
            counts[4] as f64,
            counts[5] as f64,
        ]);
        completed += counts[0];
        for j in 0..3 {
            totals[j] += counts[3 + j];
        }
    }
    let nonvacuous: f64 = summary.rows.iter().map(|r| r[5]).sum();
    let checks = vec![
        Check::assert(
            "incompatibility_zero_violations",
            totals[0] == 0,
            format!("{} instances with (a) and (b) both true", totals[0]),
        ),
        Check::assert(
            "boundary_reach_zero_violations",
            totals[1] == 0,
            format!("{} instances with a stranded site", totals[1]),
        ),
        Check::assert(
            "flip_inequalities_zero_violations",
            totals[2] == 0,
            format!("{} instances with a negative flip margin", totals[2]),
        ),
        Check::record(
            "incompatibility_nonvacuous",
            nonvacuous > 0.0,
            format!("{nonvacuous} instances with C_* nonempty"),
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

pub fn run_perturbation_audit(config: &ExperimentConfig) -> Result<Report> {
    super::run_as(config, ExperimentKind::PerturbAudit)
}
