//! Easy and hard crossings of `Λ_{N/8} \ Λ_{N/32}` by the disagreement set.

use std::sync::Arc;

use super::{
    bool_f, par_tasks, Body, CensoredRow, Check, ExperimentConfig, ExperimentKind, Mode, Report,
    ResultTable, SummaryTable, Task,
};
use crate::cftp::{grand_monotone_sample_with, CftpOptions, UpdateStream, MAX_SWEEPS};
use crate::error::{LabError, Result};
use crate::field::sample_field;
use crate::gibbs::GibbsSpec;
use crate::ground_state::{uniform_boundary, xi_labels};
use crate::lattice::{Annulus, BoxRegion, RegionGraph, SiteSet};
use crate::percolation::scan::{coarse_grain_scan, ScanParams};
use crate::percolation::{cross_annulus_easy, cross_annulus_hard};
use crate::rng;
use crate::stats::{wilson_interval, z_for};

const DEFAULT_SIZES: [u32; 1] = [32];

/// `Λ_{N/8} \ Λ_{N/32}`; with `scaled`, radii are clamped to `2` and `1` for small `N`.
pub fn crossing_annulus(n: u32, scaled: bool) -> Result<Annulus> {
    if !scaled && (n < 32 || n % 32 != 0) {
        return Err(LabError::Geometry(format!(
            "N = {n} must be a multiple of 32 (set scaled for smaller boxes)"
        )));
    }
    let outer = (n / 8).max(2);
    let inner = (n / 32).max(1);
    Annulus::centered(outer, inner)
}

fn carriers(config: &ExperimentConfig, n: u32, seed: u64) -> Result<(Vec<SiteSet>, bool)> {
    let region = BoxRegion::centered(n);
    let field = sample_field(region, config.epsilon, seed)?;
    let g = Arc::new(RegionGraph::from_box(&region));
    match config.mode {
        Mode::T0 => {
            let xi = xi_labels(&g, &field)?;
            Ok((vec![xi.disagreement()], xi.degenerate))
        }
        Mode::Cftp => {
            let beta = config.beta.expect("validated");
            let specs = [
                GibbsSpec::from_field(g.clone(), uniform_boundary(&g, 1), &field, beta)?,
                GibbsSpec::from_field(g.clone(), uniform_boundary(&g, -1), &field, beta)?,
            ];
            let opts = CftpOptions {
                initial_sweeps: 1,
                max_sweeps: config.params.max_sweeps.unwrap_or(MAX_SWEEPS),
            };
            let mut out = Vec::with_capacity(config.samples);
            for j in 0..config.samples {
                let stream = UpdateStream::new(rng::derive_seed(seed, rng::STREAM_CFTP, j as u64));
                let draw = grand_monotone_sample_with(&specs, stream, opts)?;
                let c = g
                    .sites()
                    .iter()
                    .zip(draw.configs[0].iter().zip(&draw.configs[1]))
                    .filter(|(_, (a, b))| a != b)
                    .map(|(s, _)| *s)
                    .collect();
                out.push(c);
            }
            Ok((out, false))
        }
        Mode::Exact => Err(LabError::InvalidParameter(
            "crossing-scan draws carriers with t0 or cftp".into(),
        )),
    }
}

pub(crate) fn body(config: &ExperimentConfig) -> Result<Body> {
    let sizes = config.sizes_or(&DEFAULT_SIZES);
    let mut table = ResultTable::new(
        "crossing",
        &[
            "n",
            "sample",
            "hard",
            "easy",
            "nonempty",
            "carrier",
            "degenerate",
        ],
    );
    let mut summary = SummaryTable::new(
        "crossing",
        &[
            "n",
            "trials",
            "p_hard",
            "hard_lo",
            "hard_hi",
            "p_easy",
            "easy_lo",
            "easy_hi",
            "p_nonempty",
        ],
    );
    let mut tables = Vec::new();
    let mut summaries = Vec::new();
    let mut completed = 0;
    let mut censored = Vec::new();
    let mut implication_failures = 0;
    let z = z_for(0.95);
    for &n in &sizes {
        let annulus = crossing_annulus(n, config.params.scaled)?;
        let results = par_tasks(config.instances, |i| {
            let (cs, degenerate) = carriers(config, n, config.instance_seed(i))?;
            let mut rows = Vec::with_capacity(cs.len());
            for (j, c) in cs.iter().enumerate() {
                let hard = cross_annulus_hard(&annulus, c)?;
                let easy = cross_annulus_easy(&annulus, c)?;
                let nonempty = c.iter().any(|s| annulus.contains(s));
                rows.push(vec![
                    f64::from(n),
                    j as f64,
                    bool_f(hard),
                    bool_f(easy),
                    bool_f(nonempty),
                    c.len() as f64,
                    bool_f(degenerate),
                ]);
            }
            Ok(rows)
        })?;
        let (mut trials, mut hard, mut easy, mut nonempty) = (0u64, 0u64, 0u64, 0u64);
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Task::Done(rows) => {
                    completed += 1;
                    for row in rows {
                        if row[6] == 0.0 {
                            trials += 1;
                            hard += u64::from(row[2] > 0.0);
                            easy += u64::from(row[3] > 0.0);
                            nonempty += u64::from(row[4] > 0.0);
                            implication_failures += usize::from(row[2] > row[4]);
                        }
                        table.push(config.instance_seed(i), row);
                    }
                }
                Task::Censored(e) => censored.push(CensoredRow {
                    seed: config.instance_seed(i),
                    n,
                    reason: e,
                }),
            }
        }
        let frac = |k: u64| {
            if trials == 0 {
                0.0
            } else {
                k as f64 / trials as f64
            }
        };
        let (hl, hh) = wilson_interval(hard, trials, z);
        let (el, eh) = wilson_interval(easy, trials, z);
        summary.push(vec![
            f64::from(n),
            trials as f64,
            frac(hard),
            hl,
            hh,
            frac(easy),
            el,
            eh,
            frac(nonempty),
        ]);
        if let Some(scan) = &config.scan {
            let params = ScanParams {
                n,
                side: scan.side,
                open: scan.open,
                enlargement: scan.enlargement,
                epsilon: config.epsilon,
            };
            let seeds: Vec<u64> = (0..config.instances)
                .map(|i| config.instance_seed(i))
                .collect();
            let res = coarse_grain_scan(&params, &seeds)?;
            let mut t = ResultTable::new(
                &format!("scan_n{n}"),
                &["n", "boxes", "open_boxes", "largest", "degenerate"],
            );
            for inst in &res.instances {
                t.push(
                    inst.seed,
                    vec![
                        f64::from(n),
                        inst.grid.len() as f64,
                        inst.grid.open_count() as f64,
                        inst.largest as f64,
                        bool_f(inst.degenerate),
                    ],
                );
            }
            tables.push(t);
            let s = &res.summary;
            let mut st = SummaryTable::new(
                &format!("scan_n{n}"),
                &[
                    "n",
                    "side",
                    "instances",
                    "boxes",
                    "open_boxes",
                    "p_hat",
                    "p_lo",
                    "p_hi",
                    "largest_median",
                    "largest_q90",
                    "largest_max",
                ],
            );
            st.push(vec![
                f64::from(s.n),
                f64::from(s.side),
                s.instances as f64,
                s.boxes as f64,
                s.open_boxes as f64,
                s.p_hat,
                s.p_lo,
                s.p_hi,
                s.largest_median as f64,
                s.largest_q90 as f64,
                s.largest_max as f64,
            ]);
            summaries.push(st);
            let mut tail = SummaryTable::new(&format!("scan_tail_n{n}"), &["k", "fraction"]);
            for &(k, f) in &s.tail {
                tail.push(vec![k as f64, f]);
            }
            summaries.push(tail);
        }
    }
    tables.insert(0, table);
    summaries.insert(0, summary);
    let checks = vec![Check::assert(
        "hard_implies_nonempty",
        implication_failures == 0,
        format!(
            "{implication_failures} trials with a hard crossing but no carrier site in the annulus"
        ),
    )];
    Ok(Body {
        tables,
        summaries,
        checks,
        completed,
        censored,
    })
}

pub fn run_crossing_scan(config: &ExperimentConfig) -> Result<Report> {
    super::run_as(config, ExperimentKind::CrossingScan)
}
