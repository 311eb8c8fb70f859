//! Boundary influence at the origin as a function of `N`.

use std::sync::Arc;

use super::{
    bool_f, par_tasks, Body, CensoredRow, Check, ExperimentConfig, ExperimentKind, Mode, Report,
    ResultTable, SummaryTable, Task,
};
use crate::cftp::{grand_monotone_sample_with, CftpOptions, UpdateStream, MAX_SWEEPS};
use crate::error::Result;
use crate::field::sample_field;
use crate::gibbs::{strip_log_z, GibbsSpec};
use crate::ground_state::{uniform_boundary, xi_labels, Xi};
use crate::lattice::{BoxRegion, RegionGraph, Site};
use crate::rng;
use crate::stats::{weighted_slope, MeanSe};

const DEFAULT_SIZES: [u32; 4] = [2, 4, 8, 16];

/// Per-instance estimate of `m_N` and whether the instance had a ground-state tie.
fn instance_value(config: &ExperimentConfig, n: u32, seed: u64) -> Result<(f64, bool)> {
    let region = BoxRegion::centered(n);
    let field = sample_field(region, config.epsilon, seed)?;
    let g = Arc::new(RegionGraph::from_box(&region));
    let origin = g.index_of(Site::ORIGIN).expect("origin in box");
    match config.mode {
        Mode::T0 => {
            let xi = xi_labels(&g, &field)?;
            Ok((bool_f(xi.labels[origin] == Xi::Zero), xi.degenerate))
        }
        Mode::Exact => {
            let beta = config.beta.expect("validated");
            let mut mags = [0.0; 2];
            for (k, tau) in [1i8, -1].into_iter().enumerate() {
                let spec =
                    GibbsSpec::from_field(g.clone(), uniform_boundary(&g, tau), &field, beta)?;
                let mut pins = vec![None; g.len()];
                let log_z = strip_log_z(&spec, &pins)?;
                pins[origin] = Some(1);
                let log_plus = strip_log_z(&spec, &pins)?;
                mags[k] = 2.0 * (log_plus - log_z).exp() - 1.0;
            }
            Ok((mags[0] - mags[1], false))
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
            let mut total = 0.0;
            for j in 0..config.samples {
                let stream = UpdateStream::new(rng::derive_seed(seed, rng::STREAM_CFTP, j as u64));
                let draw = grand_monotone_sample_with(&specs, stream, opts)?;
                total += f64::from(draw.configs[0][origin] - draw.configs[1][origin]);
            }
            Ok((total / config.samples as f64, false))
        }
    }
}

pub(crate) fn body(config: &ExperimentConfig) -> Result<Body> {
    let sizes = config.sizes_or(&DEFAULT_SIZES);
    let mut table = ResultTable::new("decay", &["n", "m", "degenerate"]);
    let mut summary = SummaryTable::new(
        "decay",
        &["n", "m_hat", "se", "completed", "censored", "degenerate"],
    );
    let mut completed = 0;
    let mut censored = Vec::new();
    let mut estimates = Vec::new();
    for &n in &sizes {
        let results = par_tasks(config.instances, |i| {
            instance_value(config, n, config.instance_seed(i))
        })?;
        let mut values = Vec::new();
        let (mut cens, mut degen) = (0, 0);
        for (i, r) in results.into_iter().enumerate() {
            let seed = config.instance_seed(i);
            match r {
                Task::Done((v, d)) => {
                    table.push(seed, vec![f64::from(n), v, bool_f(d)]);
                    if d {
                        degen += 1;
                    } else {
                        values.push(v);
                    }
                }
                Task::Censored(e) => {
                    table.push(seed, vec![f64::from(n), f64::NAN, 0.0]);
                    censored.push(CensoredRow { seed, n, reason: e });
                    cens += 1;
                }
            }
        }
        let est = MeanSe::of(&values);
        summary.push(vec![
            f64::from(n),
            est.mean,
            est.se,
            values.len() as f64,
            cens as f64,
            degen as f64,
        ]);
        completed += values.len() + degen;
        estimates.push((n, est));
    }
    let mut checks = vec![monotone_check(&estimates)];
    let slope = slope_check(&estimates);
    checks.push(if config.params.assert_slope {
        slope
    } else {
        Check {
            asserted: false,
            ..slope
        }
    });
    Ok(Body {
        tables: vec![table],
        summaries: vec![summary],
        checks,
        completed,
        censored,
    })
}

/// `m̂` nonincreasing in `N` within two combined standard errors.
fn monotone_check(est: &[(u32, MeanSe)]) -> Check {
    let mut bad = Vec::new();
    for w in est.windows(2) {
        let ((n0, a), (n1, b)) = (w[0], w[1]);
        let slack = 2.0 * (a.se * a.se + b.se * b.se).sqrt();
        if b.mean > a.mean + slack {
            bad.push(format!(
                "m̂_{n1} = {:.4} > m̂_{n0} = {:.4} + {:.4}",
                b.mean, a.mean, slack
            ));
        }
    }
    let detail = if bad.is_empty() {
        format!("{} sizes nonincreasing within 2 SE", est.len())
    } else {
        bad.join("; ")
    };
    Check::assert("decay_nonincreasing", bad.is_empty(), detail)
}

/// Strictly decreasing `m̂` and a log-linear slope below zero by three standard errors.
fn slope_check(est: &[(u32, MeanSe)]) -> Check {
    let name = "decay_log_slope";
    let strict = est.windows(2).all(|w| w[1].1.mean < w[0].1.mean);
    let listing = est
        .iter()
        .map(|(n, e)| format!("m̂_{n} = {:.3e} ± {:.1e}", e.mean, e.se))
        .collect::<Vec<_>>()
        .join(", ");
    if let Some((n, e)) = est.iter().find(|(_, e)| !(e.mean > 0.0 && e.se > 0.0)) {
        let why = if e.mean > 0.0 { "no variance" } else { "zero hits" };
        return Check::assert(
            name,
            false,
            format!("log m̂_{n} unusable ({why}); strict decrease {strict}; {listing}"),
        );
    }
    let x: Vec<f64> = est.iter().map(|(n, _)| f64::from(*n)).collect();
    let y: Vec<f64> = est.iter().map(|(_, e)| e.mean.ln()).collect();
    let var: Vec<f64> = est.iter().map(|(_, e)| (e.se / e.mean).powi(2)).collect();
    match weighted_slope(&x, &y, &var) {
        Ok(fit) => {
            let ok = strict && fit.slope <= -3.0 * fit.se;
            Check::assert(
                name,
                ok,
                format!(
                    "slope {:.4} ± {:.4}; strict decrease {strict}; {listing}",
                    fit.slope, fit.se
                ),
            )
        }
        Err(e) => Check::assert(name, false, format!("{e}; {listing}")),
    }
}

pub fn run_decay(config: &ExperimentConfig) -> Result<Report> {
    super::run_as(config, ExperimentKind::Decay)
}
