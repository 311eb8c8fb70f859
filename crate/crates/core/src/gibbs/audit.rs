//! Per-instance audits of the free-energy inequalities.

use serde::{Deserialize, Serialize};

use super::quadrature::integrate_unit;
use super::{log_partition, ConfigPredicate, ExactGibbs, GibbsSpec, Monotonicity};
use crate::error::{LabError, Result};
use crate::lattice::SiteSet;
use crate::num::Real;

/// Inputs of the two-zone audit on a region `S`.
#[derive(Clone, Debug)]
pub struct TwoZoneAudit<'a, R: Real> {
    /// Region, base field and `β`; its boundary is ignored.
    pub spec: &'a GibbsSpec<R>,
    pub tau_plus: &'a [i8],
    pub tau_minus: &'a [i8],
    pub omega_plus: &'a ConfigPredicate,
    pub omega_minus: &'a ConfigPredicate,
    /// Shift `Δ′` applied on `S \ zone` at every `t`.
    pub delta_outer: R,
    /// Shift `tΔ` applied on `zone`.
    pub delta: R,
    pub zone: &'a SiteSet,
    /// Magnetization window, inside `zone`.
    pub window: &'a SiteSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoZoneReport {
    /// `Δ ∫₀¹ (m^{τ⁺,t}_{Ω⁺} − m^{τ⁻,t}_{Ω⁻}) dt`.
    pub lhs: f64,
    /// `8 Σ (τ⁺ − τ⁻) − (1/β)(log μ^{τ⁺,0}(Ω⁺) + log μ^{τ⁻,1}(Ω⁻))`; `+∞` when vacuous.
    pub rhs: f64,
    pub boundary_term: f64,
    pub log_mu_plus: f64,
    pub log_mu_minus: f64,
    /// Change of `F^{τ⁺} − F^{τ⁻}` from `t = 0` to `t = 1`, unrestricted.
    pub step_change: f64,
    /// `⟨σ⟩_{Ω⁺} ≥ ⟨σ⟩^{τ⁺} ≥ ⟨σ⟩^{τ⁻} ≥ ⟨σ⟩_{Ω⁻}` at every site and quadrature node.
    pub ordering_holds: bool,
    pub vacuous: bool,
    pub holds: bool,
    pub note: String,
}

/// Comparison slack for quantities computed in floating point.
pub const AUDIT_TOL: f64 = 1e-9;

fn check_tags(plus: &ConfigPredicate, minus: &ConfigPredicate) -> Result<()> {
    if plus.tag == Monotonicity::Decreasing || minus.tag == Monotonicity::Increasing {
        return Err(LabError::InvalidParameter(format!(
            "Ω⁺ = {} must be increasing and Ω⁻ = {} decreasing",
            plus.name, minus.name
        )));
    }
    Ok(())
}

fn check_order(plus: &[i8], minus: &[i8]) -> Result<()> {
    if plus.len() != minus.len() || plus.iter().zip(minus).any(|(p, m)| p < m) {
        return Err(LabError::OrderingViolation("τ⁺ ≥ τ⁻ fails".into()));
    }
    Ok(())
}

impl<R: Real> TwoZoneAudit<'_, R> {
    fn spec_at(&self, boundary: &[i8], t: R) -> Result<GibbsSpec<R>> {
        let g = self.spec.graph();
        let h = (0..g.len())
            .map(|i| {
                let base = self.spec.field()[i];
                if self.zone.contains(g.site(i)) {
                    base + t * self.delta
                } else {
                    base + self.delta_outer
                }
            })
            .collect();
        GibbsSpec::new(g.clone(), boundary.to_vec(), h, self.spec.beta())
    }

    pub fn run(&self) -> Result<TwoZoneReport> {
        check_order(self.tau_plus, self.tau_minus)?;
        check_tags(self.omega_plus, self.omega_minus)?;
        if !self.window.is_subset(self.zone) {
            return Err(LabError::InvalidParameter(
                "window must lie inside the zone".into(),
            ));
        }
        let g = self.spec.graph().clone();
        let win: Vec<usize> = self
            .window
            .iter()
            .map(|s| {
                g.index_of(s)
                    .ok_or_else(|| LabError::InvalidParameter("window outside region".into()))
            })
            .collect::<Result<_>>()?;
        let beta = self.spec.beta().f64();
        if beta <= 0.0 {
            return Err(LabError::InvalidParameter("audit needs β > 0".into()));
        }
        let eps = AUDIT_TOL;

        let at_plus0 = ExactGibbs::new(&self.spec_at(self.tau_plus, R::zero())?)?;
        let at_minus1 = ExactGibbs::new(&self.spec_at(self.tau_minus, R::one())?)?;
        let mask_plus = at_plus0.mask(self.omega_plus);
        let mask_minus = at_minus1.mask(self.omega_minus);
        let log_mu_plus =
            (at_plus0.log_sum(Some(&mask_plus), &|_| R::zero()) - at_plus0.log_z()).f64();
        let log_mu_minus =
            (at_minus1.log_sum(Some(&mask_minus), &|_| R::zero()) - at_minus1.log_z()).f64();
        let boundary_term: f64 = 8.0
            * self
                .tau_plus
                .iter()
                .zip(self.tau_minus)
                .map(|(p, m)| (p - m) as f64)
                .sum::<f64>();
        let vacuous = !log_mu_plus.is_finite() || !log_mu_minus.is_finite();
        let rhs = if vacuous {
            f64::INFINITY
        } else {
            boundary_term - (log_mu_plus + log_mu_minus) / beta
        };

        let mut ordering_holds = true;
        let lhs = if vacuous {
            f64::NAN
        } else {
            let delta = self.delta.f64();
            integrate_unit(|t| -> Result<f64> {
                let tt = R::of(t);
                let p = ExactGibbs::new(&self.spec_at(self.tau_plus, tt)?)?;
                let m = ExactGibbs::new(&self.spec_at(self.tau_minus, tt)?)?;
                let zero = |_| R::zero();
                let mp_omega = p.mean_spins(Some(&mask_plus), &zero)?;
                let mp = p.mean_spins(None, &zero)?;
                let mm = m.mean_spins(None, &zero)?;
                let mm_omega = m.mean_spins(Some(&mask_minus), &zero)?;
                for i in 0..g.len() {
                    let (a, b, c, d) = (
                        mp_omega[i].f64(),
                        mp[i].f64(),
                        mm[i].f64(),
                        mm_omega[i].f64(),
                    );
                    if a < b - eps || b < c - eps || c < d - eps {
                        ordering_holds = false;
                    }
                }
                Ok(delta
                    * win
                        .iter()
                        .map(|&i| (mp_omega[i] - mm_omega[i]).f64())
                        .sum::<f64>())
            })?
        };

        let f = |tau: &[i8], t: R| -> Result<f64> {
            Ok(log_partition(&self.spec_at(tau, t)?, None)?.f64())
        };
        let step_change = (f(self.tau_plus, R::one())? - f(self.tau_minus, R::one())?)
            - (f(self.tau_plus, R::zero())? - f(self.tau_minus, R::zero())?);

        let holds = vacuous || lhs <= rhs + eps * rhs.abs().max(1.0);
        let note = if vacuous {
            "bound vacuous (−log 0)".to_string()
        } else {
            String::new()
        };
        Ok(TwoZoneReport {
            lhs,
            rhs,
            boundary_term,
            log_mu_plus,
            log_mu_minus,
            step_change,
            ordering_holds,
            vacuous,
            holds,
            note,
        })
    }
}

/// `(F^{τ₊}(h + Δ·1_zone) − F^{τ₋}(h + Δ·1_zone)) − (F^{τ₊}(h) − F^{τ₋}(h))`, directly and as
/// `Δ ∫₀¹ Σ_{zone} (⟨σ⟩^{τ₊,t} − ⟨σ⟩^{τ₋,t}) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedGap {
    pub direct: f64,
    pub integral: f64,
}

pub fn perturbed_gap<R: Real>(
    base: &GibbsSpec<R>,
    tau_plus: &[i8],
    tau_minus: &[i8],
    zone: &SiteSet,
    delta: R,
) -> Result<PerturbedGap> {
    let g = base.graph().clone();
    let in_zone: Vec<bool> = (0..g.len()).map(|i| zone.contains(g.site(i))).collect();
    let at = |tau: &[i8], t: R| -> Result<GibbsSpec<R>> {
        let h = base
            .field()
            .iter()
            .zip(&in_zone)
            .map(|(&h, &z)| if z { h + t * delta } else { h })
            .collect();
        GibbsSpec::new(g.clone(), tau.to_vec(), h, base.beta())
    };
    let f = |tau: &[i8], t: R| -> Result<f64> { Ok(log_partition(&at(tau, t)?, None)?.f64()) };
    let direct = (f(tau_plus, R::one())? - f(tau_minus, R::one())?)
        - (f(tau_plus, R::zero())? - f(tau_minus, R::zero())?);
    let d = delta.f64();
    let integral = integrate_unit(|t| -> Result<f64> {
        let tt = R::of(t);
        let p = super::magnetization_sum(&at(tau_plus, tt)?, None, zone)?;
        let m = super::magnetization_sum(&at(tau_minus, tt)?, None, zone)?;
        Ok(d * (p - m).f64())
    })?;
    Ok(PerturbedGap { direct, integral })
}
