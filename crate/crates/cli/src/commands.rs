use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use alpha_patch::curve::{
    arc_length_reparameterize, default_shifts, holder_exponent, verify_arc_length_estimates_with, ARC_LENGTH_ESTIMATE_IDS,
};
use alpha_patch::dynamics::{run_convergence, run_simulation, ConvergenceConfig, SimulationConfig, StepperConfig};
use alpha_patch::io::{
    read_json, snapshot_name, write_convergence, write_diagnostics, write_estimates, write_json, write_snapshot, write_stability,
    FitSummary, Snapshot, CONVERGENCE_FILE, DIAGNOSTICS_FILE, ESTIMATES_FILE, FIT_FILE, STABILITY_FILE,
};
use alpha_patch::lemma_lab::{
    default_delta_grid, generate_test_curve, local_delta_grid, refinement_change, verify_dsv_holder, verify_dsv_t_holder,
    verify_kernel_lemma, verify_kernel_symmetry, CurveKind, EstimateReport, TestCurve, DSV_HOLDER_ID, DSV_T_HOLDER_ID, KERNEL_INTEGRAL_ID,
    KERNEL_SYMMETRY_ID,
};
use alpha_patch::stability::{run_twin, TwinConfig};
use alpha_patch::{ClosedCurve, KernelParams, Vec2};

use crate::config::RunConfig;

/// How a command ended, short of an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The run stopped early; what it produced was written.
    Partial,
    /// Verification ran but some estimate was not refinement stable.
    SoftFailure,
}

/// A custom curve: any JSON object with a `nodes` array, snapshots included.
#[derive(Deserialize)]
struct CurveFile {
    nodes: Vec<Vec2>,
}

fn initial_curve(cfg: &RunConfig, default_n: usize) -> Result<ClosedCurve> {
    let scheme = cfg.diff_scheme()?;
    if let Some(path) = &cfg.curve_file {
        let file: CurveFile = read_json(path)?;
        return ClosedCurve::new(file.nodes, scheme).with_context(|| format!("invalid curve in {}", path.display()));
    }
    let n = cfg.n_nodes.unwrap_or(default_n);
    Ok(generate_test_curve(cfg.curve_kind()?, n)?.curve.with_scheme(scheme))
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn stepper(cfg: &RunConfig, default_dt: f64) -> StepperConfig {
    StepperConfig::with_dt(cfg.dt.unwrap_or(default_dt))
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let alpha = cfg.alpha()?;
    let params = KernelParams::new(alpha)?;
    let mut sim = SimulationConfig::new(stepper(cfg, 1e-3), cfg.t_end.unwrap_or(1.0), cfg.emit_every.unwrap_or(100));
    sim.check_simple = cfg.check_simple.unwrap_or(false);
    sim.validate()?;
    let curve = initial_curve(cfg, 256)?;
    let dir = output_dir(cfg)?;

    let traj = run_simulation(&sim, &curve, &params)?;
    for (i, state) in traj.snapshots.iter().enumerate() {
        write_snapshot(&dir.join(snapshot_name(i)), &Snapshot::from_state(state, alpha))?;
    }
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &traj.diagnostics)?;
    match &traj.aborted {
        Some(e) => {
            eprintln!("run stopped after t = {}: {e}", traj.last().time);
            Ok(Outcome::Partial)
        }
        None => Ok(Outcome::Success),
    }
}

pub fn twin(cfg: &RunConfig) -> Result<Outcome> {
    let config = TwinConfig {
        perturbation_kind: cfg.perturbation()?,
        perturbation_size: cfg.epsilon.unwrap_or(1e-3),
        stepper: stepper(cfg, 1e-3),
        params: KernelParams::new(cfg.alpha()?)?,
        t_end: cfg.t_end.unwrap_or(0.5),
        emit_every: cfg.emit_every.unwrap_or(10),
    };
    config.validate()?;
    let base = initial_curve(cfg, 256)?;
    let dir = output_dir(cfg)?;

    let report = run_twin(&config, &base)?;
    write_stability(&dir.join(STABILITY_FILE), &report)?;
    write_json(&dir.join(FIT_FILE), &FitSummary::from(report.fit))?;
    match &report.truncated {
        Some(why) => {
            eprintln!("twin run truncated: {why}");
            Ok(Outcome::Partial)
        }
        None => Ok(Outcome::Success),
    }
}

fn arc_length_id(key: &str) -> String {
    format!("L2.2-{key}")
}

/// Every estimate id, in the order reports are written.
pub fn estimate_ids() -> Vec<String> {
    let mut ids: Vec<String> = ARC_LENGTH_ESTIMATE_IDS.iter().map(|k| arc_length_id(k)).collect();
    ids.extend([DSV_HOLDER_ID, DSV_T_HOLDER_ID, KERNEL_SYMMETRY_ID, KERNEL_INTEGRAL_ID].map(String::from));
    ids
}

/// Resolve a comma list of ids or prefixes (`L5.1` selects `L5.1-5.3` and
/// `L5.1-5.5`). An empty selection means everything.
pub fn select_estimates(selection: Option<&str>) -> Result<Vec<String>> {
    let all = estimate_ids();
    let Some(selection) = selection else { return Ok(all) };
    let tokens: Vec<&str> = selection.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Ok(all);
    }
    for t in &tokens {
        if !all.iter().any(|id| matches_token(id, t)) {
            bail!("unknown estimate id {t:?}; known ids: {}", all.join(", "));
        }
    }
    Ok(all.into_iter().filter(|id| tokens.iter().any(|t| matches_token(id, t))).collect())
}

fn matches_token(id: &str, token: &str) -> bool {
    id == token || id.strip_prefix(token).is_some_and(|rest| rest.starts_with('-'))
}

fn verification_curve(cfg: &RunConfig) -> Result<TestCurve> {
    match &cfg.curve_file {
        Some(_) => {
            let curve = arc_length_reparameterize(&initial_curve(cfg, 0)?)?;
            Ok(TestCurve::from_curve(curve)?)
        }
        None => Ok(generate_test_curve(cfg.curve_kind()?, cfg.n_nodes.unwrap_or(1024))?),
    }
}

/// Curvature integrability: configured, by construction, or from the
/// tangent exponent through `β = 1 - 1/p`.
fn integrability(cfg: &RunConfig, tc: &TestCurve) -> Result<f64> {
    if let Some(p) = cfg.p {
        return Ok(p);
    }
    if let Some(p) = tc.kind.and_then(|k| k.nominal_p()) {
        return Ok(p);
    }
    let beta = tc.beta()?;
    Ok(if beta >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - beta) })
}

fn arc_length_reports(tc: &TestCurve, params: &KernelParams, p: f64) -> Result<Vec<EstimateReport>> {
    let est = verify_arc_length_estimates_with(&tc.curve, &tc.geometry, p)?;
    let fine = tc.refined()?;
    let est2 = verify_arc_length_estimates_with(&fine.curve, &fine.geometry, p)?;
    let fitted = holder_exponent(&tc.geometry.tangent, tc.length, &default_shifts(tc.n()))?.exponent;
    Ok(ARC_LENGTH_ESTIMATE_IDS
        .iter()
        .enumerate()
        .map(|(i, key)| EstimateReport {
            estimate_id: arc_length_id(key),
            alpha: params.alpha(),
            beta_or_p: p,
            fitted_exponent: fitted,
            predicted_exponent: est.beta,
            empirical_constant: est.constants[i],
            refinement_stability: refinement_change(est.constants[i], est2.constants[i]),
            fit_residual: 0.0,
            flagged: false,
            within_hypothesis: true,
            contrast_exponent: None,
        })
        .collect())
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let params = KernelParams::new(cfg.alpha()?)?;
    let selected = select_estimates(cfg.estimates.as_deref())?;
    let threshold = cfg.threshold.unwrap_or(0.1);
    if !(threshold >= 0.0) {
        bail!("invalid threshold {threshold}: must be nonnegative");
    }
    let tc = verification_curve(cfg)?;
    let p = integrability(cfg, &tc)?;
    if !(p > 1.0) {
        bail!("invalid p {p}: must exceed 1");
    }
    let dir = output_dir(cfg)?;
    let wants = |id: &str| selected.iter().any(|s| s == id);

    let mut reports = Vec::new();
    if selected.iter().any(|id| id.starts_with("L2.2-")) {
        reports.extend(arc_length_reports(&tc, &params, p)?.into_iter().filter(|r| wants(&r.estimate_id)));
    }
    if wants(DSV_HOLDER_ID) {
        reports.push(verify_dsv_holder(&tc, &params, &default_delta_grid(tc.n()))?);
    }
    if wants(DSV_T_HOLDER_ID) {
        // the spike cusp only dominates at small shifts
        let grid = match tc.kind {
            Some(CurveKind::W2pSpike { .. }) if tc.n() >= 4096 => local_delta_grid(tc.n()),
            _ => default_delta_grid(tc.n()),
        };
        reports.push(verify_dsv_t_holder(&tc, &params, p, &grid)?);
    }
    if wants(KERNEL_SYMMETRY_ID) {
        reports.push(verify_kernel_symmetry(&tc, &params)?);
    }
    if wants(KERNEL_INTEGRAL_ID) {
        reports.push(verify_kernel_lemma(&tc, &params, f64::cos)?);
    }
    write_estimates(&dir.join(ESTIMATES_FILE), &reports)?;

    let mut unstable = false;
    for r in &reports {
        let ok = r.refinement_stability <= threshold;
        unstable |= !ok;
        println!(
            "{:<12} fitted {:>8.4} predicted {:>8.4} constant {:>10.4e} stability {:>9.3e}{}{}",
            r.estimate_id,
            r.fitted_exponent,
            r.predicted_exponent,
            r.empirical_constant,
            r.refinement_stability,
            if ok { "" } else { "  UNSTABLE" },
            if r.flagged { "  (poor fit)" } else { "" },
        );
    }
    Ok(if unstable { Outcome::SoftFailure } else { Outcome::Success })
}

pub fn convergence(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.curve_file.is_some() {
        bail!("convergence needs a named curve, not curve_file");
    }
    let params = KernelParams::new(cfg.alpha()?)?;
    let config = ConvergenceConfig {
        curve: cfg.curve_kind()?,
        n0: cfg.n_nodes.unwrap_or(64),
        dt0: cfg.dt.unwrap_or(5e-3),
        t_end: cfg.t_end.unwrap_or(0.5),
        levels: cfg.levels.unwrap_or(3),
        stepper: StepperConfig::default(),
    };
    config.validate()?;
    let dir = output_dir(cfg)?;
    let rows = run_convergence(&config, &params)?;
    write_convergence(&dir.join(CONVERGENCE_FILE), &rows)?;
    Ok(Outcome::Success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes_select_groups() {
        let ids = select_estimates(Some("L5.1")).unwrap();
        assert_eq!(ids, vec![KERNEL_SYMMETRY_ID.to_string(), KERNEL_INTEGRAL_ID.to_string()]);
        assert_eq!(select_estimates(Some("L2.2")).unwrap().len(), 9);
        assert_eq!(select_estimates(Some("L2.2-2.2d")).unwrap(), vec!["L2.2-2.2d".to_string()]);
        assert_eq!(select_estimates(None).unwrap().len(), 13);
    }

    #[test]
    fn partial_tokens_do_not_match() {
        assert!(select_estimates(Some("L2")).is_err());
        assert!(select_estimates(Some("L3.2-hol")).is_err());
        assert!(select_estimates(Some("L9.9")).is_err());
    }

    #[test]
    fn selection_keeps_canonical_order() {
        let ids = select_estimates(Some("L4.2,L3.2")).unwrap();
        assert_eq!(ids, vec![DSV_HOLDER_ID.to_string(), DSV_T_HOLDER_ID.to_string()]);
    }
}
