use std::fs;

use aoi_core::closed_form::{moments_closed_form, ClosedFormError, RationalMgf};
use aoi_core::document::{parse_model, ModelDocument};
use aoi_core::shs::{aoi_moments, mgf_vectors, solve_report, stationary_distribution, ShsError};
use aoi_core::sim::{run_simulation, SimConfig};
use aoi_core::tandem::build;
use aoi_core::{Policy, SinkHandoff};

use crate::args::{ExportArgs, MgfArgs, MomentsArgs, SimArgs, SimulateArgs, SolveArgs, SystemArgs};
use crate::csv::{fmt_num, CsvWriter};
use crate::CliError;

pub const MGF_HEADER: [&str; 3] = ["s", "method", "value"];
pub const MOMENTS_HEADER: [&str; 3] = ["order", "method", "value"];

/// Marker for an `s` at or beyond the first pole.
pub const ERR_DOMAIN: &str = "ERR_DOMAIN";
/// Marker for a method with no result for the policy (no closed form for
/// the replace handoff).
pub const NOT_AVAILABLE: &str = "NA";

fn has_closed_form(policy: Policy) -> bool {
    policy != Policy::Blocking(SinkHandoff::Replace)
}

pub fn mgf(args: &MgfArgs) -> Result<String, CliError> {
    let params = args.system.tracked_params()?;
    let policy = args.system.policy();
    let model = build(&params, policy)?;
    let pi = stationary_distribution(&model)?;
    let closed = has_closed_form(policy)
        .then(|| RationalMgf::for_policy(&params, policy))
        .transpose()?;
    let mut w = CsvWriter::new(Vec::new(), &MGF_HEADER)?;
    for &s in &args.s {
        let s_text = fmt_num(s);
        let closed_value = match &closed {
            None => NOT_AVAILABLE.to_string(),
            Some(c) => match c.eval(s) {
                Ok(v) => fmt_num(v),
                Err(
                    ClosedFormError::DomainExceeded { .. } | ClosedFormError::PoleProximity { .. },
                ) => ERR_DOMAIN.to_string(),
                Err(e) => return Err(e.into()),
            },
        };
        let engine_value = match mgf_vectors(&model, &pi, s) {
            Ok(v) => fmt_num(v.component_sum(model.aoi_component())),
            Err(ShsError::DomainExceeded { .. }) => ERR_DOMAIN.to_string(),
            Err(e) => return Err(e.into()),
        };
        w.row(&[s_text.as_str(), "closed_form", &closed_value])?;
        w.row(&[s_text.as_str(), "shs_engine", &engine_value])?;
    }
    Ok(String::from_utf8(w.into_inner()).expect("utf8"))
}

pub fn moments(args: &MomentsArgs) -> Result<String, CliError> {
    let params = args.system.tracked_params()?;
    let policy = args.system.policy();
    let m = args.order;
    let engine = aoi_moments(&build(&params, policy)?, m)?;
    let closed = has_closed_form(policy)
        .then(|| moments_closed_form(&params, policy, m))
        .transpose()?;
    let mut w = CsvWriter::new(Vec::new(), &MOMENTS_HEADER)?;
    let emit =
        |w: &mut CsvWriter<Vec<u8>>, order: &str, c: Option<f64>, e: f64| -> std::io::Result<()> {
            let c = c.map_or(NOT_AVAILABLE.to_string(), fmt_num);
            w.row(&[order, "closed_form", &c])?;
            w.row(&[order, "shs_engine", &fmt_num(e)])
        };
    let first = if m == 0 { 0 } else { 1 };
    for k in first..=m {
        emit(
            &mut w,
            &k.to_string(),
            closed.as_ref().map(|c| c[k]),
            engine[k],
        )?;
    }
    if m >= 2 {
        let std = |v: &[f64]| (v[2] - v[1] * v[1]).max(0.0).sqrt();
        emit(&mut w, "std", closed.as_deref().map(std), std(&engine))?;
    }
    Ok(String::from_utf8(w.into_inner()).expect("utf8"))
}

pub fn sim_config(
    system: &SystemArgs,
    sim: &SimArgs,
    mgf_points: Vec<f64>,
) -> Result<SimConfig, CliError> {
    let config = SimConfig {
        source: system.source,
        warmup: sim.warmup,
        seed: sim.seed,
        replications: sim.replications,
        mgf_points,
        ..SimConfig::new(system.params()?, system.policy(), sim.horizon.0)
    };
    config.validate()?;
    Ok(config)
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let config = sim_config(&args.system, &args.sim_args, args.mgf_points.clone())?;
    let est = run_simulation(&config)?;
    Ok(serde_json::to_string_pretty(&est)? + "\n")
}

pub fn export(args: &ExportArgs) -> Result<String, CliError> {
    let model = build(&args.system.tracked_params()?, args.system.policy())?;
    Ok(ModelDocument::from_model(&model).to_json() + "\n")
}

pub fn solve(args: &SolveArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&args.path)
        .map_err(|e| CliError(format!("cannot read {}: {e}", args.path.display())))?;
    let model =
        parse_model(&text).map_err(|e| CliError(format!("{}: {e}", args.path.display())))?;
    let report = solve_report(&model, args.order, &args.s)?;
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}
