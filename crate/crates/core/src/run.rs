//! Executes a validated [`RunConfig`].

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::{CheckName, RunConfig};
use crate::lifted::LiftedStructure;
use crate::report::{Report, Timing, REPORT_SCHEMA};
use crate::spaceform::check_space_form;
use crate::verify::{self, CheckReport, Sample};

pub fn run_check(
    ls: &LiftedStructure,
    sample: &Sample,
    check: CheckName,
    tol: f64,
) -> crate::Result<CheckReport> {
    match check {
        CheckName::SpaceForm => {
            check_space_form(ls.manifold(), &sample.base_points(), sample.seed, tol)
        }
        CheckName::AlmostProduct => verify::check_almost_product(ls, sample, tol),
        CheckName::Integrability => verify::check_integrability(ls, sample, tol),
        CheckName::Compatibility => verify::check_compatibility(ls, sample, tol),
        CheckName::Closure => verify::check_closure(ls, sample, tol),
        CheckName::DomegaAgreement => verify::check_domega_agreement(ls, sample, tol),
        CheckName::ParaKahler => verify::check_para_kahler(ls, sample, tol),
    }
}

fn run_checks(cfg: &RunConfig) -> crate::Result<Vec<CheckReport>> {
    let ls = cfg.build()?;
    let sample = verify::sample_points(ls.manifold(), &cfg.sampler())?;
    cfg.checks
        .iter()
        .map(|&c| run_check(&ls, &sample, c, cfg.tolerance(c)))
        .collect()
}

/// Runs every configured check. Domain and coefficient errors end up in
/// [`Report::error`] rather than aborting.
pub fn run(cfg: &RunConfig) -> Report {
    let start = Instant::now();
    let (checks, error) = match run_checks(cfg) {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let echo = RunConfig {
        output: None,
        ..cfg.clone()
    };
    Report {
        schema: REPORT_SCHEMA.to_string(),
        library_version: crate::VERSION.to_string(),
        config: serde_json::to_value(&echo).expect("config serializes"),
        all_passed: error.is_none() && checks.iter().all(CheckReport::passed),
        checks,
        error,
        timing: Timing {
            unix_time_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, SHIPPED_CONFIGS};

    #[test]
    fn shipped_configs_pass() {
        for (name, _, text) in SHIPPED_CONFIGS {
            let report = run(&parse_config(text).unwrap());
            assert_eq!(report.exit_code(), 0, "{name}\n{}", report.summary());
        }
    }

    #[test]
    fn domain_error_becomes_failed_run() {
        let text = r#"{
            "manifold": {"model": "conformal_ball", "n": 3, "c": 1},
            "coefficients": {"a1": {"preset": "affine", "intercept": 1, "slope": -1}},
            "checks": ["integrability"]
        }"#;
        let report = run(&parse_config(text).unwrap());
        assert_eq!(report.exit_code(), 2);
        assert!(report.error.is_some());
        assert!(report.summary().contains("error:"));
    }
}
