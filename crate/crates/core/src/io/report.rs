//! Ranking of nonlinear-node placements and run manifests.

use std::cmp::Ordering;
use std::path::Path;

use serde::Serialize;

use super::config::{Config, NetworkFile};
use super::tables::{fmt_f64, write_table};
use crate::error::{Error, Result};
use crate::network::{dominant_mode, modal_decompose};
use crate::slowflow::trigger::{required_trigger_time, TriggerMethod};
use crate::slowflow::{
    bifurcation_values, epsilon_max_estimate, make_small_damping_model, uniform_asymptotes,
};

/// One candidate placement of the nonlinear node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRow {
    /// 1-based node label.
    pub q: usize,
    /// 1-based dominant mode.
    pub mode: Option<usize>,
    pub omega: Option<f64>,
    pub p2: Option<f64>,
    pub zeta_hb: Option<f64>,
    pub zeta_sn: Option<f64>,
    /// Uniform-damping Hopf and saddle-node values.
    pub mu_hb: Option<f64>,
    pub mu_sn: Option<f64>,
    pub eps_max: Option<f64>,
    pub t_req: Option<f64>,
    pub error: Option<String>,
}

fn evaluate(file: &NetworkFile, q: usize, delta: f64, forcing: f64) -> DesignRow {
    let mut row = DesignRow {
        q,
        mode: None,
        omega: None,
        p2: None,
        zeta_hb: None,
        zeta_sn: None,
        mu_hb: None,
        mu_sn: None,
        eps_max: None,
        t_req: None,
        error: None,
    };
    let mut errors = Vec::new();
    let result = (|| -> Result<()> {
        let mut f = file.clone();
        f.q = q;
        let model = f.build()?;
        let basis = modal_decompose(&model)?;
        let i = dominant_mode(&basis, model.q)?;
        row.mode = Some(i + 1);
        row.omega = Some(basis.omegas[i]);
        row.p2 = Some(basis.p[(model.q, i)].powi(2));
        let sf = make_small_damping_model(&basis, &model)?;
        let bv = bifurcation_values(&sf);
        row.zeta_hb = Some(bv.zeta_hb);
        row.zeta_sn = Some(bv.zeta_sn);
        let asym = uniform_asymptotes(&model, &basis)?;
        row.mu_hb = Some(asym.mu_hb);
        row.mu_sn = Some(asym.mu_sn);
        match epsilon_max_estimate(&model, &basis) {
            Ok((_, e)) => row.eps_max = Some(e),
            Err(e) => errors.push(e.to_string()),
        }
        let mut push = vec![0.0; model.n];
        push[model.q] = forcing;
        match required_trigger_time(&sf, &push, delta, TriggerMethod::ClosedForm) {
            Ok(plan) => row.t_req = Some(plan.t_req),
            Err(e) => errors.push(e.to_string()),
        }
        Ok(())
    })();
    if let Err(e) = result {
        errors.insert(0, e.to_string());
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Larger first, missing values last.
fn desc_some(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

fn asc_some(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => desc_some(a, b),
    }
}

/// Evaluates every placement of the nonlinear node and ranks them by the
/// ε_max estimate (largest first), then by trigger time, then by label.
/// Placements that fail keep their row with the failure recorded.
pub fn design_report(file: &NetworkFile, delta: f64, forcing: f64) -> Vec<DesignRow> {
    let mut rows: Vec<DesignRow> = (1..=file.n).map(|q| evaluate(file, q, delta, forcing)).collect();
    rows.sort_by(|a, b| {
        let eps = match (a.eps_max, b.eps_max) {
            // equal up to rounding counts as a tie
            (Some(x), Some(y)) if (x - y).abs() <= 1e-12 * x.abs().max(y.abs()) => Ordering::Equal,
            (x, y) => desc_some(x, y),
        };
        eps.then_with(|| asc_some(a.t_req, b.t_req)).then(a.q.cmp(&b.q))
    });
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_design_csv(rows: &[DesignRow], path: &Path) -> Result<()> {
    let header = [
        "rank", "Q", "mode", "omega", "p2", "zeta_hb", "zeta_sn", "mu_hb", "mu_sn", "eps_max",
        "t_req", "error",
    ]
    .map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            vec![
                (r + 1).to_string(),
                row.q.to_string(),
                row.mode.map(|m| m.to_string()).unwrap_or_default(),
                opt(row.omega),
                opt(row.p2),
                opt(row.zeta_hb),
                opt(row.zeta_sn),
                opt(row.mu_hb),
                opt(row.mu_sn),
                opt(row.eps_max),
                opt(row.t_req),
                row.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_table(path, &header, &body)
}

/// Everything needed to regenerate a run's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: u64,
    /// Resolved configuration with all defaults filled in.
    pub config: Config,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &Config, outputs: Vec<String>) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: config.clone(),
            outputs,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config;
    use crate::network::fixtures;

    fn file(json: &str) -> NetworkFile {
        parse_config(json, Path::new(".")).unwrap().network_file().clone()
    }

    #[test]
    fn four_node_symmetric_rows_match() {
        let rows = design_report(&file(fixtures::FOUR_NODE_JSON), 0.1, 1.0);
        let r1 = rows.iter().find(|r| r.q == 1).unwrap();
        let r4 = rows.iter().find(|r| r.q == 4).unwrap();
        // identical up to eigensolver rounding
        let close = |a: Option<f64>, b: Option<f64>| (a.unwrap() - b.unwrap()).abs() < 1e-12 * a.unwrap().abs();
        assert_eq!(r1.mode, r4.mode);
        for (a, b) in [
            (r1.omega, r4.omega),
            (r1.p2, r4.p2),
            (r1.zeta_hb, r4.zeta_hb),
            (r1.zeta_sn, r4.zeta_sn),
            (r1.mu_hb, r4.mu_hb),
            (r1.mu_sn, r4.mu_sn),
            (r1.eps_max, r4.eps_max),
            (r1.t_req, r4.t_req),
        ] {
            assert!(close(a, b), "{a:?} {b:?}");
        }
        let r2 = rows.iter().find(|r| r.q == 2).unwrap();
        assert!((r2.eps_max.unwrap() - 1.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn fifteen_node_ranks_q10_first() {
        let rows = design_report(&file(fixtures::FIFTEEN_NODE_JSON), 0.1, 1.0);
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[0].q, 10);
        for w in rows.windows(2) {
            if let (Some(a), Some(b)) = (w[0].eps_max, w[1].eps_max) {
                assert!(a >= b - 1e-12 * a);
            }
        }
    }

    #[test]
    fn failures_stay_in_row() {
        // δ above the threshold limit: trigger time unavailable, row kept
        let rows = design_report(&file(fixtures::FOUR_NODE_JSON), 10.0, 1.0);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.t_req.is_none() && r.error.is_some()));
        assert!(rows.iter().all(|r| r.eps_max.is_some()));
    }
}
