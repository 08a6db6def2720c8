//! JSON and text renderings of reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::game::{CertificationReport, Check, GuessArgmax, Scenario};
use crate::observables::{MagicSquare, MagicStar};
use crate::simulator::EmpiricalReport;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Serialize)]
pub struct InequalitySummary {
    pub name: String,
    pub quantum_value: f64,
    pub classical_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSection {
    pub rounds: usize,
    pub seed: u64,
    pub empirical: EmpiricalReport,
}

/// Document emitted by `certify` and `simulate`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub scenario: Scenario,
    pub state_descriptor: String,
    pub tolerance: f64,
    pub inequality: InequalitySummary,
    pub win_probability: f64,
    pub guessing_probability: f64,
    pub guessing_argmax: GuessArgmax,
    pub min_entropy_bits: f64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl ReportDocument {
    pub fn from_certification(rep: &CertificationReport, tolerance: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            scenario: rep.scenario,
            state_descriptor: rep.state_descriptor.clone(),
            tolerance,
            inequality: InequalitySummary {
                name: rep.inequality_name().to_string(),
                quantum_value: rep.delta_or_beta,
                classical_bound: rep.classical_bound,
            },
            win_probability: rep.win_probability,
            guessing_probability: rep.guessing_probability,
            guessing_argmax: rep.argmax.clone(),
            min_entropy_bits: rep.min_entropy_bits,
            checks: rep.checks.clone(),
            simulation: None,
            generated_at: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Document emitted by `verify-square` / `verify-star`.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationDocument {
    pub schema_version: String,
    pub scenario: Scenario,
    pub random_states: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub all_pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

pub fn square_grid_text(sq: &MagicSquare) -> String {
    let mut s = String::new();
    for row in sq.grid() {
        let cells: Vec<_> = row
            .iter()
            .map(|o| format!("{:<2} = {:<2}", o.label(), o.factor_string()))
            .collect();
        let _ = writeln!(s, "  {}", cells.join("   "));
    }
    s
}

pub fn star_edges_text(star: &MagicStar) -> String {
    let mut s = String::new();
    for e in star.edges() {
        let members: Vec<_> = e.members().iter().map(|o| o.label()).collect();
        let _ = writeln!(
            s,
            "  {} = {{{}}}  product {}I",
            e.label(),
            members.join(", "),
            if e.expected_product_sign() < 0 { "-" } else { "+" }
        );
    }
    s
}

fn checks_text(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "  [{}] {} (tol {:e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.tolerance
        );
    }
    s
}

pub fn tables_text(sq: &MagicSquare, star: &MagicStar) -> String {
    format!(
        "magic square (rows +I, columns -I):\n{}\nmagic star:\n{}",
        square_grid_text(sq),
        star_edges_text(star)
    )
}

pub fn report_text(doc: &ReportDocument) -> String {
    let mut s = String::new();
    match doc.scenario {
        Scenario::Square => {
            let _ = writeln!(s, "magic square:\n{}", square_grid_text(&MagicSquare::new()));
        }
        Scenario::Star => {
            let _ = writeln!(s, "magic star:\n{}", star_edges_text(&MagicStar::new()));
        }
    }
    let _ = writeln!(s, "state: {}", doc.state_descriptor);
    let _ = writeln!(
        s,
        "{} = {:.12} (noncontextual bound {})",
        doc.inequality.name, doc.inequality.quantum_value, doc.inequality.classical_bound
    );
    let _ = writeln!(s, "win probability = {:.12}", doc.win_probability);
    let _ = writeln!(
        s,
        "guessing probability = {:.12} at inputs {} outcomes {}",
        doc.guessing_probability, doc.guessing_argmax.inputs, doc.guessing_argmax.outcomes
    );
    let _ = writeln!(s, "min-entropy = {:.12} bits", doc.min_entropy_bits);
    if let Some(sim) = &doc.simulation {
        let e = &sim.empirical;
        let _ = writeln!(s, "simulation: {} rounds, seed {}", sim.rounds, sim.seed);
        if let Some(ineq) = e.inequality {
            let _ = writeln!(s, "  empirical {} = {:.6} ± {:.6}", doc.inequality.name, ineq.value, ineq.std_error);
        }
        let _ = writeln!(s, "  empirical win rate = {:.6} ± {:.6}", e.win_probability.value, e.win_probability.std_error);
        let _ = writeln!(
            s,
            "  empirical G = {:.6} ± {:.6}, H = {:.6} bits",
            e.guessing_probability.value, e.guessing_probability.std_error, e.min_entropy_bits
        );
        let _ = writeln!(s, "  forbidden outcomes = {}", e.forbidden_outcomes);
    }
    let _ = write!(s, "checks:\n{}", checks_text(&doc.checks));
    s
}

pub fn verification_text(doc: &VerificationDocument) -> String {
    format!(
        "verify-{} ({} random states, seed {}): {}\n{}",
        doc.scenario,
        doc.random_states,
        doc.seed,
        if doc.all_pass { "all checks pass" } else { "FAILURES" },
        checks_text(&doc.checks)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::maximally_mixed;
    use crate::game::certify;

    #[test]
    fn report_json_fields() {
        let rho = maximally_mixed(2).unwrap();
        let rep = certify(Scenario::Square, &rho, "maximally-mixed", 1e-9).unwrap();
        let doc = ReportDocument::from_certification(&rep, 1e-9);
        let v = serde_json::to_value(&doc).unwrap();
        assert_eq!(v["schema_version"], "1.0");
        assert_eq!(v["scenario"], "square");
        assert_eq!(v["inequality"]["name"], "delta");
        assert_eq!(v["inequality"]["classical_bound"], 4.0);
        assert!(v.get("simulation").is_none());
        assert!(v.get("generated_at").is_none());
        assert!(v["checks"][0]["tolerance"].is_number());
    }

    #[test]
    fn grid_text_layout() {
        let text = square_grid_text(&MagicSquare::new());
        let first = text.lines().next().unwrap();
        assert!(first.contains("C1 = YZ"));
        assert!(first.trim_end().ends_with("A1 = XX"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(star_edges_text(&MagicStar::new()).lines().count(), 5);
    }
}
