//! Configuration rule checking.
//!
//! Three rules decide whether a configuration can be generated:
//!
//! * **R1** a Delta multistage mpNoC needs a power-of-two PE count.
//! * **R2** a single row of PEs only admits the linear and ring networks.
//! * **R3** more than one row only admits the mesh, torus and Xnet networks.
//!
//! Every applicable rule is checked; the report lists violations in rule
//! order.

use std::fmt;

use crate::config::{MpNocKind, MppSoCConfig, Neighborhood};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    R1,
    R2,
    R3,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleId::R1 => "R1",
            RuleId::R2 => "R2",
            RuleId::R3 => "R3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleViolation {
    pub rule: RuleId,
    pub message: String,
    pub rows: u32,
    pub cols: u32,
    pub neighborhood: Option<Neighborhood>,
    pub mpnoc: Option<MpNocKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    violations: Vec<RuleViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[RuleViolation] {
        &self.violations
    }

    pub fn rules(&self) -> Vec<RuleId> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return writeln!(f, "VALID");
        }
        writeln!(f, "INVALID ({} violation(s))", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.rule, v.message)?;
        }
        Ok(())
    }
}

/// Checks `config` against R1, R2 and R3.
pub fn validate(config: &MppSoCConfig) -> ValidationReport {
    let mut violations = Vec::new();
    let (rows, cols) = (config.rows, config.cols);
    let pes = rows as u64 * cols as u64;
    let violation = |rule, message: String| RuleViolation {
        rule,
        message,
        rows,
        cols,
        neighborhood: config.neighborhood,
        mpnoc: config.mpnoc,
    };

    if let Some(noc) = config.mpnoc {
        if noc.is_delta() && !pes.is_power_of_two() {
            violations.push(violation(
                RuleId::R1,
                format!("{noc} needs a power-of-two PE count, got {rows}x{cols} = {pes}"),
            ));
        }
    }

    if let Some(net) = config.neighborhood {
        if rows == 1 && !net.is_one_dimensional() {
            violations.push(violation(
                RuleId::R2,
                format!("a single PE row only supports linear or ring, got {net}"),
            ));
        }
        if rows > 1 && net.is_one_dimensional() {
            violations.push(violation(
                RuleId::R3,
                format!("{rows} PE rows only support mesh2d, torus2d or xnet, got {net}"),
            ));
        }
    }

    ValidationReport { violations }
}
