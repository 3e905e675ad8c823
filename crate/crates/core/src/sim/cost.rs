use std::fmt;

use thiserror::Error;

use crate::kv;
use crate::mpnoc::NocCostModel;

/// Cycle charges of the simulator.
///
/// Every instruction pays `issue`; ADD additionally pays `alu`, LD/ST pay
/// `mem`, MOVD pays `hop` and NOCSEND pays the router transfer latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub issue: u64,
    pub alu: u64,
    pub mem: u64,
    pub hop: u64,
    pub noc: NocCostModel,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            issue: 1,
            alu: 1,
            mem: 1,
            hop: 1,
            noc: NocCostModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostModelError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown cost `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: `{value}` is not a cycle count")]
    BadValue { value: String, line: usize },
}

impl CostModel {
    /// Reads overrides from `key = value` text; keys not given keep their
    /// defaults. Keys: `issue`, `alu`, `mem`, `hop`, `noc_transit`,
    /// `bus_grant`, `noc_mode_config`.
    pub fn parse(text: &str) -> Result<Self, CostModelError> {
        let mut model = CostModel::default();
        for e in kv::parse(text).map_err(|e| CostModelError::Syntax { line: e.line })? {
            let value: u64 = e.value.parse().map_err(|_| CostModelError::BadValue {
                value: e.value.to_string(),
                line: e.line,
            })?;
            let slot = match e.key {
                "issue" => &mut model.issue,
                "alu" => &mut model.alu,
                "mem" => &mut model.mem,
                "hop" => &mut model.hop,
                "noc_transit" => &mut model.noc.transit_per_pass,
                "bus_grant" => &mut model.noc.bus_per_pass,
                "noc_mode_config" => &mut model.noc.mode_config,
                other => {
                    return Err(CostModelError::UnknownKey {
                        key: other.to_string(),
                        line: e.line,
                    })
                }
            };
            *slot = value;
        }
        Ok(model)
    }

    pub fn to_kv(&self) -> String {
        let mut w = kv::Writer::new();
        w.put("issue", self.issue)
            .put("alu", self.alu)
            .put("mem", self.mem)
            .put("hop", self.hop)
            .put("noc_transit", self.noc.transit_per_pass)
            .put("bus_grant", self.noc.bus_per_pass)
            .put("noc_mode_config", self.noc.mode_config);
        w.finish()
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_round_trip() {
        let m = CostModel::parse("hop = 3\nnoc_transit=10\n").unwrap();
        assert_eq!(m.hop, 3);
        assert_eq!(m.noc.transit_per_pass, 10);
        assert_eq!(m.issue, 1);
        assert_eq!(CostModel::parse(&m.to_kv()), Ok(m));
    }

    #[test]
    fn errors() {
        assert_eq!(
            CostModel::parse("warp=1"),
            Err(CostModelError::UnknownKey {
                key: "warp".into(),
                line: 1
            })
        );
        assert_eq!(
            CostModel::parse("hop=-1"),
            Err(CostModelError::BadValue {
                value: "-1".into(),
                line: 1
            })
        );
        assert_eq!(
            CostModel::parse("\nhop"),
            Err(CostModelError::Syntax { line: 2 })
        );
    }
}
