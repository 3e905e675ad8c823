//! Tree sum of one value per PE.
//!
//! Step `s` pairs PE `i` (with `i % 2^(s+1) == 0`) with PE `i + 2^s`; the
//! partner's partial sum is moved over and added in. After `log2 N` steps
//! PE 0 holds the total.

use std::fmt;

use thiserror::Error;

use crate::config::{MpNocKind, MppSoCConfig, Neighborhood};
use crate::kv;
use crate::mpnoc::MpNocMode;
use crate::topology::{Direction, PeId, TopologyGraph};

use super::cost::CostModel;
use super::machine::{SimError, SimMachine, SimReport};
use super::program::{CmpOp, Coord, DstExpr, Instruction, Predicate, Reg, SimProgram};

/// How partial sums travel between partners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    /// MOVD over the neighbourhood network.
    Neighborhood(Neighborhood),
    /// NOCSEND through the mpNoC.
    MpNoc(MpNocKind),
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transport::Neighborhood(k) => write!(f, "{k}"),
            Transport::MpNoc(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("reduction needs a power-of-two PE count, machine has {pes}")]
    NotPowerOfTwo { pes: usize },
    #[error("expected {expected} values (one per PE), got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("machine has no {0} network")]
    NoTransportAvailable(&'static str),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("machine result {machine} differs from the reference sum {reference}")]
    Diverged { machine: u32, reference: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    /// Reference sum, computed without wrap-around.
    pub result: i64,
    /// Register r1 of PE 0 after the run.
    pub pe_result: u32,
    pub transfer_add_steps: usize,
    pub total_cycles: u64,
    /// MOVD hops per step, or mpNoC passes per step when the transport is the
    /// mpNoC.
    pub per_step_hop_counts: Vec<usize>,
    pub transport: Transport,
    pub sim: SimReport,
}

impl ReductionReport {
    pub fn to_kv(&self) -> String {
        let hops: Vec<String> = self
            .per_step_hop_counts
            .iter()
            .map(usize::to_string)
            .collect();
        let mut w = kv::Writer::new();
        w.put("report", "simulate")
            .put("app", "reduce")
            .put("sum", self.result)
            .put("pe_result", self.pe_result)
            .put("steps", self.transfer_add_steps)
            .put("cycles", self.total_cycles)
            .put("instructions", self.sim.instructions)
            .put("transport", self.transport)
            .put("hops", hops.join(","));
        w.finish()
    }
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hops: Vec<String> = self
            .per_step_hop_counts
            .iter()
            .map(usize::to_string)
            .collect();
        writeln!(
            f,
            "sum={} steps={} cycles={} transport={} hops=[{}]",
            self.result,
            self.transfer_add_steps,
            self.total_cycles,
            self.transport,
            hops.join(",")
        )
    }
}

/// Default transport for `config`: the neighbourhood network when there is
/// one, the mpNoC otherwise.
pub fn default_transport(config: &MppSoCConfig) -> Option<Transport> {
    config
        .neighborhood
        .map(Transport::Neighborhood)
        .or(config.mpnoc.map(Transport::MpNoc))
}

fn axis_moves(
    forward: Direction,
    backward: Direction,
    dist: usize,
    size: usize,
    wraps: bool,
) -> Vec<Direction> {
    if wraps && size - dist < dist {
        vec![backward; size - dist]
    } else {
        vec![forward; dist]
    }
}

/// MOVD directions that bring the value of `from` to `to` (with `from`
/// south-east of `to` or level with it).
pub fn movd_path(topo: &TopologyGraph, from: PeId, to: PeId) -> Vec<Direction> {
    let dr = from.row - to.row;
    let dc = from.col - to.col;
    let (row_wrap, col_wrap) = match topo.kind() {
        Neighborhood::Ring => (false, true),
        Neighborhood::Torus2D => (true, true),
        _ => (false, false),
    };
    let diag = if topo.kind() == Neighborhood::Xnet {
        dr.min(dc)
    } else {
        0
    };
    let mut path = vec![Direction::NW; diag];
    path.extend(axis_moves(
        Direction::W,
        Direction::E,
        dc - diag,
        topo.cols(),
        col_wrap,
    ));
    path.extend(axis_moves(
        Direction::N,
        Direction::S,
        dr - diag,
        topo.rows(),
        row_wrap,
    ));
    path
}

fn reg(n: u8) -> Reg {
    Reg(n)
}

fn idx_mod(m: u64, value: u64) -> Predicate {
    Predicate::Compare {
        coord: Coord::Idx,
        modulus: Some(m),
        op: CmpOp::Eq,
        value,
    }
}

/// The reduction program plus the per-step MOVD hop counts (empty steps for
/// the mpNoC).
pub fn reduction_program(
    machine: &SimMachine,
    transport: Transport,
) -> Result<(SimProgram, Vec<usize>), ReduceError> {
    let n = machine.pe_count();
    if !n.is_power_of_two() {
        return Err(ReduceError::NotPowerOfTwo { pes: n });
    }
    let (r0, r1, r2) = (reg(0), reg(1), reg(2));
    let mut code = vec![
        Instruction::Ld { rd: r1, addr: 0 },
        Instruction::Ldi { rd: r0, imm: 0 },
    ];
    let mut hops = Vec::new();
    let steps = n.trailing_zeros();
    for s in 0..steps {
        let h = 1usize << s;
        let m = (h as u64) << 1;
        code.push(Instruction::Unmask);
        code.push(Instruction::Add {
            rd: r2,
            ra: r1,
            rb: r0,
        });
        match transport {
            Transport::Neighborhood(_) => {
                let topo = machine
                    .topology()
                    .ok_or(ReduceError::NoTransportAvailable("neighbourhood"))?;
                let path = movd_path(topo, topo.pe(h), topo.pe(0));
                hops.push(path.len());
                code.extend(path.into_iter().map(|dir| Instruction::Movd { r: r2, dir }));
            }
            Transport::MpNoc(_) => {
                machine
                    .noc()
                    .ok_or(ReduceError::NoTransportAvailable("mpNoC"))?;
                code.push(Instruction::Mask(idx_mod(m, h as u64)));
                code.push(Instruction::NocSend {
                    mode: MpNocMode::PeToPe,
                    dst: DstExpr::Offset(-(h as i64)),
                    r: r2,
                });
            }
        }
        code.push(Instruction::Mask(idx_mod(m, 0)));
        code.push(Instruction::Add {
            rd: r1,
            ra: r1,
            rb: r2,
        });
    }
    code.push(Instruction::Halt);
    let program = SimProgram::from_instructions(code).expect("program ends with HALT");
    Ok((program, hops))
}

/// Sums `values` (one per PE, in row-major order) on the simulated machine.
pub fn reduce_sum(
    config: &MppSoCConfig,
    values: &[i64],
    costs: &CostModel,
) -> Result<ReductionReport, ReduceError> {
    let transport = default_transport(config)
        .ok_or(ReduceError::NoTransportAvailable("neighbourhood or mpNoC"))?;
    reduce_sum_via(config, values, costs, transport)
}

/// [`reduce_sum`] over an explicit transport.
pub fn reduce_sum_via(
    config: &MppSoCConfig,
    values: &[i64],
    costs: &CostModel,
    transport: Transport,
) -> Result<ReductionReport, ReduceError> {
    let n = config.pe_count();
    if !n.is_power_of_two() {
        return Err(ReduceError::NotPowerOfTwo { pes: n });
    }
    if values.len() != n {
        return Err(ReduceError::ValueCount {
            expected: n,
            got: values.len(),
        });
    }
    let mut machine = SimMachine::new(config, *costs)?;
    let (program, movd_hops) = reduction_program(&machine, transport)?;
    for (pe, &v) in values.iter().enumerate() {
        machine.write_word(pe, 0, v as u32)?;
    }
    let sim = machine.run(&program)?;

    // Reference: the same pairing, without wrap-around.
    let mut shadow = values.to_vec();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            shadow[i] += shadow[i + h];
        }
        h *= 2;
    }
    let result = shadow.first().copied().unwrap_or(0);
    let pe_result = machine.reg(0, 1);
    if pe_result != result as u32 {
        return Err(ReduceError::Diverged {
            machine: pe_result,
            reference: result as u32,
        });
    }

    let per_step_hop_counts = match transport {
        Transport::Neighborhood(_) => movd_hops,
        Transport::MpNoc(_) => program
            .instructions()
            .iter()
            .zip(&sim.passes_by_instruction)
            .filter(|(i, _)| matches!(i, Instruction::NocSend { .. }))
            .map(|(_, &p)| p)
            .collect(),
    };
    Ok(ReductionReport {
        result,
        pe_result,
        transfer_add_steps: n.trailing_zeros() as usize,
        total_cycles: sim.cycles,
        per_step_hop_counts,
        transport,
        sim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(extra: &str) -> MppSoCConfig {
        parse_config(&format!("acu_mem_bytes=64\npe_mem_bytes=64\n{extra}")).unwrap()
    }

    #[test]
    fn sums_on_a_mesh() {
        let c = cfg("rows=4\ncols=4\nneighborhood=mesh2d\n");
        let values: Vec<i64> = (0..16).collect();
        let r = reduce_sum(&c, &values, &CostModel::default()).unwrap();
        assert_eq!((r.result, r.pe_result, r.transfer_add_steps), (120, 120, 4));
        assert_eq!(r.per_step_hop_counts, [1, 2, 1, 2]);
        assert_eq!(r.transport, Transport::Neighborhood(Neighborhood::Mesh2D));
    }

    #[test]
    fn ring_wraps_when_shorter() {
        let c = cfg("rows=1\ncols=8\nneighborhood=ring\n");
        let r = reduce_sum(&c, &[1, 2, 3, 4, 5, 6, 7, 8], &CostModel::default()).unwrap();
        assert_eq!(r.result, 36);
        assert_eq!(r.per_step_hop_counts, [1, 2, 4]);
        let c = cfg("rows=4\ncols=4\nneighborhood=torus2d\n");
        let r = reduce_sum(&c, &[1; 16], &CostModel::default()).unwrap();
        assert_eq!(
            (r.result, r.per_step_hop_counts.as_slice()),
            (16, &[1, 2, 1, 2][..])
        );
    }

    #[test]
    fn sums_through_the_noc() {
        let c = cfg("rows=2\ncols=4\nmpnoc=delta-omega\n");
        let r = reduce_sum(&c, &[-1, 2, -3, 4, -5, 6, -7, 8], &CostModel::default()).unwrap();
        assert_eq!((r.result, r.pe_result), (4, 4));
        assert_eq!(r.per_step_hop_counts.len(), 3);
        let bus = cfg("rows=1\ncols=8\nmpnoc=sharedbus\n");
        let r = reduce_sum(&bus, &[1; 8], &CostModel::default()).unwrap();
        assert_eq!(r.per_step_hop_counts, [4, 2, 1]);
    }

    #[test]
    fn negative_values_wrap_consistently() {
        let c = cfg("rows=1\ncols=2\nneighborhood=linear\n");
        let r = reduce_sum(&c, &[-5, 2], &CostModel::default()).unwrap();
        assert_eq!((r.result, r.pe_result), (-3, (-3i64) as u32));
    }

    #[test]
    fn cycle_count_matches_cost_model() {
        // LD(2) LDI(1) + per step UNMASK(1) ADD(2) MOVD(2 each) MASK(1) ADD(2) + HALT(1)
        let c = cfg("rows=1\ncols=4\nneighborhood=linear\n");
        let r = reduce_sum(&c, &[1, 1, 1, 1], &CostModel::default()).unwrap();
        assert_eq!(r.total_cycles, 3 + 2 * 6 + 2 * 3 + 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = cfg("rows=1\ncols=3\nneighborhood=ring\n");
        assert_eq!(
            reduce_sum(&c, &[1, 2, 3], &CostModel::default()),
            Err(ReduceError::NotPowerOfTwo { pes: 3 })
        );
        let c = cfg("rows=1\ncols=4\nneighborhood=ring\n");
        assert_eq!(
            reduce_sum(&c, &[1, 2], &CostModel::default()),
            Err(ReduceError::ValueCount {
                expected: 4,
                got: 2
            })
        );
        assert!(matches!(
            reduce_sum_via(
                &c,
                &[0; 4],
                &CostModel::default(),
                Transport::MpNoc(MpNocKind::Crossbar)
            ),
            Err(ReduceError::NoTransportAvailable(_))
        ));
    }

    #[test]
    fn single_pe() {
        let c = cfg("rows=1\ncols=1\nmpnoc=crossbar\n");
        let r = reduce_sum(&c, &[42], &CostModel::default()).unwrap();
        assert_eq!((r.result, r.transfer_add_steps, r.total_cycles), (42, 0, 4));
    }
}
