use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::config::MppSoCConfig;
use crate::kv;
use crate::mpnoc::{build_network, Endpoint, Message, MpNocError, MpNocMode, MpNocNetwork};
use crate::topology::{build_topology, Direction, TopologyError, TopologyGraph};

use super::cost::CostModel;
use super::program::{DstExpr, Instruction, SimProgram, REGISTERS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Network(#[from] MpNocError),
    #[error("line {line}: direction {dir} is not available on this machine")]
    DirectionUnavailable { line: usize, dir: Direction },
    #[error("line {line}: the machine has no mpNoC")]
    NocUnavailable { line: usize },
    #[error("line {line}: PE {pe}: byte address {addr} outside its {bytes}-byte memory")]
    MemoryOutOfBounds {
        line: usize,
        pe: usize,
        addr: u64,
        bytes: u64,
    },
    #[error("line {line}: PE {pe} targets port {dst}, machine has {ports} PEs")]
    PortOutOfRange {
        line: usize,
        pe: usize,
        dst: i64,
        ports: usize,
    },
    #[error("line {line}: device input queue is empty")]
    DeviceInputExhausted { line: usize },
}

impl SimError {
    pub fn line(&self) -> Option<usize> {
        match self {
            SimError::Topology(_) | SimError::Network(_) => None,
            SimError::DirectionUnavailable { line, .. }
            | SimError::NocUnavailable { line }
            | SimError::MemoryOutOfBounds { line, .. }
            | SimError::PortOutOfRange { line, .. }
            | SimError::DeviceInputExhausted { line } => Some(*line),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep the final register file and mask in the report.
    pub snapshot: bool,
}

/// Final machine state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub regs: Vec<[u32; REGISTERS]>,
    pub active: Vec<bool>,
    pub acu: [u32; REGISTERS],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub cycles: u64,
    pub instructions: usize,
    /// Cycles charged to each executed instruction, in order.
    pub charges: Vec<u64>,
    pub movd_hops: usize,
    pub noc_passes: usize,
    /// mpNoC passes of each executed instruction (0 unless NOCSEND).
    pub passes_by_instruction: Vec<usize>,
    pub snapshot: Option<Snapshot>,
}

impl SimReport {
    pub fn to_kv(&self) -> String {
        let mut w = kv::Writer::new();
        w.put("report", "simulate")
            .put("cycles", self.cycles)
            .put("instructions", self.instructions)
            .put("movd_hops", self.movd_hops)
            .put("noc_passes", self.noc_passes);
        w.finish()
    }
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "cycles={} instructions={} movd_hops={} noc_passes={}",
            self.cycles, self.instructions, self.movd_hops, self.noc_passes
        )
    }
}

/// SIMD machine: one ACU broadcasting to a grid of PEs.
///
/// Every PE has eight 32-bit registers and a byte-addressed local memory
/// (little-endian words). Masked-off PEs ignore ADD/LD/ST/LDI/MOVD and do
/// not send on the mpNoC, but still receive mpNoC payloads addressed to them.
#[derive(Debug, Clone)]
pub struct SimMachine {
    rows: usize,
    cols: usize,
    costs: CostModel,
    topology: Option<TopologyGraph>,
    noc: Option<MpNocNetwork>,
    mem_bytes: u64,
    regs: Vec<[u32; REGISTERS]>,
    // grown on demand up to `mem_bytes`
    memory: Vec<Vec<u8>>,
    active: Vec<bool>,
    acu: [u32; REGISTERS],
    boundary: u32,
    device_in: VecDeque<u32>,
    device_out: Vec<u32>,
}

impl SimMachine {
    pub fn new(config: &MppSoCConfig, costs: CostModel) -> Result<Self, SimError> {
        let rows = config.rows as usize;
        let cols = config.cols as usize;
        let n = rows * cols;
        let topology = config
            .neighborhood
            .map(|k| build_topology(k, rows, cols))
            .transpose()?;
        let noc = config.mpnoc.map(|k| build_network(k, n)).transpose()?;
        Ok(SimMachine {
            rows,
            cols,
            costs,
            topology,
            noc,
            mem_bytes: config.pe_mem_bytes,
            regs: vec![[0; REGISTERS]; n],
            memory: vec![Vec::new(); n],
            active: vec![true; n],
            acu: [0; REGISTERS],
            boundary: 0,
            device_in: VecDeque::new(),
            device_out: Vec::new(),
        })
    }

    pub fn pe_count(&self) -> usize {
        self.regs.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn costs(&self) -> &CostModel {
        &self.costs
    }

    pub fn topology(&self) -> Option<&TopologyGraph> {
        self.topology.as_ref()
    }

    pub fn noc(&self) -> Option<&MpNocNetwork> {
        self.noc.as_ref()
    }

    /// Value MOVD delivers where there is no active sender.
    pub fn set_boundary(&mut self, value: u32) {
        self.boundary = value;
    }

    pub fn reg(&self, pe: usize, r: usize) -> u32 {
        self.regs[pe][r]
    }

    pub fn set_reg(&mut self, pe: usize, r: usize, value: u32) {
        self.regs[pe][r] = value;
    }

    pub fn acu_reg(&self, r: usize) -> u32 {
        self.acu[r]
    }

    pub fn set_acu_reg(&mut self, r: usize, value: u32) {
        self.acu[r] = value;
    }

    pub fn is_active(&self, pe: usize) -> bool {
        self.active[pe]
    }

    pub fn push_device_input(&mut self, words: impl IntoIterator<Item = u32>) {
        self.device_in.extend(words);
    }

    pub fn device_output(&self) -> &[u32] {
        &self.device_out
    }

    fn check_addr(&self, line: usize, pe: usize, addr: u64) -> Result<usize, SimError> {
        match addr.checked_add(4) {
            Some(end) if end <= self.mem_bytes => Ok(addr as usize),
            _ => Err(SimError::MemoryOutOfBounds {
                line,
                pe,
                addr,
                bytes: self.mem_bytes,
            }),
        }
    }

    pub fn write_word(&mut self, pe: usize, addr: u64, value: u32) -> Result<(), SimError> {
        self.store(0, pe, addr, value)
    }

    pub fn read_word(&self, pe: usize, addr: u64) -> Result<u32, SimError> {
        self.load(0, pe, addr)
    }

    fn store(&mut self, line: usize, pe: usize, addr: u64, value: u32) -> Result<(), SimError> {
        let a = self.check_addr(line, pe, addr)?;
        let mem = &mut self.memory[pe];
        if mem.len() < a + 4 {
            mem.resize(a + 4, 0);
        }
        mem[a..a + 4].copy_from_slice(&value.to_le_bytes());
        Ok(())
    }

    fn load(&self, line: usize, pe: usize, addr: u64) -> Result<u32, SimError> {
        let a = self.check_addr(line, pe, addr)?;
        let mem = &self.memory[pe];
        let mut bytes = [0u8; 4];
        for (k, b) in bytes.iter_mut().enumerate() {
            *b = mem.get(a + k).copied().unwrap_or(0);
        }
        Ok(u32::from_le_bytes(bytes))
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            regs: self.regs.clone(),
            active: self.active.clone(),
            acu: self.acu,
        }
    }

    pub fn run(&mut self, program: &SimProgram) -> Result<SimReport, SimError> {
        self.run_with(program, RunOptions::default())
    }

    /// Executes `program` to its HALT. State persists between runs.
    pub fn run_with(
        &mut self,
        program: &SimProgram,
        options: RunOptions,
    ) -> Result<SimReport, SimError> {
        let mut report = SimReport {
            cycles: 0,
            instructions: 0,
            charges: Vec::new(),
            movd_hops: 0,
            noc_passes: 0,
            passes_by_instruction: Vec::new(),
            snapshot: None,
        };
        for (pc, &inst) in program.instructions().iter().enumerate() {
            let line = program.line_of(pc);
            let before = report.noc_passes;
            let extra = self.step(line, inst, &mut report)?;
            report
                .passes_by_instruction
                .push(report.noc_passes - before);
            let charge = self.costs.issue + extra;
            report.charges.push(charge);
            report.cycles += charge;
            report.instructions += 1;
            if inst == Instruction::Halt {
                break;
            }
        }
        if options.snapshot {
            report.snapshot = Some(self.snapshot());
        }
        Ok(report)
    }

    /// Executes one instruction; returns its cycles beyond `issue`.
    fn step(
        &mut self,
        line: usize,
        inst: Instruction,
        report: &mut SimReport,
    ) -> Result<u64, SimError> {
        let n = self.pe_count();
        match inst {
            Instruction::Ldi { rd, imm } => {
                for pe in (0..n).filter(|&p| self.active[p]) {
                    self.regs[pe][rd.index()] = imm;
                }
                Ok(0)
            }
            Instruction::Ld { rd, addr } => {
                for pe in (0..n).filter(|&p| self.active[p]) {
                    self.regs[pe][rd.index()] = self.load(line, pe, addr)?;
                }
                Ok(self.costs.mem)
            }
            Instruction::St { rs, addr } => {
                for pe in 0..n {
                    if !self.active[pe] {
                        continue;
                    }
                    let v = self.regs[pe][rs.index()];
                    self.store(line, pe, addr, v)?;
                }
                Ok(self.costs.mem)
            }
            Instruction::Add { rd, ra, rb } => {
                for pe in (0..n).filter(|&p| self.active[p]) {
                    let r = &mut self.regs[pe];
                    r[rd.index()] = r[ra.index()].wrapping_add(r[rb.index()]);
                }
                Ok(self.costs.alu)
            }
            Instruction::Movd { r, dir } => {
                let topo = match &self.topology {
                    Some(t) if t.has_direction(dir) => t,
                    _ => return Err(SimError::DirectionUnavailable { line, dir }),
                };
                let ri = r.index();
                let incoming: Vec<u32> = (0..n)
                    .map(|pe| match topo.neighbor_index(pe, dir.opposite()) {
                        Some(src) if self.active[src] => self.regs[src][ri],
                        _ => self.boundary,
                    })
                    .collect();
                for pe in (0..n).filter(|&p| self.active[p]) {
                    self.regs[pe][ri] = incoming[pe];
                }
                report.movd_hops += 1;
                Ok(self.costs.hop)
            }
            Instruction::NocSend { mode, dst, r } => {
                if self.noc.is_none() {
                    return Err(SimError::NocUnavailable { line });
                }
                let messages = self.noc_messages(line, mode, dst, r.index())?;
                let noc = self.noc.as_ref().expect("checked above");
                let outcome = noc.transfer(mode, &messages, &self.costs.noc)?;
                for d in &outcome.deliveries {
                    match d.dst {
                        Endpoint::Pe(pe) => self.regs[pe][r.index()] = d.payload,
                        Endpoint::Acu => self.acu[r.index()] = d.payload,
                        Endpoint::Device => self.device_out.push(d.payload),
                    }
                }
                report.noc_passes += outcome.passes;
                Ok(outcome.latency)
            }
            Instruction::Mask(p) => {
                let cols = self.cols;
                for (pe, a) in self.active.iter_mut().enumerate() {
                    *a = p.holds(pe, cols);
                }
                Ok(0)
            }
            Instruction::Unmask => {
                self.active.iter_mut().for_each(|a| *a = true);
                Ok(0)
            }
            Instruction::Halt => Ok(0),
        }
    }

    fn noc_messages(
        &mut self,
        line: usize,
        mode: MpNocMode,
        dst: DstExpr,
        r: usize,
    ) -> Result<Vec<Message>, SimError> {
        let n = self.pe_count();
        let targets: Vec<usize> = match dst {
            DstExpr::All => (0..n).filter(|&p| self.active[p]).collect(),
            DstExpr::Pe(k) if mode != MpNocMode::PeToPe => {
                if k >= n {
                    return Err(SimError::PortOutOfRange {
                        line,
                        pe: k,
                        dst: k as i64,
                        ports: n,
                    });
                }
                vec![k]
            }
            _ => Vec::new(),
        };
        let mut out = Vec::new();
        match mode {
            MpNocMode::PeToPe => {
                for pe in (0..n).filter(|&p| self.active[p]) {
                    let d = match dst.eval(pe) {
                        Some(d) if d < n => d,
                        _ => {
                            let raw = match dst {
                                DstExpr::Offset(o) => pe as i64 + o,
                                DstExpr::Pe(k) => k as i64,
                                DstExpr::Xor(m) => (pe ^ m) as i64,
                                DstExpr::All => pe as i64,
                            };
                            return Err(SimError::PortOutOfRange {
                                line,
                                pe,
                                dst: raw,
                                ports: n,
                            });
                        }
                    };
                    out.push(Message {
                        src: Endpoint::Pe(pe),
                        dst: Endpoint::Pe(d),
                        payload: self.regs[pe][r],
                    });
                }
            }
            MpNocMode::AcuToPe => {
                for pe in targets {
                    out.push(Message {
                        src: Endpoint::Acu,
                        dst: Endpoint::Pe(pe),
                        payload: self.acu[r],
                    });
                }
            }
            MpNocMode::DeviceToPe => {
                for pe in targets {
                    let payload = self
                        .device_in
                        .pop_front()
                        .ok_or(SimError::DeviceInputExhausted { line })?;
                    out.push(Message {
                        src: Endpoint::Device,
                        dst: Endpoint::Pe(pe),
                        payload,
                    });
                }
            }
        }
        Ok(out)
    }
}
