//! Assembly for the simulated machine.
//!
//! One instruction per line, operands separated by commas, `#` comments:
//!
//! ```text
//! LDI r0,5            # r0 <- 5 on every active PE
//! LD r1,0             # r1 <- word at byte address 0 of the PE memory
//! ST r1,4
//! ADD r1,r1,r2
//! MOVD r2,W           # send r2 west, receive r2 from the east
//! NOCSEND pe,idx-4,r2 # send r2 to PE idx-4 through the mpNoC
//! NOCSEND acu,all,r3  # ACU register r3 to every active PE
//! MASK idx%4==0       # also: all, even, odd, (idx even), row<2, col!=0 ...
//! UNMASK
//! HALT
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::mpnoc::MpNocMode;
use crate::topology::Direction;

pub const REGISTERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Reg(pub u8);

impl Reg {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Destination of a NOCSEND, evaluated per sending PE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DstExpr {
    /// Every active PE (ACU and device modes).
    All,
    Pe(usize),
    /// `idx + offset`
    Offset(i64),
    /// `idx ^ mask`
    Xor(usize),
}

impl DstExpr {
    /// Destination for sender `idx`; `None` if it falls below zero.
    pub fn eval(self, idx: usize) -> Option<usize> {
        match self {
            DstExpr::All => Some(idx),
            DstExpr::Pe(k) => Some(k),
            DstExpr::Offset(o) => usize::try_from(idx as i64 + o).ok(),
            DstExpr::Xor(m) => Some(idx ^ m),
        }
    }
}

impl fmt::Display for DstExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DstExpr::All => f.write_str("all"),
            DstExpr::Pe(k) => write!(f, "{k}"),
            DstExpr::Offset(0) => f.write_str("idx"),
            DstExpr::Offset(o) if o > 0 => write!(f, "idx+{o}"),
            DstExpr::Offset(o) => write!(f, "idx-{}", o.unsigned_abs()),
            DstExpr::Xor(m) => write!(f, "idx^{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    Idx,
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    const TOKENS: [(&'static str, CmpOp); 6] = [
        ("==", CmpOp::Eq),
        ("!=", CmpOp::Ne),
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
    ];

    fn apply(self, a: u64, b: u64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    fn token(self) -> &'static str {
        CmpOp::TOKENS
            .iter()
            .find(|(_, op)| *op == self)
            .map(|(t, _)| *t)
            .unwrap_or("==")
    }
}

/// Activity predicate `coord [% modulus] op value`, or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predicate {
    All,
    Compare {
        coord: Coord,
        modulus: Option<u64>,
        op: CmpOp,
        value: u64,
    },
}

impl Predicate {
    pub fn holds(self, idx: usize, cols: usize) -> bool {
        match self {
            Predicate::All => true,
            Predicate::Compare {
                coord,
                modulus,
                op,
                value,
            } => {
                let x = match coord {
                    Coord::Idx => idx,
                    Coord::Row => idx / cols,
                    Coord::Col => idx % cols,
                } as u64;
                let x = modulus.map_or(x, |m| x % m);
                op.apply(x, value)
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Predicate::All => f.write_str("all"),
            Predicate::Compare {
                coord,
                modulus,
                op,
                value,
            } => {
                f.write_str(match coord {
                    Coord::Idx => "idx",
                    Coord::Row => "row",
                    Coord::Col => "col",
                })?;
                if let Some(m) = modulus {
                    write!(f, "%{m}")?;
                }
                write!(f, "{}{value}", op.token())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Ldi {
        rd: Reg,
        imm: u32,
    },
    Ld {
        rd: Reg,
        addr: u64,
    },
    St {
        rs: Reg,
        addr: u64,
    },
    Add {
        rd: Reg,
        ra: Reg,
        rb: Reg,
    },
    Movd {
        r: Reg,
        dir: Direction,
    },
    NocSend {
        mode: MpNocMode,
        dst: DstExpr,
        r: Reg,
    },
    Mask(Predicate),
    Unmask,
    Halt,
}

fn mode_keyword(mode: MpNocMode) -> &'static str {
    match mode {
        MpNocMode::PeToPe => "pe",
        MpNocMode::AcuToPe => "acu",
        MpNocMode::DeviceToPe => "dev",
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::Ldi { rd, imm } => write!(f, "LDI {rd},{imm}"),
            Instruction::Ld { rd, addr } => write!(f, "LD {rd},{addr}"),
            Instruction::St { rs, addr } => write!(f, "ST {rs},{addr}"),
            Instruction::Add { rd, ra, rb } => write!(f, "ADD {rd},{ra},{rb}"),
            Instruction::Movd { r, dir } => write!(f, "MOVD {r},{dir}"),
            Instruction::NocSend { mode, dst, r } => {
                write!(f, "NOCSEND {},{dst},{r}", mode_keyword(mode))
            }
            Instruction::Mask(p) => write!(f, "MASK {p}"),
            Instruction::Unmask => f.write_str("UNMASK"),
            Instruction::Halt => f.write_str("HALT"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("line {line}: unknown mnemonic `{mnemonic}`")]
    UnknownMnemonic { line: usize, mnemonic: String },
    #[error("line {line}: bad operand: {detail}")]
    BadOperand { line: usize, detail: String },
    #[error("program does not end with HALT")]
    MissingHalt,
}

impl ProgramError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ProgramError::UnknownMnemonic { line, .. } | ProgramError::BadOperand { line, .. } => {
                Some(*line)
            }
            ProgramError::MissingHalt => None,
        }
    }
}

/// A loaded program with the source line of every instruction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimProgram {
    instructions: Vec<Instruction>,
    lines: Vec<usize>,
}

impl SimProgram {
    /// Builds a program from instructions; line numbers are 1-based
    /// positions.
    pub fn from_instructions(instructions: Vec<Instruction>) -> Result<Self, ProgramError> {
        if instructions.last() != Some(&Instruction::Halt) {
            return Err(ProgramError::MissingHalt);
        }
        let lines = (1..=instructions.len()).collect();
        Ok(SimProgram {
            instructions,
            lines,
        })
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Source line of instruction `pc`.
    pub fn line_of(&self, pc: usize) -> usize {
        self.lines.get(pc).copied().unwrap_or(0)
    }
}

impl fmt::Display for SimProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instructions {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

impl FromStr for SimProgram {
    type Err = ProgramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        load_program(s)
    }
}

struct LineParser {
    line: usize,
}

impl LineParser {
    fn bad(&self, detail: impl Into<String>) -> ProgramError {
        ProgramError::BadOperand {
            line: self.line,
            detail: detail.into(),
        }
    }

    fn arity<'a>(
        &self,
        ops: &'a [&'a str],
        n: usize,
        mnemonic: &str,
    ) -> Result<&'a [&'a str], ProgramError> {
        if ops.len() != n {
            return Err(self.bad(format!(
                "{mnemonic} takes {n} operand(s), got {}",
                ops.len()
            )));
        }
        Ok(ops)
    }

    fn reg(&self, s: &str) -> Result<Reg, ProgramError> {
        let n = s
            .strip_prefix(['r', 'R'])
            .and_then(|d| d.parse::<u8>().ok())
            .filter(|&n| (n as usize) < REGISTERS)
            .ok_or_else(|| self.bad(format!("`{s}` is not a register r0..r7")))?;
        Ok(Reg(n))
    }

    fn int(&self, s: &str) -> Result<i64, ProgramError> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let parsed = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
            Some(hex) => i64::from_str_radix(hex, 16),
            None => body.parse::<i64>(),
        };
        let v = parsed.map_err(|_| self.bad(format!("`{s}` is not an integer")))?;
        Ok(if neg { -v } else { v })
    }

    fn imm32(&self, s: &str) -> Result<u32, ProgramError> {
        let v = self.int(s)?;
        if v < i32::MIN as i64 || v > u32::MAX as i64 {
            return Err(self.bad(format!("`{s}` does not fit 32 bits")));
        }
        Ok(v as u32)
    }

    fn addr(&self, s: &str) -> Result<u64, ProgramError> {
        u64::try_from(self.int(s)?).map_err(|_| self.bad(format!("negative address `{s}`")))
    }

    fn unsigned(&self, s: &str) -> Result<u64, ProgramError> {
        u64::try_from(self.int(s)?).map_err(|_| self.bad(format!("`{s}` must not be negative")))
    }

    fn direction(&self, s: &str) -> Result<Direction, ProgramError> {
        s.parse()
            .map_err(|_| self.bad(format!("`{s}` is not a direction")))
    }

    fn mode(&self, s: &str) -> Result<MpNocMode, ProgramError> {
        match s.to_ascii_lowercase().as_str() {
            "pe" => Ok(MpNocMode::PeToPe),
            "acu" => Ok(MpNocMode::AcuToPe),
            "dev" | "device" => Ok(MpNocMode::DeviceToPe),
            _ => Err(self.bad(format!("`{s}` is not a mode (pe, acu, dev)"))),
        }
    }

    fn dst(&self, mode: MpNocMode, s: &str) -> Result<DstExpr, ProgramError> {
        let e = s.to_ascii_lowercase();
        let expr = if e == "all" {
            DstExpr::All
        } else if e == "idx" {
            DstExpr::Offset(0)
        } else if let Some(rest) = e.strip_prefix("idx+") {
            DstExpr::Offset(self.unsigned(rest)? as i64)
        } else if let Some(rest) = e.strip_prefix("idx-") {
            DstExpr::Offset(-(self.unsigned(rest)? as i64))
        } else if let Some(rest) = e.strip_prefix("idx^") {
            DstExpr::Xor(self.unsigned(rest)? as usize)
        } else {
            DstExpr::Pe(self.unsigned(&e)? as usize)
        };
        match (mode, expr) {
            (MpNocMode::PeToPe, DstExpr::All) => {
                Err(self.bad("pe mode needs a PE destination, not `all`"))
            }
            (MpNocMode::PeToPe, _) | (_, DstExpr::All | DstExpr::Pe(_)) => Ok(expr),
            _ => Err(self.bad(format!(
                "{} mode sends to `all` or one PE, not `{s}`",
                mode_keyword(mode)
            ))),
        }
    }

    fn predicate(&self, text: &str) -> Result<Predicate, ProgramError> {
        let mut s: String = text.chars().filter(|c| *c != '(' && *c != ')').collect();
        s = s
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase();
        match s.as_str() {
            "all" => return Ok(Predicate::All),
            "even" | "idx even" => return Ok(parity(0)),
            "odd" | "idx odd" => return Ok(parity(1)),
            _ => {}
        }
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (coord, rest) = [
            ("idx", Coord::Idx),
            ("row", Coord::Row),
            ("col", Coord::Col),
        ]
        .into_iter()
        .find_map(|(kw, c)| compact.strip_prefix(kw).map(|r| (c, r)))
        .ok_or_else(|| {
            self.bad(format!(
                "predicate `{text}` must start with idx, row or col"
            ))
        })?;
        let (modulus, rest) = match rest.strip_prefix('%') {
            Some(r) => {
                let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
                let m = self.unsigned(&r[..end])?;
                if m == 0 {
                    return Err(self.bad("modulus must be positive"));
                }
                (Some(m), &r[end..])
            }
            None => (None, rest),
        };
        let (op, value) = CmpOp::TOKENS
            .into_iter()
            .find_map(|(tok, op)| rest.strip_prefix(tok).map(|v| (op, v)))
            .ok_or_else(|| self.bad(format!("predicate `{text}` has no comparison")))?;
        Ok(Predicate::Compare {
            coord,
            modulus,
            op,
            value: self.unsigned(value)?,
        })
    }
}

fn parity(value: u64) -> Predicate {
    Predicate::Compare {
        coord: Coord::Idx,
        modulus: Some(2),
        op: CmpOp::Eq,
        value,
    }
}

/// Parses assembly text; reports the first error with its line number.
pub fn load_program(text: &str) -> Result<SimProgram, ProgramError> {
    let mut instructions = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let p = LineParser { line };
        let (mnemonic, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        let upper = mnemonic.to_ascii_uppercase();
        let instruction = if upper == "MASK" {
            if rest.is_empty() {
                return Err(p.bad("MASK needs a predicate"));
            }
            Instruction::Mask(p.predicate(rest)?)
        } else {
            let ops: Vec<&str> = if rest.is_empty() {
                Vec::new()
            } else {
                rest.split(',').map(str::trim).collect()
            };
            match upper.as_str() {
                "LDI" => {
                    let o = p.arity(&ops, 2, "LDI")?;
                    Instruction::Ldi {
                        rd: p.reg(o[0])?,
                        imm: p.imm32(o[1])?,
                    }
                }
                "LD" => {
                    let o = p.arity(&ops, 2, "LD")?;
                    Instruction::Ld {
                        rd: p.reg(o[0])?,
                        addr: p.addr(o[1])?,
                    }
                }
                "ST" => {
                    let o = p.arity(&ops, 2, "ST")?;
                    Instruction::St {
                        rs: p.reg(o[0])?,
                        addr: p.addr(o[1])?,
                    }
                }
                "ADD" => {
                    let o = p.arity(&ops, 3, "ADD")?;
                    Instruction::Add {
                        rd: p.reg(o[0])?,
                        ra: p.reg(o[1])?,
                        rb: p.reg(o[2])?,
                    }
                }
                "MOVD" => {
                    let o = p.arity(&ops, 2, "MOVD")?;
                    Instruction::Movd {
                        r: p.reg(o[0])?,
                        dir: p.direction(o[1])?,
                    }
                }
                "NOCSEND" => {
                    let o = p.arity(&ops, 3, "NOCSEND")?;
                    let mode = p.mode(o[0])?;
                    Instruction::NocSend {
                        mode,
                        dst: p.dst(mode, o[1])?,
                        r: p.reg(o[2])?,
                    }
                }
                "UNMASK" => {
                    p.arity(&ops, 0, "UNMASK")?;
                    Instruction::Unmask
                }
                "HALT" => {
                    p.arity(&ops, 0, "HALT")?;
                    Instruction::Halt
                }
                _ => {
                    return Err(ProgramError::UnknownMnemonic {
                        line,
                        mnemonic: mnemonic.to_string(),
                    })
                }
            }
        };
        instructions.push(instruction);
        lines.push(line);
    }
    if instructions.last() != Some(&Instruction::Halt) {
        return Err(ProgramError::MissingHalt);
    }
    Ok(SimProgram {
        instructions,
        lines,
    })
}
