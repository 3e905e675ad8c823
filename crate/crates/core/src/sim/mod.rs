//! Cycle-counting simulator of the SIMD machine.

mod cost;
mod machine;
mod program;
mod reduce;

pub use cost::{CostModel, CostModelError};
pub use machine::{RunOptions, SimError, SimMachine, SimReport, Snapshot};
pub use program::{
    load_program, CmpOp, Coord, DstExpr, Instruction, Predicate, ProgramError, Reg, SimProgram,
    REGISTERS,
};
pub use reduce::{
    default_transport, movd_path, reduce_sum, reduce_sum_via, reduction_program, ReduceError,
    ReductionReport, Transport,
};
