//! An SSA intermediate representation with first-class symbolic holes.
//!
//! Programs are modules in a textual form modeled on LLVM IR. A *hole* is
//! a placeholder for a not-yet-chosen value or operation, encoded as a
//! call to an uninterpreted function so that every existing IR facility
//! (printing, verification, use-def queries) keeps working unchanged.
//! Holes whose type is still unknown use the opaque `%hole.t` type.
//!
//! The crate provides:
//!
//! - [`ir`]: the module/function/block/instruction arena with exact
//!   use-def tracking and classic same-type RAUW;
//! - [`textio`]: parser and canonical printer for the textual form;
//! - [`holes`]: creation and inspection of holes and hole operations;
//! - [`rewrite`]: RAUW-NT, the replace-with-new-type primitive that
//!   propagates types through equality classes of hole slots;
//! - [`verifier`]: structural, dominance, and hole-convention checks;
//! - [`interp`]: a reference interpreter and equivalence checking;
//! - [`synth`]: hole assignment (`fill`) and a small enumerative
//!   superoptimizer built on the above.

pub mod holes;
pub mod interp;
pub mod ir;
pub mod rewrite;
pub mod synth;
pub mod textio;
pub mod types;
pub mod verifier;

pub use ir::{
    BinOp, Block, BlockId, FuncId, Function, IcmpPred, InsertAt, InstId, Instruction, IrError,
    Module, Opcode, Operand, UseSite, ValueRef,
};
pub use types::{FnType, IntConst, Type};
