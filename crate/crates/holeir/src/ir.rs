//! In-memory SSA program representation with use-def tracking.
//!
//! A [`Module`] owns an arena of functions; each function owns arenas of
//! blocks and instructions. Values are lightweight references
//! ([`ValueRef`]): a function argument, an instruction result, or an
//! integer constant. The module maintains an exact use-def index (value ->
//! operand slots) and a caller index (function -> call sites), both updated
//! eagerly on every mutation.
//!
//! Erasure tombstones arena entries so ids stay stable; print order is
//! arena order with tombstones skipped.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::types::{FnType, IntConst, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncId(pub(crate) u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub(crate) u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstId(pub(crate) u32);

impl FuncId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl InstId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Binary integer opcodes shared by concrete instructions and hole
/// operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
    Ashr,
}

impl BinOp {
    /// Fixed opcode-list order; enumeration order everywhere.
    pub const ALL: [BinOp; 9] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::And,
        BinOp::Or,
        BinOp::Xor,
        BinOp::Shl,
        BinOp::Lshr,
        BinOp::Ashr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Shl => "shl",
            BinOp::Lshr => "lshr",
            BinOp::Ashr => "ashr",
        }
    }

    pub fn from_name(s: &str) -> Option<BinOp> {
        BinOp::ALL.iter().copied().find(|op| op.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IcmpPred {
    Eq,
    Ne,
    Ult,
    Ule,
    Ugt,
    Uge,
    Slt,
    Sle,
    Sgt,
    Sge,
}

impl IcmpPred {
    pub const ALL: [IcmpPred; 10] = [
        IcmpPred::Eq,
        IcmpPred::Ne,
        IcmpPred::Ult,
        IcmpPred::Ule,
        IcmpPred::Ugt,
        IcmpPred::Uge,
        IcmpPred::Slt,
        IcmpPred::Sle,
        IcmpPred::Sgt,
        IcmpPred::Sge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IcmpPred::Eq => "eq",
            IcmpPred::Ne => "ne",
            IcmpPred::Ult => "ult",
            IcmpPred::Ule => "ule",
            IcmpPred::Ugt => "ugt",
            IcmpPred::Uge => "uge",
            IcmpPred::Slt => "slt",
            IcmpPred::Sle => "sle",
            IcmpPred::Sgt => "sgt",
            IcmpPred::Sge => "sge",
        }
    }

    pub fn from_name(s: &str) -> Option<IcmpPred> {
        IcmpPred::ALL.iter().copied().find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Opcode {
    Bin(BinOp),
    Icmp(IcmpPred),
    Select,
    Call(FuncId),
    Phi,
    Br,
    CondBr,
    Ret,
}

impl Opcode {
    pub fn is_terminator(&self) -> bool {
        matches!(self, Opcode::Br | Opcode::CondBr | Opcode::Ret)
    }
}

/// A reference to an SSA value. Constants are inline; arguments and
/// instruction results point into the module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueRef {
    Arg { func: FuncId, index: u32 },
    Inst { func: FuncId, inst: InstId },
    Const(IntConst),
}

impl ValueRef {
    /// The function this value lives in, if it is not a constant.
    pub fn parent_func(&self) -> Option<FuncId> {
        match self {
            ValueRef::Arg { func, .. } | ValueRef::Inst { func, .. } => Some(*func),
            ValueRef::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<IntConst> {
        match self {
            ValueRef::Const(c) => Some(*c),
            _ => None,
        }
    }
}

/// One operand slot: either a value or a block reference (branch targets,
/// phi predecessors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Value(ValueRef),
    Block(BlockId),
}

impl Operand {
    pub fn as_value(&self) -> Option<&ValueRef> {
        match self {
            Operand::Value(v) => Some(v),
            Operand::Block(_) => None,
        }
    }

    pub fn as_block(&self) -> Option<BlockId> {
        match self {
            Operand::Block(b) => Some(*b),
            Operand::Value(_) => None,
        }
    }
}

/// One use of a value: an operand slot of an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UseSite {
    pub func: FuncId,
    pub inst: InstId,
    pub pos: usize,
}

impl fmt::Display for UseSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "instruction #{} in function #{}, operand {}",
            self.inst.0, self.func.0, self.pos
        )
    }
}

/// Source position `(line, column)`; `(0, 0)` for API-built entities.
pub type Span = (u32, u32);

#[derive(Debug, Clone)]
pub struct Instruction {
    pub(crate) opcode: Opcode,
    pub(crate) operands: Vec<Operand>,
    pub(crate) name: Option<String>,
    pub(crate) ty: Type,
    pub(crate) block: BlockId,
    pub(crate) span: Span,
}

impl Instruction {
    pub fn opcode(&self) -> &Opcode {
        &self.opcode
    }

    pub fn operands(&self) -> &[Operand] {
        &self.operands
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Result type; `Void` means the instruction produces no value.
    pub fn ty(&self) -> Type {
        self.ty
    }

    pub fn block(&self) -> BlockId {
        self.block
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn has_result(&self) -> bool {
        self.ty != Type::Void
    }

    pub fn is_terminator(&self) -> bool {
        self.opcode.is_terminator()
    }

    /// Value operands with their slot positions.
    pub fn value_operands(&self) -> impl Iterator<Item = (usize, &ValueRef)> {
        self.operands
            .iter()
            .enumerate()
            .filter_map(|(i, op)| op.as_value().map(|v| (i, v)))
    }

    /// Block operands (branch targets, phi predecessors).
    pub fn block_operands(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.operands.iter().filter_map(|op| op.as_block())
    }

    pub fn callee(&self) -> Option<FuncId> {
        match self.opcode {
            Opcode::Call(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub(crate) name: Option<String>,
    pub(crate) insts: Vec<InstId>,
    pub(crate) span: Span,
}

impl Block {
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn insts(&self) -> &[InstId] {
        &self.insts
    }

    pub fn span(&self) -> Span {
        self.span
    }
}

#[derive(Debug, Clone)]
pub struct Function {
    pub(crate) id: FuncId,
    pub(crate) name: String,
    pub(crate) ty: FnType,
    pub(crate) param_names: Vec<Option<String>>,
    pub(crate) blocks: Vec<Block>,
    pub(crate) insts: Vec<Option<Instruction>>,
    pub(crate) span: Span,
}

impl Function {
    pub fn id(&self) -> FuncId {
        self.id
    }

    /// Name without the `@` sigil.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ty(&self) -> &FnType {
        &self.ty
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn is_declaration(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn param_name(&self, index: usize) -> Option<&str> {
        self.param_names.get(index).and_then(|n| n.as_deref())
    }

    pub fn entry(&self) -> Option<BlockId> {
        if self.blocks.is_empty() {
            None
        } else {
            Some(BlockId(0))
        }
    }

    pub fn block_ids(&self) -> impl Iterator<Item = BlockId> {
        (0..self.blocks.len() as u32).map(BlockId)
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.index()]
    }

    pub fn inst(&self, id: InstId) -> &Instruction {
        self.insts[id.index()]
            .as_ref()
            .expect("instruction was erased")
    }

    pub fn try_inst(&self, id: InstId) -> Option<&Instruction> {
        self.insts.get(id.index()).and_then(|i| i.as_ref())
    }

    /// Live instructions in block order.
    pub fn insts_in_order(&self) -> impl Iterator<Item = (BlockId, InstId)> + '_ {
        self.block_ids()
            .flat_map(move |b| self.block(b).insts.iter().map(move |&i| (b, i)))
    }

    pub fn terminator(&self, block: BlockId) -> Option<InstId> {
        let last = *self.block(block).insts.last()?;
        if self.inst(last).is_terminator() {
            Some(last)
        } else {
            None
        }
    }

    /// Successor blocks of `block`, in operand order.
    pub fn successors(&self, block: BlockId) -> Vec<BlockId> {
        match self.terminator(block) {
            Some(t) => self.inst(t).block_operands().collect(),
            None => Vec::new(),
        }
    }

    /// Predecessors of every block, in deterministic order.
    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for b in self.block_ids() {
            for s in self.successors(b) {
                if s.index() < preds.len() && !preds[s.index()].contains(&b) {
                    preds[s.index()].push(b);
                }
            }
        }
        preds
    }

    /// Position of an instruction within its block, for dominance queries.
    pub(crate) fn inst_positions(&self) -> HashMap<InstId, (BlockId, usize)> {
        let mut map = HashMap::new();
        for b in self.block_ids() {
            for (i, &id) in self.block(b).insts.iter().enumerate() {
                map.insert(id, (b, i));
            }
        }
        map
    }
}

/// Where to insert a new instruction.
#[derive(Debug, Clone, Copy)]
pub enum InsertAt {
    /// Append at the end of the block.
    End(BlockId),
    /// Insert immediately before the given instruction.
    Before(InstId),
}

#[derive(Debug, Clone, Error)]
pub enum IrError {
    #[error("unknown value: {0}")]
    UnknownValue(String),
    #[error("unknown function: @{0}")]
    UnknownFunction(String),
    #[error("type mismatch: cannot replace {old} with {new}")]
    TypeMismatch { old: Type, new: Type },
    #[error("{value} does not dominate its use at {site}")]
    Scope { value: String, site: String },
    #[error("still in use: {}", uses.join("; "))]
    StillInUse { uses: Vec<String> },
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("invalid instruction: {0}")]
    Invalid(String),
}

/// A whole program: an ordered set of functions plus the use-def and
/// caller indices.
#[derive(Debug, Clone, Default)]
pub struct Module {
    funcs: Vec<Option<Function>>,
    uses: HashMap<ValueRef, BTreeSet<UseSite>>,
    callers: HashMap<FuncId, BTreeSet<(FuncId, InstId)>>,
}

impl Module {
    pub fn new() -> Module {
        Module::default()
    }

    // ---- read access ----

    /// Live function ids in declaration order.
    pub fn func_ids(&self) -> impl Iterator<Item = FuncId> + '_ {
        self.funcs
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().map(|_| FuncId(i as u32)))
    }

    pub fn func(&self, id: FuncId) -> &Function {
        self.funcs[id.index()].as_ref().expect("function was erased")
    }

    pub fn try_func(&self, id: FuncId) -> Option<&Function> {
        self.funcs.get(id.index()).and_then(|f| f.as_ref())
    }

    pub fn func_by_name(&self, name: &str) -> Option<FuncId> {
        self.func_ids().find(|&id| self.func(id).name == name)
    }

    /// Type of a value. Panics if the reference is dangling; use
    /// [`Module::try_type_of`] when validity is not guaranteed.
    pub fn type_of(&self, v: &ValueRef) -> Type {
        self.try_type_of(v).expect("dangling value reference")
    }

    pub fn try_type_of(&self, v: &ValueRef) -> Option<Type> {
        match v {
            ValueRef::Arg { func, index } => self
                .try_func(*func)
                .and_then(|f| f.ty.params.get(*index as usize))
                .copied(),
            ValueRef::Inst { func, inst } => {
                self.try_func(*func).and_then(|f| f.try_inst(*inst)).map(|i| i.ty)
            }
            ValueRef::Const(c) => Some(c.ty()),
        }
    }

    fn check_value(&self, v: &ValueRef) -> Result<(), IrError> {
        if self.try_type_of(v).is_none() {
            return Err(IrError::UnknownValue(format!("{v:?}")));
        }
        Ok(())
    }

    /// Exactly the operand slots currently referencing `v`, in
    /// deterministic order. Read-only.
    pub fn uses_of(&self, v: &ValueRef) -> Result<Vec<UseSite>, IrError> {
        self.check_value(v)?;
        Ok(self
            .uses
            .get(v)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default())
    }

    /// Call sites of a function, in deterministic order.
    pub fn callers_of(&self, f: FuncId) -> Vec<(FuncId, InstId)> {
        self.callers
            .get(&f)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    // ---- construction ----

    pub fn add_function(&mut self, name: &str, ty: FnType) -> Result<FuncId, IrError> {
        self.add_function_named_params(name, ty, Vec::new())
    }

    pub fn add_function_named_params(
        &mut self,
        name: &str,
        ty: FnType,
        mut param_names: Vec<Option<String>>,
    ) -> Result<FuncId, IrError> {
        if self.func_by_name(name).is_some() {
            return Err(IrError::DuplicateName(format!("@{name}")));
        }
        if ty.params.contains(&Type::Void) {
            return Err(IrError::Invalid(format!(
                "@{name}: void is only valid as a return type"
            )));
        }
        param_names.resize(ty.params.len(), None);
        let id = FuncId(self.funcs.len() as u32);
        self.funcs.push(Some(Function {
            id,
            name: name.to_string(),
            ty,
            param_names,
            blocks: Vec::new(),
            insts: Vec::new(),
            span: (0, 0),
        }));
        Ok(id)
    }

    pub fn add_block(&mut self, f: FuncId, name: Option<String>) -> Result<BlockId, IrError> {
        let func = self.func_mut(f);
        if let Some(n) = &name {
            if func.blocks.iter().any(|b| b.name.as_deref() == Some(n)) {
                return Err(IrError::DuplicateName(n.clone()));
            }
        }
        let id = BlockId(func.blocks.len() as u32);
        func.blocks.push(Block {
            name,
            insts: Vec::new(),
            span: (0, 0),
        });
        Ok(id)
    }

    pub(crate) fn func_mut(&mut self, id: FuncId) -> &mut Function {
        self.funcs[id.index()].as_mut().expect("function was erased")
    }

    pub(crate) fn set_func_span(&mut self, f: FuncId, span: Span) {
        self.func_mut(f).span = span;
    }

    pub(crate) fn set_block_span(&mut self, f: FuncId, b: BlockId, span: Span) {
        self.func_mut(f).blocks[b.index()].span = span;
    }

    /// Change a function's signature in place. Callers keep their ids; the
    /// rewrite engine uses this to redeclare hole functions.
    pub(crate) fn set_func_type(&mut self, f: FuncId, ty: FnType) {
        let func = self.func_mut(f);
        func.param_names.resize(ty.params.len(), None);
        func.ty = ty;
    }

    pub(crate) fn set_inst_type(&mut self, f: FuncId, inst: InstId, ty: Type) {
        self.func_mut(f).insts[inst.index()]
            .as_mut()
            .expect("instruction was erased")
            .ty = ty;
    }

    // ---- index maintenance ----

    fn register_inst(&mut self, f: FuncId, id: InstId) {
        let inst = self.func(f).inst(id);
        let callee = inst.callee();
        let values: Vec<(usize, ValueRef)> =
            inst.value_operands().map(|(pos, v)| (pos, *v)).collect();
        for (pos, v) in values {
            self.uses.entry(v).or_default().insert(UseSite { func: f, inst: id, pos });
        }
        if let Some(callee) = callee {
            self.callers.entry(callee).or_default().insert((f, id));
        }
    }

    fn unregister_inst(&mut self, f: FuncId, id: InstId) {
        let inst = self.func(f).inst(id);
        let callee = inst.callee();
        let values: Vec<(usize, ValueRef)> =
            inst.value_operands().map(|(pos, v)| (pos, *v)).collect();
        for (pos, v) in values {
            if let Some(set) = self.uses.get_mut(&v) {
                set.remove(&UseSite { func: f, inst: id, pos });
                if set.is_empty() {
                    self.uses.remove(&v);
                }
            }
        }
        if let Some(callee) = callee {
            if let Some(set) = self.callers.get_mut(&callee) {
                set.remove(&(f, id));
                if set.is_empty() {
                    self.callers.remove(&callee);
                }
            }
        }
    }

    /// Insert an instruction without semantic validation. The parser and
    /// the rewrite engine use this; the typed builders below wrap it.
    pub(crate) fn insert_inst_raw(
        &mut self,
        f: FuncId,
        at: InsertAt,
        mut inst: Instruction,
    ) -> InstId {
        let func = self.func_mut(f);
        let (block, pos) = match at {
            InsertAt::End(b) => (b, func.blocks[b.index()].insts.len()),
            InsertAt::Before(before) => {
                let (b, p) = func
                    .inst_positions()
                    .get(&before)
                    .copied()
                    .expect("insertion point not found");
                (b, p)
            }
        };
        inst.block = block;
        let id = InstId(func.insts.len() as u32);
        func.insts.push(Some(inst));
        func.blocks[block.index()].insts.insert(pos, id);
        self.register_inst(f, id);
        id
    }

    /// Rewrite one operand slot, keeping the use-def index exact.
    pub(crate) fn set_operand(&mut self, f: FuncId, id: InstId, pos: usize, new: Operand) {
        self.unregister_inst(f, id);
        self.func_mut(f).insts[id.index()]
            .as_mut()
            .expect("instruction was erased")
            .operands[pos] = new;
        self.register_inst(f, id);
    }

    /// Replace an instruction in place, keeping its id (and therefore the
    /// identity of its result value), name, block, and span.
    pub(crate) fn replace_inst(
        &mut self,
        f: FuncId,
        id: InstId,
        opcode: Opcode,
        operands: Vec<Operand>,
        ty: Type,
    ) {
        self.unregister_inst(f, id);
        let inst = self.func_mut(f).insts[id.index()]
            .as_mut()
            .expect("instruction was erased");
        inst.opcode = opcode;
        inst.operands = operands;
        inst.ty = ty;
        self.register_inst(f, id);
    }

    pub(crate) fn set_callee(&mut self, f: FuncId, id: InstId, callee: FuncId) {
        self.unregister_inst(f, id);
        let inst = self.func_mut(f).insts[id.index()]
            .as_mut()
            .expect("instruction was erased");
        assert!(matches!(inst.opcode, Opcode::Call(_)), "not a call");
        inst.opcode = Opcode::Call(callee);
        self.register_inst(f, id);
    }

    // ---- erasure ----

    pub fn erase_inst(&mut self, f: FuncId, id: InstId) -> Result<(), IrError> {
        let inst = self
            .try_func(f)
            .and_then(|func| func.try_inst(id))
            .ok_or_else(|| IrError::UnknownValue(format!("instruction #{}", id.0)))?;
        if inst.has_result() {
            let result = ValueRef::Inst { func: f, inst: id };
            if let Some(set) = self.uses.get(&result) {
                if !set.is_empty() {
                    return Err(IrError::StillInUse {
                        uses: set.iter().map(|u| u.to_string()).collect(),
                    });
                }
            }
        }
        self.unregister_inst(f, id);
        let func = self.func_mut(f);
        let block = func.insts[id.index()].as_ref().unwrap().block;
        func.blocks[block.index()].insts.retain(|&i| i != id);
        func.insts[id.index()] = None;
        Ok(())
    }

    pub fn erase_func(&mut self, f: FuncId) -> Result<(), IrError> {
        let func = self
            .try_func(f)
            .ok_or_else(|| IrError::UnknownFunction(format!("#{}", f.0)))?;
        let callers = self.callers_of(f);
        if !callers.is_empty() {
            return Err(IrError::StillInUse {
                uses: callers
                    .iter()
                    .map(|(cf, ci)| format!("call at instruction #{} in function #{}", ci.0, cf.0))
                    .collect(),
            });
        }
        let inst_ids: Vec<InstId> = func.insts_in_order().map(|(_, i)| i).collect();
        for id in inst_ids {
            self.unregister_inst(f, id);
        }
        self.funcs[f.index()] = None;
        Ok(())
    }

    // ---- rauw ----

    /// Replace all uses of `old` with `new`. Classic same-type RAUW: the
    /// types must be identical and `new` must be in scope at every use.
    pub fn rauw(&mut self, old: &ValueRef, new: &ValueRef) -> Result<(), IrError> {
        if old == new {
            return Ok(());
        }
        self.check_value(old)?;
        self.check_value(new)?;
        let old_ty = self.type_of(old);
        let new_ty = self.type_of(new);
        if old_ty != new_ty {
            return Err(IrError::TypeMismatch { old: old_ty, new: new_ty });
        }
        let uses = self.uses_of(old)?;
        self.check_in_scope(new, &uses)?;
        for site in uses {
            self.set_operand(site.func, site.inst, site.pos, Operand::Value(*new));
        }
        Ok(())
    }

    /// `new` must dominate every one of `sites` (a phi use counts at the
    /// end of the matching predecessor block).
    pub(crate) fn check_in_scope(
        &self,
        new: &ValueRef,
        sites: &[UseSite],
    ) -> Result<(), IrError> {
        let nf = match new.parent_func() {
            None => return Ok(()), // constants are always in scope
            Some(f) => f,
        };
        for site in sites {
            if site.func != nf {
                return Err(IrError::Scope {
                    value: format!("{new:?}"),
                    site: site.to_string(),
                });
            }
        }
        let inst = match new {
            ValueRef::Inst { inst, .. } => *inst,
            _ => return Ok(()), // arguments dominate the whole function
        };
        let func = self.func(nf);
        let dom = crate::verifier::dominators(func);
        let positions = func.inst_positions();
        let (def_block, def_pos) = positions[&inst];
        for site in sites {
            let use_inst = func.inst(site.inst);
            let (use_block, use_pos) = positions[&site.inst];
            let ok = if matches!(use_inst.opcode, Opcode::Phi) {
                // the value is read on the edge from the paired predecessor
                let pred = use_inst.operands[site.pos + 1]
                    .as_block()
                    .expect("phi operand layout");
                dom.dominates(def_block, pred)
            } else if def_block == use_block {
                def_pos < use_pos
            } else {
                dom.strictly_dominates(def_block, use_block)
            };
            if !ok {
                return Err(IrError::Scope {
                    value: format!("{new:?}"),
                    site: site.to_string(),
                });
            }
        }
        Ok(())
    }

    // ---- typed builders ----

    fn build_inst(
        &mut self,
        f: FuncId,
        at: InsertAt,
        opcode: Opcode,
        operands: Vec<Operand>,
        ty: Type,
        name: Option<String>,
    ) -> Result<ValueRef, IrError> {
        if let Some(n) = &name {
            self.check_fresh_value_name(f, n)?;
        }
        let id = self.insert_inst_raw(
            f,
            at,
            Instruction {
                opcode,
                operands,
                name,
                ty,
                block: BlockId(0), // set by insert_inst_raw
                span: (0, 0),
            },
        );
        Ok(ValueRef::Inst { func: f, inst: id })
    }

    fn check_fresh_value_name(&self, f: FuncId, name: &str) -> Result<(), IrError> {
        let func = self.func(f);
        let taken = func.param_names.iter().any(|n| n.as_deref() == Some(name))
            || func
                .insts
                .iter()
                .flatten()
                .any(|i| i.name.as_deref() == Some(name));
        if taken {
            Err(IrError::DuplicateName(format!("%{name}")))
        } else {
            Ok(())
        }
    }

    fn operand_int_type(&self, v: &ValueRef) -> Result<Type, IrError> {
        self.check_value(v)?;
        let ty = self.type_of(v);
        if !ty.is_int() {
            return Err(IrError::Invalid(format!(
                "expected an integer-typed operand, got {ty}"
            )));
        }
        Ok(ty)
    }

    pub fn build_bin(
        &mut self,
        f: FuncId,
        at: InsertAt,
        op: BinOp,
        lhs: ValueRef,
        rhs: ValueRef,
        name: Option<String>,
    ) -> Result<ValueRef, IrError> {
        let lt = self.operand_int_type(&lhs)?;
        let rt = self.operand_int_type(&rhs)?;
        if lt != rt {
            return Err(IrError::Invalid(format!(
                "{} operands must share one type: {lt} vs {rt}",
                op.name()
            )));
        }
        self.build_inst(
            f,
            at,
            Opcode::Bin(op),
            vec![Operand::Value(lhs), Operand::Value(rhs)],
            lt,
            name,
        )
    }

    pub fn build_icmp(
        &mut self,
        f: FuncId,
        at: InsertAt,
        pred: IcmpPred,
        lhs: ValueRef,
        rhs: ValueRef,
        name: Option<String>,
    ) -> Result<ValueRef, IrError> {
        let lt = self.operand_int_type(&lhs)?;
        let rt = self.operand_int_type(&rhs)?;
        if lt != rt {
            return Err(IrError::Invalid(format!(
                "icmp operands must share one type: {lt} vs {rt}"
            )));
        }
        self.build_inst(
            f,
            at,
            Opcode::Icmp(pred),
            vec![Operand::Value(lhs), Operand::Value(rhs)],
            Type::Int(1),
            name,
        )
    }

    pub fn build_select(
        &mut self,
        f: FuncId,
        at: InsertAt,
        cond: ValueRef,
        if_true: ValueRef,
        if_false: ValueRef,
        name: Option<String>,
    ) -> Result<ValueRef, IrError> {
        if self.operand_int_type(&cond)? != Type::Int(1) {
            return Err(IrError::Invalid("select condition must be i1".into()));
        }
        let tt = self.operand_int_type(&if_true)?;
        let ft = self.operand_int_type(&if_false)?;
        if tt != ft {
            return Err(IrError::Invalid(format!(
                "select arms must share one type: {tt} vs {ft}"
            )));
        }
        self.build_inst(
            f,
            at,
            Opcode::Select,
            vec![
                Operand::Value(cond),
                Operand::Value(if_true),
                Operand::Value(if_false),
            ],
            tt,
            name,
        )
    }

    pub fn build_call(
        &mut self,
        f: FuncId,
        at: InsertAt,
        callee: FuncId,
        args: Vec<ValueRef>,
        name: Option<String>,
    ) -> Result<ValueRef, IrError> {
        let sig = {
            let callee_fn = self
                .try_func(callee)
                .ok_or_else(|| IrError::UnknownFunction(format!("#{}", callee.0)))?;
            callee_fn.ty.clone()
        };
        if args.len() != sig.params.len() {
            return Err(IrError::Invalid(format!(
                "call passes {} arguments, callee expects {}",
                args.len(),
                sig.params.len()
            )));
        }
        for (i, (arg, want)) in args.iter().zip(&sig.params).enumerate() {
            self.check_value(arg)?;
            let got = self.type_of(arg);
            if got != *want {
                return Err(IrError::Invalid(format!(
                    "call argument {i} has type {got}, callee expects {want}"
                )));
            }
        }
        self.build_inst(
            f,
            at,
            Opcode::Call(callee),
            args.into_iter().map(Operand::Value).collect(),
            sig.ret,
            name,
        )
    }

    /// Insert a phi at the head of `block` (after any existing phis).
    pub fn build_phi(
        &mut self,
        f: FuncId,
        block: BlockId,
        ty: Type,
        incoming: Vec<(ValueRef, BlockId)>,
        name: Option<String>,
    ) -> Result<ValueRef, IrError> {
        if incoming.is_empty() {
            return Err(IrError::Invalid("phi needs at least one incoming value".into()));
        }
        let mut operands = Vec::with_capacity(incoming.len() * 2);
        for (v, b) in &incoming {
            self.check_value(v)?;
            operands.push(Operand::Value(*v));
            operands.push(Operand::Block(*b));
        }
        if let Some(n) = &name {
            self.check_fresh_value_name(f, n)?;
        }
        let func = self.func(f);
        let at = match func.block(block).insts.iter().copied().find(|&i| {
            !matches!(func.inst(i).opcode, Opcode::Phi)
        }) {
            Some(first_non_phi) => InsertAt::Before(first_non_phi),
            None => InsertAt::End(block),
        };
        let id = self.insert_inst_raw(
            f,
            at,
            Instruction {
                opcode: Opcode::Phi,
                operands,
                name,
                ty,
                block,
                span: (0, 0),
            },
        );
        Ok(ValueRef::Inst { func: f, inst: id })
    }

    fn check_no_terminator(&self, f: FuncId, block: BlockId) -> Result<(), IrError> {
        if self.func(f).terminator(block).is_some() {
            return Err(IrError::Invalid("block already has a terminator".into()));
        }
        Ok(())
    }

    pub fn build_br(&mut self, f: FuncId, block: BlockId, target: BlockId) -> Result<(), IrError> {
        self.check_no_terminator(f, block)?;
        self.build_inst(
            f,
            InsertAt::End(block),
            Opcode::Br,
            vec![Operand::Block(target)],
            Type::Void,
            None,
        )?;
        Ok(())
    }

    pub fn build_cond_br(
        &mut self,
        f: FuncId,
        block: BlockId,
        cond: ValueRef,
        if_true: BlockId,
        if_false: BlockId,
    ) -> Result<(), IrError> {
        self.check_no_terminator(f, block)?;
        if self.operand_int_type(&cond)? != Type::Int(1) {
            return Err(IrError::Invalid("branch condition must be i1".into()));
        }
        self.build_inst(
            f,
            InsertAt::End(block),
            Opcode::CondBr,
            vec![
                Operand::Value(cond),
                Operand::Block(if_true),
                Operand::Block(if_false),
            ],
            Type::Void,
            None,
        )?;
        Ok(())
    }

    pub fn build_ret(
        &mut self,
        f: FuncId,
        block: BlockId,
        value: Option<ValueRef>,
    ) -> Result<(), IrError> {
        self.check_no_terminator(f, block)?;
        let ret_ty = self.func(f).ty.ret;
        let operands = match value {
            Some(v) => {
                self.check_value(&v)?;
                let got = self.type_of(&v);
                if got != ret_ty {
                    return Err(IrError::Invalid(format!(
                        "ret value has type {got}, function returns {ret_ty}"
                    )));
                }
                vec![Operand::Value(v)]
            }
            None => {
                if ret_ty != Type::Void {
                    return Err(IrError::Invalid(format!(
                        "ret needs a value of type {ret_ty}"
                    )));
                }
                Vec::new()
            }
        };
        self.build_inst(f, InsertAt::End(block), Opcode::Ret, operands, Type::Void, None)?;
        Ok(())
    }
}
