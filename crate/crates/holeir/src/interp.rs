//! Reference interpreter and input-level equivalence checker.
//!
//! Programs with holes cannot execute; `run` refuses a function from
//! whose body any hole or hole-op call is reachable through the call
//! graph. Semantics are total two's complement at the declared width:
//! add/sub/mul wrap, shifts with an amount at or beyond the width yield 0
//! (arithmetic right shift of a negative value yields -1), comparisons
//! read bits unsigned or two's-complement per predicate, and a fuel
//! budget bounds loops.
//!
//! `check_equiv` compares two same-signature functions over inputs chosen
//! by policy. `Sampled` inputs come from the 64-bit linear congruential
//! generator `state = state * 6364136223846793005 + 1442695040888963407`
//! (mod 2^64), seeded explicitly; an argument of width `w <= 64` takes
//! the top `w` bits of one output, a wider one concatenates two outputs
//! and keeps the top `w` of the 128. Identical seeds give identical
//! verdicts.

use std::collections::HashSet;

use crate::holes;
use crate::ir::{BinOp, BlockId, FuncId, IcmpPred, Module, Opcode, Operand, ValueRef};
use crate::types::{IntConst, Type};

/// Default instruction budget for one evaluation.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Nested-call limit; well beyond anything the test corpus needs, but it
/// turns runaway recursion into an error instead of a stack overflow.
const MAX_DEPTH: u32 = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    /// The returned constant; `None` for void functions.
    pub value: Option<IntConst>,
    /// Instructions executed.
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("cannot execute: hole @{0} is reachable")]
    UnresolvedHoles(String),
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("call depth limit exceeded")]
    DepthExceeded,
    #[error("call to external function @{0}")]
    ExternalCall(String),
    #[error("unknown function @{0}")]
    UnknownFunction(String),
    #[error("argument {index}: expected {expected}, got {got}")]
    BadArgument { index: usize, expected: Type, got: Type },
    #[error("wrong argument count: expected {expected}, got {got}")]
    BadArity { expected: usize, got: usize },
    #[error("malformed function: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivPolicy {
    /// Enumerate every input when the total argument width fits the
    /// bit budget.
    Exhaustive { max_input_bits: u32 },
    /// A fixed number of seeded pseudorandom inputs.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivVerdict {
    Equivalent { inputs_checked: u64 },
    Counterexample {
        args: Vec<IntConst>,
        lhs: Option<IntConst>,
        rhs: Option<IntConst>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquivError {
    #[error("exhaustive checking infeasible: {total_bits} input bits exceed the limit of {max}")]
    Infeasible { total_bits: u32, max: u32 },
    #[error("signature mismatch: {0}")]
    Signature(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Execute `@fn_name` on `args` with the given fuel.
pub fn run(m: &Module, fn_name: &str, args: &[IntConst], fuel: u64) -> Result<RunResult, RunError> {
    let f = m
        .func_by_name(fn_name)
        .ok_or_else(|| RunError::UnknownFunction(fn_name.to_string()))?;
    check_callable(m, f, args)?;
    assert_hole_free_reachable(m, f)?;
    let mut fuel_left = fuel;
    let value = eval_func(m, f, args, &mut fuel_left, 0)?;
    Ok(RunResult { value, steps: fuel - fuel_left })
}

fn check_callable(m: &Module, f: FuncId, args: &[IntConst]) -> Result<(), RunError> {
    let func = m.func(f);
    if func.is_declaration() {
        return Err(RunError::ExternalCall(func.name().to_string()));
    }
    let params = &func.ty().params;
    if args.len() != params.len() {
        return Err(RunError::BadArity { expected: params.len(), got: args.len() });
    }
    for (i, (a, p)) in args.iter().zip(params).enumerate() {
        if a.ty() != *p {
            return Err(RunError::BadArgument { index: i, expected: *p, got: a.ty() });
        }
    }
    Ok(())
}

/// Reject if any hole or hole-op call exists in `f` or in any defined
/// function reachable from it through calls.
fn assert_hole_free_reachable(m: &Module, f: FuncId) -> Result<(), RunError> {
    let mut seen: HashSet<FuncId> = HashSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if !seen.insert(g) {
            continue;
        }
        let func = m.func(g);
        for (_, id) in func.insts_in_order() {
            if let Some(callee) = func.inst(id).callee() {
                let name = m.func(callee).name();
                if holes::hole_number(name).is_some() || holes::hole_op_kind(name).is_some() {
                    return Err(RunError::UnresolvedHoles(name.to_string()));
                }
                if !m.func(callee).is_declaration() {
                    stack.push(callee);
                }
            }
        }
    }
    Ok(())
}

fn spend(fuel: &mut u64) -> Result<(), RunError> {
    if *fuel == 0 {
        return Err(RunError::FuelExhausted);
    }
    *fuel -= 1;
    Ok(())
}

fn eval_func(
    m: &Module,
    f: FuncId,
    args: &[IntConst],
    fuel: &mut u64,
    depth: u32,
) -> Result<Option<IntConst>, RunError> {
    if depth > MAX_DEPTH {
        return Err(RunError::DepthExceeded);
    }
    let func = m.func(f);
    let entry = func
        .entry()
        .ok_or_else(|| RunError::Invalid(format!("@{} has no entry block", func.name())))?;
    let mut vals: Vec<Option<IntConst>> = vec![None; func.insts.len()];
    let value_of = |vals: &[Option<IntConst>], v: &ValueRef| -> Result<IntConst, RunError> {
        match v {
            ValueRef::Const(c) => Ok(*c),
            ValueRef::Arg { index, .. } => Ok(args[*index as usize]),
            ValueRef::Inst { inst, .. } => vals[inst.index()]
                .ok_or_else(|| RunError::Invalid("use of an unevaluated value".into())),
        }
    };

    let mut cur = entry;
    let mut prev: Option<BlockId> = None;
    loop {
        let insts = func.block(cur).insts();
        let mut i = 0;

        // Phis read their incoming values in parallel before any of them
        // is updated, so a block of mutually-referencing phis swaps
        // correctly.
        let mut phi_writes: Vec<(usize, IntConst)> = Vec::new();
        while i < insts.len() && matches!(func.inst(insts[i]).opcode(), Opcode::Phi) {
            spend(fuel)?;
            let inst = func.inst(insts[i]);
            let from = prev.ok_or_else(|| RunError::Invalid("phi in the entry block".into()))?;
            let ops = inst.operands();
            let mut incoming = None;
            for k in (0..ops.len()).step_by(2) {
                if ops.get(k + 1).and_then(Operand::as_block) == Some(from) {
                    incoming = ops[k].as_value();
                    break;
                }
            }
            let v = incoming
                .ok_or_else(|| RunError::Invalid("phi has no entry for the taken edge".into()))?;
            phi_writes.push((insts[i].index(), value_of(&vals, v)?));
            i += 1;
        }
        for (slot, v) in phi_writes {
            vals[slot] = Some(v);
        }

        let mut next: Option<BlockId> = None;
        while i < insts.len() {
            let id = insts[i];
            let inst = func.inst(id);
            spend(fuel)?;
            let ops = inst.operands();
            let val = |k: usize| -> Result<IntConst, RunError> {
                let v = ops
                    .get(k)
                    .and_then(Operand::as_value)
                    .ok_or_else(|| RunError::Invalid("missing value operand".into()))?;
                value_of(&vals, v)
            };
            match inst.opcode() {
                Opcode::Bin(op) => {
                    vals[id.index()] = Some(eval_bin(*op, val(0)?, val(1)?));
                }
                Opcode::Icmp(pred) => {
                    let hit = eval_icmp(*pred, val(0)?, val(1)?);
                    vals[id.index()] = Some(IntConst::new(1, hit as u128));
                }
                Opcode::Select => {
                    let pick = if val(0)?.bits() != 0 { val(1)? } else { val(2)? };
                    vals[id.index()] = Some(pick);
                }
                Opcode::Call(callee) => {
                    let target = *callee;
                    let cfunc = m.func(target);
                    if cfunc.is_declaration() {
                        let name = cfunc.name();
                        if holes::hole_number(name).is_some() || holes::hole_op_kind(name).is_some()
                        {
                            return Err(RunError::UnresolvedHoles(name.to_string()));
                        }
                        return Err(RunError::ExternalCall(name.to_string()));
                    }
                    let mut cargs = Vec::with_capacity(ops.len());
                    for k in 0..ops.len() {
                        cargs.push(val(k)?);
                    }
                    let out = eval_func(m, target, &cargs, fuel, depth + 1)?;
                    if inst.ty() != Type::Void {
                        vals[id.index()] = Some(out.ok_or_else(|| {
                            RunError::Invalid("void call used as a value".into())
                        })?);
                    }
                }
                Opcode::Phi => {
                    return Err(RunError::Invalid("phi below a non-phi instruction".into()))
                }
                Opcode::Br => {
                    next = ops.first().and_then(Operand::as_block);
                    break;
                }
                Opcode::CondBr => {
                    let k = if val(0)?.bits() != 0 { 1 } else { 2 };
                    next = ops.get(k).and_then(Operand::as_block);
                    break;
                }
                Opcode::Ret => {
                    return match ops.first() {
                        Some(Operand::Value(v)) => Ok(Some(value_of(&vals, v)?)),
                        _ => Ok(None),
                    };
                }
            }
            i += 1;
        }
        match next {
            Some(b) => {
                prev = Some(cur);
                cur = b;
            }
            None => {
                return Err(RunError::Invalid(format!(
                    "block in @{} does not end in a terminator",
                    func.name()
                )))
            }
        }
    }
}

fn eval_bin(op: BinOp, a: IntConst, b: IntConst) -> IntConst {
    let w = a.width();
    let mask = IntConst::mask(w);
    let (x, y) = (a.bits(), b.bits());
    let amount = || -> Option<u32> {
        if y >= w as u128 {
            None // shift at or beyond the width
        } else {
            Some(y as u32)
        }
    };
    let bits = match op {
        BinOp::Add => x.wrapping_add(y),
        BinOp::Sub => x.wrapping_sub(y),
        BinOp::Mul => x.wrapping_mul(y),
        BinOp::And => x & y,
        BinOp::Or => x | y,
        BinOp::Xor => x ^ y,
        BinOp::Shl => match amount() {
            Some(k) => x << k,
            None => 0,
        },
        BinOp::Lshr => match amount() {
            Some(k) => x >> k,
            None => 0,
        },
        BinOp::Ashr => {
            let negative = a.as_signed() < 0;
            match amount() {
                Some(k) => {
                    let shifted = x >> k;
                    if negative && k > 0 {
                        // fill the vacated top bits with the sign
                        shifted | (mask & !(mask >> k))
                    } else {
                        shifted
                    }
                }
                None => {
                    if negative {
                        mask
                    } else {
                        0
                    }
                }
            }
        }
    };
    IntConst::new(w, bits)
}

fn eval_icmp(pred: IcmpPred, a: IntConst, b: IntConst) -> bool {
    let (xu, yu) = (a.bits(), b.bits());
    let (xs, ys) = (a.as_signed(), b.as_signed());
    match pred {
        IcmpPred::Eq => xu == yu,
        IcmpPred::Ne => xu != yu,
        IcmpPred::Ult => xu < yu,
        IcmpPred::Ule => xu <= yu,
        IcmpPred::Ugt => xu > yu,
        IcmpPred::Uge => xu >= yu,
        IcmpPred::Slt => xs < ys,
        IcmpPred::Sle => xs <= ys,
        IcmpPred::Sgt => xs > ys,
        IcmpPred::Sge => xs >= ys,
    }
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Top `w` bits of one output (or of two concatenated outputs for
    /// widths past 64).
    fn bits(&mut self, w: u32) -> u128 {
        if w <= 64 {
            (self.next() >> (64 - w)) as u128
        } else {
            let hi = self.next() as u128;
            let lo = self.next() as u128;
            ((hi << 64) | lo) >> (128 - w)
        }
    }
}

/// Compare `@f_name` and `@g_name` over policy-chosen inputs. Both must
/// be hole-free definitions with identical integer signatures.
pub fn check_equiv(
    m: &Module,
    f_name: &str,
    g_name: &str,
    policy: EquivPolicy,
) -> Result<EquivVerdict, EquivError> {
    let f = m
        .func_by_name(f_name)
        .ok_or_else(|| RunError::UnknownFunction(f_name.to_string()))?;
    let g = m
        .func_by_name(g_name)
        .ok_or_else(|| RunError::UnknownFunction(g_name.to_string()))?;
    if m.func(f).ty() != m.func(g).ty() {
        return Err(EquivError::Signature(format!(
            "@{f_name} is `{}`, @{g_name} is `{}`",
            m.func(f).ty(),
            m.func(g).ty()
        )));
    }
    for side in [f, g] {
        if m.func(side).is_declaration() {
            return Err(EquivError::Run(RunError::ExternalCall(
                m.func(side).name().to_string(),
            )));
        }
        assert_hole_free_reachable(m, side)?;
    }
    let widths: Vec<u32> = m
        .func(f)
        .ty()
        .params
        .iter()
        .map(|t| match t {
            Type::Int(w) => Ok(*w),
            other => Err(EquivError::Signature(format!("non-integer parameter type {other}"))),
        })
        .collect::<Result<_, _>>()?;

    let check_one = |args: &[IntConst]| -> Result<Option<EquivVerdict>, EquivError> {
        let mut fuel_f = DEFAULT_FUEL;
        let mut fuel_g = DEFAULT_FUEL;
        let lhs = eval_func(m, f, args, &mut fuel_f, 0)?;
        let rhs = eval_func(m, g, args, &mut fuel_g, 0)?;
        if lhs != rhs {
            return Ok(Some(EquivVerdict::Counterexample { args: args.to_vec(), lhs, rhs }));
        }
        Ok(None)
    };

    match policy {
        EquivPolicy::Exhaustive { max_input_bits } => {
            let total: u32 = widths.iter().sum();
            if total > max_input_bits || total > 127 {
                return Err(EquivError::Infeasible { total_bits: total, max: max_input_bits });
            }
            let count: u128 = 1u128 << total;
            let mut n = 0u64;
            let mut counter = 0u128;
            while counter < count {
                let mut offset = 0u32;
                let args: Vec<IntConst> = widths
                    .iter()
                    .map(|&w| {
                        let v = (counter >> offset) & IntConst::mask(w);
                        offset += w;
                        IntConst::new(w, v)
                    })
                    .collect();
                if let Some(cex) = check_one(&args)? {
                    return Ok(cex);
                }
                n += 1;
                counter += 1;
            }
            Ok(EquivVerdict::Equivalent { inputs_checked: n })
        }
        EquivPolicy::Sampled { samples, seed } => {
            let mut rng = Lcg(seed);
            for _ in 0..samples {
                let args: Vec<IntConst> =
                    widths.iter().map(|&w| IntConst::new(w, rng.bits(w))).collect();
                if let Some(cex) = check_one(&args)? {
                    return Ok(cex);
                }
            }
            Ok(EquivVerdict::Equivalent { inputs_checked: samples })
        }
    }
}
