//! Symbolic holes, encoded as calls to reserved declarations.
//!
//! A hole is a declaration `@holeN` with exactly one call site; the call's
//! result is the hole's value. A typed hole declares a concrete return
//! type; an unknown-type hole returns the opaque `%hole.t`. Dependencies
//! are passed as call arguments so def-use bookkeeping sees them. A hole
//! operation `@hole.op.<opcode>` is an uninterpreted stand-in for a
//! binary opcode whose operand types are not known yet; its declaration
//! is generic (`%hole.t` throughout) and shared by every use.
//!
//! The `hole` name prefix is reserved: the verifier rejects modules that
//! use it for anything but these conventions.

use crate::ir::{
    BinOp, BlockId, FuncId, IcmpPred, InsertAt, InstId, Instruction, IrError, Module, Opcode,
    Operand, UseSite, ValueRef,
};
use crate::rewrite::{self, ModuleClasses, RewriteReport, Slot, TypeConflict};
use crate::types::{FnType, Type};

/// Which concrete instruction a hole operation stands in for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleOpKind {
    Bin(BinOp),
    Icmp(IcmpPred),
    Select,
}

/// `hole7` → 7. Matches only the plain numbered-hole convention, not
/// `hole.op.*` or `hole.t`.
pub fn hole_number(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("hole")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Classify a `hole.op.*` function name.
pub fn hole_op_kind(name: &str) -> Option<HoleOpKind> {
    let rest = name.strip_prefix("hole.op.")?;
    if rest == "select" {
        return Some(HoleOpKind::Select);
    }
    if let Some(pred) = rest.strip_prefix("icmp.") {
        return IcmpPred::from_name(pred).map(HoleOpKind::Icmp);
    }
    BinOp::from_name(rest).map(HoleOpKind::Bin)
}

/// The reserved function name for an op kind.
pub fn hole_op_name(kind: HoleOpKind) -> String {
    match kind {
        HoleOpKind::Bin(op) => format!("hole.op.{}", op.name()),
        HoleOpKind::Icmp(pred) => format!("hole.op.icmp.{}", pred.name()),
        HoleOpKind::Select => "hole.op.select".to_string(),
    }
}

/// The one valid (generic) signature for an op declaration. Operand and
/// result positions that are typed per-use stay `%hole.t`; positions the
/// opcode fixes (comparison results, select conditions) are concrete.
pub fn hole_op_signature(kind: HoleOpKind) -> FnType {
    match kind {
        HoleOpKind::Bin(_) => FnType::new(Type::Hole, vec![Type::Hole, Type::Hole]),
        HoleOpKind::Icmp(_) => FnType::new(Type::Int(1), vec![Type::Hole, Type::Hole]),
        HoleOpKind::Select => {
            FnType::new(Type::Hole, vec![Type::Int(1), Type::Hole, Type::Hole])
        }
    }
}

/// One live hole: its declaration, unique call site, and typing state.
#[derive(Debug, Clone)]
pub struct HoleInfo {
    /// Declaration name without the `@` sigil, e.g. `hole0`.
    pub name: String,
    pub declaration: FuncId,
    /// Function containing the call site.
    pub func: FuncId,
    pub call_site: InstId,
    /// The hole's value: the call's result.
    pub value: ValueRef,
    /// Return type as declared: concrete, or `%hole.t` for unknown.
    pub declared_type: Type,
    /// Call arguments, in order.
    pub deps: Vec<ValueRef>,
    /// Concrete type the class engine has for this hole, if any.
    pub resolved_type: Option<Type>,
}

#[derive(Debug, thiserror::Error)]
pub enum HoleError {
    #[error(transparent)]
    Conflict(#[from] TypeConflict),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("{0}")]
    Invalid(String),
}

/// Create a fresh hole: `declare <ty|%hole.t> @holeN(<dep types>)` with N
/// the smallest unused index, plus its single call at `at` passing `deps`.
/// All-or-nothing: the module is unchanged on error.
pub fn new_hole(
    m: &mut Module,
    in_func: FuncId,
    at: InsertAt,
    ty: Option<Type>,
    deps: &[ValueRef],
) -> Result<HoleInfo, HoleError> {
    let ret = match ty {
        None => Type::Hole,
        Some(t) if t.is_int() => t,
        Some(t) => {
            return Err(HoleError::Invalid(format!(
                "a hole's declared type must be a concrete integer type, not {t} \
                 (omit the type for an unknown-type hole)"
            )))
        }
    };
    let mut param_tys = Vec::with_capacity(deps.len());
    for d in deps {
        let t = rewrite::known_type(m, d)?;
        if t == Type::Void {
            return Err(HoleError::Invalid("a hole dependency cannot be void".into()));
        }
        param_tys.push(t);
    }
    let n = (0..)
        .find(|n| m.func_by_name(&format!("hole{n}")).is_none())
        .expect("some index is unused");
    let name = format!("hole{n}");

    let mut w = m.clone();
    let declaration = w.add_function(&name, FnType::new(ret, param_tys))?;
    let value = w.build_call(in_func, at, declaration, deps.to_vec(), None)?;
    let call_site = match value {
        ValueRef::Inst { inst, .. } => inst,
        _ => unreachable!("calls produce instruction results"),
    };
    for (i, d) in deps.iter().enumerate() {
        w.check_in_scope(d, &[UseSite { func: in_func, inst: call_site, pos: i }])?;
    }
    *m = w;
    Ok(HoleInfo {
        name,
        declaration,
        func: in_func,
        call_site,
        value,
        declared_type: ret,
        deps: deps.to_vec(),
        resolved_type: ret.is_int().then_some(ret),
    })
}

/// Insert an uninterpreted binary operation over holes:
/// `%r = call %hole.t @hole.op.<opcode>(lhs, rhs)`, declaring the op
/// function on first use. Operands may be holes or concrete integers; if
/// the equality constraints (lhs ~ rhs ~ result; comparison results are
/// i1) resolve the class immediately, the call is materialized into the
/// concrete opcode before returning. Returns the result value, whose id
/// is stable across materialization.
pub fn new_hole_op(
    m: &mut Module,
    in_func: FuncId,
    at: InsertAt,
    kind: HoleOpKind,
    lhs: ValueRef,
    rhs: ValueRef,
) -> Result<ValueRef, HoleError> {
    if kind == HoleOpKind::Select {
        return Err(HoleError::Invalid(
            "select hole operations can only be written in source text".into(),
        ));
    }
    let lt = rewrite::known_type(m, &lhs)?;
    let rt = rewrite::known_type(m, &rhs)?;
    for t in [lt, rt] {
        if !(t.is_int() || t.is_hole()) {
            return Err(HoleError::Invalid(format!(
                "hole-op operands must be integers or holes, not {t}"
            )));
        }
    }
    if lt.is_int() && rt.is_int() && lt != rt {
        return Err(HoleError::Conflict(TypeConflict {
            existing: lt,
            requested: rt,
            witness: vec![format!(
                "{} ~ {}: operands of a {} hole operation",
                rewrite::value_desc(m, &lhs),
                rewrite::value_desc(m, &rhs),
                hole_op_name(kind),
            )],
        }));
    }

    let op_name = hole_op_name(kind);
    let want_sig = hole_op_signature(kind);
    let mut w = m.clone();
    let decl = match w.func_by_name(&op_name) {
        Some(f) => {
            if !w.func(f).is_declaration() || *w.func(f).ty() != want_sig {
                return Err(HoleError::Invalid(format!(
                    "@{op_name} already exists with a different shape; it must be `declare {want_sig}`"
                )));
            }
            f
        }
        None => w.add_function(&op_name, want_sig)?,
    };
    let ret = match kind {
        HoleOpKind::Bin(_) => Type::Hole,
        HoleOpKind::Icmp(_) => Type::Int(1),
        HoleOpKind::Select => unreachable!("rejected above"),
    };
    // Raw insert: a concrete operand would fail the builder's exact
    // signature check, but this state is transient — the class engine
    // resolves it and materialization rewrites the call before commit.
    let call = w.insert_inst_raw(
        in_func,
        at,
        Instruction {
            opcode: Opcode::Call(decl),
            operands: vec![Operand::Value(lhs), Operand::Value(rhs)],
            name: None,
            ty: ret,
            block: BlockId(0), // set by the inserter
            span: (0, 0),
        },
    );
    for (i, d) in [lhs, rhs].iter().enumerate() {
        w.check_in_scope(d, &[UseSite { func: in_func, inst: call, pos: i }])?;
    }
    let cls = ModuleClasses::build(&w)?;
    let mut report = RewriteReport::default();
    rewrite::materialize_with(&mut w, &cls, &mut report);
    *m = w;
    Ok(ValueRef::Inst { func: in_func, inst: call })
}

/// Every live hole, in declaration order, with `resolved_type` read from
/// the class engine. Declarations without a call site (invalid modules)
/// are skipped.
pub fn list_holes(m: &Module) -> Vec<HoleInfo> {
    let cls = ModuleClasses::build(m).ok();
    let mut out = Vec::new();
    for f in m.func_ids() {
        let func = m.func(f);
        if hole_number(func.name()).is_none() {
            continue;
        }
        let Some(&(g, call_site)) = m.callers_of(f).first() else {
            continue;
        };
        let value = ValueRef::Inst { func: g, inst: call_site };
        let deps: Vec<ValueRef> = m
            .func(g)
            .inst(call_site)
            .value_operands()
            .map(|(_, v)| *v)
            .collect();
        let declared_type = func.ty().ret;
        let resolved_type = match &cls {
            Some(c) => c.resolved(Slot::Value(value)).filter(Type::is_int),
            None => declared_type.is_int().then_some(declared_type),
        };
        out.push(HoleInfo {
            name: func.name().to_string(),
            declaration: f,
            func: g,
            call_site,
            value,
            declared_type,
            deps,
            resolved_type,
        });
    }
    out
}
