//! Replace-all-uses-with across type boundaries.
//!
//! Assigning a concretely-typed value to a `%hole.t` hole is the one
//! sanctioned way a value's type may change. The engine works in five
//! steps: resolve the hole's type class to the new type, replace every
//! use, redeclare hole functions whose parameter/return classes resolved,
//! materialize hole operations whose classes resolved into concrete
//! opcodes, and delete the now-dead hole. Everything runs on a clone that
//! is committed only on success, so a failing rewrite never changes the
//! module.
//!
//! Type classes are equivalence classes over *slots*: the SSA values
//! flowing through hole and hole-op calls, plus hole declaration
//! parameters. Two slots are in one class when the typing rules force
//! them to share a type (both operands and the result of an `add` hole-op;
//! a call argument and its parameter; and so on). A class is resolved when
//! any member has a concrete type; resolving one member resolves all.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::holes::{self, HoleOpKind};
use crate::ir::{FuncId, InstId, IrError, Module, Opcode, Operand, ValueRef};
use crate::types::Type;
use crate::verifier;

/// One position whose type the class engine tracks: an SSA value used or
/// produced by a hole/hole-op call, or a hole declaration's parameter.
/// (A hole declaration's *return* is represented by its unique call's
/// result value.)
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Value(ValueRef),
    Param(FuncId, u32),
}

/// Two slots in one class demand different concrete types. `witness` is a
/// chain of equality edges connecting the two pinned slots, for error
/// messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeConflict {
    pub existing: Type,
    pub requested: Type,
    pub witness: Vec<String>,
}

impl fmt::Display for TypeConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "type conflict: requested {}, but the class is already {}",
            self.requested, self.existing
        )?;
        if !self.witness.is_empty() {
            write!(f, " (via: {})", self.witness.join("; "))?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeConflict {}

/// What a rewrite changed, for observability and tests.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteReport {
    /// Instructions whose operands were rewritten to pass the new value.
    pub replaced_calls: usize,
    /// Hole functions redeclared at concrete types.
    pub redeclared_functions: Vec<String>,
    /// Hole-op calls replaced by concrete opcodes: (op function, opcode).
    pub materialized_ops: Vec<(String, String)>,
    /// Functions deleted because they became unused.
    pub deleted: Vec<String>,
}

impl fmt::Display for RewriteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "replaced calls: {}", self.replaced_calls)?;
        for n in &self.redeclared_functions {
            writeln!(f, "redeclared: @{n}")?;
        }
        for (op, opcode) in &self.materialized_ops {
            writeln!(f, "materialized: @{op} -> {opcode}")?;
        }
        for n in &self.deleted {
            writeln!(f, "deleted: @{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RewriteError {
    /// The value's type would change, but it is not a hole.
    #[error("not a hole: {0}")]
    NotAHole(String),
    #[error(transparent)]
    Conflict(#[from] TypeConflict),
    #[error(transparent)]
    Ir(#[from] IrError),
}

#[derive(Debug, Clone, Copy)]
struct Pin {
    ty: Type,
    slot: usize,
}

/// Union-find over every slot in a module, with concrete types as class
/// annotations and the equality edges kept for conflict witnesses.
pub struct ModuleClasses {
    slots: Vec<Slot>,
    desc: Vec<String>,
    index: HashMap<Slot, usize>,
    parent: Vec<usize>,
    rank: Vec<u8>,
    members: Vec<Vec<usize>>,
    pin: Vec<Option<Pin>>,
    edges: Vec<(usize, usize, String)>,
}

impl ModuleClasses {
    /// Build the class graph from a module's hole and hole-op call sites.
    /// Fails if the module's own types are already contradictory.
    pub fn build(m: &Module) -> Result<ModuleClasses, TypeConflict> {
        let mut g = ModuleClasses {
            slots: Vec::new(),
            desc: Vec::new(),
            index: HashMap::new(),
            parent: Vec::new(),
            rank: Vec::new(),
            members: Vec::new(),
            pin: Vec::new(),
            edges: Vec::new(),
        };
        let mut names: HashMap<FuncId, HashMap<ValueRef, String>> = HashMap::new();
        let mut vdesc = |m: &Module, v: &ValueRef| -> String {
            match v {
                ValueRef::Const(c) => format!("{} {}", c.ty(), c),
                _ => {
                    let f = v.parent_func().expect("non-constant");
                    let map = names
                        .entry(f)
                        .or_insert_with(|| crate::textio::value_names(m.func(f)));
                    match map.get(v) {
                        Some(n) => format!("%{} (in @{})", n, m.func(f).name()),
                        None => format!("{v:?}"),
                    }
                }
            }
        };

        // Parameter slots of hole declarations, pinned where concrete.
        for f in m.func_ids() {
            let func = m.func(f);
            if holes::hole_number(func.name()).is_none() {
                continue;
            }
            for (i, ty) in func.ty().params.iter().enumerate() {
                let s = g.add_slot(
                    Slot::Param(f, i as u32),
                    format!("parameter {} of @{}", i, func.name()),
                );
                g.seed(s, *ty);
            }
        }

        // Slots and edges per hole / hole-op call site.
        for f in m.func_ids() {
            let func = m.func(f);
            let calls: Vec<InstId> = func
                .insts_in_order()
                .map(|(_, id)| id)
                .filter(|&id| func.inst(id).callee().is_some())
                .collect();
            for id in calls {
                let inst = func.inst(id);
                let callee = inst.callee().expect("filtered to calls");
                let callee_name = m.func(callee).name().to_string();
                let args: Vec<ValueRef> = inst.value_operands().map(|(_, v)| *v).collect();
                let res = ValueRef::Inst { func: f, inst: id };

                if holes::hole_number(&callee_name).is_some() {
                    let rs = g.add_slot(Slot::Value(res), vdesc(m, &res));
                    g.seed(rs, inst.ty());
                    for (i, a) in args.iter().enumerate() {
                        let asl = g.add_slot(Slot::Value(*a), vdesc(m, a));
                        g.seed(asl, m.type_of(a));
                        if let Some(&p) = g.index.get(&Slot::Param(callee, i as u32)) {
                            g.edge(asl, p, format!("argument {i} of the @{callee_name} call"));
                        }
                    }
                } else if let Some(kind) = holes::hole_op_kind(&callee_name) {
                    let rs = g.add_slot(Slot::Value(res), vdesc(m, &res));
                    g.seed(rs, inst.ty());
                    let arg_slots: Vec<usize> = args
                        .iter()
                        .map(|a| {
                            let s = g.add_slot(Slot::Value(*a), vdesc(m, a));
                            g.seed(s, m.type_of(a));
                            s
                        })
                        .collect();
                    match (kind, arg_slots.as_slice()) {
                        (HoleOpKind::Bin(_), [a0, a1]) => {
                            g.edge(*a0, *a1, format!("operands of the @{callee_name} call"));
                            g.edge(*a0, rs, format!("operand and result of the @{callee_name} call"));
                        }
                        (HoleOpKind::Icmp(_), [a0, a1]) => {
                            g.edge(*a0, *a1, format!("operands of the @{callee_name} call"));
                        }
                        (HoleOpKind::Select, [_cond, a1, a2]) => {
                            g.edge(*a1, *a2, format!("arms of the @{callee_name} call"));
                            g.edge(*a1, rs, format!("arm and result of the @{callee_name} call"));
                        }
                        _ => {} // malformed call; the verifier reports it
                    }
                }
            }
        }

        // Union along every edge; a pin clash is a type conflict.
        for k in 0..g.edges.len() {
            let (a, b) = (g.edges[k].0, g.edges[k].1);
            if let Err((pa, pb)) = g.union(a, b) {
                return Err(TypeConflict {
                    existing: pa.ty,
                    requested: pb.ty,
                    witness: g.witness(pb.slot, pa.slot),
                });
            }
        }
        Ok(g)
    }

    fn add_slot(&mut self, s: Slot, desc: String) -> usize {
        if let Some(&i) = self.index.get(&s) {
            return i;
        }
        let i = self.slots.len();
        self.slots.push(s);
        self.desc.push(desc);
        self.index.insert(s, i);
        self.parent.push(i);
        self.rank.push(0);
        self.members.push(vec![i]);
        self.pin.push(None);
        i
    }

    /// Pin a slot's class with the slot's own concrete type.
    fn seed(&mut self, i: usize, ty: Type) {
        if ty != Type::Hole && self.pin[i].is_none() {
            self.pin[i] = Some(Pin { ty, slot: i });
        }
    }

    fn edge(&mut self, a: usize, b: usize, label: String) {
        let la = format!("{} ~ {}: {}", self.desc[a], self.desc[b], label);
        self.edges.push((a, b, la));
    }

    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> Result<(), (Pin, Pin)> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let pin = match (self.pin[ra], self.pin[rb]) {
            (Some(pa), Some(pb)) if pa.ty != pb.ty => return Err((pa, pb)),
            (pa, pb) => pa.or(pb),
        };
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
        self.parent[rb] = ra;
        let moved = std::mem::take(&mut self.members[rb]);
        self.members[ra].extend(moved);
        self.pin[ra] = pin;
        self.pin[rb] = None;
        Ok(())
    }

    /// Shortest chain of equality edges between two slots.
    fn witness(&self, from: usize, to: usize) -> Vec<String> {
        if from == to {
            return vec![self.desc[from].clone()];
        }
        let mut adj: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for (k, (a, b, _)) in self.edges.iter().enumerate() {
            adj.entry(*a).or_default().push((*b, k));
            adj.entry(*b).or_default().push((*a, k));
        }
        let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                break;
            }
            for &(next, ek) in adj.get(&n).into_iter().flatten() {
                if next != from && !prev.contains_key(&next) {
                    prev.insert(next, (n, ek));
                    queue.push_back(next);
                }
            }
        }
        let mut chain = Vec::new();
        let mut at = to;
        while at != from {
            match prev.get(&at) {
                Some(&(p, ek)) => {
                    chain.push(self.edges[ek].2.clone());
                    at = p;
                }
                None => return Vec::new(), // disconnected: no chain to show
            }
        }
        chain.reverse();
        chain
    }

    /// Does the engine track this slot at all?
    pub fn contains(&self, slot: Slot) -> bool {
        self.index.contains_key(&slot)
    }

    /// The concrete type this slot's class is resolved to, if any.
    pub fn resolved(&self, slot: Slot) -> Option<Type> {
        let &i = self.index.get(&slot)?;
        self.pin[self.find(i)].map(|p| p.ty)
    }

    /// Every slot in the same class, sorted.
    pub fn members(&self, slot: Slot) -> Vec<Slot> {
        match self.index.get(&slot) {
            None => Vec::new(),
            Some(&i) => {
                let r = self.find(i);
                let mut out: Vec<Slot> = self.members[r].iter().map(|&k| self.slots[k]).collect();
                out.sort();
                out
            }
        }
    }

    /// All classes, each sorted, ordered by their smallest slot.
    pub fn classes(&self) -> Vec<Vec<Slot>> {
        let mut out: Vec<Vec<Slot>> = (0..self.slots.len())
            .filter(|&i| self.find(i) == i)
            .map(|r| {
                let mut c: Vec<Slot> = self.members[r].iter().map(|&k| self.slots[k]).collect();
                c.sort();
                c
            })
            .collect();
        out.sort();
        out
    }

    /// Resolve `slot`'s class to a concrete type. Returns the slots that
    /// became resolved (empty when the class already had this type);
    /// fails when the class is pinned to a different type. Slots the
    /// engine does not track resolve to nothing.
    pub fn resolve(&mut self, slot: Slot, ty: Type) -> Result<Vec<Slot>, TypeConflict> {
        let Some(&i) = self.index.get(&slot) else {
            return Ok(Vec::new());
        };
        let r = self.find(i);
        match self.pin[r] {
            Some(p) if p.ty == ty => Ok(Vec::new()),
            Some(p) => Err(TypeConflict {
                existing: p.ty,
                requested: ty,
                witness: self.witness(i, p.slot),
            }),
            None => {
                self.pin[r] = Some(Pin { ty, slot: i });
                let mut out: Vec<Slot> = self.members[r].iter().map(|&k| self.slots[k]).collect();
                out.sort();
                Ok(out)
            }
        }
    }
}

/// Resolve the class containing `slot` to `concrete` and report every slot
/// that became resolved. A pure query: the module is not changed.
pub fn resolve_class(m: &Module, slot: Slot, concrete: Type) -> Result<Vec<Slot>, TypeConflict> {
    let mut cls = ModuleClasses::build(m)?;
    cls.resolve(slot, concrete)
}

/// Rewrite everything the module's classes already determine: redeclare
/// hole functions whose classes are resolved, replace fully-resolved
/// hole-op calls with concrete opcodes, and drop unused hole-op
/// declarations. Idempotent; returns an empty report when there is
/// nothing to do (or when the class graph is inconsistent).
pub fn materialize(m: &mut Module) -> RewriteReport {
    let mut report = RewriteReport::default();
    if let Ok(cls) = ModuleClasses::build(m) {
        materialize_with(m, &cls, &mut report);
    }
    report
}

pub(crate) fn materialize_with(m: &mut Module, cls: &ModuleClasses, report: &mut RewriteReport) {
    let funcs: Vec<FuncId> = m.func_ids().collect();

    // Redeclare hole functions whose return/parameter classes resolved.
    for f in &funcs {
        let f = *f;
        let func = m.func(f);
        if holes::hole_number(func.name()).is_none() {
            continue;
        }
        let name = func.name().to_string();
        let mut sig = func.ty().clone();
        let old_sig = sig.clone();
        if let Some(&(g, call)) = m.callers_of(f).first() {
            let res = ValueRef::Inst { func: g, inst: call };
            if let Some(t) = cls.resolved(Slot::Value(res)) {
                if t.is_int() {
                    sig.ret = t;
                }
            }
        }
        for i in 0..sig.params.len() {
            if let Some(t) = cls.resolved(Slot::Param(f, i as u32)) {
                if t.is_int() {
                    sig.params[i] = t;
                }
            }
        }
        if sig != old_sig {
            let ret = sig.ret;
            m.set_func_type(f, sig);
            for (g, call) in m.callers_of(f) {
                if m.func(g).inst(call).ty() != ret {
                    m.set_inst_type(g, call, ret);
                }
            }
            report.redeclared_functions.push(name);
        }
    }

    // Replace hole-op calls whose classes resolved with real opcodes.
    let op_decls: Vec<(FuncId, String, HoleOpKind)> = funcs
        .iter()
        .filter_map(|&f| {
            let name = m.func(f).name().to_string();
            holes::hole_op_kind(&name).map(|k| (f, name, k))
        })
        .collect();
    // An argument's concrete type: what the IR says now (operands may
    // already have been swapped for typed replacements), else what its
    // class resolved to. Keying chains on result slots this way makes
    // the pass independent of replacement order.
    let arg_ty = |m: &Module, v: &ValueRef| -> Option<Type> {
        match m.try_type_of(v) {
            Some(t) if t.is_int() => Some(t),
            _ => cls.resolved(Slot::Value(*v)).filter(Type::is_int),
        }
    };
    for (decl, op_name, kind) in &op_decls {
        for (g, call) in m.callers_of(*decl) {
            let inst = m.func(g).inst(call);
            let args: Vec<ValueRef> = inst.value_operands().map(|(_, v)| *v).collect();
            let operands: Vec<Operand> = args.iter().map(|v| Operand::Value(*v)).collect();
            match (kind, args.as_slice()) {
                (HoleOpKind::Bin(op), [a0, a1]) => {
                    if let (Some(t), Some(_)) = (arg_ty(m, a0), arg_ty(m, a1)) {
                        m.replace_inst(g, call, Opcode::Bin(*op), operands, t);
                        report.materialized_ops.push((op_name.clone(), op.name().to_string()));
                    }
                }
                (HoleOpKind::Icmp(pred), [a0, a1]) => {
                    if arg_ty(m, a0).is_some() && arg_ty(m, a1).is_some() {
                        m.replace_inst(g, call, Opcode::Icmp(*pred), operands, Type::Int(1));
                        report
                            .materialized_ops
                            .push((op_name.clone(), format!("icmp {}", pred.name())));
                    }
                }
                (HoleOpKind::Select, [_, a1, a2]) => {
                    if let (Some(t), Some(_)) = (arg_ty(m, a1), arg_ty(m, a2)) {
                        m.replace_inst(g, call, Opcode::Select, operands, t);
                        report.materialized_ops.push((op_name.clone(), "select".to_string()));
                    }
                }
                _ => {}
            }
        }
    }

    // Op declarations with no remaining calls are dead weight.
    for (decl, op_name, _) in op_decls {
        if m.callers_of(decl).is_empty() && m.erase_func(decl).is_ok() {
            report.deleted.push(op_name);
        }
    }
}

pub(crate) fn value_desc(m: &Module, v: &ValueRef) -> String {
    match v {
        ValueRef::Const(c) => format!("{} {}", c.ty(), c),
        _ => {
            let f = v.parent_func().expect("non-constant");
            let names = crate::textio::value_names(m.func(f));
            match names.get(v) {
                Some(n) => format!("%{} (in @{})", n, m.func(f).name()),
                None => format!("{v:?}"),
            }
        }
    }
}

/// Replace all uses of `old` with `new`, allowing the type to change when
/// `old` is a hole. Same-type calls behave exactly like a plain
/// replace-all-uses-with. All-or-nothing: on error the module is
/// untouched.
pub fn rauw_nt(m: &mut Module, old: &ValueRef, new: &ValueRef) -> Result<RewriteReport, RewriteError> {
    let t_old = known_type(m, old)?;
    let t_new = known_type(m, new)?;
    let mut report = RewriteReport::default();

    if t_old == t_new {
        let uses = m.uses_of(old)?;
        report.replaced_calls = count_insts(&uses);
        m.rauw(old, new)?;
        return Ok(report);
    }

    // The type changes: `old` must be the result of a hole or hole-op
    // call. (A concretely-typed hole result is still routed through the
    // class engine so the failure is a conflict naming both types.)
    let (def_func, def_inst) = match old {
        ValueRef::Inst { func, inst } => (*func, *inst),
        _ => return Err(RewriteError::NotAHole(value_desc(m, old))),
    };
    let is_hole_def = m
        .func(def_func)
        .inst(def_inst)
        .callee()
        .map(|c| {
            let n = m.func(c).name();
            holes::hole_number(n).is_some() || holes::hole_op_kind(n).is_some()
        })
        .unwrap_or(false);
    if !is_hole_def {
        return Err(RewriteError::NotAHole(format!(
            "{} has type {t_old}",
            value_desc(m, old)
        )));
    }
    if !t_new.is_int() {
        return Err(RewriteError::Ir(IrError::Invalid(format!(
            "cannot assign a value of type {t_new} to a hole"
        ))));
    }

    let mut w = m.clone();
    let mut cls = ModuleClasses::build(&w)?;
    cls.resolve(Slot::Value(*old), t_new)?;

    let uses = w.uses_of(old)?;
    w.check_in_scope(new, &uses).map_err(RewriteError::Ir)?;
    report.replaced_calls = count_insts(&uses);
    for site in &uses {
        w.set_operand(site.func, site.inst, site.pos, Operand::Value(*new));
    }

    materialize_with(&mut w, &cls, &mut report);

    // The hole that was assigned is dead now: drop its call, and its
    // declaration once no callers remain.
    if w.uses_of(old).map(|u| u.is_empty()).unwrap_or(false) {
        let callee = w.func(def_func).inst(def_inst).callee();
        if w.erase_inst(def_func, def_inst).is_ok() {
            if let Some(c) = callee {
                let cname = w.func(c).name().to_string();
                if holes::hole_number(&cname).is_some() && w.callers_of(c).is_empty() {
                    let _ = w.erase_func(c);
                    report.deleted.push(cname);
                }
            }
        }
    }
    // A function that was redeclared on the way to being deleted is
    // reported only as deleted.
    report.redeclared_functions.retain(|n| !report.deleted.contains(n));

    verifier::debug_check(&w, "rauw_nt");
    *m = w;
    Ok(report)
}

pub(crate) fn known_type(m: &Module, v: &ValueRef) -> Result<Type, IrError> {
    m.try_type_of(v)
        .ok_or_else(|| IrError::UnknownValue(format!("{v:?}")))
}

fn count_insts(uses: &[crate::ir::UseSite]) -> usize {
    let mut seen: Vec<(FuncId, InstId)> = uses.iter().map(|u| (u.func, u.inst)).collect();
    seen.sort();
    seen.dedup();
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::{parse_module, print_module};
    use crate::types::IntConst;

    fn parse(text: &str) -> Module {
        parse_module(text).expect("parse")
    }

    /// The single call site of a hole declaration, as (value, decl id).
    fn hole_value(m: &Module, name: &str) -> (ValueRef, FuncId) {
        let f = m.func_by_name(name).expect("hole exists");
        let (g, call) = m.callers_of(f)[0];
        (ValueRef::Inst { func: g, inst: call }, f)
    }

    fn c32(v: i128) -> ValueRef {
        ValueRef::Const(IntConst::from_i128(32, v))
    }

    #[test]
    fn backpropagates_through_hole_parameter() {
        let mut m = parse(concat!(
            "declare %hole.t @hole0()\n",
            "declare i32 @hole1(%hole.t)\n",
            "\n",
            "define i32 @example() {\n",
            "  %0 = call %hole.t @hole0()\n",
            "  %1 = call i32 @hole1(%hole.t %0)\n",
            "  ret i32 %1\n",
            "}\n",
        ));
        let (h0, _) = hole_value(&m, "hole0");
        let report = rauw_nt(&mut m, &h0, &c32(5)).expect("rewrite succeeds");
        assert_eq!(
            print_module(&m),
            concat!(
                "declare i32 @hole1(i32)\n",
                "\n",
                "define i32 @example() {\n",
                "  %0 = call i32 @hole1(i32 5)\n",
                "  ret i32 %0\n",
                "}\n",
            )
        );
        assert_eq!(report.replaced_calls, 1);
        assert_eq!(report.redeclared_functions, vec!["hole1".to_string()]);
        assert_eq!(report.deleted, vec!["hole0".to_string()]);
        assert!(crate::verifier::verify(&m).is_empty());
    }

    #[test]
    fn not_a_hole_on_concrete_value() {
        let mut m = parse(concat!(
            "define i64 @f(i64 %x) {\n",
            "  %y = add i64 %x, 1\n",
            "  ret i64 %y\n",
            "}\n",
        ));
        let f = m.func_by_name("f").unwrap();
        let y = ValueRef::Inst { func: f, inst: crate::ir::InstId(0) };
        let before = print_module(&m);
        let err = rauw_nt(&mut m, &y, &c32(7)).unwrap_err();
        assert!(matches!(err, RewriteError::NotAHole(_)), "{err}");
        assert_eq!(print_module(&m), before);
    }

    #[test]
    fn hole_op_materializes_then_conflicts() {
        let mut m = parse(concat!(
            "declare %hole.t @hole.op.add(%hole.t, %hole.t)\n",
            "declare %hole.t @hole0()\n",
            "declare %hole.t @hole1()\n",
            "\n",
            "define i32 @f() {\n",
            "  %h0 = call %hole.t @hole0()\n",
            "  %h1 = call %hole.t @hole1()\n",
            "  %r = call %hole.t @hole.op.add(%hole.t %h0, %hole.t %h1)\n",
            "  ret i32 0\n",
            "}\n",
        ));
        let (h0, _) = hole_value(&m, "hole0");
        let (h1, _) = hole_value(&m, "hole1");
        let report = rauw_nt(&mut m, &h0, &c32(5)).expect("resolves");
        let text = print_module(&m);
        assert!(text.contains("%h1 = call i32 @hole1()"), "{text}");
        assert!(text.contains("%r = add i32 5, %h1"), "{text}");
        assert!(text.contains("declare i32 @hole1()"), "{text}");
        assert!(!text.contains("hole.op.add"), "{text}");
        assert_eq!(report.materialized_ops, vec![("hole.op.add".into(), "add".into())]);
        assert!(crate::verifier::verify(&m).is_empty());

        // %h1 (same value id) is now concretely i32; an i64 assignment is
        // a conflict, not a plain type error.
        let before = print_module(&m);
        let err = rauw_nt(&mut m, &h1, &ValueRef::Const(IntConst::from_i128(64, 1))).unwrap_err();
        match err {
            RewriteError::Conflict(c) => {
                assert_eq!(c.existing, Type::Int(32));
                assert_eq!(c.requested, Type::Int(64));
            }
            other => panic!("expected conflict, got {other}"),
        }
        assert_eq!(print_module(&m), before);
    }

    #[test]
    fn isolated_add_resolves_three_slots() {
        let m = parse(concat!(
            "declare %hole.t @hole.op.add(%hole.t, %hole.t)\n",
            "declare %hole.t @hole0()\n",
            "declare %hole.t @hole1()\n",
            "\n",
            "define i32 @f() {\n",
            "  %h0 = call %hole.t @hole0()\n",
            "  %h1 = call %hole.t @hole1()\n",
            "  %r = call %hole.t @hole.op.add(%hole.t %h0, %hole.t %h1)\n",
            "  ret i32 0\n",
            "}\n",
        ));
        let (h0, _) = hole_value(&m, "hole0");
        let newly = resolve_class(&m, Slot::Value(h0), Type::Int(32)).expect("no conflict");
        assert_eq!(newly.len(), 3);
        // Idempotence: the same resolution again resolves nothing.
        let mut cls = ModuleClasses::build(&m).unwrap();
        cls.resolve(Slot::Value(h0), Type::Int(32)).unwrap();
        assert_eq!(cls.resolve(Slot::Value(h0), Type::Int(32)).unwrap(), Vec::new());
    }

    #[test]
    fn chain_of_five_adds_resolves_eleven_slots() {
        // r1 = h0+h1, r2 = r1+h2, ..., r5 = r4+h5: six hole values and
        // five op results share one class.
        let mut text = String::new();
        text.push_str("declare %hole.t @hole.op.add(%hole.t, %hole.t)\n");
        for i in 0..6 {
            text.push_str(&format!("declare %hole.t @hole{i}()\n"));
        }
        text.push_str("\ndefine i32 @f() {\n");
        for i in 0..6 {
            text.push_str(&format!("  %h{i} = call %hole.t @hole{i}()\n"));
        }
        text.push_str("  %r1 = call %hole.t @hole.op.add(%hole.t %h0, %hole.t %h1)\n");
        for i in 2..6 {
            text.push_str(&format!(
                "  %r{i} = call %hole.t @hole.op.add(%hole.t %r{}, %hole.t %h{i})\n",
                i - 1
            ));
        }
        text.push_str("  ret i32 0\n}\n");
        let m = parse(&text);
        let (h3, _) = hole_value(&m, "hole3");
        let newly = resolve_class(&m, Slot::Value(h3), Type::Int(8)).expect("no conflict");
        assert_eq!(newly.len(), 11);
        // Same answer from any starting slot.
        let (h0, _) = hole_value(&m, "hole0");
        assert_eq!(resolve_class(&m, Slot::Value(h0), Type::Int(8)).unwrap().len(), 11);
    }

    #[test]
    fn conflict_carries_a_witness_chain() {
        let m = parse(concat!(
            "declare %hole.t @hole.op.add(%hole.t, %hole.t)\n",
            "declare %hole.t @hole0()\n",
            "declare %hole.t @hole1()\n",
            "\n",
            "define i32 @f() {\n",
            "  %h0 = call %hole.t @hole0()\n",
            "  %h1 = call %hole.t @hole1()\n",
            "  %r = call %hole.t @hole.op.add(%hole.t %h0, %hole.t %h1)\n",
            "  ret i32 0\n",
            "}\n",
        ));
        let (h0, _) = hole_value(&m, "hole0");
        let (h1, _) = hole_value(&m, "hole1");
        let mut cls = ModuleClasses::build(&m).unwrap();
        cls.resolve(Slot::Value(h0), Type::Int(32)).unwrap();
        let err = cls.resolve(Slot::Value(h1), Type::Int(64)).unwrap_err();
        assert_eq!(err.existing, Type::Int(32));
        assert_eq!(err.requested, Type::Int(64));
        assert!(!err.witness.is_empty());
        assert!(err.to_string().contains("hole.op.add"), "{err}");
    }

    #[test]
    fn same_type_assignment_is_plain_rauw() {
        let mut m = parse(concat!(
            "declare i32 @hole0()\n",
            "\n",
            "define i32 @f() {\n",
            "  %h = call i32 @hole0()\n",
            "  %r = add i32 %h, 1\n",
            "  ret i32 %r\n",
            "}\n",
        ));
        let (h, _) = hole_value(&m, "hole0");
        rauw_nt(&mut m, &h, &c32(5)).expect("same-type path");
        // Exactly a replace-all-uses-with: the dead hole call remains.
        assert_eq!(
            print_module(&m),
            concat!(
                "declare i32 @hole0()\n",
                "\n",
                "define i32 @f() {\n",
                "  %h = call i32 @hole0()\n",
                "  %r = add i32 5, 1\n",
                "  ret i32 %r\n",
                "}\n",
            )
        );
    }

    #[test]
    fn concrete_hole_cross_width_is_conflict() {
        let mut m = parse(concat!(
            "declare i32 @hole0()\n",
            "\n",
            "define i32 @f() {\n",
            "  %h = call i32 @hole0()\n",
            "  ret i32 %h\n",
            "}\n",
        ));
        let (h, _) = hole_value(&m, "hole0");
        let err = rauw_nt(&mut m, &h, &ValueRef::Const(IntConst::from_i128(8, 3))).unwrap_err();
        assert!(matches!(err, RewriteError::Conflict(_)), "{err}");
    }

    #[test]
    fn materialize_is_idempotent_and_inert_at_rest() {
        let text = concat!(
            "declare %hole.t @hole.op.add(%hole.t, %hole.t)\n",
            "declare %hole.t @hole0()\n",
            "declare %hole.t @hole1()\n",
            "\n",
            "define i32 @f() {\n",
            "  %h0 = call %hole.t @hole0()\n",
            "  %h1 = call %hole.t @hole1()\n",
            "  %r = call %hole.t @hole.op.add(%hole.t %h0, %hole.t %h1)\n",
            "  ret i32 0\n",
            "}\n",
        );
        let mut m = parse(text);
        let report = materialize(&mut m);
        assert_eq!(report, RewriteReport::default());
        assert_eq!(print_module(&m), text);
    }

    #[test]
    fn materialize_erases_unused_op_declaration() {
        let mut m = parse("declare %hole.t @hole.op.add(%hole.t, %hole.t)\n");
        let report = materialize(&mut m);
        assert_eq!(report.deleted, vec!["hole.op.add".to_string()]);
        assert_eq!(print_module(&m), "\n");
    }

    #[test]
    fn failed_scope_leaves_module_unchanged() {
        // The replacement value is defined *after* the hole's use, so the
        // rewrite must fail and leave the module byte-identical.
        let mut m = parse(concat!(
            "declare %hole.t @hole0()\n",
            "declare i32 @hole1(%hole.t)\n",
            "\n",
            "define i32 @f() {\n",
            "  %h = call %hole.t @hole0()\n",
            "  %u = call i32 @hole1(%hole.t %h)\n",
            "  %later = add i32 %u, 1\n",
            "  ret i32 %later\n",
            "}\n",
        ));
        let (h, _) = hole_value(&m, "hole0");
        let f = m.func_by_name("f").unwrap();
        let later = ValueRef::Inst { func: f, inst: crate::ir::InstId(2) };
        assert_eq!(m.type_of(&later), Type::Int(32));
        let before = print_module(&m);
        let err = rauw_nt(&mut m, &h, &later).unwrap_err();
        assert!(matches!(err, RewriteError::Ir(IrError::Scope { .. })), "{err}");
        assert_eq!(print_module(&m), before);
    }
}
