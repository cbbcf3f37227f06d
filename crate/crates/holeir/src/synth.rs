//! Hole assignment and a demonstration enumerative superoptimizer.
//!
//! The hole encoding is deliberately independent of any particular
//! decision procedure; this module is the simplest possible client.
//! [`fill`] turns an [`AssignmentSet`] into a concrete module by applying
//! the typed replacement engine entry by entry, and [`superopt`]
//! enumerates candidate assignments until one makes a sketch function
//! behave like a hole-free target. Candidates that imply an inconsistent
//! typing die of `TypeConflict` during `fill`, before any execution.

use std::collections::BTreeSet;
use std::fmt;

use crate::holes::{self, HoleInfo, HoleOpKind};
use crate::interp::{self, EquivPolicy, EquivVerdict};
use crate::ir::{BinOp, FuncId, InstId, Module, UseSite, ValueRef};
use crate::rewrite::{self, RewriteError};
use crate::textio::{value_names, AssignRhs, Assignment, AssignmentSet};
use crate::types::{IntConst, Type};
use crate::verifier;

/// Which one assignment entry failed, and how.
#[derive(Debug, thiserror::Error)]
#[error("assignment {position}: @{hole}: {source}")]
pub struct FillError {
    /// Source line of the entry, or its 1-based index for constructed
    /// sets (which carry line 0).
    pub line: u32,
    pub hole: String,
    #[source]
    pub source: RewriteError,
    position: Position,
}

#[derive(Debug, Clone, Copy)]
enum Position {
    Line(u32),
    Index(usize),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Line(n) => write!(f, "at line {n}"),
            Position::Index(k) => write!(f, "#{k}"),
        }
    }
}

/// Apply every entry, first to last, to a copy of the module; the
/// original is untouched. Each entry locates its hole by name and hands
/// the right-hand side to the typed replacement engine, so constants of
/// a new type backpropagate exactly as API calls do. Afterwards the
/// discharged holes' dead calls and declarations are removed and any
/// fully-typed operator templates are lowered to real instructions.
pub fn fill(m: &Module, assignments: &AssignmentSet) -> Result<Module, FillError> {
    let mut out = m.clone();
    for (k, entry) in assignments.entries.iter().enumerate() {
        apply_entry(&mut out, entry).map_err(|source| FillError {
            line: entry.line,
            hole: entry.hole.clone(),
            source,
            position: if entry.line > 0 {
                Position::Line(entry.line)
            } else {
                Position::Index(k + 1)
            },
        })?;
    }

    // A same-type assignment leaves the hole's call in place with no
    // remaining uses; discharge it and its declaration. Type-changing
    // assignments already erased both.
    for entry in &assignments.entries {
        let Some(decl) = out.func_by_name(&entry.hole) else { continue };
        let callers = out.callers_of(decl);
        let dead = callers.iter().all(|&(f, inst)| {
            let result = ValueRef::Inst { func: f, inst };
            out.uses_of(&result).map(|u| u.is_empty()).unwrap_or(false)
        });
        if dead {
            for (f, inst) in callers {
                let _ = out.erase_inst(f, inst);
            }
            if out.callers_of(decl).is_empty() {
                let _ = out.erase_func(decl);
            }
        }
    }
    rewrite::materialize(&mut out);
    Ok(out)
}

fn apply_entry(m: &mut Module, entry: &Assignment) -> Result<(), RewriteError> {
    let info = holes::list_holes(m)
        .into_iter()
        .find(|h| h.name == entry.hole)
        .ok_or_else(|| {
            RewriteError::NotAHole(format!("@{} does not name a live hole", entry.hole))
        })?;
    let new = match &entry.rhs {
        AssignRhs::Const(c) => ValueRef::Const(*c),
        AssignRhs::Value { ty, name } => {
            let func = m.func(info.func);
            let names = value_names(func);
            let v = names
                .iter()
                .find(|(_, n)| *n == name)
                .map(|(v, _)| *v)
                .ok_or_else(|| {
                    RewriteError::Ir(crate::ir::IrError::UnknownValue(format!(
                        "%{name} in @{}",
                        func.name()
                    )))
                })?;
            if let Some(want) = ty {
                let got = m.type_of(&v);
                if got != *want {
                    return Err(RewriteError::Ir(crate::ir::IrError::TypeMismatch {
                        old: got,
                        new: *want,
                    }));
                }
            }
            v
        }
    };
    rewrite::rauw_nt(m, &info.value, &new)?;
    Ok(())
}

/// Where candidate values come from.
#[derive(Debug, Clone)]
pub struct CandidatePools {
    /// Constant seeds. An empty list means the default set
    /// {0, 1, -1, 2, width-1}: at the hole's width when it is known,
    /// otherwise at every width the module uses. Explicit seeds are used
    /// as given; ill-typed ones are tried and die of `TypeConflict`.
    pub constants: Vec<IntConst>,
    /// Opcode choices for symbolic binary operators, in enumeration
    /// order. An empty list keeps each operator's current opcode.
    pub opcodes: Vec<BinOp>,
    /// Whether to pool in-scope values: the sketch's arguments and the
    /// instruction results that dominate each hole's call site.
    pub operands: bool,
}

impl Default for CandidatePools {
    fn default() -> CandidatePools {
        CandidatePools { constants: Vec::new(), opcodes: BinOp::ALL.to_vec(), operands: true }
    }
}

impl CandidatePools {
    /// Instantiate integer seeds at every width the module uses.
    pub fn with_constant_seeds(m: &Module, seeds: &[i128]) -> CandidatePools {
        let mut constants = Vec::new();
        for w in widths_in_use(m) {
            for &s in seeds {
                constants.push(IntConst::from_i128(w, s));
            }
        }
        CandidatePools { constants, ..CandidatePools::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Maximum number of candidate tuples to try; must be positive.
    pub max_candidates: u64,
    /// Equivalence policy. `None` checks exhaustively when the
    /// signature's total argument width is at most 16 bits and falls
    /// back to 1024 seeded samples otherwise.
    pub policy: Option<EquivPolicy>,
    /// Seed for the sampled fallback policy.
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig { max_candidates: 100_000, policy: None, seed: 0xC0FFEE }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub assignments: AssignmentSet,
    pub filled_module: Module,
    /// Tuples tried up to and including the successful one.
    pub candidates_tried: u64,
}

#[derive(Debug, Clone)]
pub enum SynthOutcome {
    Solution(Solution),
    NotFound { candidates_tried: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown function @{0}")]
    UnknownFunction(String),
    #[error("@{0} is a declaration, not a definition")]
    NotADefinition(String),
    #[error("signature mismatch: @{target} is `{target_ty}`, @{sketch} is `{sketch_ty}`")]
    SignatureMismatch { target: String, target_ty: String, sketch: String, sketch_ty: String },
    #[error("target @{0} contains holes")]
    TargetHasHoles(String),
    #[error("sketch @{0} contains no holes")]
    SketchHasNoHoles(String),
    #[error("hole @{0} lies outside the sketch function")]
    HoleOutsideSketch(String),
    #[error("candidate budget must be positive")]
    ZeroBudget,
}

/// Every integer width that appears in the module's signatures,
/// instruction types, or constants, ascending.
pub fn widths_in_use(m: &Module) -> Vec<u32> {
    let mut widths = BTreeSet::new();
    let mut note = |t: Type| {
        if let Type::Int(w) = t {
            widths.insert(w);
        }
    };
    for f in m.func_ids() {
        let func = m.func(f);
        note(func.ty().ret);
        for &p in &func.ty().params {
            note(p);
        }
        for (_, id) in func.insts_in_order() {
            let inst = func.inst(id);
            note(inst.ty());
            for (_, v) in inst.value_operands() {
                if let ValueRef::Const(c) = v {
                    note(c.ty());
                }
            }
        }
    }
    widths.into_iter().collect()
}

fn default_constants(w: u32) -> Vec<IntConst> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for v in [0i128, 1, -1, 2, w as i128 - 1] {
        let c = IntConst::from_i128(w, v);
        if seen.insert(c.bits()) {
            out.push(c);
        }
    }
    out
}

/// In-scope values for one hole: arguments first, then instruction
/// results in definition order, keeping only those that dominate the
/// hole's call site. Values of the opaque hole type are pooled without a
/// type annotation — they may become concrete once earlier entries of
/// the same tuple resolve them.
fn operand_candidates(m: &Module, info: &HoleInfo) -> Vec<(ValueRef, Option<Type>)> {
    let func = m.func(info.func);
    let site = UseSite { func: info.func, inst: info.call_site, pos: 0 };
    let mut pool = Vec::new();
    let mut consider = |v: ValueRef| {
        if v == info.value {
            return;
        }
        let ann = match m.try_type_of(&v) {
            Some(t @ Type::Int(_)) => Some(t),
            Some(Type::Hole) => None,
            _ => return,
        };
        if m.check_in_scope(&v, std::slice::from_ref(&site)).is_ok() {
            pool.push((v, ann));
        }
    };
    for index in 0..func.ty().params.len() {
        consider(ValueRef::Arg { func: info.func, index: index as u32 });
    }
    for (_, inst) in func.insts_in_order() {
        consider(ValueRef::Inst { func: info.func, inst });
    }
    pool
}

fn constant_candidates(m: &Module, pools: &CandidatePools, declared: Type) -> Vec<IntConst> {
    let raw: Vec<IntConst> = if !pools.constants.is_empty() {
        pools.constants.clone()
    } else {
        match declared {
            Type::Int(w) => default_constants(w),
            _ => widths_in_use(m).into_iter().flat_map(default_constants).collect(),
        }
    };
    let mut seen = BTreeSet::new();
    raw.into_iter().filter(|c| seen.insert((c.width(), c.bits()))).collect()
}

/// Search for hole assignments that make `@sketch_fn` equivalent to
/// `@target_fn`. Decision variables are the sketch's symbolic binary
/// operators (one opcode choice each, swapped by retargeting the call)
/// followed by its holes in declaration order (operand candidates before
/// constants); tuples are tried in lexicographic order, rightmost
/// variable fastest. Every tuple is counted, including ones rejected by
/// a type conflict before execution. The input module is never mutated.
pub fn superopt(
    m: &Module,
    target_fn: &str,
    sketch_fn: &str,
    pools: &CandidatePools,
    cfg: &SynthConfig,
) -> Result<SynthOutcome, ConfigError> {
    if cfg.max_candidates == 0 {
        return Err(ConfigError::ZeroBudget);
    }
    let target = m
        .func_by_name(target_fn)
        .ok_or_else(|| ConfigError::UnknownFunction(target_fn.to_string()))?;
    let sketch = m
        .func_by_name(sketch_fn)
        .ok_or_else(|| ConfigError::UnknownFunction(sketch_fn.to_string()))?;
    for (f, name) in [(target, target_fn), (sketch, sketch_fn)] {
        if m.func(f).is_declaration() {
            return Err(ConfigError::NotADefinition(name.to_string()));
        }
    }
    if m.func(target).ty() != m.func(sketch).ty() {
        return Err(ConfigError::SignatureMismatch {
            target: target_fn.to_string(),
            target_ty: m.func(target).ty().to_string(),
            sketch: sketch_fn.to_string(),
            sketch_ty: m.func(sketch).ty().to_string(),
        });
    }

    let all_holes = holes::list_holes(m);
    let sketch_holes: Vec<&HoleInfo> = all_holes.iter().filter(|h| h.func == sketch).collect();
    for h in &all_holes {
        if h.func == target {
            return Err(ConfigError::TargetHasHoles(target_fn.to_string()));
        }
        if h.func != sketch {
            return Err(ConfigError::HoleOutsideSketch(h.name.clone()));
        }
    }
    if sketch_holes.is_empty() {
        return Err(ConfigError::SketchHasNoHoles(sketch_fn.to_string()));
    }

    // Symbolic binary operators still present in the sketch, in
    // instruction order. Comparison and select operators keep their kind.
    let mut op_dims: Vec<(InstId, Vec<BinOp>)> = Vec::new();
    {
        let func = m.func(sketch);
        for (_, id) in func.insts_in_order() {
            let Some(callee) = func.inst(id).callee() else { continue };
            let Some(HoleOpKind::Bin(current)) = holes::hole_op_kind(m.func(callee).name())
            else {
                continue;
            };
            let source: &[BinOp] = if pools.opcodes.is_empty() {
                std::slice::from_ref(&current)
            } else {
                &pools.opcodes
            };
            let mut choices: Vec<BinOp> = Vec::new();
            for &op in source {
                if !choices.contains(&op) {
                    choices.push(op);
                }
            }
            op_dims.push((id, choices));
        }
    }

    let mut hole_dims: Vec<(String, Vec<AssignRhs>)> = Vec::new();
    {
        let names = value_names(m.func(sketch));
        for info in &sketch_holes {
            let mut cands: Vec<AssignRhs> = Vec::new();
            if pools.operands {
                for (v, ann) in operand_candidates(m, info) {
                    let name = names.get(&v).cloned().unwrap_or_default();
                    cands.push(AssignRhs::Value { ty: ann, name });
                }
            }
            for c in constant_candidates(m, pools, info.declared_type) {
                cands.push(AssignRhs::Const(c));
            }
            hole_dims.push((info.name.clone(), cands));
        }
    }

    let policy = match &cfg.policy {
        Some(p) => p.clone(),
        None => {
            let total: u32 = m
                .func(target)
                .ty()
                .params
                .iter()
                .map(|t| match t {
                    Type::Int(w) => *w,
                    _ => 0,
                })
                .sum();
            if total <= 16 {
                EquivPolicy::Exhaustive { max_input_bits: 16 }
            } else {
                EquivPolicy::Sampled { samples: 1024, seed: cfg.seed }
            }
        }
    };

    let sizes: Vec<usize> = op_dims
        .iter()
        .map(|(_, v)| v.len())
        .chain(hole_dims.iter().map(|(_, v)| v.len()))
        .collect();
    if sizes.iter().any(|&n| n == 0) {
        return Ok(SynthOutcome::NotFound { candidates_tried: 0 });
    }

    let mut idx = vec![0usize; sizes.len()];
    let mut tried = 0u64;
    loop {
        tried += 1;
        if let Some((set, filled)) =
            attempt(m, sketch, &op_dims, &hole_dims, &idx, target_fn, sketch_fn, &policy)
        {
            return Ok(SynthOutcome::Solution(Solution {
                assignments: set,
                filled_module: filled,
                candidates_tried: tried,
            }));
        }
        if tried >= cfg.max_candidates {
            return Ok(SynthOutcome::NotFound { candidates_tried: tried });
        }
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return Ok(SynthOutcome::NotFound { candidates_tried: tried });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn attempt(
    m: &Module,
    sketch: FuncId,
    op_dims: &[(InstId, Vec<BinOp>)],
    hole_dims: &[(String, Vec<AssignRhs>)],
    idx: &[usize],
    target_fn: &str,
    sketch_fn: &str,
    policy: &EquivPolicy,
) -> Option<(AssignmentSet, Module)> {
    let mut work = m.clone();
    for (k, (slot, choices)) in op_dims.iter().enumerate() {
        let kind = HoleOpKind::Bin(choices[idx[k]]);
        let name = holes::hole_op_name(kind);
        let callee = match work.func_by_name(&name) {
            Some(f) => f,
            None => work.add_function(&name, holes::hole_op_signature(kind)).ok()?,
        };
        work.set_callee(sketch, *slot, callee);
    }
    let entries: Vec<Assignment> = hole_dims
        .iter()
        .enumerate()
        .map(|(j, (hole, cands))| Assignment {
            hole: hole.clone(),
            rhs: cands[idx[op_dims.len() + j]].clone(),
            line: 0,
        })
        .collect();
    let set = AssignmentSet { entries };
    let filled = fill(&work, &set).ok()?;
    if !verifier::verify(&filled).is_empty() || !verifier::is_hole_free(&filled) {
        return None;
    }
    match interp::check_equiv(&filled, target_fn, sketch_fn, policy.clone()) {
        Ok(EquivVerdict::Equivalent { .. }) => Some((set, filled)),
        _ => None,
    }
}
