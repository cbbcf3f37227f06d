//! Two-phase module parser: collect every function header first (so calls
//! can reference functions declared later in the file), then parse bodies.
//!
//! The parser is deliberately permissive about *semantic* properties the
//! verifier owns — use-before-def, unreachable blocks, call arity — but
//! strict about anything the in-memory form cannot represent: unknown
//! names, type annotations that contradict a value's type, constants that
//! do not fit their width. Errors do not stop the scan; every diagnostic
//! carries the offending token's position.

use std::collections::HashMap;
use std::ops::Range;

use super::lex::{lex, Tok, Token};
use super::Diagnostic;
use crate::ir::{
    BinOp, BlockId, FuncId, IcmpPred, InsertAt, InstId, Instruction, Module, Opcode, Operand,
    ValueRef,
};
use crate::types::{FnType, IntConst, Type};

/// Interpret one token as a type, if it is one.
pub(super) fn type_from_token(t: &Token) -> Option<Type> {
    match &t.tok {
        Tok::Ident(s) if s == "void" => Some(Type::Void),
        Tok::Ident(s) => {
            let digits = s.strip_prefix('i')?;
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let w: u32 = digits.parse().ok()?;
            if (1..=Type::MAX_INT_WIDTH).contains(&w) {
                Some(Type::Int(w))
            } else {
                None
            }
        }
        Tok::Local(s) if s == "hole.t" => Some(Type::Hole),
        _ => None,
    }
}

/// Range-checked constant: accepts any value representable at the width
/// in either signed or unsigned reading.
pub(super) fn const_in_width(width: u32, neg: bool, mag: u128) -> Option<IntConst> {
    if neg {
        if width < 128 && mag > (1u128 << (width - 1)) {
            return None;
        }
        if width == 128 && mag > 1u128 << 127 {
            return None;
        }
        Some(IntConst::new(width, mag.wrapping_neg()))
    } else {
        if mag > IntConst::mask(width) {
            return None;
        }
        Some(IntConst::new(width, mag))
    }
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    last: (u32, u32),
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token]) -> Cursor<'a> {
        Cursor { toks, pos: 0, last: (1, 1) }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek2(&self) -> Option<&'a Token> {
        self.toks.get(self.pos + 1)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos)?;
        self.pos += 1;
        self.last = (t.line, t.col);
        t.into()
    }

    /// Position for "expected X here" messages: the next token, or just
    /// past the last consumed one.
    fn here(&self) -> (u32, u32) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => self.last,
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek().map(|t| &t.tok == want).unwrap_or(false) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: &Tok, what: &str, diags: &mut Vec<Diagnostic>) -> bool {
        if self.eat(want) {
            true
        } else {
            let (l, c) = self.here();
            diags.push(Diagnostic::error(l, c, format!("expected {what}")));
            false
        }
    }

    fn parse_type(&mut self, diags: &mut Vec<Diagnostic>) -> Option<Type> {
        let t = self.peek()?;
        match type_from_token(t) {
            Some(ty) => {
                self.bump();
                Some(ty)
            }
            None => {
                // Distinguish a malformed width from a missing type.
                if let Tok::Ident(s) = &t.tok {
                    if s.len() > 1
                        && s.starts_with('i')
                        && s[1..].bytes().all(|b| b.is_ascii_digit())
                    {
                        diags.push(Diagnostic::error(
                            t.line,
                            t.col,
                            format!("unsupported integer width `{s}` (valid: i1 through i128)"),
                        ));
                        self.bump();
                        return None;
                    }
                }
                let (l, c) = self.here();
                diags.push(Diagnostic::error(l, c, "expected a type".into()));
                None
            }
        }
    }
}

#[derive(Debug, Clone)]
enum TextVal {
    Local { name: String, line: u32, col: u32 },
    Num { neg: bool, mag: u128, line: u32, col: u32 },
}

impl TextVal {
    fn pos(&self) -> (u32, u32) {
        match self {
            TextVal::Local { line, col, .. } | TextVal::Num { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone)]
struct LabelRef {
    name: String,
    line: u32,
    col: u32,
}

#[derive(Debug)]
enum Rhs {
    Bin { op: BinOp, ty: Type, a: TextVal, b: TextVal },
    Icmp { pred: IcmpPred, ty: Type, a: TextVal, b: TextVal },
    Select { cty: Type, c: TextVal, ty: Type, t: TextVal, f: TextVal },
    Call { ret: Type, callee: LabelRef, args: Vec<(Type, TextVal)> },
    Phi { ty: Type, inc: Vec<(TextVal, LabelRef)> },
    Br { t: LabelRef },
    CondBr { c: TextVal, t: LabelRef, f: LabelRef },
    Ret { v: Option<(Type, TextVal)> },
}

#[derive(Debug)]
struct TempInst {
    name: Option<String>,
    rhs: Rhs,
    line: u32,
    col: u32,
}

struct RawBlock {
    name: Option<String>,
    span: (u32, u32),
    insts: Vec<TempInst>,
}

struct Header {
    name: String,
    span: (u32, u32),
    ret: Type,
    params: Vec<(Type, Option<String>)>,
}

/// Parse module text. On success the module is structurally sound enough
/// to print and verify; semantic problems are the verifier's to report.
pub fn parse_module(text: &str) -> Result<Module, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(text, ';');
    let mut m = Module::new();
    let mut func_map: HashMap<String, FuncId> = HashMap::new();
    let mut bodies: Vec<(FuncId, Range<usize>)> = Vec::new();

    let mut p = Cursor::new(&tokens);
    while let Some(t) = p.peek() {
        let is_def = match &t.tok {
            Tok::Ident(k) if k == "declare" => false,
            Tok::Ident(k) if k == "define" => true,
            _ => {
                diags.push(Diagnostic::error(
                    t.line,
                    t.col,
                    "expected `declare` or `define`".into(),
                ));
                skip_to_top_level(&mut p);
                continue;
            }
        };
        let span = (t.line, t.col);
        p.bump();
        let Some(header) = parse_header(&mut p, span, &mut diags) else {
            skip_to_top_level(&mut p);
            continue;
        };
        let body = if is_def {
            if !p.expect(&Tok::LBrace, "`{` to open the function body", &mut diags) {
                skip_to_top_level(&mut p);
                continue;
            }
            let start = p.pos;
            while p.peek().map(|t| t.tok != Tok::RBrace).unwrap_or(false) {
                p.bump();
            }
            let end = p.pos;
            if !p.eat(&Tok::RBrace) {
                let (l, c) = p.here();
                diags.push(Diagnostic::error(l, c, "missing `}`".into()));
            }
            Some(start..end)
        } else {
            None
        };
        let (tys, names): (Vec<Type>, Vec<Option<String>>) = header.params.into_iter().unzip();
        match m.add_function_named_params(&header.name, FnType::new(header.ret, tys), names) {
            Ok(f) => {
                m.set_func_span(f, header.span);
                func_map.insert(header.name, f);
                if let Some(range) = body {
                    bodies.push((f, range));
                } else if is_def {
                    // Unreachable: body is always Some for defines.
                }
            }
            Err(e) => diags.push(Diagnostic::error(header.span.0, header.span.1, e.to_string())),
        }
    }

    for (f, range) in bodies {
        parse_body(&mut m, f, &tokens[range], &func_map, &mut diags);
    }

    if diags.is_empty() {
        Ok(m)
    } else {
        Err(diags)
    }
}

fn skip_to_top_level(p: &mut Cursor<'_>) {
    p.bump();
    while let Some(t) = p.peek() {
        if matches!(&t.tok, Tok::Ident(k) if k == "declare" || k == "define") {
            break;
        }
        p.bump();
    }
}

fn parse_header(p: &mut Cursor<'_>, span: (u32, u32), diags: &mut Vec<Diagnostic>) -> Option<Header> {
    let ret = p.parse_type(diags)?;
    let name = match p.peek() {
        Some(t) => match &t.tok {
            Tok::Global(n) => {
                let n = n.clone();
                p.bump();
                n
            }
            _ => {
                diags.push(Diagnostic::error(t.line, t.col, "expected a function name".into()));
                return None;
            }
        },
        None => {
            let (l, c) = p.here();
            diags.push(Diagnostic::error(l, c, "expected a function name".into()));
            return None;
        }
    };
    if !p.expect(&Tok::LParen, "`(`", diags) {
        return None;
    }
    let mut params = Vec::new();
    if !p.eat(&Tok::RParen) {
        loop {
            let ty = p.parse_type(diags)?;
            let pname = match p.peek() {
                Some(t) => match &t.tok {
                    Tok::Local(n) if n != "hole.t" => {
                        let n = n.clone();
                        p.bump();
                        Some(n)
                    }
                    _ => None,
                },
                None => None,
            };
            params.push((ty, pname));
            if p.eat(&Tok::Comma) {
                continue;
            }
            if !p.expect(&Tok::RParen, "`,` or `)`", diags) {
                return None;
            }
            break;
        }
    }
    Some(Header { name, span, ret, params })
}

fn parse_body(
    m: &mut Module,
    f: FuncId,
    toks: &[Token],
    func_map: &HashMap<String, FuncId>,
    diags: &mut Vec<Diagnostic>,
) {
    let diags_at_entry = diags.len();
    let mut p = Cursor::new(toks);
    let raw = scan_blocks(&mut p, diags);
    if raw.is_empty() {
        let (l, c) = m.func(f).span();
        diags.push(Diagnostic::error(l, c, format!("@{}: function body is empty", m.func(f).name())));
        return;
    }

    // Block label map; duplicates keep the first binding.
    let mut labels: HashMap<&str, BlockId> = HashMap::new();
    for (i, rb) in raw.iter().enumerate() {
        if let Some(n) = &rb.name {
            if labels.insert(n, BlockId(i as u32)).is_some() {
                diags.push(Diagnostic::error(
                    rb.span.0,
                    rb.span.1,
                    format!("duplicate block label %{n}"),
                ));
            }
        }
    }

    // Value name map. Unnamed parameters get implicit numeric names in
    // order, matching the canonical printer's numbering.
    let sig = m.func(f).ty().clone();
    let ret_ty = sig.ret;
    let mut names: HashMap<String, ValueRef> = HashMap::new();
    let mut implicit = 0usize;
    for (i, ty) in sig.params.iter().enumerate() {
        let _ = ty;
        let vref = ValueRef::Arg { func: f, index: i as u32 };
        let key = match m.func(f).param_name(i) {
            Some(n) => n.to_string(),
            None => {
                let k = implicit.to_string();
                implicit += 1;
                k
            }
        };
        if names.insert(key.clone(), vref).is_some() {
            let (l, c) = m.func(f).span();
            diags.push(Diagnostic::error(l, c, format!("duplicate value name %{key}")));
        }
    }

    // Flatten instructions in textual order; instruction k will get
    // InstId(k) on insertion, so forward references resolve now.
    let flat: Vec<(usize, &TempInst)> = raw
        .iter()
        .enumerate()
        .flat_map(|(bi, rb)| rb.insts.iter().map(move |t| (bi, t)))
        .collect();

    let mut types: Vec<Type> = Vec::with_capacity(flat.len());
    for (k, (_, temp)) in flat.iter().enumerate() {
        let ty = match &temp.rhs {
            Rhs::Bin { ty, .. } | Rhs::Phi { ty, .. } | Rhs::Select { ty, .. } => *ty,
            Rhs::Icmp { .. } => Type::Int(1),
            Rhs::Call { ret, callee, .. } => match func_map.get(&callee.name) {
                Some(&g) => {
                    let actual = m.func(g).ty().ret;
                    if actual != *ret {
                        diags.push(Diagnostic::error(
                            callee.line,
                            callee.col,
                            format!("call annotated {ret}, but @{} returns {actual}", callee.name),
                        ));
                    }
                    actual
                }
                None => {
                    diags.push(Diagnostic::error(
                        callee.line,
                        callee.col,
                        format!("unknown function @{}", callee.name),
                    ));
                    *ret
                }
            },
            Rhs::Br { .. } | Rhs::CondBr { .. } | Rhs::Ret { .. } => Type::Void,
        };
        types.push(ty);
        match (&temp.name, ty == Type::Void) {
            (Some(n), true) => diags.push(Diagnostic::error(
                temp.line,
                temp.col,
                format!("%{n}: this instruction produces no value"),
            )),
            (None, false) if !matches!(temp.rhs, Rhs::Call { .. }) => {
                diags.push(Diagnostic::error(
                    temp.line,
                    temp.col,
                    "this instruction needs a result name (`%name = ...`)".into(),
                ))
            }
            _ => {}
        }
        if let Some(n) = &temp.name {
            if n == "hole.t" {
                diags.push(Diagnostic::error(temp.line, temp.col, "%hole.t is reserved".into()));
            } else if names.insert(n.clone(), ValueRef::Inst { func: f, inst: InstId(k as u32) }).is_some() {
                diags.push(Diagnostic::error(
                    temp.line,
                    temp.col,
                    format!("duplicate value name %{n}"),
                ));
            }
        }
    }

    // Resolve operands.
    let type_of = |v: &ValueRef, types: &[Type]| -> Type {
        match v {
            ValueRef::Arg { index, .. } => sig.params[*index as usize],
            ValueRef::Inst { inst, .. } => types[inst.index()],
            ValueRef::Const(c) => c.ty(),
        }
    };
    let mut resolved: Vec<Option<(Opcode, Vec<Operand>)>> = Vec::with_capacity(flat.len());
    for (_, temp) in &flat {
        let val = |ty: Type, v: &TextVal, diags: &mut Vec<Diagnostic>| -> Option<Operand> {
            let (line, col) = v.pos();
            match v {
                TextVal::Local { name, .. } => {
                    if name == "hole.t" {
                        diags.push(Diagnostic::error(line, col, "%hole.t is a type, not a value".into()));
                        return None;
                    }
                    match names.get(name) {
                        Some(vr) => {
                            let vty = type_of(vr, &types);
                            if vty != ty {
                                diags.push(Diagnostic::error(
                                    line,
                                    col,
                                    format!("%{name} has type {vty}, expected {ty}"),
                                ));
                            }
                            Some(Operand::Value(*vr))
                        }
                        None => {
                            diags.push(Diagnostic::error(line, col, format!("unknown value %{name}")));
                            None
                        }
                    }
                }
                TextVal::Num { neg, mag, .. } => match ty {
                    Type::Int(w) => match const_in_width(w, *neg, *mag) {
                        Some(c) => Some(Operand::Value(ValueRef::Const(c))),
                        None => {
                            diags.push(Diagnostic::error(
                                line,
                                col,
                                format!("constant does not fit in {ty}"),
                            ));
                            None
                        }
                    },
                    _ => {
                        diags.push(Diagnostic::error(
                            line,
                            col,
                            format!("a constant cannot have type {ty}"),
                        ));
                        None
                    }
                },
            }
        };
        let lab = |r: &LabelRef, diags: &mut Vec<Diagnostic>| -> Option<Operand> {
            match labels.get(r.name.as_str()) {
                Some(&b) => Some(Operand::Block(b)),
                None => {
                    diags.push(Diagnostic::error(r.line, r.col, format!("unknown label %{}", r.name)));
                    None
                }
            }
        };
        let out = match &temp.rhs {
            Rhs::Bin { op, ty, a, b } => {
                let (a, b) = (val(*ty, a, diags), val(*ty, b, diags));
                a.zip(b).map(|(a, b)| (Opcode::Bin(*op), vec![a, b]))
            }
            Rhs::Icmp { pred, ty, a, b } => {
                let (a, b) = (val(*ty, a, diags), val(*ty, b, diags));
                a.zip(b).map(|(a, b)| (Opcode::Icmp(*pred), vec![a, b]))
            }
            Rhs::Select { cty, c, ty, t, f: fv } => {
                let c = val(*cty, c, diags);
                let t = val(*ty, t, diags);
                let fv = val(*ty, fv, diags);
                match (c, t, fv) {
                    (Some(c), Some(t), Some(fv)) => Some((Opcode::Select, vec![c, t, fv])),
                    _ => None,
                }
            }
            Rhs::Call { callee, args, .. } => {
                let target = func_map.get(&callee.name).copied();
                let mut ops = Vec::with_capacity(args.len());
                let mut ok = target.is_some();
                for (ty, v) in args {
                    match val(*ty, v, diags) {
                        Some(o) => ops.push(o),
                        None => ok = false,
                    }
                }
                if ok {
                    Some((Opcode::Call(target.unwrap()), ops))
                } else {
                    None
                }
            }
            Rhs::Phi { ty, inc } => {
                let mut ops = Vec::with_capacity(inc.len() * 2);
                let mut ok = true;
                for (v, pred) in inc {
                    match (val(*ty, v, diags), lab(pred, diags)) {
                        (Some(v), Some(b)) => {
                            ops.push(v);
                            ops.push(b);
                        }
                        _ => ok = false,
                    }
                }
                ok.then_some((Opcode::Phi, ops))
            }
            Rhs::Br { t } => lab(t, diags).map(|b| (Opcode::Br, vec![b])),
            Rhs::CondBr { c, t, f: fv } => {
                let c = val(Type::Int(1), c, diags);
                let (t, fv) = (lab(t, diags), lab(fv, diags));
                match (c, t, fv) {
                    (Some(c), Some(t), Some(fv)) => Some((Opcode::CondBr, vec![c, t, fv])),
                    _ => None,
                }
            }
            Rhs::Ret { v: None } => {
                if ret_ty != Type::Void {
                    diags.push(Diagnostic::error(
                        temp.line,
                        temp.col,
                        format!("ret void in a function returning {ret_ty}"),
                    ));
                }
                Some((Opcode::Ret, vec![]))
            }
            Rhs::Ret { v: Some((ty, v)) } => {
                if *ty != ret_ty {
                    diags.push(Diagnostic::error(
                        temp.line,
                        temp.col,
                        format!("ret type {ty} does not match the function's return type {ret_ty}"),
                    ));
                }
                val(*ty, v, diags).map(|v| (Opcode::Ret, vec![v]))
            }
        };
        resolved.push(out);
    }

    if diags.len() != diags_at_entry {
        return; // do not build a half-valid function
    }

    let block_ids: Vec<BlockId> = raw
        .iter()
        .map(|rb| {
            let b = m
                .add_block(f, rb.name.clone())
                .expect("duplicate labels were checked");
            m.set_block_span(f, b, rb.span);
            b
        })
        .collect();
    for (k, (bi, temp)) in flat.iter().enumerate() {
        let (opcode, operands) = resolved[k].take().expect("clean function resolves fully");
        let id = m.insert_inst_raw(
            f,
            InsertAt::End(block_ids[*bi]),
            Instruction {
                opcode,
                operands,
                name: temp.name.clone(),
                ty: types[k],
                block: block_ids[*bi],
                span: (temp.line, temp.col),
            },
        );
        debug_assert_eq!(id.index(), k);
    }
}

fn scan_blocks(p: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> Vec<RawBlock> {
    let mut blocks: Vec<RawBlock> = Vec::new();
    while let Some(t) = p.peek() {
        // A label is `name:` or `N:`.
        let label = match (&t.tok, p.peek2().map(|t2| &t2.tok)) {
            (Tok::Ident(n), Some(Tok::Colon)) => Some(n.clone()),
            (Tok::Int { neg: false, mag }, Some(Tok::Colon)) => Some(mag.to_string()),
            _ => None,
        };
        if let Some(name) = label {
            let span = (t.line, t.col);
            p.bump();
            p.bump();
            blocks.push(RawBlock { name: Some(name), span, insts: Vec::new() });
            continue;
        }
        if blocks.is_empty() {
            blocks.push(RawBlock { name: None, span: (t.line, t.col), insts: Vec::new() });
        }
        let start_line = t.line;
        match parse_inst(p, diags) {
            Some(inst) => blocks.last_mut().unwrap().insts.push(inst),
            None => {
                // Recover at the next source line (or label/end).
                while let Some(t) = p.peek() {
                    if t.line > start_line {
                        break;
                    }
                    p.bump();
                }
            }
        }
    }
    blocks
}

fn parse_inst(p: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> Option<TempInst> {
    let first = p.peek()?;
    let (line, col) = (first.line, first.col);
    let name = match &first.tok {
        Tok::Local(n) => {
            let n = n.clone();
            p.bump();
            if !p.expect(&Tok::Eq, "`=`", diags) {
                return None;
            }
            Some(n)
        }
        _ => None,
    };
    let rhs = parse_rhs(p, diags)?;
    Some(TempInst { name, rhs, line, col })
}

fn parse_val(p: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> Option<TextVal> {
    match p.peek() {
        Some(t) => match &t.tok {
            Tok::Local(n) => {
                let v = TextVal::Local { name: n.clone(), line: t.line, col: t.col };
                p.bump();
                Some(v)
            }
            Tok::Int { neg, mag } => {
                let v = TextVal::Num { neg: *neg, mag: *mag, line: t.line, col: t.col };
                p.bump();
                Some(v)
            }
            _ => {
                diags.push(Diagnostic::error(t.line, t.col, "expected a value".into()));
                None
            }
        },
        None => {
            let (l, c) = p.here();
            diags.push(Diagnostic::error(l, c, "expected a value".into()));
            None
        }
    }
}

fn parse_label_ref(p: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> Option<LabelRef> {
    match p.peek() {
        Some(t) => match &t.tok {
            Tok::Local(n) => {
                let r = LabelRef { name: n.clone(), line: t.line, col: t.col };
                p.bump();
                Some(r)
            }
            _ => {
                diags.push(Diagnostic::error(t.line, t.col, "expected a label (`%name`)".into()));
                None
            }
        },
        None => {
            let (l, c) = p.here();
            diags.push(Diagnostic::error(l, c, "expected a label (`%name`)".into()));
            None
        }
    }
}

fn parse_rhs(p: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> Option<Rhs> {
    let t = p.peek().or_else(|| {
        let (l, c) = p.here();
        diags.push(Diagnostic::error(l, c, "expected an instruction".into()));
        None
    })?;
    let word = match &t.tok {
        Tok::Ident(w) => w.clone(),
        _ => {
            diags.push(Diagnostic::error(t.line, t.col, "expected an instruction".into()));
            return None;
        }
    };

    if let Some(op) = BinOp::from_name(&word) {
        p.bump();
        let ty = p.parse_type(diags)?;
        let a = parse_val(p, diags)?;
        p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
        let b = parse_val(p, diags)?;
        return Some(Rhs::Bin { op, ty, a, b });
    }
    match word.as_str() {
        "icmp" => {
            p.bump();
            let pred = match p.peek() {
                Some(t) => match &t.tok {
                    Tok::Ident(w) => match IcmpPred::from_name(w) {
                        Some(pr) => {
                            p.bump();
                            pr
                        }
                        None => {
                            diags.push(Diagnostic::error(
                                t.line,
                                t.col,
                                format!("unknown icmp predicate `{w}`"),
                            ));
                            return None;
                        }
                    },
                    _ => {
                        diags.push(Diagnostic::error(t.line, t.col, "expected an icmp predicate".into()));
                        return None;
                    }
                },
                None => {
                    let (l, c) = p.here();
                    diags.push(Diagnostic::error(l, c, "expected an icmp predicate".into()));
                    return None;
                }
            };
            let ty = p.parse_type(diags)?;
            let a = parse_val(p, diags)?;
            p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
            let b = parse_val(p, diags)?;
            Some(Rhs::Icmp { pred, ty, a, b })
        }
        "select" => {
            p.bump();
            let cty = p.parse_type(diags)?;
            if cty != Type::Int(1) {
                let (l, c) = p.here();
                diags.push(Diagnostic::error(l, c, "select condition must be i1".into()));
            }
            let c = parse_val(p, diags)?;
            p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
            let ty = p.parse_type(diags)?;
            let tv = parse_val(p, diags)?;
            p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
            let fty = p.parse_type(diags)?;
            if fty != ty {
                let (l, c) = p.here();
                diags.push(Diagnostic::error(l, c, "select arms must share one type".into()));
            }
            let fv = parse_val(p, diags)?;
            Some(Rhs::Select { cty, c, ty, t: tv, f: fv })
        }
        "call" => {
            p.bump();
            let ret = p.parse_type(diags)?;
            let callee = match p.peek() {
                Some(t) => match &t.tok {
                    Tok::Global(n) => {
                        let r = LabelRef { name: n.clone(), line: t.line, col: t.col };
                        p.bump();
                        r
                    }
                    _ => {
                        diags.push(Diagnostic::error(t.line, t.col, "expected a function name".into()));
                        return None;
                    }
                },
                None => {
                    let (l, c) = p.here();
                    diags.push(Diagnostic::error(l, c, "expected a function name".into()));
                    return None;
                }
            };
            p.expect(&Tok::LParen, "`(`", diags).then_some(())?;
            let mut args = Vec::new();
            if !p.eat(&Tok::RParen) {
                loop {
                    let ty = p.parse_type(diags)?;
                    let v = parse_val(p, diags)?;
                    args.push((ty, v));
                    if p.eat(&Tok::Comma) {
                        continue;
                    }
                    p.expect(&Tok::RParen, "`,` or `)`", diags).then_some(())?;
                    break;
                }
            }
            Some(Rhs::Call { ret, callee, args })
        }
        "phi" => {
            p.bump();
            let ty = p.parse_type(diags)?;
            let mut inc = Vec::new();
            loop {
                p.expect(&Tok::LBracket, "`[`", diags).then_some(())?;
                let v = parse_val(p, diags)?;
                p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
                let pred = parse_label_ref(p, diags)?;
                p.expect(&Tok::RBracket, "`]`", diags).then_some(())?;
                inc.push((v, pred));
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
            Some(Rhs::Phi { ty, inc })
        }
        "br" => {
            p.bump();
            if matches!(p.peek().map(|t| &t.tok), Some(Tok::Ident(w)) if w == "label") {
                p.bump();
                let t = parse_label_ref(p, diags)?;
                return Some(Rhs::Br { t });
            }
            let cty = p.parse_type(diags)?;
            if cty != Type::Int(1) {
                let (l, c) = p.here();
                diags.push(Diagnostic::error(l, c, "branch condition must be i1".into()));
            }
            let c = parse_val(p, diags)?;
            p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
            expect_kw(p, "label", diags)?;
            let t = parse_label_ref(p, diags)?;
            p.expect(&Tok::Comma, "`,`", diags).then_some(())?;
            expect_kw(p, "label", diags)?;
            let f = parse_label_ref(p, diags)?;
            Some(Rhs::CondBr { c, t, f })
        }
        "ret" => {
            p.bump();
            let ty = p.parse_type(diags)?;
            if ty == Type::Void {
                return Some(Rhs::Ret { v: None });
            }
            let v = parse_val(p, diags)?;
            Some(Rhs::Ret { v: Some((ty, v)) })
        }
        _ => {
            diags.push(Diagnostic::error(t.line, t.col, format!("unknown instruction `{word}`")));
            None
        }
    }
}

fn expect_kw(p: &mut Cursor<'_>, kw: &str, diags: &mut Vec<Diagnostic>) -> Option<()> {
    match p.peek() {
        Some(t) if matches!(&t.tok, Tok::Ident(w) if w == kw) => {
            p.bump();
            Some(())
        }
        _ => {
            let (l, c) = p.here();
            diags.push(Diagnostic::error(l, c, format!("expected `{kw}`")));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::print_module;
    use crate::verifier;

    fn ok(text: &str) -> Module {
        match parse_module(text) {
            Ok(m) => m,
            Err(diags) => panic!("parse failed: {diags:?}"),
        }
    }

    fn errs(text: &str) -> Vec<Diagnostic> {
        parse_module(text).expect_err("expected diagnostics")
    }

    #[test]
    fn declaration_only() {
        let m = ok("declare i32 @hole0()\n");
        let f = m.func_by_name("hole0").unwrap();
        assert!(m.func(f).is_declaration());
        assert_eq!(m.func(f).ty().ret, Type::Int(32));
    }

    #[test]
    fn hole_type_declaration() {
        let m = ok("declare %hole.t @hole2(i32, i32)\n");
        let f = m.func_by_name("hole2").unwrap();
        assert_eq!(m.func(f).ty().ret, Type::Hole);
        assert_eq!(m.func(f).ty().params, vec![Type::Int(32), Type::Int(32)]);
    }

    #[test]
    fn simple_function_verifies() {
        let m = ok("define i32 @double(i32 %x) {\n  %r = add i32 %x, %x\n  ret i32 %r\n}\n");
        assert!(verifier::verify(&m).is_empty());
    }

    #[test]
    fn forward_call_reference() {
        let m = ok(concat!(
            "define i32 @a() {\n  %r = call i32 @b()\n  ret i32 %r\n}\n",
            "define i32 @b() {\n  ret i32 7\n}\n",
        ));
        assert!(verifier::verify(&m).is_empty());
    }

    #[test]
    fn self_use_parses_but_fails_verify() {
        let m = ok("define i32 @f() {\n  %x = add i32 %x, 1\n  ret i32 %x\n}\n");
        assert!(!verifier::verify(&m).is_empty());
    }

    #[test]
    fn cfg_with_phi() {
        let text = concat!(
            "define i32 @f(i1 %c, i32 %a, i32 %b) {\n",
            "entry:\n",
            "  br i1 %c, label %left, label %right\n",
            "left:\n",
            "  br label %join\n",
            "right:\n",
            "  br label %join\n",
            "join:\n",
            "  %r = phi i32 [ %a, %left ], [ %b, %right ]\n",
            "  ret i32 %r\n",
            "}\n",
        );
        let m = ok(text);
        assert!(verifier::verify(&m).is_empty());
        assert_eq!(print_module(&m), text);
    }

    #[test]
    fn unknown_value_position() {
        let d = errs("define i32 @f() {\n  ret i32 %nope\n}\n");
        assert_eq!(d.len(), 1);
        assert!(d[0].message().contains("unknown value %nope"));
        assert_eq!((d[0].line(), d[0].col()), (2, 11));
    }

    #[test]
    fn operand_type_must_match_annotation() {
        let d = errs(concat!(
            "define i64 @f(i32 %x) {\n",
            "  %r = add i64 %x, 1\n",
            "  ret i64 %r\n",
            "}\n",
        ));
        assert!(d[0].message().contains("%x has type i32, expected i64"));
    }

    #[test]
    fn constant_must_fit() {
        let d = errs("define i8 @f() {\n  ret i8 300\n}\n");
        assert!(d[0].message().contains("does not fit in i8"));
        // In-range values at both readings are fine.
        ok("define i8 @f() {\n  ret i8 255\n}\n");
        ok("define i8 @f() {\n  ret i8 -128\n}\n");
    }

    #[test]
    fn unsupported_width() {
        let d = errs("declare i129 @f()\n");
        assert!(d[0].message().contains("unsupported integer width"));
        let d = errs("declare i0 @f()\n");
        assert!(d[0].message().contains("unsupported integer width"));
    }

    #[test]
    fn duplicate_function_name() {
        let d = errs("declare i32 @f()\ndeclare i32 @f()\n");
        assert!(d[0].message().contains("duplicate name"));
    }

    #[test]
    fn one_diagnostic_per_bad_line() {
        let d = errs(concat!(
            "define i32 @f() {\n",
            "  %a = bogus i32 1, 2\n",
            "  %b = add i32 %zzz, 1\n",
            "  ret i32 0\n",
            "}\n",
        ));
        assert_eq!(d.len(), 2, "{d:?}");
        assert_eq!(d[0].line(), 2);
        assert_eq!(d[1].line(), 3);
    }

    #[test]
    fn unnamed_args_use_printed_numbering() {
        let m = ok("define i32 @f(i32, i32) {\n  %r = add i32 %0, %1\n  ret i32 %r\n}\n");
        assert!(verifier::verify(&m).is_empty());
    }

    #[test]
    fn bare_call_discards_result() {
        let m = ok(concat!(
            "declare i32 @g()\n",
            "define void @f() {\n  call i32 @g()\n  ret void\n}\n",
        ));
        assert!(verifier::verify(&m).is_empty());
    }

    #[test]
    fn numeric_labels_parse() {
        let text = concat!(
            "define i32 @f(i1 %c) {\n",
            "0:\n",
            "  br i1 %c, label %1, label %2\n",
            "1:\n",
            "  ret i32 1\n",
            "2:\n",
            "  ret i32 2\n",
            "}\n",
        );
        let m = ok(text);
        assert!(verifier::verify(&m).is_empty());
    }
}
