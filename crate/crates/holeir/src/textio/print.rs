//! Canonical printer. Printing is deterministic and idempotent: parsing a
//! module's printed form and printing again reproduces the text byte for
//! byte, which makes round-trip testing and diffing rewrites trivial.
//!
//! Canonical form:
//! - declarations first (one per line), then each definition, chunks
//!   separated by a single blank line, one trailing newline;
//! - values keep their names unless the name is empty or all digits, in
//!   which case they are renumbered `%0, %1, ...` (parameters first, then
//!   instruction results in order);
//! - blocks keep non-numeric labels; unnamed or numeric labels become
//!   `bb0, bb1, ...` (skipping taken names); the entry label is printed
//!   only when the function has more than one block.

use std::collections::{HashMap, HashSet};

use crate::ir::{BlockId, FuncId, Function, InstId, Instruction, Module, Opcode, Operand, ValueRef};
use crate::types::Type;

fn is_numeric(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_digit())
}

/// Canonical printed name for every value in `f` (parameters and
/// non-void instruction results).
pub fn value_names(f: &Function) -> HashMap<ValueRef, String> {
    let mut names = HashMap::new();
    let mut next = 0usize;
    let mut push = |vref: ValueRef, given: Option<&str>, names: &mut HashMap<ValueRef, String>| {
        let name = match given {
            Some(n) if !is_numeric(n) => n.to_string(),
            _ => {
                let n = next.to_string();
                next += 1;
                n
            }
        };
        names.insert(vref, name);
    };
    for i in 0..f.ty().params.len() {
        push(
            ValueRef::Arg { func: f.id(), index: i as u32 },
            f.param_name(i),
            &mut names,
        );
    }
    for (_, id) in f.insts_in_order() {
        let inst = f.inst(id);
        if inst.ty() == Type::Void {
            continue;
        }
        push(ValueRef::Inst { func: f.id(), inst: id }, inst.name(), &mut names);
    }
    names
}

/// Canonical printed label for every block in `f`.
pub fn block_names(f: &Function) -> HashMap<BlockId, String> {
    let taken: HashSet<&str> = f
        .block_ids()
        .filter_map(|b| f.block(b).name())
        .filter(|n| !is_numeric(n))
        .collect();
    let mut names = HashMap::new();
    let mut next = 0usize;
    for b in f.block_ids() {
        let name = match f.block(b).name() {
            Some(n) if !is_numeric(n) => n.to_string(),
            _ => loop {
                let cand = format!("bb{next}");
                next += 1;
                if !taken.contains(cand.as_str()) {
                    break cand;
                }
            },
        };
        names.insert(b, name);
    }
    names
}

struct FnPrinter<'a> {
    m: &'a Module,
    names: HashMap<ValueRef, String>,
    blocks: HashMap<BlockId, String>,
}

impl<'a> FnPrinter<'a> {
    fn val(&self, v: &ValueRef) -> String {
        match v {
            ValueRef::Const(c) => c.to_string(),
            _ => format!("%{}", self.names[v]),
        }
    }

    fn typed_val(&self, v: &ValueRef) -> String {
        format!("{} {}", self.m.type_of(v), self.val(v))
    }

    fn label(&self, b: BlockId) -> String {
        format!("%{}", self.blocks[&b])
    }

    fn inst(&self, f: FuncId, id: InstId, inst: &Instruction) -> String {
        let ops = inst.operands();
        let v = |i: usize| match &ops[i] {
            Operand::Value(v) => self.val(v),
            Operand::Block(_) => unreachable!("value operand expected"),
        };
        let vref = |i: usize| match &ops[i] {
            Operand::Value(v) => v,
            Operand::Block(_) => unreachable!("value operand expected"),
        };
        let b = |i: usize| match &ops[i] {
            Operand::Block(b) => self.label(*b),
            Operand::Value(_) => unreachable!("block operand expected"),
        };
        let rhs = match inst.opcode() {
            Opcode::Bin(op) => {
                format!("{} {} {}, {}", op.name(), self.m.type_of(vref(0)), v(0), v(1))
            }
            Opcode::Icmp(pred) => {
                format!("icmp {} {} {}, {}", pred.name(), self.m.type_of(vref(0)), v(0), v(1))
            }
            Opcode::Select => format!(
                "select {}, {}, {}",
                self.typed_val(vref(0)),
                self.typed_val(vref(1)),
                self.typed_val(vref(2)),
            ),
            Opcode::Call(callee) => {
                let args: Vec<String> = (0..ops.len()).map(|i| self.typed_val(vref(i))).collect();
                format!(
                    "call {} @{}({})",
                    inst.ty(),
                    self.m.func(*callee).name(),
                    args.join(", "),
                )
            }
            Opcode::Phi => {
                let inc: Vec<String> = (0..ops.len())
                    .step_by(2)
                    .map(|i| format!("[ {}, {} ]", v(i), b(i + 1)))
                    .collect();
                format!("phi {} {}", inst.ty(), inc.join(", "))
            }
            Opcode::Br => format!("br label {}", b(0)),
            Opcode::CondBr => format!("br i1 {}, label {}, label {}", v(0), b(1), b(2)),
            Opcode::Ret => match ops.first() {
                Some(Operand::Value(v0)) => format!("ret {}", self.typed_val(v0)),
                _ => "ret void".to_string(),
            },
        };
        match inst.ty() {
            Type::Void => rhs,
            _ => format!("%{} = {rhs}", self.names[&ValueRef::Inst { func: f, inst: id }]),
        }
    }
}

/// Print one function (a `declare` line or a full `define`).
pub fn print_function(m: &Module, f: FuncId) -> String {
    let func = m.func(f);
    if func.is_declaration() {
        let params: Vec<String> = func.ty().params.iter().map(|t| t.to_string()).collect();
        return format!("declare {} @{}({})", func.ty().ret, func.name(), params.join(", "));
    }
    let p = FnPrinter { m, names: value_names(func), blocks: block_names(func) };
    let params: Vec<String> = (0..func.ty().params.len())
        .map(|i| {
            let vref = ValueRef::Arg { func: f, index: i as u32 };
            format!("{} %{}", func.ty().params[i], p.names[&vref])
        })
        .collect();
    let mut out = format!("define {} @{}({}) {{\n", func.ty().ret, func.name(), params.join(", "));
    let multi = func.block_ids().count() > 1;
    for bid in func.block_ids() {
        if multi {
            out.push_str(&p.blocks[&bid]);
            out.push_str(":\n");
        }
        for &iid in func.block(bid).insts() {
            out.push_str("  ");
            out.push_str(&p.inst(f, iid, func.inst(iid)));
            out.push('\n');
        }
    }
    out.push('}');
    out
}

/// Print the whole module in canonical form.
pub fn print_module(m: &Module) -> String {
    let mut chunks: Vec<String> = Vec::new();
    let decls: Vec<String> = m
        .func_ids()
        .filter(|&f| m.func(f).is_declaration())
        .map(|f| print_function(m, f))
        .collect();
    if !decls.is_empty() {
        chunks.push(decls.join("\n"));
    }
    for f in m.func_ids() {
        if !m.func(f).is_declaration() {
            chunks.push(print_function(m, f));
        }
    }
    let mut out = chunks.join("\n\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_module;

    fn roundtrip(text: &str) -> String {
        let m = parse_module(text).expect("parse");
        print_module(&m)
    }

    #[test]
    fn empty_module_prints_newline() {
        assert_eq!(roundtrip(""), "\n");
    }

    #[test]
    fn declarations_then_definitions() {
        let text = concat!(
            "declare %hole.t @hole0()\n",
            "declare i32 @hole1(%hole.t)\n",
            "\n",
            "define i32 @example() {\n",
            "  %0 = call %hole.t @hole0()\n",
            "  %1 = call i32 @hole1(%hole.t %0)\n",
            "  ret i32 %1\n",
            "}\n",
        );
        assert_eq!(roundtrip(text), text);
    }

    #[test]
    fn interleaved_input_is_reordered() {
        let text = concat!(
            "define i32 @a() {\n  %r = call i32 @g()\n  ret i32 %r\n}\n",
            "declare i32 @g()\n",
        );
        let want = concat!(
            "declare i32 @g()\n",
            "\n",
            "define i32 @a() {\n  %r = call i32 @g()\n  ret i32 %r\n}\n",
        );
        assert_eq!(roundtrip(text), want);
    }

    #[test]
    fn named_values_kept_numeric_renumbered() {
        let text = concat!(
            "define i32 @f(i32 %x, i32) {\n",
            "  %7 = add i32 %x, %0\n",
            "  %sum = add i32 %7, 1\n",
            "  ret i32 %sum\n",
            "}\n",
        );
        let want = concat!(
            "define i32 @f(i32 %x, i32 %0) {\n",
            "  %1 = add i32 %x, %0\n",
            "  %sum = add i32 %1, 1\n",
            "  ret i32 %sum\n",
            "}\n",
        );
        assert_eq!(roundtrip(text), want);
    }

    #[test]
    fn entry_label_suppressed_for_single_block() {
        let text = concat!(
            "define i32 @f() {\n",
            "entry:\n",
            "  ret i32 0\n",
            "}\n",
        );
        assert_eq!(roundtrip(text), "define i32 @f() {\n  ret i32 0\n}\n");
    }

    #[test]
    fn numeric_labels_become_bb_names() {
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
        let want = concat!(
            "define i32 @f(i1 %c) {\n",
            "bb0:\n",
            "  br i1 %c, label %bb1, label %bb2\n",
            "bb1:\n",
            "  ret i32 1\n",
            "bb2:\n",
            "  ret i32 2\n",
            "}\n",
        );
        assert_eq!(roundtrip(text), want);
    }

    #[test]
    fn fresh_labels_skip_taken_names() {
        let text = concat!(
            "define i32 @f(i1 %c) {\n",
            "bb1:\n",
            "  br i1 %c, label %bb1.x, label %9\n",
            "bb1.x:\n",
            "  ret i32 1\n",
            "9:\n",
            "  ret i32 2\n",
            "}\n",
        );
        let out = roundtrip(text);
        // The numeric label must not collide with the kept %bb1.
        assert!(out.contains("bb0:\n  ret i32 2"), "{out}");
    }

    #[test]
    fn printing_is_idempotent() {
        let texts = [
            concat!(
                "declare %hole.t @hole.op.add(%hole.t, %hole.t)\n",
                "declare %hole.t @hole0()\n",
                "declare %hole.t @hole1()\n",
                "\n",
                "define i32 @f(i32 %x) {\n",
                "  %a = call %hole.t @hole0()\n",
                "  %b = call %hole.t @hole1()\n",
                "  %s = call %hole.t @hole.op.add(%hole.t %a, %hole.t %b)\n",
                "  ret i32 %x\n",
                "}\n",
            ),
            concat!(
                "define i8 @g(i8 %v) {\n",
                "  %n = sub i8 0, %v\n",
                "  %c = icmp slt i8 %v, 0\n",
                "  %r = select i1 %c, i8 %n, i8 %v\n",
                "  ret i8 %r\n",
                "}\n",
            ),
        ];
        for t in texts {
            let once = roundtrip(t);
            assert_eq!(roundtrip(&once), once);
        }
    }

    #[test]
    fn constants_print_signed_except_i1() {
        let text = concat!(
            "define i8 @f() {\n",
            "  %a = add i8 255, 0\n",
            "  %c = icmp eq i8 %a, -1\n",
            "  %r = select i1 1, i8 %a, i8 2\n",
            "  ret i8 %r\n",
            "}\n",
        );
        let out = roundtrip(text);
        assert!(out.contains("add i8 -1, 0"), "{out}");
        assert!(out.contains("select i1 1"), "{out}");
    }
}
