//! Shared support for the integration suites: a deterministic RNG and a
//! generator of random modules (with holes and uninterpreted ops) that
//! always pass the verifier.
//!
//! The RNG is hand-rolled SplitMix64 so the suites stay dependency-free
//! and every failure reproduces from a printed seed.
#![allow(dead_code)] // each test binary pulls in the subset it needs

use std::collections::HashMap;

use holeir::holes::{self, HoleOpKind};
use holeir::ir::{BinOp, BlockId, FuncId, IcmpPred, InsertAt, Module, ValueRef};
use holeir::textio;
use holeir::types::{FnType, IntConst, Type};
use holeir::verifier;

pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len() as u64) as usize]
    }
}

/// Widths the generator draws from.
pub const WIDTHS: [u32; 5] = [1, 4, 8, 16, 32];

/// Values in scope at the current insertion point, bucketed by type so
/// hole-typed values never leak into ordinary instructions.
#[derive(Default, Clone)]
pub struct Pool {
    ints: HashMap<u32, Vec<ValueRef>>,
    syms: Vec<ValueRef>,
}

impl Pool {
    pub fn add(&mut self, m: &Module, v: ValueRef) {
        match m.type_of(&v) {
            Type::Int(w) => self.ints.entry(w).or_default().push(v),
            Type::Hole => self.syms.push(v),
            _ => {}
        }
    }

    /// A value of type `iW`: usually from the pool, otherwise (or when the
    /// pool has none at that width) a fresh constant.
    pub fn int_operand(&self, rng: &mut Rng, w: u32) -> ValueRef {
        if let Some(vs) = self.ints.get(&w) {
            if !vs.is_empty() && rng.chance(65) {
                return *rng.pick(vs);
            }
        }
        ValueRef::Const(IntConst::from_i128(w, rng.next_u64() as i128))
    }

    pub fn syms(&self) -> &[ValueRef] {
        &self.syms
    }
}

/// A random module the verifier accepts: one defined function in one of
/// three shapes (straight-line, diamond, counted loop), sprinkled with
/// holes and uninterpreted ops.
pub fn gen_module(rng: &mut Rng) -> Module {
    let m = match rng.below(3) {
        0 => gen_straight(rng),
        1 => gen_diamond(rng),
        _ => gen_loop(rng),
    };
    let diags = verifier::verify(&m);
    assert!(
        diags.is_empty(),
        "generated module must verify clean, got:\n{}\nmodule:\n{}",
        diag_text(&diags),
        textio::print_module(&m)
    );
    m
}

pub fn diag_text(diags: &[textio::Diagnostic]) -> String {
    diags.iter().map(|d| format!("{d}\n")).collect()
}

fn open_func(m: &mut Module, rng: &mut Rng) -> (FuncId, Pool, u32) {
    let np = 1 + rng.below(3) as usize;
    let params: Vec<Type> = (0..np).map(|_| Type::Int(*rng.pick(&WIDTHS))).collect();
    let rw = *rng.pick(&WIDTHS);
    let f = m
        .add_function("f", FnType::new(Type::Int(rw), params))
        .expect("fresh module has no @f yet");
    let mut pool = Pool::default();
    for i in 0..np {
        pool.add(m, ValueRef::Arg { func: f, index: i as u32 });
    }
    (f, pool, rw)
}

fn emit_op(m: &mut Module, rng: &mut Rng, f: FuncId, at: InsertAt, pool: &mut Pool) {
    let v = match rng.below(6) {
        0..=2 => {
            let w = *rng.pick(&WIDTHS);
            let a = pool.int_operand(rng, w);
            let b = pool.int_operand(rng, w);
            let op = *rng.pick(&BinOp::ALL);
            m.build_bin(f, at, op, a, b, None)
        }
        3 | 4 => {
            let w = *rng.pick(&WIDTHS);
            let a = pool.int_operand(rng, w);
            let b = pool.int_operand(rng, w);
            let pred = *rng.pick(&IcmpPred::ALL);
            m.build_icmp(f, at, pred, a, b, None)
        }
        _ => {
            let w = *rng.pick(&WIDTHS);
            let c = pool.int_operand(rng, 1);
            let t = pool.int_operand(rng, w);
            let e = pool.int_operand(rng, w);
            m.build_select(f, at, c, t, e, None)
        }
    }
    .expect("generator operands are same-width and in scope");
    pool.add(m, v);
}

/// 0..=3 holes and 0..=2 uninterpreted ops at `at`. Unknown-type hole
/// results go in the symbolic bucket; concrete holes and comparison-op
/// results are ordinary values. Symbolic ops draw both operands from the
/// symbolic bucket (classes merge, never conflict here, because nothing
/// in the generator pins them); concrete ops materialize immediately.
fn sprinkle_holes(m: &mut Module, rng: &mut Rng, f: FuncId, at: InsertAt, pool: &mut Pool) {
    for _ in 0..rng.below(4) {
        let ty = if rng.chance(50) { None } else { Some(Type::Int(*rng.pick(&WIDTHS))) };
        let mut deps = Vec::new();
        for _ in 0..rng.below(3) {
            if !pool.syms.is_empty() && rng.chance(40) {
                deps.push(*rng.pick(&pool.syms));
            } else {
                let w = *rng.pick(&WIDTHS);
                deps.push(pool.int_operand(rng, w));
            }
        }
        let h = holes::new_hole(m, f, at, ty, &deps).expect("hole deps are in scope");
        pool.add(m, h.value);
    }
    for _ in 0..rng.below(3) {
        let kind = if rng.chance(70) {
            HoleOpKind::Bin(*rng.pick(&BinOp::ALL))
        } else {
            HoleOpKind::Icmp(*rng.pick(&IcmpPred::ALL))
        };
        let v = if pool.syms.len() >= 2 && rng.chance(60) {
            let l = *rng.pick(&pool.syms);
            let r = *rng.pick(&pool.syms);
            holes::new_hole_op(m, f, at, kind, l, r)
        } else {
            let w = *rng.pick(&WIDTHS);
            let l = pool.int_operand(rng, w);
            let r = pool.int_operand(rng, w);
            holes::new_hole_op(m, f, at, kind, l, r)
        }
        .expect("op operands share a width or are both symbolic");
        pool.add(m, v);
    }
}

fn close_ret(m: &mut Module, rng: &mut Rng, f: FuncId, b: BlockId, pool: &Pool, rw: u32) {
    let v = pool.int_operand(rng, rw);
    m.build_ret(f, b, Some(v)).expect("block is unterminated");
}

fn gen_straight(rng: &mut Rng) -> Module {
    let mut m = Module::new();
    let (f, mut pool, rw) = open_func(&mut m, rng);
    let b = m.add_block(f, None).expect("fresh function");
    for _ in 0..2 + rng.below(5) {
        emit_op(&mut m, rng, f, InsertAt::End(b), &mut pool);
    }
    sprinkle_holes(&mut m, rng, f, InsertAt::End(b), &mut pool);
    close_ret(&mut m, rng, f, b, &pool, rw);
    m
}

fn gen_diamond(rng: &mut Rng) -> Module {
    let mut m = Module::new();
    let (f, mut pool, rw) = open_func(&mut m, rng);
    let entry = m.add_block(f, None).expect("fresh function");
    let then_b = m.add_block(f, None).expect("fresh function");
    let else_b = m.add_block(f, None).expect("fresh function");
    let join = m.add_block(f, None).expect("fresh function");

    for _ in 0..1 + rng.below(2) {
        emit_op(&mut m, rng, f, InsertAt::End(entry), &mut pool);
    }
    let cond = pool.int_operand(rng, 1);
    m.build_cond_br(f, entry, cond, then_b, else_b).expect("entry unterminated");

    let wj = *rng.pick(&WIDTHS);
    // Branch-local values must not leak into the pool used after the join.
    let mut tpool = pool.clone();
    for _ in 0..1 + rng.below(2) {
        emit_op(&mut m, rng, f, InsertAt::End(then_b), &mut tpool);
    }
    let tv = tpool.int_operand(rng, wj);
    m.build_br(f, then_b, join).expect("then-block unterminated");

    let mut epool = pool.clone();
    for _ in 0..1 + rng.below(2) {
        emit_op(&mut m, rng, f, InsertAt::End(else_b), &mut epool);
    }
    let ev = epool.int_operand(rng, wj);
    m.build_br(f, else_b, join).expect("else-block unterminated");

    let phi = m
        .build_phi(f, join, Type::Int(wj), vec![(tv, then_b), (ev, else_b)], None)
        .expect("incoming values dominate their predecessors");
    pool.add(&m, phi);
    for _ in 0..rng.below(3) {
        emit_op(&mut m, rng, f, InsertAt::End(join), &mut pool);
    }
    sprinkle_holes(&mut m, rng, f, InsertAt::End(join), &mut pool);
    close_ret(&mut m, rng, f, join, &pool, rw);
    m
}

/// A counted loop built from text (the loop-carried phi needs a forward
/// reference, which only the parser can spell), then extended through the
/// builder API in the exit block.
fn gen_loop(rng: &mut Rng) -> Module {
    let w = *rng.pick(&[4u32, 8, 16, 32]);
    let init = 1 + rng.below(9);
    let k = IntConst::from_i128(w, rng.next_u64() as i128);
    let op = *rng.pick(&["add", "sub", "xor", "and", "or", "mul"]);
    let text = format!(
        "define i{w} @f(i{w} %x) {{
entry:
  br label %head

head:
  %i = phi i8 [ {init}, %entry ], [ %next, %body ]
  %acc = phi i{w} [ %x, %entry ], [ %step, %body ]
  %done = icmp eq i8 %i, 0
  br i1 %done, label %exit, label %body

body:
  %step = {op} i{w} %acc, {k}
  %next = sub i8 %i, 1
  br label %head

exit:
  ret i{w} %acc
}}
"
    );
    let mut m = textio::parse_module(&text).expect("loop template parses");
    let f = m.func_by_name("f").expect("template defines @f");

    // Values visible in the exit block: the parameter, both phis, and the
    // exit condition. Body-local values do not dominate the exit.
    let names = textio::value_names(m.func(f));
    let mut pool = Pool::default();
    for want in ["x", "i", "acc", "done"] {
        let v = names
            .iter()
            .find(|(_, n)| n.as_str() == want)
            .map(|(v, _)| *v)
            .expect("template names are kept");
        pool.add(&m, v);
    }
    let exit = textio::block_names(m.func(f))
        .into_iter()
        .find(|(_, n)| n == "exit")
        .map(|(b, _)| b)
        .expect("template has an exit block");
    let ret = m.func(f).terminator(exit).expect("exit is terminated");
    for _ in 0..rng.below(3) {
        emit_op(&mut m, rng, f, InsertAt::Before(ret), &mut pool);
    }
    sprinkle_holes(&mut m, rng, f, InsertAt::Before(ret), &mut pool);
    m
}
