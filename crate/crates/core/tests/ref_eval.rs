use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use sentinel::eval::{eval_func, EvalOutcome, TrapKind, Value};
use sentinel::wat::{parse_wat, Module};

const MODULE: &str = r#"(module
  (func (export "rotr64") (param i64 i64) (result i64) (i64.rotr (local.get 0) (local.get 1)))
  (func (export "rotl64") (param i64 i64) (result i64) (i64.rotl (local.get 0) (local.get 1)))
  (func (export "rotr32") (param i32 i32) (result i32) (i32.rotr (local.get 0) (local.get 1)))
  (func (export "rotl32") (param i32 i32) (result i32) (i32.rotl (local.get 0) (local.get 1)))
  (func (export "copysign64") (param f64 f64) (result f64) (f64.copysign (local.get 0) (local.get 1)))
  (func (export "copysign32") (param f32 f32) (result f32) (f32.copysign (local.get 0) (local.get 1)))
  (func (export "div64") (param f64 f64) (result f64) (f64.div (local.get 0) (local.get 1)))
  (func (export "div32") (param f32 f32) (result f32) (f32.div (local.get 0) (local.get 1)))
  (func (export "div_s32") (param i32 i32) (result i32) (i32.div_s (local.get 0) (local.get 1)))
  (func (export "div_u32") (param i32 i32) (result i32) (i32.div_u (local.get 0) (local.get 1)))
  (func (export "rem_s32") (param i32 i32) (result i32) (i32.rem_s (local.get 0) (local.get 1)))
  (func (export "div_s64") (param i64 i64) (result i64) (i64.div_s (local.get 0) (local.get 1)))
  (func (export "rem_s64") (param i64 i64) (result i64) (i64.rem_s (local.get 0) (local.get 1)))
  (func (export "trap") (result i32) unreachable))"#;

fn module() -> Module {
    parse_wat(MODULE).expect("golden module parses")
}

fn one(m: &Module, export: &str, args: &[Value]) -> Value {
    match eval_func(m, export, args).expect("evaluable") {
        EvalOutcome::Values(v) => v[0],
        EvalOutcome::Trap(t) => panic!("{export}{args:?} trapped: {t:?}"),
    }
}

fn trap(m: &Module, export: &str, args: &[Value]) -> Option<TrapKind> {
    match eval_func(m, export, args).expect("evaluable") {
        EvalOutcome::Trap(t) => Some(t),
        EvalOutcome::Values(_) => None,
    }
}

// Independent rotation oracle: shifts with the amount reduced by hand.
#[allow(clippy::manual_rotate)]
fn rotr64_oracle(x: u64, k: u64) -> u64 {
    let k = k & 63;
    if k == 0 {
        x
    } else {
        (x >> k) | (x << (64 - k))
    }
}

#[allow(clippy::manual_rotate)]
fn rotr32_oracle(x: u32, k: u32) -> u32 {
    let k = k & 31;
    if k == 0 {
        x
    } else {
        (x >> k) | (x << (32 - k))
    }
}

#[test]
fn rotr_by_zero_is_identity() {
    let m = module();
    assert_eq!(one(&m, "rotr64", &[Value::I64(4), Value::I64(0)]), Value::I64(4));
}

#[test]
fn rotation_identities_on_sampled_inputs() {
    let m = module();
    let start = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        ..Config::default()
    });
    runner
        .run(&(any::<u64>(), any::<u64>()), |(x, k)| {
            let r = one(&m, "rotr64", &[Value::I64(x as i64), Value::I64(k as i64)]);
            prop_assert_eq!(r, Value::I64(rotr64_oracle(x, k) as i64));
            let l = one(&m, "rotl64", &[r, Value::I64(k as i64)]);
            prop_assert_eq!(l, Value::I64(x as i64));
            let (x32, k32) = (x as u32, k as u32);
            let r32 = one(&m, "rotr32", &[Value::I32(x32 as i32), Value::I32(k32 as i32)]);
            prop_assert_eq!(r32, Value::I32(rotr32_oracle(x32, k32) as i32));
            prop_assert_eq!(
                one(&m, "rotl32", &[r32, Value::I32(k32 as i32)]),
                Value::I32(x32 as i32)
            );
            Ok(())
        })
        .unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0, "{:?}", start.elapsed());
}

const SPECIAL_F64: [u64; 10] = [
    0x0000_0000_0000_0000, // +0
    0x8000_0000_0000_0000, // -0
    0x3ff0_0000_0000_0000, // 1
    0xbff0_0000_0000_0000, // -1
    0x7ff0_0000_0000_0000, // inf
    0xfff0_0000_0000_0000, // -inf
    0x7ff8_0000_0000_0000, // nan
    0xfff8_0000_0000_0001, // -nan with payload
    0x0000_0000_0000_0001, // smallest subnormal
    0x7fef_ffff_ffff_ffff, // max
];

#[test]
fn copysign_is_bitwise() {
    let m = module();
    for &a in &SPECIAL_F64 {
        for &b in &SPECIAL_F64 {
            let want = (a & !(1 << 63)) | (b & (1 << 63));
            assert_eq!(
                one(&m, "copysign64", &[Value::F64(a), Value::F64(b)]),
                Value::F64(want),
                "{a:x} {b:x}"
            );
            let (a32, b32) = (f64_to_f32_bits(a), f64_to_f32_bits(b));
            let want32 = (a32 & !(1 << 31)) | (b32 & (1 << 31));
            assert_eq!(
                one(&m, "copysign32", &[Value::F32(a32), Value::F32(b32)]),
                Value::F32(want32)
            );
        }
    }
}

fn f64_to_f32_bits(b: u64) -> u32 {
    (f64::from_bits(b) as f32).to_bits() | ((b >> 63) as u32) << 31
}

#[test]
fn division_follows_ieee() {
    let m = module();
    for &a in &SPECIAL_F64 {
        for &b in &SPECIAL_F64 {
            let want = f64::from_bits(a) / f64::from_bits(b);
            match one(&m, "div64", &[Value::F64(a), Value::F64(b)]) {
                Value::F64(got) if want.is_nan() => assert!(f64::from_bits(got).is_nan(), "{a:x}/{b:x}"),
                Value::F64(got) => assert_eq!(got, want.to_bits(), "{a:x}/{b:x}"),
                other => panic!("{other:?}"),
            }
        }
    }
    assert_eq!(
        one(&m, "div64", &[Value::f64(1.0), Value::f64(-0.0)]),
        Value::f64(f64::NEG_INFINITY)
    );
    assert_eq!(
        one(&m, "div32", &[Value::f32(1.0), Value::f32(3.0)]),
        Value::F32((1.0f32 / 3.0).to_bits())
    );
    assert_eq!(
        one(&m, "div32", &[Value::f32(-0.0), Value::f32(5.0)]),
        Value::F32(0x8000_0000)
    );
}

#[test]
fn integer_traps() {
    let m = module();
    let i32s = |a: i32, b: i32| [Value::I32(a), Value::I32(b)];
    assert_eq!(trap(&m, "div_s32", &i32s(7, 0)), Some(TrapKind::IntegerDivideByZero));
    assert_eq!(trap(&m, "div_u32", &i32s(7, 0)), Some(TrapKind::IntegerDivideByZero));
    assert_eq!(trap(&m, "rem_s32", &i32s(7, 0)), Some(TrapKind::IntegerDivideByZero));
    assert_eq!(
        trap(&m, "div_s32", &i32s(i32::MIN, -1)),
        Some(TrapKind::IntegerOverflow)
    );
    assert_eq!(one(&m, "rem_s32", &i32s(i32::MIN, -1)), Value::I32(0));
    assert_eq!(one(&m, "div_s32", &i32s(-7, 2)), Value::I32(-3));
    assert_eq!(one(&m, "rem_s32", &i32s(-7, 2)), Value::I32(-1));
    assert_eq!(one(&m, "div_u32", &i32s(-1, 2)), Value::I32(i32::MAX));
    let i64s = |a: i64, b: i64| [Value::I64(a), Value::I64(b)];
    assert_eq!(
        trap(&m, "div_s64", &i64s(i64::MIN, -1)),
        Some(TrapKind::IntegerOverflow)
    );
    assert_eq!(one(&m, "rem_s64", &i64s(i64::MIN, -1)), Value::I64(0));
    assert_eq!(trap(&m, "rem_s64", &i64s(1, 0)), Some(TrapKind::IntegerDivideByZero));
    assert_eq!(trap(&m, "trap", &[]), Some(TrapKind::Unreachable));
}
