//! Evaluate exports with the reference evaluator, the ground truth for
//! value-returning corpus cases.

use sentinel::eval::{eval_func, Value};
use sentinel::wat::parse_wat;

const MODULE: &str = r#"(module
  (func (export "rotr") (param i64 i64) (result i64)
    (i64.rotr (local.get 0) (local.get 1)))
  (func (export "div_copysign") (param f64 f64) (result f64)
    (f64.copysign (f64.div (local.get 0) (local.get 1)) (f64.const -1)))
  (func (export "idiv") (param i32 i32) (result i32)
    (i32.div_s (local.get 0) (local.get 1)))
  (func (export "lane") (param i64 i32) (result i64)
    (i64x2.extract_lane 1 (i64x2.add (i64x2.splat (local.get 0)) (i32x4.splat (local.get 1))))))"#;

fn main() {
    let module = parse_wat(MODULE).expect("module parses");
    let calls: Vec<(&str, Vec<Value>)> = vec![
        ("rotr", vec![Value::I64(4), Value::I64(0)]),
        ("rotr", vec![Value::I64(1), Value::I64(1)]),
        ("div_copysign", vec![Value::f64(1.0), Value::f64(0.0)]),
        ("div_copysign", vec![Value::f64(0.0), Value::f64(0.0)]),
        ("idiv", vec![Value::I32(7), Value::I32(0)]),
        ("idiv", vec![Value::I32(i32::MIN), Value::I32(-1)]),
        ("lane", vec![Value::I64(5), Value::I32(7)]),
    ];
    for (export, args) in calls {
        let shown: Vec<String> = args.iter().map(Value::render).collect();
        match eval_func(&module, export, &args) {
            Ok(outcome) => println!("{export}({}) = {}", shown.join(", "), outcome.render()),
            Err(e) => println!("{export}({}): {e}", shown.join(", ")),
        }
    }
}
