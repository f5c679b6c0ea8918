//! Corpus self-consistency: every case must survive the toolkit pipeline and
//! agree with the reference evaluator wherever it can be evaluated.

use std::fmt;

use serde::Serialize;

use crate::eval::{eval_func, EvalError, EvalOutcome};
use crate::wat::{self, decode_module, encode_module, validate_module};

use super::{OracleSpec, Source, StdoutExpectation, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Structure,
    Parse,
    Encode,
    Decode,
    RoundTrip,
    Validate,
    RefEval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub stage: FailureStage,
    pub message: String,
}

impl fmt::Display for CaseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:?}] {}", self.case_id, self.stage, self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationReport {
    pub checked: usize,
    /// Cases whose expectation was reproduced by the reference evaluator.
    pub evaluated: usize,
    pub failures: Vec<CaseFailure>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify_corpus(cases: &[TestCase]) -> VerificationReport {
    let mut report = VerificationReport::default();
    for case in cases {
        report.checked += 1;
        match verify_case(case) {
            Ok(evaluated) => report.evaluated += usize::from(evaluated),
            Err((stage, message)) => report.failures.push(CaseFailure {
                case_id: case.id.clone(),
                stage,
                message,
            }),
        }
    }
    report
}

type Failure = (FailureStage, String);

/// Returns whether the reference evaluator confirmed an expectation.
fn verify_case(case: &TestCase) -> Result<bool, Failure> {
    if case.oracles.is_empty() {
        return Err((FailureStage::Structure, "case has no oracle".into()));
    }
    if case.repeats == 0 {
        return Err((FailureStage::Structure, "repeats must be at least 1".into()));
    }

    let module = match &case.source {
        Source::Wat(text) => {
            let m = wat::parse_wat(text).map_err(|e| (FailureStage::Parse, e.to_string()))?;
            let bytes = encode_module(&m).map_err(|e| (FailureStage::Encode, e.to_string()))?;
            let back = decode_module(&bytes).map_err(|e| (FailureStage::Decode, e.to_string()))?;
            let again = encode_module(&back).map_err(|e| (FailureStage::Encode, e.to_string()))?;
            if again != bytes {
                return Err((
                    FailureStage::RoundTrip,
                    "decode(encode(m)) re-encodes to different bytes".into(),
                ));
            }
            back
        }
        Source::Binary(_) => {
            let bytes = case.module_bytes().map_err(|e| (FailureStage::Decode, e.to_string()))?;
            decode_module(&bytes).map_err(|e| (FailureStage::Decode, e.to_string()))?
        }
    };

    let validation = validate_module(&module);
    if case.expects_invalid() {
        if validation.is_valid() {
            return Err((FailureStage::Validate, "tagged ExpectInvalid but validates".into()));
        }
        return Ok(false);
    }
    if let Some(v) = validation.violations.first() {
        return Err((FailureStage::Validate, v.to_string()));
    }

    let Some(invoke) = &case.invoke else {
        return Ok(false);
    };
    let mut evaluated = false;
    for oracle in &case.oracles {
        let outcome = || eval_func(&module, &invoke.export, &invoke.args);
        match oracle {
            OracleSpec::ExpectedStdout {
                expect: StdoutExpectation::Values(expected),
            } => match outcome() {
                Ok(EvalOutcome::Values(got)) => {
                    let agree = got.len() == expected.len() && got.iter().zip(expected).all(|(g, e)| g.agrees_with(e));
                    if !agree {
                        return Err((
                            FailureStage::RefEval,
                            format!(
                                "expected {}, reference evaluator gives {}",
                                StdoutExpectation::Values(expected.clone()).rendered(),
                                EvalOutcome::Values(got).render()
                            ),
                        ));
                    }
                    evaluated = true;
                }
                Ok(trap @ EvalOutcome::Trap(_)) => {
                    return Err((
                        FailureStage::RefEval,
                        format!("expected values, reference evaluator gives {}", trap.render()),
                    ))
                }
                Err(e) => {
                    return Err((
                        FailureStage::RefEval,
                        format!("value expectation is not evaluable: {e}"),
                    ))
                }
            },
            OracleSpec::ExpectedStdout {
                expect: StdoutExpectation::Text(text),
            } => match outcome() {
                Ok(EvalOutcome::Values(got)) => {
                    let rendered = EvalOutcome::Values(got).render();
                    if rendered != text.trim() {
                        return Err((
                            FailureStage::RefEval,
                            format!("expected {:?}, reference evaluator gives {rendered:?}", text.trim()),
                        ));
                    }
                    evaluated = true;
                }
                Ok(trap @ EvalOutcome::Trap(_)) => {
                    return Err((
                        FailureStage::RefEval,
                        format!("expected output, reference evaluator gives {}", trap.render()),
                    ))
                }
                Err(EvalError::UnsupportedInstr(_)) => {}
                Err(e) => return Err((FailureStage::RefEval, e.to_string())),
            },
            OracleSpec::ExpectTrap { substring } => match outcome() {
                Ok(EvalOutcome::Trap(kind)) => {
                    if !kind.message().contains(substring.as_str()) {
                        return Err((
                            FailureStage::RefEval,
                            format!("trap `{}` lacks `{substring}`", kind.message()),
                        ));
                    }
                    evaluated = true;
                }
                Ok(v) => {
                    return Err((
                        FailureStage::RefEval,
                        format!("expected a trap, reference evaluator gives {}", v.render()),
                    ))
                }
                Err(EvalError::UnsupportedInstr(_)) => {}
                Err(e) => return Err((FailureStage::RefEval, e.to_string())),
            },
            _ => {}
        }
    }
    Ok(evaluated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::corpus::builtin_corpus;
    use crate::eval::Value;

    #[test]
    fn builtin_corpus_is_clean() {
        let report = verify_corpus(&builtin_corpus());
        assert!(report.is_clean(), "{:#?}", report.failures);
        assert!(report.evaluated >= 10, "{}", report.evaluated);
    }

    #[test]
    fn planted_rotr_defect() {
        let mut cases = builtin_corpus();
        let rotr = cases.iter_mut().find(|c| c.id == "A2.rotr-zero-amount").unwrap();
        rotr.oracles[0] = OracleSpec::values(vec![Value::I64(5)]);
        let report = verify_corpus(&cases);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].case_id, "A2.rotr-zero-amount");
        assert_eq!(report.failures[0].stage, FailureStage::RefEval);
    }

    #[test]
    fn unparseable_wat() {
        let case = TestCase::new("X.bad", Category::C1, "(module (func i32.bogus))").oracle(OracleSpec::ExpectValid);
        let report = verify_corpus(&[case]);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].stage, FailureStage::Parse);
    }

    #[test]
    fn invalid_tag_must_match() {
        let case = TestCase::new("X.v", Category::A8, "(module (memory 0 10))").oracle(OracleSpec::ExpectInvalid);
        assert_eq!(verify_corpus(&[case]).failures[0].stage, FailureStage::Validate);
    }
}
