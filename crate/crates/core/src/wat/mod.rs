//! WAT subset toolkit: text parser, binary encoder and decoder, validator.

pub mod ast;
pub mod decode;
pub mod encode;
pub mod leb128;
pub mod lexer;
pub mod literals;
pub mod ops;
pub mod parse;
pub mod validate;

pub use ast::*;
pub use decode::{decode_module, DecodeError};
pub use encode::{encode_module, EncodeError};
pub use ops::{LaneOp, MemOp, Op};
pub use parse::{parse_wat, WatError};
pub use validate::{validate_module, Rule, ValidationReport, Violation};

/// Parses and encodes in one step.
pub fn assemble(text: &str) -> Result<Vec<u8>, AssembleError> {
    let module = parse_wat(text)?;
    Ok(encode_module(&module)?)
}

#[derive(Debug, thiserror::Error)]
pub enum AssembleError {
    #[error(transparent)]
    Parse(#[from] WatError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}
