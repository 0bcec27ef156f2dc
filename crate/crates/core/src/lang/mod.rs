//! Front end for the rule language: lexer, parser, pretty-printer and
//! typechecker.

pub mod ast;
pub mod diag;
pub(crate) mod lexer;
pub(crate) mod parser;
pub mod pretty;
pub mod typeck;

pub use ast::*;
pub use diag::{Diagnostic, Diagnostics, Pos, SourceSpan};
pub use parser::{parse_expr, parse_predicate, parse_rule_file, placeholders};
pub use pretty::{expr_to_string, pred_to_string, rule_to_string};
pub use typeck::{
    binding_types, typecheck_expr, typecheck_expr_as, typecheck_pred, typecheck_rule, validate_expr, validate_pred,
    Declarations, TypedRule,
};
