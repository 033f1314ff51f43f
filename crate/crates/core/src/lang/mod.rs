//! Surface syntax, parsing, renaming and A-normal form.

pub mod anf;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod syntax;
pub mod uniquify;

use std::collections::HashSet;

use crate::error::SyntaxError;
use anf::AnfTerm;
use syntax::{Name, Term};

/// A program after the front end: uniquely named surface term and its ANF.
#[derive(Clone, Debug)]
pub struct Program {
    pub term: Term,
    pub anf: AnfTerm,
    /// Binders written with a name in the source, as opposed to `_` and ANF temporaries.
    pub source_binders: HashSet<Name>,
}

impl Program {
    pub fn parse(src: &str) -> Result<Program, SyntaxError> {
        Program::from_term(&parser::parse(src)?)
    }

    pub fn from_term(t: &Term) -> Result<Program, SyntaxError> {
        uniquify::validate_letrec(t)?;
        let mut u = uniquify::uniquify(t)?;
        let anf = anf::to_anf(&u.term, &mut u.supply);
        Ok(Program { term: u.term, anf, source_binders: u.named })
    }
}
