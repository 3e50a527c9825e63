//! Compiler and decision-procedure workbench for ontology-mediated queries.
//!
//! The crate is split along the pipelines it implements:
//!
//! * [`rel`] — schemas, instances, relational structures, direct UCQ evaluation;
//! * [`dl`] — description-logic concepts, ontologies, model checking, and the
//!   type-elimination machinery;
//! * [`ddlog`] — disjunctive datalog programs, syntactic classification, and
//!   exact brute-force certain-answer evaluation;
//! * [`msnp`] — MMSNP / GMSNP / MMSNP2 formulas with brute-force second-order
//!   evaluation and a forbidden-patterns membership checker;
//! * [`translate`] — the cross-formalism compilers between OMQs, (M)DDlog,
//!   co-MMSNP, GMSNP and MMSNP2;
//! * [`csp`] — CSP templates with constants: homomorphism search, OMQ/template
//!   constructions, containment, and FO-definability.
//!
//! Everything here is a pure function over immutable values; the crate is
//! `no_std` (with `alloc`) and keeps all orderings deterministic so that
//! emitted artifacts are byte-stable.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod csp;
pub mod ddlog;
pub mod dl;
pub mod msnp;
pub mod rel;
mod sat;
pub mod translate;
