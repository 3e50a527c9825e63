//! Text formats and the batch command-line front end for the workbench.
//! Parsing and rendering live in [`text`]; argument handling and command
//! dispatch in [`cli`].

pub mod cli;
pub mod text;
