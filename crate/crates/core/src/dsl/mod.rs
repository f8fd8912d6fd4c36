//! The `.tm` text format: one declaration per line, `#` comments.

mod lexer;
mod parser;
mod printer;

pub use parser::{parse, parse_full, Parsed};
pub use printer::print;
