//! Library side of the `emsr` command-line tool: scenario file schema,
//! bundled scenarios, and output helpers. The binary in `main.rs` is a thin
//! shell over these modules.

pub mod bundled;
pub mod output;
pub mod scenario_file;
