//! Library surface of the batch frontend: the command implementations,
//! the netlist JSON schema, and the sweep CSV table.

pub mod commands;
pub mod netlist;
pub mod sweep;
