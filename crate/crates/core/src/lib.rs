pub mod expr;
pub mod grid;
pub mod linalg;
pub mod forms;
pub mod catalog;
pub mod criteria;
pub mod oracle;
pub mod config;
pub mod commands;
