//! Grid environments: the text layout format and compilation to an explicit MDP.

pub mod compile;
pub mod layouts;
pub mod spec;

pub use compile::{compile, compile_with, CompileError, CompileOptions, CompiledGrid, ConsumptionMask, ProductState};
pub use layouts::{builtin_layout, builtin_names, LayoutError};
pub use spec::{parse_grid, ActionModel, Barrier, CellKind, Direction, GridSpec, ParseError};
