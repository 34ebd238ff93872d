//! Hierarchical tables whose formulas reference fields, not cell positions.
//!
//! A [`Workbook`] holds tables. Each table has named levels (Year, Month,
//! Sale, ...) forming a row tree, and fields bound to one level. A formula
//! field is defined once for its whole column; `=SUM(Total)` on a Month
//! row sums the `Total` cells beneath that month. Tables relate through
//! borrows (a level mirrors the distinct values of another table's field)
//! and links (a field's values are keys into another table).
//!
//! ```
//! use fieldsheet_core::{FieldDef, Value, Workbook};
//!
//! let mut wb = Workbook::new("shop");
//! wb.add_table("Sales", &["Month", "Sale"]).unwrap();
//! wb.add_field("Sales", FieldDef::data("Total", 1)).unwrap();
//! wb.add_field("Sales", FieldDef::formula("Monthly Total", 0, "=SUM(Total)")).unwrap();
//! let jan = wb.insert_row("Sales", None, None).unwrap();
//! for total in ["9445.04", "4497.39"] {
//!     let sale = wb.insert_row("Sales", Some(jan), None).unwrap();
//!     wb.set_cell("Sales", sale, "Total", Value::parse_literal(total)).unwrap();
//! }
//! wb.recalculate();
//! assert_eq!(wb.get_cell("Sales", jan, "Monthly Total"), Value::parse_literal("13942.43"));
//! ```

pub mod error;
pub mod eval;
pub mod format;
pub mod formula;
pub mod io;
pub mod journal;
pub mod model;
pub mod relations;
pub mod scope;
pub mod value;

pub use error::{EngineError, Result};
pub use eval::{CalcResult, CellChange, DependencyGraph, EdgeKind};
pub use format::DisplayFormat;
pub use journal::Change;
pub use model::{
    CellAddress, CellKey, CellStatus, Field, FieldDef, FieldId, FieldKey, FieldKind, FieldSpec,
    RowId, Table, TableId, Workbook,
};
pub use relations::{BorrowSpec, LinkSpec, RelationSet, RowDiff};
pub use scope::{CellSet, ConstraintSource, JoinConstraint};
pub use value::{ErrorCode, Number, Value};
