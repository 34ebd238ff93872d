//! Persistence (`.mtab` documents) and CSV exchange.

mod csv;
mod document;

pub use self::csv::{export_csv, import_csv, ImportReport};
pub use document::{load, load_path, save, save_path, DocumentError, Loaded, FORMAT_MARKER};
