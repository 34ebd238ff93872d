//! `fieldsheet`: build, query and serve workbooks from the shell.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, unknown
//! names, missing or locked files) and 2 when the engine rejects the data.

mod select;

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fieldsheet_core::format::render_with;
use fieldsheet_core::formula::parse_field_path;
use fieldsheet_core::io::{export_csv, import_csv, load_path, save_path, DocumentError};
use fieldsheet_core::{EngineError, FieldDef, FieldKind, Table, Workbook};
use fieldsheet_service::{FieldView, LinkView, Session};

use select::{field_name, lookup, parse_assignment, select_rows, Assignment};

/// Hierarchical tables with field-level formulas.
#[derive(Parser)]
#[command(name = "fieldsheet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Create a workbook file, optionally with a first table.
    New {
        file: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, requires = "levels")]
        table: Option<String>,
        /// Comma-separated level names, outermost first.
        #[arg(long, value_delimiter = ',', requires = "table")]
        levels: Vec<String>,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Describe tables, fields, relations and formula cycles.
    Info {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Add a table.
    Table {
        file: PathBuf,
        name: String,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<String>,
    },
    /// Add a data or formula field.
    Field {
        file: PathBuf,
        table: String,
        name: String,
        /// Level name or index.
        #[arg(long)]
        level: String,
        #[arg(long)]
        formula: Option<String>,
        /// Display format such as currency-2dp, fixed-1dp or percent-0dp.
        #[arg(long)]
        format: Option<String>,
    },
    /// Replace the formula of a formula field.
    Formula {
        file: PathBuf,
        table: String,
        field: String,
        formula: String,
    },
    /// Add a field whose level mirrors the distinct values of a field in
    /// another table.
    Borrow {
        file: PathBuf,
        table: String,
        name: String,
        #[arg(long)]
        level: String,
        /// Source as Table!Field.
        #[arg(long)]
        from: String,
    },
    /// Link a data field to the key field of another table.
    Link {
        file: PathBuf,
        table: String,
        field: String,
        /// Foreign key as Table!Field.
        #[arg(long)]
        to: String,
    },
    /// Insert a row and print its id.
    AddRow {
        file: PathBuf,
        table: String,
        /// Selectors identifying the parent row; omit for a top-level row.
        #[arg(long, num_args = 1..)]
        parent: Vec<String>,
        /// Position among the parent's children (default: last).
        #[arg(long)]
        index: Option<usize>,
        /// Initial values of the new row, field=value.
        #[arg(long = "set", num_args = 1..)]
        values: Vec<String>,
    },
    /// Delete rows and their subtrees.
    DeleteRow {
        file: PathBuf,
        table: String,
        #[arg(long = "where", num_args = 1..)]
        selectors: Vec<String>,
        /// Level of the rows to delete (default: deepest selector level).
        #[arg(long)]
        level: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Set data cells. The assignment may follow the selectors:
    /// `set f.mtab Sales --where Year=2009 Month=May Total=10`.
    Set {
        file: PathBuf,
        table: String,
        #[arg(long = "where", num_args = 1..)]
        selectors: Vec<String>,
        #[arg(long)]
        all: bool,
        assignment: Option<String>,
    },
    /// Print a cell value.
    Get {
        file: PathBuf,
        table: String,
        field: String,
        #[arg(long = "where", num_args = 1..)]
        selectors: Vec<String>,
        #[arg(long)]
        all: bool,
        /// Render through the field's display format.
        #[arg(long)]
        display: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Output,
    },
    /// Recompute every formula cell and print how many changed.
    Recalc { file: PathBuf },
    /// Import CSV records into a table, grouping them into levels.
    Import {
        file: PathBuf,
        table: String,
        csv: PathBuf,
    },
    /// Export one CSV record per row at a level (default: deepest).
    Export {
        file: PathBuf,
        table: String,
        #[arg(long)]
        level: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Serve the workbook over HTTP until interrupted.
    Serve {
        file: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

/// A failed command: exit status 1 for usage, 2 for data.
#[derive(Debug)]
pub struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: 1,
            message: message.into(),
        }
    }

    pub fn data(code: &str, message: impl Into<String>) -> Self {
        Failure {
            status: 2,
            message: format!("{code}: {}", message.into()),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::data(e.code().as_str(), e.to_string())
    }
}

impl From<DocumentError> for Failure {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Io(io) => Failure::usage(io.to_string()),
            other => Failure::data("#PARSE", other.to_string()),
        }
    }
}

type Outcome = Result<String, Failure>;

/// An open workbook file, exclusively locked until dropped.
struct Document {
    path: PathBuf,
    wb: Workbook,
    _lock: File,
}

fn lock(file: &File, path: &Path) -> Result<(), Failure> {
    file.try_lock().map_err(|_| {
        Failure::usage(format!("{} is locked by another process", path.display()))
    })
}

impl Document {
    fn open(path: &Path) -> Result<Self, Failure> {
        let file = File::open(path)
            .map_err(|e| Failure::usage(format!("cannot open {}: {e}", path.display())))?;
        lock(&file, path)?;
        let loaded = load_path(path)?;
        Ok(Document {
            path: path.to_owned(),
            wb: loaded.workbook,
            _lock: file,
        })
    }

    fn save(&mut self) -> Result<(), Failure> {
        self.wb.recalculate();
        save_path(&self.wb, &self.path)?;
        Ok(())
    }

    fn table(&self, name: &str) -> Result<&Table, Failure> {
        self.wb
            .table(name)
            .ok_or_else(|| Failure::usage(format!("no table `{name}`")))
    }
}

fn level_index(t: &Table, raw: &str) -> Result<usize, Failure> {
    if let Some(i) = t.levels().iter().position(|l| l == raw) {
        return Ok(i);
    }
    raw.parse::<usize>()
        .ok()
        .filter(|&i| i < t.depth())
        .ok_or_else(|| {
            Failure::usage(format!(
                "`{raw}` is not a level of `{}` (levels: {})",
                t.name(),
                t.levels().join(", ")
            ))
        })
}

fn assignments(raw: &[String]) -> Result<Vec<Assignment>, Failure> {
    raw.iter().map(|s| parse_assignment(s)).collect()
}

fn field_path(raw: &str) -> Result<(String, String), Failure> {
    parse_field_path(raw).map_err(|e| Failure::usage(format!("expected Table!Field: {e}")))
}

fn warn_on_parse_error(wb: &Workbook, table: &str, field: &str) {
    let formula = wb
        .table(table)
        .and_then(|t| t.field_named(field))
        .and_then(|f| f.formula());
    if let Some(Err(e)) = formula.map(|f| f.expr()) {
        eprintln!("warning: formula for `{table}.{field}` does not parse ({e}); its cells show #PARSE");
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::New {
            file,
            name,
            table,
            levels,
            force,
        } => {
            let handle = if force {
                OpenOptions::new().write(true).create(true).truncate(false).open(&file)
            } else {
                OpenOptions::new().write(true).create_new(true).open(&file)
            }
            .map_err(|e| Failure::usage(format!("cannot create {}: {e}", file.display())))?;
            lock(&handle, &file)?;
            let name = name.unwrap_or_else(|| {
                file.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            let mut wb = Workbook::new(name);
            if let Some(table) = table {
                wb.add_table(&table, &levels)?;
            }
            save_path(&wb, &file)?;
            Ok(format!("created {}", file.display()))
        }
        Command::Info { file, format } => {
            let mut doc = Document::open(&file)?;
            Ok(info(&mut doc.wb, format))
        }
        Command::Table { file, name, levels } => {
            let mut doc = Document::open(&file)?;
            doc.wb.add_table(&name, &levels)?;
            doc.save()?;
            Ok(format!("added table {name}"))
        }
        Command::Field {
            file,
            table,
            name,
            level,
            formula,
            format,
        } => {
            let mut doc = Document::open(&file)?;
            let level = level_index(doc.table(&table)?, &level)?;
            let name = field_name(&name);
            let mut def = match formula {
                Some(text) => FieldDef::formula(&name, level, text),
                None => FieldDef::data(&name, level),
            };
            if let Some(format) = format {
                def = def.with_format(format.parse().map_err(|e| Failure::usage(format!("{e}")))?);
            }
            doc.wb.add_field(&table, def)?;
            warn_on_parse_error(&doc.wb, &table, &name);
            doc.save()?;
            Ok(format!("added field {table}.{name}"))
        }
        Command::Formula {
            file,
            table,
            field,
            formula,
        } => {
            let mut doc = Document::open(&file)?;
            let field = field_name(&field);
            doc.wb.set_formula(&table, &field, &formula)?;
            warn_on_parse_error(&doc.wb, &table, &field);
            doc.save()?;
            Ok(format!("set formula of {table}.{field}"))
        }
        Command::Borrow {
            file,
            table,
            name,
            level,
            from,
        } => {
            let mut doc = Document::open(&file)?;
            let level = level_index(doc.table(&table)?, &level)?;
            let (source_table, source_field) = field_path(&from)?;
            let name = field_name(&name);
            doc.wb
                .add_field(&table, FieldDef::borrowed(&name, level, source_table, source_field))?;
            doc.save()?;
            Ok(format!("added borrowed field {table}.{name}"))
        }
        Command::Link {
            file,
            table,
            field,
            to,
        } => {
            let mut doc = Document::open(&file)?;
            let (foreign_table, foreign_field) = field_path(&to)?;
            let field = field_name(&field);
            doc.wb.declare_link(&table, &field, &foreign_table, &foreign_field)?;
            doc.save()?;
            Ok(format!("linked {table}.{field} to {foreign_table}!{foreign_field}"))
        }
        Command::AddRow {
            file,
            table,
            parent,
            index,
            values,
        } => {
            let mut doc = Document::open(&file)?;
            let parent = assignments(&parent)?;
            let values = assignments(&values)?;
            let t = doc.table(&table)?;
            let parent_row = if parent.is_empty() {
                None
            } else {
                let mut level = 0;
                for s in &parent {
                    level = level.max(t.field(lookup(t, &s.field)?).level());
                }
                Some(select_rows(t, &parent, level, false)?[0])
            };
            let level = parent_row.map_or(0, |p| t.row(p).map_or(0, |r| r.level() + 1));
            for v in &values {
                let f = t.field(lookup(t, &v.field)?);
                if f.level() != level {
                    return Err(Failure::usage(format!(
                        "`{}` is at level {}, the new row is at level {level}",
                        v.field,
                        f.level()
                    )));
                }
                if !f.is_data() {
                    return Err(Failure::data(
                        "#TYPE",
                        format!("`{table}.{}` is a {} field", v.field, f.kind().name()),
                    ));
                }
            }
            let row = doc.wb.insert_row(&table, parent_row, index)?;
            for v in values {
                doc.wb.set_cell(&table, row, &v.field, v.value)?;
            }
            doc.save()?;
            Ok(row.0.to_string())
        }
        Command::DeleteRow {
            file,
            table,
            selectors,
            level,
            all,
        } => {
            let mut doc = Document::open(&file)?;
            let selectors = assignments(&selectors)?;
            let t = doc.table(&table)?;
            let level = match level {
                Some(l) => level_index(t, &l)?,
                None => {
                    let mut deepest = 0;
                    for s in &selectors {
                        deepest = deepest.max(t.field(lookup(t, &s.field)?).level());
                    }
                    deepest
                }
            };
            let rows = select_rows(t, &selectors, level, all)?;
            let mut removed = 0;
            for row in rows {
                removed += doc.wb.delete_row(&table, row)?;
            }
            doc.save()?;
            Ok(format!("{removed} rows deleted"))
        }
        Command::Set {
            file,
            table,
            mut selectors,
            all,
            assignment,
        } => {
            let assignment = match assignment {
                Some(a) => a,
                None => selectors
                    .pop()
                    .ok_or_else(|| Failure::usage("missing field=value to set"))?,
            };
            let mut doc = Document::open(&file)?;
            let selectors = assignments(&selectors)?;
            let target = parse_assignment(&assignment)?;
            let t = doc.table(&table)?;
            let level = t.field(lookup(t, &target.field)?).level();
            let rows = select_rows(t, &selectors, level, all)?;
            let mut unmatched = Vec::new();
            for &row in &rows {
                let status = doc.wb.set_cell(&table, row, &target.field, target.value.clone())?;
                if status == fieldsheet_core::CellStatus::Unmatched {
                    unmatched.push(row);
                }
            }
            for row in unmatched {
                eprintln!(
                    "warning: {table}.{} on row {row} matches no linked key",
                    target.field
                );
            }
            doc.save()?;
            Ok(format!("{} cells set", rows.len()))
        }
        Command::Get {
            file,
            table,
            field,
            selectors,
            all,
            display,
            format,
        } => {
            let doc = Document::open(&file)?;
            let selectors = assignments(&selectors)?;
            let field = field_name(&field);
            let t = doc.table(&table)?;
            let f = t.field(lookup(t, &field)?);
            let rows = select_rows(t, &selectors, f.level(), all)?;
            let rendered = |row| {
                let v = t.value(row, lookup(t, &field).expect("checked"));
                if display {
                    render_with(f.format(), v)
                } else {
                    v.render()
                }
            };
            match format {
                Output::Text => Ok(rows.iter().map(|&r| rendered(r)).collect::<Vec<_>>().join("\n")),
                Output::Json => {
                    let items: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|&r| {
                            let v = t.value(r, lookup(t, &field).expect("checked"));
                            serde_json::json!({
                                "table": table,
                                "row": r.0,
                                "field": field,
                                "value": v.to_json(),
                                "display": render_with(f.format(), v),
                            })
                        })
                        .collect();
                    let out = if all {
                        serde_json::Value::Array(items)
                    } else {
                        items.into_iter().next().expect("one row")
                    };
                    Ok(serde_json::to_string_pretty(&out).expect("json"))
                }
            }
        }
        Command::Recalc { file } => {
            let mut doc = Document::open(&file)?;
            let result = doc.wb.recalculate_all();
            save_path(&doc.wb, &doc.path)?;
            Ok(format!("{} changed", result.changed.len()))
        }
        Command::Import { file, table, csv } => {
            let mut doc = Document::open(&file)?;
            let text = std::fs::read_to_string(&csv)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", csv.display())))?;
            let report = import_csv(&mut doc.wb, &table, &text)?;
            for address in &report.unmatched {
                eprintln!("warning: {address} matches no linked key");
            }
            doc.save()?;
            Ok(format!(
                "{} records imported, {} rows inserted",
                report.records, report.inserted
            ))
        }
        Command::Export {
            file,
            table,
            level,
            output,
        } => {
            let doc = Document::open(&file)?;
            let level = match level {
                Some(l) => Some(level_index(doc.table(&table)?, &l)?),
                None => None,
            };
            let text = export_csv(&doc.wb, &table, level)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(|e| {
                        Failure::usage(format!("cannot write {}: {e}", path.display()))
                    })?;
                    Ok(format!("wrote {}", path.display()))
                }
                None => Ok(text.trim_end_matches('\n').to_owned()),
            }
        }
        Command::Serve { file, bind } => {
            let doc = Document::open(&file)?;
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| Failure::usage(format!("cannot start runtime: {e}")))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(&bind)
                    .await
                    .map_err(|e| Failure::usage(format!("cannot bind {bind}: {e}")))?;
                let addr = listener.local_addr().map_err(|e| Failure::usage(e.to_string()))?;
                println!("serving {} on http://{addr}", file.display());
                let session = Session::new(doc.wb, Some(doc.path.clone()));
                fieldsheet_service::serve(session, listener)
                    .await
                    .map_err(|e| Failure::usage(format!("server stopped: {e}")))
            })?;
            drop(doc._lock);
            Ok(String::new())
        }
    }
}

fn info(wb: &mut Workbook, format: Output) -> String {
    let cyclic: Vec<String> = {
        let graph = wb.dependency_graph();
        graph.cyclic_fields().collect::<Vec<_>>()
    }
    .into_iter()
    .map(|k| {
        let t = wb.table_by_id(k.table);
        format!("{}.{}", t.name(), t.field(k.field).name())
    })
    .collect();
    if format == Output::Json {
        let tables: Vec<serde_json::Value> = wb
            .tables()
            .iter()
            .map(|t| {
                let fields: Vec<FieldView> = t.fields().iter().map(FieldView::of).collect();
                let links: Vec<LinkView> = fieldsheet_service::table_view(wb, t).links;
                serde_json::json!({
                    "name": t.name(),
                    "levels": t.levels(),
                    "rows": t.row_count(),
                    "fields": fields,
                    "links": links,
                })
            })
            .collect();
        let out = serde_json::json!({ "name": wb.name(), "tables": tables, "cycles": cyclic });
        return serde_json::to_string_pretty(&out).expect("json");
    }
    let mut out = String::new();
    let _ = writeln!(out, "workbook {}", wb.name());
    for t in wb.tables() {
        let _ = writeln!(
            out,
            "\ntable {} ({} rows)\n  levels: {}",
            t.name(),
            t.row_count(),
            t.levels().join(" > ")
        );
        for f in t.fields() {
            let detail = match f.kind() {
                FieldKind::Data => "data".to_owned(),
                FieldKind::Formula(formula) => format!("formula {}", formula.source()),
                FieldKind::Borrowed { table, field } => format!(
                    "borrowed from {}!{}",
                    fieldsheet_core::formula::quote_name(table),
                    fieldsheet_core::formula::quote_name(field)
                ),
            };
            let format = f.format().map(|fmt| format!(" [{fmt}]")).unwrap_or_default();
            let _ = writeln!(
                out,
                "  {} @ {}: {detail}{format}",
                f.name(),
                t.levels()[f.level()]
            );
        }
        for link in fieldsheet_service::table_view(wb, t).links {
            let _ = writeln!(
                out,
                "  link {} -> {}!{}",
                link.field, link.foreign.table, link.foreign.field
            );
        }
    }
    if cyclic.is_empty() {
        let _ = write!(out, "\ncycles: none");
    } else {
        let _ = write!(out, "\ncycles: {}", cyclic.join(", "));
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
