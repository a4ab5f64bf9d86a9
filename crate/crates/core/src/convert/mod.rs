//! Converters from DBMS-specific serialized plans into [`UnifiedPlan`].
//!
//! Every converter is driven by a [`DialectMapping`], so new operation or
//! property names are handled by adding table lines rather than code.

mod common;
mod mapping;
mod mysql;
mod postgres;
mod sqlite;
mod tidb;

use std::fmt;
use std::str::FromStr;

use crate::ir::UnifiedPlan;

pub use mapping::{
    load_mapping, map_operation, map_property, DialectFamily, DialectMapping, Mapped,
    MappedCategory, MappingEntry, MappingError, MappingKind,
};
pub use postgres::{parse_pg_cost, PgCostError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dialect {
    PostgresqlText,
    PostgresqlJson,
    MysqlJson,
    TidbText,
    TidbJson,
    SqliteText,
}

impl Dialect {
    pub const ALL: &'static [Dialect] = &[
        Dialect::PostgresqlText,
        Dialect::PostgresqlJson,
        Dialect::MysqlJson,
        Dialect::TidbText,
        Dialect::TidbJson,
        Dialect::SqliteText,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::PostgresqlText => "postgresql_text",
            Dialect::PostgresqlJson => "postgresql_json",
            Dialect::MysqlJson => "mysql_json",
            Dialect::TidbText => "tidb_text",
            Dialect::TidbJson => "tidb_json",
            Dialect::SqliteText => "sqlite_text",
        }
    }

    pub fn family(self) -> DialectFamily {
        match self {
            Dialect::PostgresqlText | Dialect::PostgresqlJson => DialectFamily::Postgresql,
            Dialect::MysqlJson => DialectFamily::Mysql,
            Dialect::TidbText | Dialect::TidbJson => DialectFamily::Tidb,
            Dialect::SqliteText => DialectFamily::Sqlite,
        }
    }

    pub fn is_json(self) -> bool {
        matches!(self, Dialect::PostgresqlJson | Dialect::MysqlJson | Dialect::TidbJson)
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dialect `{given}`; expected one of: {}", Dialect::ALL.iter().map(|d| d.as_str()).collect::<Vec<_>>().join(", "))]
pub struct UnknownDialect {
    pub given: String,
}

impl FromStr for Dialect {
    type Err = UnknownDialect;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dialect::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| UnknownDialect { given: s.to_string() })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConvertError {
    #[error("{dialect}: malformed JSON: {source}")]
    Json {
        dialect: Dialect,
        #[source]
        source: serde_json::Error,
    },
    #[error("{dialect}: line {line}: {message}")]
    Syntax {
        dialect: Dialect,
        line: usize,
        message: String,
    },
    #[error("{dialect}: {message}")]
    Structure { dialect: Dialect, message: String },
}

/// Converts one serialized plan. Warnings about unmapped names and lenient
/// parsing decisions are collected in the returned plan's `warnings`.
pub fn convert(dialect: Dialect, input: &str, mapping: &DialectMapping) -> Result<UnifiedPlan, ConvertError> {
    let mut ctx = common::Ctx::new(dialect, mapping);
    let mut plan = if input.trim().is_empty() {
        ctx.warn("input is empty; the plan has no operations");
        UnifiedPlan::empty()
    } else {
        match dialect {
            Dialect::PostgresqlText => postgres::convert_text(input, &mut ctx)?,
            Dialect::PostgresqlJson => postgres::convert_json(input, &mut ctx)?,
            Dialect::MysqlJson => mysql::convert_json(input, &mut ctx)?,
            Dialect::TidbText => tidb::convert_text(input, &mut ctx)?,
            Dialect::TidbJson => tidb::convert_json(input, &mut ctx)?,
            Dialect::SqliteText => sqlite::convert_text(input, &mut ctx)?,
        }
    };
    plan.dialect = Some(dialect.as_str().to_string());
    plan.warnings = ctx.into_warnings();
    Ok(plan)
}
