//! Delimited text formats: the transaction CSV, matrix and partition dumps,
//! and the basket file exchanged between `map` and `mine`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use retail_rules_core::domain::{
    Dataset, Domain, FeatureSchema, TransactionRecord, Value, VariableKind,
};
use retail_rules_core::mapping::{EncodedTransaction, EncodedTransactionDB};
use retail_rules_core::matrix::SquareMatrix;
use thiserror::Error;

pub const PRODUCTS_COLUMN: &str = "products";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: header must be {expected:?}, found {found:?}")]
    Header {
        path: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}: line {line}: {message}")]
    Row {
        path: String,
        line: u64,
        message: String,
    },
}

/// Column order the transaction CSV must follow: `tid`, customer attributes,
/// functional requirements, then an optional `products` column.
pub fn expected_header(schema: &FeatureSchema) -> Vec<String> {
    std::iter::once("tid".to_string())
        .chain(schema.customer_attrs.iter().map(|v| v.id.clone()))
        .chain(schema.fr_vars.iter().map(|v| v.id.clone()))
        .collect()
}

fn parse_cell(kind: VariableKind, raw: &str) -> Value {
    let raw = raw.trim();
    if raw.is_empty() {
        return Value::Missing;
    }
    match (kind, raw.parse::<f64>()) {
        (VariableKind::Numerical, Ok(x)) => Value::Number(x),
        _ => Value::Code(raw.to_string()),
    }
}

pub fn read_dataset<R: Read>(
    schema: &FeatureSchema,
    input: R,
    path: &str,
) -> Result<Dataset, FormatError> {
    let csv_err = |source| FormatError::Csv {
        path: path.to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let expected = expected_header(schema);
    let has_products = header.len() == expected.len() + 1
        && header.last().map(String::as_str) == Some(PRODUCTS_COLUMN);
    if header[..header.len() - usize::from(has_products)] != expected[..] {
        let mut expected = expected;
        expected.push(format!("[{PRODUCTS_COLUMN}]"));
        return Err(FormatError::Header {
            path: path.to_string(),
            expected,
            found: header,
        });
    }

    let columns: Vec<(Domain, &str, VariableKind)> = [Domain::Customer, Domain::Product]
        .into_iter()
        .flat_map(|d| {
            schema
                .variables(d)
                .iter()
                .map(move |v| (d, v.id.as_str(), v.kind))
        })
        .collect();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let mut record = TransactionRecord::new(row.get(0).unwrap_or_default());
        if record.tid.is_empty() {
            return Err(FormatError::Row {
                path: path.to_string(),
                line,
                message: "empty tid".into(),
            });
        }
        for ((domain, id, kind), cell) in columns.iter().zip(row.iter().skip(1)) {
            let value = parse_cell(*kind, cell);
            match domain {
                Domain::Customer => record.need_options.insert(id.to_string(), value),
                Domain::Product => record.fr_values.insert(id.to_string(), value),
            };
        }
        if has_products {
            record.products = row
                .get(columns.len() + 1)
                .unwrap_or_default()
                .split(';')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(str::to_string)
                .collect();
        }
        records.push(record);
    }
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

pub fn load_dataset(schema: &FeatureSchema, path: &Path) -> Result<Dataset, FormatError> {
    let file = std::fs::File::open(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset(schema, file, &path.display().to_string())
}

/// Square matrix with a `tid` header row and column.
pub fn write_matrix<W: Write, T: std::fmt::Display>(
    out: W,
    tids: &[String],
    m: &SquareMatrix<T>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("tid").chain(tids.iter().map(String::as_str)))?;
    for (tid, row) in tids.iter().zip(m.rows()) {
        w.write_record(std::iter::once(tid.clone()).chain(row.iter().map(ToString::to_string)))?;
    }
    w.flush()?;
    Ok(())
}

/// One line per transaction: `tid,item,item,...`.
pub fn write_baskets<W: Write>(out: W, db: &EncodedTransactionDB) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    for t in &db.transactions {
        w.write_record(std::iter::once(&t.tid).chain(&t.items))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_baskets<R: Read>(
    input: R,
    path: &str,
) -> Result<Vec<(String, Vec<String>)>, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|source| FormatError::Csv {
            path: path.to_string(),
            source,
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let mut fields = row.iter();
        let tid = fields.next().unwrap_or_default().to_string();
        let items: Vec<String> = fields
            .filter(|f| !f.is_empty())
            .map(str::to_string)
            .collect();
        if tid.is_empty() || items.is_empty() {
            return Err(FormatError::Row {
                path: path.to_string(),
                line,
                message: "basket lines need a tid and at least one item".into(),
            });
        }
        out.push((tid, items));
    }
    Ok(out)
}

/// Inverse of [`write_baskets`] for a database that only needs items.
pub fn baskets_to_db(baskets: Vec<(String, Vec<String>)>) -> EncodedTransactionDB {
    EncodedTransactionDB {
        transactions: baskets
            .into_iter()
            .map(|(tid, items)| EncodedTransaction {
                tid,
                customer_cluster: 0,
                product_cluster: 0,
                items,
            })
            .collect(),
    }
}

/// Parses `a1=a11,a2=a21` into a need vector; numeric-looking values become
/// numbers.
pub fn parse_assignments(spec: &str) -> Result<BTreeMap<String, Value>, String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("expected var=value, got {pair:?}"))?;
            let v = v.trim();
            let value = v
                .parse::<f64>()
                .map(Value::Number)
                .unwrap_or_else(|_| Value::Code(v.to_string()));
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use retail_rules_core::ahp::load_fixed_weights;
    use retail_rules_core::domain::{FamilyWeights, VariableSpec};

    fn schema() -> FeatureSchema {
        FeatureSchema::new(
            vec![VariableSpec::nominal("a1", "Cost", &["a11", "a12"])],
            vec![
                VariableSpec::numerical("v5", "Age", 0.0, 60.0),
                VariableSpec::binary("v6", "Gender", "v61", "v62"),
            ],
            load_fixed_weights(&[0.5, 0.5]).unwrap(),
            FamilyWeights::equal(),
        )
        .unwrap()
    }

    #[test]
    fn reads_transactions_with_products() {
        let csv = "tid,a1,v5,v6,products\nT1,a11,35,v61,beer; cigarettes\nT2,a12,,v62,\n";
        let ds = read_dataset(&schema(), csv.as_bytes(), "mem").unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[0].fr_values["v5"], Value::Number(35.0));
        assert_eq!(ds.records[0].products, ["beer", "cigarettes"]);
        assert_eq!(ds.records[1].fr_values["v5"], Value::Missing);
        assert!(ds.records[1].products.is_empty());
    }

    #[test]
    fn header_must_follow_schema_order() {
        let csv = "tid,v5,a1,v6\nT1,35,a11,v61\n";
        let err = read_dataset(&schema(), csv.as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, FormatError::Header { .. }), "{err}");
    }

    #[test]
    fn basket_round_trip() {
        let db = EncodedTransactionDB {
            transactions: vec![EncodedTransaction {
                tid: "T1".into(),
                customer_cluster: 0,
                product_cluster: 0,
                items: vec!["age:25-40(μ32)".into(), "odd, item".into()],
            }],
        };
        let mut buf = Vec::new();
        write_baskets(&mut buf, &db).unwrap();
        let back = read_baskets(buf.as_slice(), "mem").unwrap();
        assert_eq!(
            back,
            vec![("T1".to_string(), db.transactions[0].items.clone())]
        );
        assert!(read_baskets("T1\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn need_assignments() {
        let m = parse_assignments("a1=a11, v5=35").unwrap();
        assert_eq!(m["a1"], Value::Code("a11".into()));
        assert_eq!(m["v5"], Value::Number(35.0));
        assert!(parse_assignments("a1").is_err());
    }
}
