//! CSV tables with a header row. Empty fields are NULL.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Cell, ColumnKind, DateTime, Decimal, MarkConfig, Relation, Tuple};

pub fn parse_table<R: Read>(reader: R, config: &MarkConfig) -> Result<Relation> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut relation = Relation::from_header(&header, config)?;
    let kinds: Vec<ColumnKind> = relation.columns().iter().map(|c| c.kind).collect();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let cells = record
            .iter()
            .zip(&kinds)
            .zip(&header)
            .map(|((field, kind), name)| parse_cell(field, *kind).map_err(|reason| Error::InvalidCell {
                row,
                column: name.clone(),
                value: field.to_string(),
                reason,
            }))
            .collect::<Result<Vec<_>>>()?;
        relation.push(Tuple::new(cells))?;
    }
    Ok(relation)
}

fn parse_cell(field: &str, kind: ColumnKind) -> std::result::Result<Cell, String> {
    if field.is_empty() {
        return Ok(Cell::Null);
    }
    Ok(match kind {
        ColumnKind::Key | ColumnKind::Other => Cell::Text(field.to_string()),
        ColumnKind::Numeric { scale } => Cell::Number(Decimal::parse(field, scale)?),
        ColumnKind::DateTime => Cell::DateTime(DateTime::parse(field)?),
    })
}

pub fn write_table_to<W: Write>(writer: W, relation: &Relation) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(relation.columns().iter().map(|c| c.name.as_str()))?;
    let mut fields = Vec::with_capacity(relation.columns().len());
    for t in relation.tuples() {
        fields.clear();
        fields.extend(t.cells.iter().map(Cell::to_string));
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_table(path: &Path, config: &MarkConfig) -> Result<Relation> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_table(std::io::BufReader::new(file), config)
}

pub fn write_table(path: &Path, relation: &Relation) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_table_to(std::io::BufWriter::new(file), relation)
}

pub fn table_to_string(relation: &Relation) -> String {
    let mut buf = Vec::new();
    write_table_to(&mut buf, relation).expect("writing to memory");
    String::from_utf8(buf).expect("cells are utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> MarkConfig {
        MarkConfig::new("id", vec![("price".into(), 2)], vec!["at".into()]).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = "id,price,at,note\n1,3.14,2020-01-01 08:15:47,\"a, b\"\n2,,2021-12-31 23:59:00,x\n3,-0.50,,\n";
        let r = parse_table(text.as_bytes(), &config()).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(table_to_string(&r), text);
    }

    #[test]
    fn bad_cells_name_row_and_column() {
        let text = "id,price,at\n1,abc,2020-01-01 08:15:47\n";
        let err = parse_table(text.as_bytes(), &config()).unwrap_err();
        assert!(matches!(err, Error::InvalidCell { row: 1, ref column, .. } if column == "price"));
        let text = "id,price,at\n1,1.00,yesterday\n";
        assert!(parse_table(text.as_bytes(), &config()).is_err());
    }

    #[test]
    fn ragged_rows_are_schema_errors() {
        let text = "id,price,at\n1,1.00\n";
        let err = parse_table(text.as_bytes(), &config()).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Schema);
    }
}
