use std::fs;
use std::io::Write;
use std::path::Path;

use super::ScalarField;
use crate::error::{FlowError, Result};

/// Header plus numeric rows, as written by [`write_csv`] and friends.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// 17 significant digits, round-trips every f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

impl std::fmt::Display for CsvTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{}", self.header.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|&v| fmt_num(v)).collect();
            writeln!(f, "{}", line.join(","))?;
        }
        Ok(())
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }


    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_string().as_bytes())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| FlowError::Io("empty csv".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (n, l) in lines.enumerate() {
            let row = l
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| FlowError::Io(format!("line {}: {e}", n + 2)))?;
            if row.len() != header.len() {
                return Err(FlowError::Io(format!("line {}: expected {} columns", n + 2, header.len())));
            }
            rows.push(row);
        }
        Ok(CsvTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

/// Builds the `x,y,<names>` table for fields sharing one grid.
pub fn grid_table(names: &[&str], columns: &[&ScalarField]) -> Result<CsvTable> {
    assert_eq!(names.len(), columns.len());
    let first = columns.first().ok_or_else(|| FlowError::InvalidParameter("no columns".into()))?;
    for c in columns {
        first.same_grid(c)?;
    }
    let g = first.grid;
    let mut header = vec!["x", "y"];
    header.extend_from_slice(names);
    let mut t = CsvTable::new(&header);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            let mut row = vec![g.x(i), g.y(j)];
            row.extend(columns.iter().map(|c| c.data[k]));
            t.push(row);
        }
    }
    Ok(t)
}

/// Writes fields as CSV with header `x,y,<names>`, x varying fastest.
pub fn write_csv(path: impl AsRef<Path>, names: &[&str], columns: &[&ScalarField]) -> Result<()> {
    grid_table(names, columns)?.write(path)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable> {
    CsvTable::parse(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid2D;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let g = Grid2D::new(8, 8, 1.0, 2.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x - y);
        let t = grid_table(&["f"], &[&f]).unwrap();
        assert_eq!(t.header, vec!["x", "y", "f"]);
        assert_eq!(t.rows[1], vec![0.125, 0.0, 0.125]);
        assert_eq!(t.rows[8], vec![0.0, 0.25, -0.25]);
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(vals in prop::collection::vec(-1e300f64..1e300, 1..20)) {
            let mut t = CsvTable::new(&["v"]);
            for v in &vals {
                t.push(vec![*v]);
            }
            let back = CsvTable::parse(&t.to_string()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
