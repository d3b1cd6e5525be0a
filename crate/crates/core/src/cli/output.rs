use std::fmt::Write as _;

/// A result table with a header row, followed by `# key=value` report lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub report: Vec<(String, String)>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), report: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.report.push((key.to_string(), value.to_string()));
    }

    fn escape(field: &str) -> String {
        if field.contains([',', '"', '\n']) {
            format!("\"{}\"", field.replace('"', "\"\""))
        } else {
            field.to_string()
        }
    }

    fn write_report(&self, out: &mut String) {
        for (k, v) in &self.report {
            let _ = writeln!(out, "# {k}={v}");
        }
    }

    /// Wide CSV.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.iter().map(|h| Self::escape(h)).collect::<Vec<_>>().join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.iter().map(|h| Self::escape(h)).collect::<Vec<_>>().join(","));
        }
        self.write_report(&mut out);
        out
    }

    /// Long form: one `(row, column, value)` record per cell.
    pub fn render_long(&self) -> String {
        let mut out = String::from("row,column,value\n");
        for (i, r) in self.rows.iter().enumerate() {
            for (h, v) in self.header.iter().zip(r) {
                let _ = writeln!(out, "{i},{},{}", Self::escape(h), Self::escape(v));
            }
        }
        self.write_report(&mut out);
        out
    }
}

/// Shortest round-trip representation; scientific outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Joins values with `;` so they fit one CSV field.
pub fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_and_long() {
        let mut t = Table::new(&["method", "value"]);
        t.push(vec!["series".into(), num(0.5)]);
        t.push(vec!["a,b".into(), num(1.0)]);
        t.note("pass", true);
        assert_eq!(t.render(), "method,value\nseries,0.5\n\"a,b\",1\n# pass=true\n");
        assert_eq!(num(3.5e-15), "3.5e-15");
        assert_eq!(num(0.25), "0.25");
        assert!(t.render_long().starts_with("row,column,value\n0,method,series\n0,value,0.5\n"));
    }
}
