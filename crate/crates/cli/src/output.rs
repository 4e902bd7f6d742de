//! Machine-readable output. CSV numbers carry 17 significant digits so
//! that parsing and re-emitting a file reproduces it byte for byte.

/// 17-significant-digit scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Error text safe to place in an unquoted CSV field.
pub fn error_field(message: &str) -> String {
    message
        .chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' | '"' => ' ',
            c => c,
        })
        .collect()
}

/// Writes a header and rows as unquoted CSV.
pub fn write_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(Vec::new());
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parses CSV produced by [`write_csv`] and re-emits it, normalizing
/// every real-valued field through `f64`. Integer fields are kept.
pub fn reemit_csv(text: &str) -> Result<String, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record
            .iter()
            .map(|field| match field.parse::<f64>() {
                Ok(v) if field.parse::<i64>().is_err() => num(v),
                _ => field.to_owned(),
            })
            .collect();
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(write_csv(&header, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [30.91, 0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(num(s.parse().unwrap()), s);
        }
        assert_eq!(num(100.0), "1.0000000000000000e2");
    }

    #[test]
    fn error_fields_have_no_separators() {
        assert_eq!(error_field("a, b\nc"), "a; b c");
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![
            vec![num(1.0), num(2.0 / 3.0), String::new(), String::new()],
            vec![
                num(-4.0),
                String::new(),
                String::new(),
                error_field("bad, input"),
            ],
        ];
        let text = write_csv(&["a", "b", "c", "error"], &rows);
        assert_eq!(reemit_csv(&text).unwrap(), text);
    }
}
