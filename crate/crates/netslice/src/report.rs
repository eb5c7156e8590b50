//! Plot-data emission: CSV tables with a stable column order and fixed
//! number formatting, so identical inputs produce byte-identical files.

use std::io::Write;
use std::path::Path;

/// Fixed-decimal formatting with 9 significant digits. `0`, `inf`, and `nan`
/// render literally; everything else gets exactly as many decimals as keep
/// nine significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Write one CSV table. Cells must not contain commas or newlines; the
/// identifiers this crate admits cannot.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(2191.446713812918), "2191.44671");
        assert_eq!(fmt_sig(0.01), "0.0100000000");
        assert_eq!(fmt_sig(2000.0), "2000.00000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-1.5), "-1.50000000");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            &["a", "b"],
            vec![vec!["1".to_string(), "2".to_string()]],
        )
        .unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
    }
}
