//! Fixed-format numeric text and CSV emission.

use std::io::{self, Write};

/// 17 significant digits, round-trips every finite `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Minimal CSV writer: one header line, then rows of preformatted cells.
pub struct CsvWriter<W: Write> {
    inner: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut inner: W, header: &[&str]) -> io::Result<Self> {
        writeln!(inner, "{}", header.join(","))?;
        Ok(Self { inner, columns: header.len() })
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        let line = cells.iter().map(|c| c.as_ref()).collect::<Vec<_>>().join(",");
        writeln!(self.inner, "{line}")
    }

    pub fn numbers(&mut self, values: &[f64]) -> io::Result<()> {
        let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&cells)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(-1.0), "-1.0000000000000000e0");
        let mut w = CsvWriter::new(Vec::new(), &["r", "t_max"]).unwrap();
        w.numbers(&[0.0, 1.5]).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        assert_eq!(text, "r,t_max\n0.0000000000000000e0,1.5000000000000000e0\n");
    }

    proptest! {
        #[test]
        fn text_round_trips_bitwise(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let back: f64 = fmt_f64(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
