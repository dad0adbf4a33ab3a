//! CSV and JSON writers for artifacts.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;

/// Grid rows `re λ, im λ, re value, im value` under a header line.
pub fn write_grid_csv<W: Write>(pairs: &[(Complex64, Complex64)], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["re_lambda", "im_lambda", "re_value", "im_value"])?;
    for (p, v) in pairs {
        wtr.write_record(&[
            p.re.to_string(),
            p.im.to_string(),
            v.re.to_string(),
            v.im.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Pretty JSON with shortest round-trip floats; keys follow declaration order.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| crate::error::Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_header_and_rows() {
        let mut buf = Vec::new();
        write_grid_csv(&[(Complex64::new(0.5, -1.0), Complex64::new(2.0, 0.0))], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "re_lambda,im_lambda,re_value,im_value\n0.5,-1,2,0\n"
        );
    }
}
