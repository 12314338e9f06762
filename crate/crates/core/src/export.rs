//! Text and image serializations. Floats use 17 significant digits so reruns
//! diff byte for byte.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::IndexBox;
use crate::simulator::FieldSample;
use crate::spectral::CoefficientField;

/// `{:.16e}` formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<W: Write>(
    mut w: W,
    prefix: &str,
    index_box: &IndexBox,
    values: impl Iterator<Item = (Vec<i64>, Complex64)>,
) -> Result<()> {
    let header: Vec<String> = (1..=index_box.dim()).map(|i| format!("{prefix}_{i}")).collect();
    writeln!(w, "{},re,im", header.join(","))?;
    for (k, v) in values {
        let idx: Vec<String> = k.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{},{},{}", idx.join(","), fmt_f64(v.re), fmt_f64(v.im))?;
    }
    Ok(())
}

/// CSV `k_1,…,k_d,re,im`, row-major over the coefficient box.
pub fn coefficients_csv<W: Write>(w: W, c: &CoefficientField) -> Result<()> {
    write_rows(w, "k", c.index_box(), c.iter())
}

/// CSV `t_1,…,t_d,re,im`, row-major over the window.
pub fn field_csv<W: Write>(w: W, f: &FieldSample) -> Result<()> {
    let it = f.window.iter().zip(f.values.iter().copied());
    write_rows(w, "t", &f.window, it)
}

/// Binary PGM of |Y|, rows along the first axis, gray = ⌊255|Y|/max|Y|⌉.
pub fn field_pgm<W: Write>(mut w: W, f: &FieldSample) -> Result<()> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: f.dim(),
        });
    }
    let ext = f.window.extents();
    let max = f.max_abs();
    write!(w, "P5\n{} {}\n255\n", ext[1], ext[0])?;
    let bytes: Vec<u8> = f
        .values
        .iter()
        .map(|v| {
            if max > 0.0 {
                (255.0 * v.norm() / max).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpec;
    use crate::simulator::sample_noise;

    #[test]
    fn csv_and_pgm_shapes() {
        let w = IndexBox::new(vec![0, 0], vec![2, 3]).unwrap();
        let f = sample_noise(&NoiseSpec::two_point(), &w, 1);
        let mut csv = Vec::new();
        field_csv(&mut csv, &f).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert!(text.starts_with("t_1,t_2,re,im\n0,0,"));
        let mut pgm = Vec::new();
        field_pgm(&mut pgm, &f).unwrap();
        assert!(pgm.starts_with(b"P5\n4 3\n255\n"));
        assert_eq!(pgm.len(), 11 + 12);
        assert!(pgm[11..].iter().all(|&b| b == 255));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
