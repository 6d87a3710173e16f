use std::fmt::Write as _;

use super::{HarnessError, SweepRow};

pub const SWEEP_CSV_HEADER: &str =
    "p_max_l1,p_max_l2,p_max_total,dv_mag,d_angle_deg,p_max_reduced,error_pct";

const COLUMNS: [&str; 7] = [
    "Pmax l1", "Pmax l2", "Pmax", "dV", "dA", "Pmax red", "Error",
];
const UNITS: [&str; 7] = ["pu", "pu", "pu", "pu", "deg", "pu", "%"];
const WIDTH: usize = 12;
const SIG_DIGITS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(format!("unknown table format `{s}` (expected text or csv)")),
        }
    }
}

/// Decimal notation with `SIG_DIGITS` significant digits.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            format!("{x}")
        };
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (SIG_DIGITS as i64 - 1 - magnitude).max(0) as usize;
    // Rounding can carry into a new leading digit (9.999995 -> 10.0000);
    // re-derive the decimals from the rounded value.
    let rounded: f64 = format!("{x:.decimals$}").parse().unwrap_or(x);
    let magnitude = if rounded == 0.0 {
        magnitude
    } else {
        rounded.abs().log10().floor() as i64
    };
    let decimals = (SIG_DIGITS as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn fields(r: &SweepRow) -> [f64; 7] {
    [
        r.p_max_l1,
        r.p_max_l2,
        r.p_max_total,
        r.dv_mag,
        r.d_angle_deg,
        r.p_max_reduced,
        r.error_pct,
    ]
}

/// Serializes sweep rows. Output depends only on the rows.
pub fn emit_table(rows: &[SweepRow], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(SWEEP_CSV_HEADER);
            out.push('\n');
            for r in rows {
                let line: Vec<String> = fields(r).iter().map(|&x| sig(x)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        TableFormat::Text => {
            let row = |cells: &mut dyn Iterator<Item = String>, out: &mut String| {
                let line: Vec<String> = cells.map(|c| format!("{c:>WIDTH$}")).collect();
                out.push_str(line.join(" ").trim_end());
                out.push('\n');
            };
            row(&mut COLUMNS.iter().map(|s| s.to_string()), &mut out);
            row(&mut UNITS.iter().map(|s| s.to_string()), &mut out);
            for r in rows {
                row(&mut fields(r).iter().map(|&x| sig(x)), &mut out);
            }
            let _ = writeln!(
                out,
                "Angles in degrees, error in percent of the reduced-system Pmax: \
                 100 (Pmax - Pmax red) / Pmax red."
            );
        }
    }
    out
}

/// Parses the CSV form produced by [`emit_table`].
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SWEEP_CSV_HEADER => {}
        _ => {
            return Err(HarnessError::Parse {
                line: 1,
                reason: "missing sweep header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| HarnessError::Parse {
                    line: n + 1,
                    reason: e.to_string(),
                })?;
            if v.len() != 7 {
                return Err(HarnessError::Parse {
                    line: n + 1,
                    reason: format!("expected 7 fields, found {}", v.len()),
                });
            }
            Ok(SweepRow {
                p_max_l1: v[0],
                p_max_l2: v[1],
                p_max_total: v[2],
                dv_mag: v[3],
                d_angle_deg: v[4],
                p_max_reduced: v[5],
                error_pct: v[6],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(x: f64) -> SweepRow {
        SweepRow {
            p_max_l1: x,
            p_max_l2: 2.0 * x,
            p_max_total: 3.0 * x,
            dv_mag: -0.269,
            d_angle_deg: -19.2,
            p_max_reduced: 19.95,
            error_pct: -46.82,
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig(19.949_123), "19.9491");
        assert_eq!(sig(-0.268_812_3), "-0.268812");
        assert_eq!(sig(9.999_999_9), "10.0000");
        assert_eq!(sig(123_456.7), "123457");
        assert_eq!(sig(1e-7), "0.000000100000");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(-1e-20), "-0.0000000000000000000100000");
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(
            emit_table(&[], TableFormat::Csv),
            format!("{SWEEP_CSV_HEADER}\n")
        );
        let text = emit_table(&[], TableFormat::Text);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().contains("deg"));
    }

    #[test]
    fn one_row() {
        let csv = emit_table(&[row(1.0)], TableFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "1.00000,2.00000,3.00000,-0.269000,-19.2000,19.9500,-46.8200"
        );
        let text = emit_table(&[row(1.0)], TableFormat::Text);
        assert!(text.contains("-19.2000"));
        assert!(text.contains("Angles in degrees"));
    }

    proptest! {
        #[test]
        fn csv_round_trip(xs in proptest::collection::vec(-1e3f64..1e3, 0..20)) {
            let rows: Vec<SweepRow> = xs.iter().map(|&x| row(x)).collect();
            let csv = emit_table(&rows, TableFormat::Csv);
            let back = parse_sweep_csv(&csv).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            // Values survive to the printed precision; re-emitting is exact.
            prop_assert_eq!(emit_table(&back, TableFormat::Csv), csv);
            for (a, b) in rows.iter().zip(&back) {
                prop_assert!((a.p_max_l1 - b.p_max_l1).abs() <= 5e-6 * a.p_max_l1.abs());
            }
        }
    }
}
