//! Text interchange formats for censuses, curves, rate tables, sample dumps,
//! and Monte Carlo estimates.
//!
//! Every real number is written with 17 significant digits, which round-trips
//! `f64` exactly; infinities and NaN appear as `inf`, `-inf`, and `NaN`.  All
//! writers are deterministic — the same data always produces the same bytes —
//! and every schema round-trips: `parse(write(rows)) == rows`.

use crate::error::FormatError;
use crate::lattice::CensusRow;
use crate::oracle::McEstimate;

/// Column header of census tables.
pub const CENSUS_HEADER: &str = "ell,count_all,count_free,density_all,density_free";

/// Column header of free-energy curve tables.
pub const CURVE_HEADER: &str = "beta,value,derivative,tail_bound";

/// Column header of preset figure sweeps (a curve per bias value).
pub const FIGURE_HEADER: &str = "r,beta,value,derivative,tail_bound";

/// Column header of rate-function tables.
pub const RATE_HEADER: &str = "x,value,eta,in_domain";

/// Column header of dimension-spectrum tables.
pub const SPECTRUM_HEADER: &str = "alpha,dimension";

/// Column header of sample dumps.
pub const SAMPLES_HEADER: &str = "sample_index,S";

/// Serializes a real with 17 significant digits (exact `f64` round-trip).
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

/// Parses a real written by [`format_real`] (plain decimal forms also parse).
pub fn parse_real(text: &str, line: usize) -> Result<f64, FormatError> {
    text.parse::<f64>().map_err(|_| FormatError::Malformed {
        line,
        message: format!("expected a real number, got {text:?}"),
    })
}

fn parse_u64(text: &str, line: usize) -> Result<u64, FormatError> {
    text.parse::<u64>().map_err(|_| FormatError::Malformed {
        line,
        message: format!("expected a non-negative integer, got {text:?}"),
    })
}

fn parse_i64(text: &str, line: usize) -> Result<i64, FormatError> {
    text.parse::<i64>().map_err(|_| FormatError::Malformed {
        line,
        message: format!("expected an integer, got {text:?}"),
    })
}

fn parse_bool(text: &str, line: usize) -> Result<bool, FormatError> {
    match text {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(FormatError::Malformed {
            line,
            message: format!("expected true or false, got {other:?}"),
        }),
    }
}

/// Splits a CSV body into per-line fields, checking the header and arity.
fn csv_records<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>, FormatError> {
    let expected = header.split(',').count();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == header => {}
        Some((_, first)) => {
            return Err(FormatError::Malformed {
                line: 1,
                message: format!("expected header {header:?}, got {first:?}"),
            })
        }
        None => {
            return Err(FormatError::Malformed {
                line: 1,
                message: format!("empty input; expected header {header:?}"),
            })
        }
    }
    let mut records = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(FormatError::Malformed {
                line: index + 1,
                message: format!("expected {expected} fields, got {}", fields.len()),
            });
        }
        records.push((index + 1, fields));
    }
    Ok(records)
}

// --- census ---------------------------------------------------------------

/// Writes a census table (`ell,count_all,count_free,density_all,density_free`).
pub fn write_census_csv(rows: &[CensusRow]) -> String {
    let mut out = String::from(CENSUS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.ell,
            row.count_all,
            row.count_free,
            format_real(row.density_all),
            format_real(row.density_free),
        ));
    }
    out
}

/// Parses a census table written by [`write_census_csv`].
pub fn parse_census_csv(text: &str) -> Result<Vec<CensusRow>, FormatError> {
    csv_records(text, CENSUS_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(CensusRow {
                ell: parse_u64(f[0], line)?,
                count_all: parse_u64(f[1], line)?,
                count_free: parse_u64(f[2], line)?,
                density_all: parse_real(f[3], line)?,
                density_free: parse_real(f[4], line)?,
            })
        })
        .collect()
}

/// Writes a census table as a JSON array mirroring the CSV columns.
pub fn write_census_json(rows: &[CensusRow]) -> String {
    json_array(rows.iter().map(|row| {
        format!(
            "{{\"ell\":{},\"count_all\":{},\"count_free\":{},\"density_all\":{},\"density_free\":{}}}",
            row.ell,
            row.count_all,
            row.count_free,
            json_real(row.density_all),
            json_real(row.density_free),
        )
    }))
}

/// Parses a census table written by [`write_census_json`].
pub fn parse_census_json(text: &str) -> Result<Vec<CensusRow>, FormatError> {
    let items = json_array_items(text)?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let line = index + 1;
            Ok(CensusRow {
                ell: json_u64(item, "ell", line)?,
                count_all: json_u64(item, "count_all", line)?,
                count_free: json_u64(item, "count_free", line)?,
                density_all: json_f64(item, "density_all", line)?,
                density_free: json_f64(item, "density_free", line)?,
            })
        })
        .collect()
}

// --- free-energy curves ---------------------------------------------------

/// One row of a free-energy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    /// Inverse temperature.
    pub beta: f64,
    /// Free-energy value.
    pub value: f64,
    /// Derivative in `beta`.
    pub derivative: f64,
    /// Bound on the truncation error of the value (0 for exact formulas).
    pub tail_bound: f64,
}

/// Writes a curve table (`beta,value,derivative,tail_bound`).
pub fn write_curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_real(row.beta),
            format_real(row.value),
            format_real(row.derivative),
            format_real(row.tail_bound),
        ));
    }
    out
}

/// Parses a curve table written by [`write_curve_csv`].
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>, FormatError> {
    csv_records(text, CURVE_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(CurveRow {
                beta: parse_real(f[0], line)?,
                value: parse_real(f[1], line)?,
                derivative: parse_real(f[2], line)?,
                tail_bound: parse_real(f[3], line)?,
            })
        })
        .collect()
}

/// Writes a curve table as a JSON array mirroring the CSV columns.
pub fn write_curve_json(rows: &[CurveRow]) -> String {
    json_array(rows.iter().map(|row| {
        format!(
            "{{\"beta\":{},\"value\":{},\"derivative\":{},\"tail_bound\":{}}}",
            json_real(row.beta),
            json_real(row.value),
            json_real(row.derivative),
            json_real(row.tail_bound),
        )
    }))
}

/// Parses a curve table written by [`write_curve_json`].
pub fn parse_curve_json(text: &str) -> Result<Vec<CurveRow>, FormatError> {
    let items = json_array_items(text)?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let line = index + 1;
            Ok(CurveRow {
                beta: json_f64(item, "beta", line)?,
                value: json_f64(item, "value", line)?,
                derivative: json_f64(item, "derivative", line)?,
                tail_bound: json_f64(item, "tail_bound", line)?,
            })
        })
        .collect()
}

// --- figure sweeps --------------------------------------------------------

/// One row of a preset figure sweep: a curve row tagged with its bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    /// Spin bias.
    pub r: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// Free-energy value.
    pub value: f64,
    /// Derivative in `beta`.
    pub derivative: f64,
    /// Bound on the truncation error of the value.
    pub tail_bound: f64,
}

/// Writes a figure sweep (`r,beta,value,derivative,tail_bound`).
pub fn write_figure_csv(rows: &[FigureRow]) -> String {
    let mut out = String::from(FIGURE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_real(row.r),
            format_real(row.beta),
            format_real(row.value),
            format_real(row.derivative),
            format_real(row.tail_bound),
        ));
    }
    out
}

/// Parses a figure sweep written by [`write_figure_csv`].
pub fn parse_figure_csv(text: &str) -> Result<Vec<FigureRow>, FormatError> {
    csv_records(text, FIGURE_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(FigureRow {
                r: parse_real(f[0], line)?,
                beta: parse_real(f[1], line)?,
                value: parse_real(f[2], line)?,
                derivative: parse_real(f[3], line)?,
                tail_bound: parse_real(f[4], line)?,
            })
        })
        .collect()
}

/// Writes a figure sweep as a JSON array mirroring the CSV columns.
pub fn write_figure_json(rows: &[FigureRow]) -> String {
    json_array(rows.iter().map(|row| {
        format!(
            "{{\"r\":{},\"beta\":{},\"value\":{},\"derivative\":{},\"tail_bound\":{}}}",
            json_real(row.r),
            json_real(row.beta),
            json_real(row.value),
            json_real(row.derivative),
            json_real(row.tail_bound),
        )
    }))
}

/// Parses a figure sweep written by [`write_figure_json`].
pub fn parse_figure_json(text: &str) -> Result<Vec<FigureRow>, FormatError> {
    let items = json_array_items(text)?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let line = index + 1;
            Ok(FigureRow {
                r: json_f64(item, "r", line)?,
                beta: json_f64(item, "beta", line)?,
                value: json_f64(item, "value", line)?,
                derivative: json_f64(item, "derivative", line)?,
                tail_bound: json_f64(item, "tail_bound", line)?,
            })
        })
        .collect()
}

// --- rate tables ----------------------------------------------------------

/// One row of a rate-function table (exactly the serialized fields of a rate
/// evaluation: target, value, maximizing tilt, and domain membership).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    /// The queried average.
    pub x: f64,
    /// The rate value (`inf` outside the domain).
    pub value: f64,
    /// The maximizing tilt, when one exists.
    pub eta: Option<f64>,
    /// Whether `x` lies inside the essential domain.
    pub in_domain: bool,
}

impl From<&crate::rate::RateValue> for RateRow {
    fn from(rv: &crate::rate::RateValue) -> Self {
        Self {
            x: rv.x,
            value: rv.value,
            eta: rv.eta,
            in_domain: rv.in_domain,
        }
    }
}

/// Writes a rate table (`x,value,eta,in_domain`); a missing tilt is an empty
/// field.
pub fn write_rate_csv(rows: &[RateRow]) -> String {
    let mut out = String::from(RATE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_real(row.x),
            format_real(row.value),
            row.eta.map(format_real).unwrap_or_default(),
            row.in_domain,
        ));
    }
    out
}

/// Parses a rate table written by [`write_rate_csv`].
pub fn parse_rate_csv(text: &str) -> Result<Vec<RateRow>, FormatError> {
    csv_records(text, RATE_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(RateRow {
                x: parse_real(f[0], line)?,
                value: parse_real(f[1], line)?,
                eta: if f[2].is_empty() {
                    None
                } else {
                    Some(parse_real(f[2], line)?)
                },
                in_domain: parse_bool(f[3], line)?,
            })
        })
        .collect()
}

/// Writes a rate table as a JSON array mirroring the CSV columns (a missing
/// tilt is `null`).
pub fn write_rate_json(rows: &[RateRow]) -> String {
    json_array(rows.iter().map(|row| {
        format!(
            "{{\"x\":{},\"value\":{},\"eta\":{},\"in_domain\":{}}}",
            json_real(row.x),
            json_real(row.value),
            row.eta.map_or_else(|| "null".to_string(), json_real),
            row.in_domain,
        )
    }))
}

/// Parses a rate table written by [`write_rate_json`].
pub fn parse_rate_json(text: &str) -> Result<Vec<RateRow>, FormatError> {
    let items = json_array_items(text)?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let line = index + 1;
            let eta = match item.get("eta") {
                None | Some(serde_json::Value::Null) => None,
                Some(value) => Some(json_value_f64(value, "eta", line)?),
            };
            let in_domain = item
                .get("in_domain")
                .and_then(serde_json::Value::as_bool)
                .ok_or_else(|| FormatError::Malformed {
                    line,
                    message: "missing or non-boolean field \"in_domain\"".to_string(),
                })?;
            Ok(RateRow {
                x: json_f64(item, "x", line)?,
                value: json_f64(item, "value", line)?,
                eta,
                in_domain,
            })
        })
        .collect()
}

// --- dimension spectra ----------------------------------------------------

/// One row of a dimension-spectrum table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    /// The level-set level.
    pub alpha: f64,
    /// The Hausdorff dimension of the level set.
    pub dimension: f64,
}

/// Writes a dimension-spectrum table (`alpha,dimension`).
pub fn write_spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{}\n",
            format_real(row.alpha),
            format_real(row.dimension),
        ));
    }
    out
}

/// Parses a dimension-spectrum table written by [`write_spectrum_csv`].
pub fn parse_spectrum_csv(text: &str) -> Result<Vec<SpectrumRow>, FormatError> {
    csv_records(text, SPECTRUM_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(SpectrumRow {
                alpha: parse_real(f[0], line)?,
                dimension: parse_real(f[1], line)?,
            })
        })
        .collect()
}

/// Writes a dimension-spectrum table as a JSON array.
pub fn write_spectrum_json(rows: &[SpectrumRow]) -> String {
    json_array(rows.iter().map(|row| {
        format!(
            "{{\"alpha\":{},\"dimension\":{}}}",
            json_real(row.alpha),
            json_real(row.dimension),
        )
    }))
}

/// Parses a dimension-spectrum table written by [`write_spectrum_json`].
pub fn parse_spectrum_json(text: &str) -> Result<Vec<SpectrumRow>, FormatError> {
    let items = json_array_items(text)?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            let line = index + 1;
            Ok(SpectrumRow {
                alpha: json_f64(item, "alpha", line)?,
                dimension: json_f64(item, "dimension", line)?,
            })
        })
        .collect()
}

// --- sample dumps ---------------------------------------------------------

/// Writes a sample dump (`sample_index,S`), indices starting at 0.
pub fn write_samples_csv(sums: &[i64]) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    for (index, s) in sums.iter().enumerate() {
        out.push_str(&format!("{index},{s}\n"));
    }
    out
}

/// Parses a sample dump written by [`write_samples_csv`], checking that the
/// indices are consecutive from 0.
pub fn parse_samples_csv(text: &str) -> Result<Vec<i64>, FormatError> {
    let mut sums = Vec::new();
    for (line, f) in csv_records(text, SAMPLES_HEADER)? {
        let index = parse_u64(f[0], line)?;
        if index != sums.len() as u64 {
            return Err(FormatError::Malformed {
                line,
                message: format!("expected sample index {}, got {index}", sums.len()),
            });
        }
        sums.push(parse_i64(f[1], line)?);
    }
    Ok(sums)
}

// --- Monte Carlo estimates ------------------------------------------------

/// Writes an estimate as a single JSON object
/// `{mean, stderr, samples, seed}` plus `hits` when present.
pub fn write_estimate_json(estimate: &McEstimate) -> String {
    let mut out = format!(
        "{{\"mean\":{},\"stderr\":{},\"samples\":{},\"seed\":{}",
        json_real(estimate.mean),
        json_real(estimate.stderr),
        estimate.samples,
        estimate.seed,
    );
    if let Some(hits) = estimate.hits {
        out.push_str(&format!(",\"hits\":{hits}"));
    }
    out.push_str("}\n");
    out
}

/// Parses an estimate written by [`write_estimate_json`].
pub fn parse_estimate_json(text: &str) -> Result<McEstimate, FormatError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FormatError::Malformed {
            line: e.line(),
            message: format!("invalid JSON: {e}"),
        })?;
    let object = value.as_object().ok_or_else(|| FormatError::Malformed {
        line: 1,
        message: "expected a JSON object".to_string(),
    })?;
    let uint = |key: &str| -> Result<u64, FormatError> {
        object
            .get(key)
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| FormatError::Malformed {
                line: 1,
                message: format!("missing or non-integer field {key:?}"),
            })
    };
    let hits = match object.get("hits") {
        None | Some(serde_json::Value::Null) => None,
        Some(value) => Some(value.as_u64().ok_or_else(|| FormatError::Malformed {
            line: 1,
            message: "non-integer field \"hits\"".to_string(),
        })?),
    };
    Ok(McEstimate {
        mean: json_value_f64(
            object.get("mean").unwrap_or(&serde_json::Value::Null),
            "mean",
            1,
        )?,
        stderr: json_value_f64(
            object.get("stderr").unwrap_or(&serde_json::Value::Null),
            "stderr",
            1,
        )?,
        samples: uint("samples")?,
        seed: uint("seed")?,
        hits,
    })
}

// --- shared JSON plumbing -------------------------------------------------

/// A real as a JSON token: a 17-significant-digit number when finite, a
/// quoted string (`"inf"`, `"-inf"`, `"NaN"`) otherwise.
fn json_real(x: f64) -> String {
    if x.is_finite() {
        format_real(x)
    } else {
        format!("{:?}", format_real(x))
    }
}

/// One array element per line, so diffs and line-based errors stay readable.
fn json_array(items: impl Iterator<Item = String>) -> String {
    let body: Vec<String> = items.collect();
    if body.is_empty() {
        return "[]\n".to_string();
    }
    format!("[\n{}\n]\n", body.join(",\n"))
}

fn json_array_items(
    text: &str,
) -> Result<Vec<serde_json::Map<String, serde_json::Value>>, FormatError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| FormatError::Malformed {
            line: e.line(),
            message: format!("invalid JSON: {e}"),
        })?;
    let items = value.as_array().ok_or_else(|| FormatError::Malformed {
        line: 1,
        message: "expected a JSON array".to_string(),
    })?;
    items
        .iter()
        .enumerate()
        .map(|(index, item)| {
            item.as_object()
                .cloned()
                .ok_or_else(|| FormatError::Malformed {
                    line: index + 1,
                    message: "expected a JSON object".to_string(),
                })
        })
        .collect()
}

fn json_f64(
    object: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    line: usize,
) -> Result<f64, FormatError> {
    json_value_f64(
        object.get(key).unwrap_or(&serde_json::Value::Null),
        key,
        line,
    )
}

fn json_value_f64(value: &serde_json::Value, key: &str, line: usize) -> Result<f64, FormatError> {
    match value {
        serde_json::Value::Number(number) => {
            number.as_f64().ok_or_else(|| FormatError::Malformed {
                line,
                message: format!("field {key:?} is not representable as f64"),
            })
        }
        serde_json::Value::String(text) => parse_real(text, line),
        _ => Err(FormatError::Malformed {
            line,
            message: format!("missing or non-numeric field {key:?}"),
        }),
    }
}

fn json_u64(
    object: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    line: usize,
) -> Result<u64, FormatError> {
    object
        .get(key)
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| FormatError::Malformed {
            line,
            message: format!("missing or non-integer field {key:?}"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip_exactly() {
        let values = [
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            0.1201145069582774,
            -2.2250738585072014e-308,
            1.7976931348623157e308,
            f64::MIN_POSITIVE,
            5e-324,
        ];
        for &x in &values {
            let text = format_real(x);
            let back = parse_real(&text, 1).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {text} -> {back}");
        }
        assert_eq!(parse_real("inf", 1).unwrap(), f64::INFINITY);
        assert_eq!(parse_real("-inf", 1).unwrap(), f64::NEG_INFINITY);
        assert!(parse_real("NaN", 1).unwrap().is_nan());
        assert!(parse_real("three", 7).is_err());
    }

    #[test]
    fn census_tables_round_trip() {
        let rows = vec![
            CensusRow {
                ell: 1,
                count_all: 120,
                count_free: 99,
                density_all: 120.0 / 144.0,
                density_free: 99.0 / 144.0,
            },
            CensusRow {
                ell: 2,
                count_all: 21,
                count_free: 18,
                density_all: 21.0 / 144.0,
                density_free: 18.0 / 144.0,
            },
        ];
        assert_eq!(parse_census_csv(&write_census_csv(&rows)).unwrap(), rows);
        assert_eq!(parse_census_json(&write_census_json(&rows)).unwrap(), rows);
    }

    #[test]
    fn curve_tables_round_trip() {
        let rows = vec![
            CurveRow {
                beta: -3.0,
                value: 2.306852819440055,
                derivative: -0.9950547536867305,
                tail_bound: 1.4e-130,
            },
            CurveRow {
                beta: 0.0,
                value: 0.0,
                derivative: 0.0,
                tail_bound: 0.0,
            },
        ];
        assert_eq!(parse_curve_csv(&write_curve_csv(&rows)).unwrap(), rows);
        assert_eq!(parse_curve_json(&write_curve_json(&rows)).unwrap(), rows);
    }

    #[test]
    fn figure_tables_round_trip() {
        let rows = vec![FigureRow {
            r: 0.1,
            beta: -3.0,
            value: 1.9,
            derivative: -0.99,
            tail_bound: 2e-9,
        }];
        assert_eq!(parse_figure_csv(&write_figure_csv(&rows)).unwrap(), rows);
        assert_eq!(parse_figure_json(&write_figure_json(&rows)).unwrap(), rows);
    }

    #[test]
    fn rate_tables_round_trip_including_markers() {
        let rows = vec![
            RateRow {
                x: 0.2,
                value: 0.020135513550688766,
                eta: Some(0.2027325540540822),
                in_domain: true,
            },
            RateRow {
                x: 1.5,
                value: f64::INFINITY,
                eta: None,
                in_domain: false,
            },
        ];
        assert_eq!(parse_rate_csv(&write_rate_csv(&rows)).unwrap(), rows);
        assert_eq!(parse_rate_json(&write_rate_json(&rows)).unwrap(), rows);
        let csv = write_rate_csv(&rows);
        assert!(csv.contains(",inf,,false"));
    }

    #[test]
    fn spectrum_tables_round_trip() {
        let rows = vec![
            SpectrumRow {
                alpha: 0.0,
                dimension: 1.0,
            },
            SpectrumRow {
                alpha: 0.5,
                dimension: 0.884,
            },
        ];
        assert_eq!(
            parse_spectrum_csv(&write_spectrum_csv(&rows)).unwrap(),
            rows
        );
        assert_eq!(
            parse_spectrum_json(&write_spectrum_json(&rows)).unwrap(),
            rows
        );
    }

    #[test]
    fn sample_dumps_round_trip_and_validate_indices() {
        let sums = vec![63, -1, 5, 63, -63];
        let text = write_samples_csv(&sums);
        assert!(text.starts_with("sample_index,S\n0,63\n1,-1\n"));
        assert_eq!(parse_samples_csv(&text).unwrap(), sums);

        let broken = "sample_index,S\n0,63\n2,-1\n";
        assert!(parse_samples_csv(broken).is_err());
    }

    #[test]
    fn estimates_round_trip_with_and_without_hits() {
        let without = McEstimate {
            mean: 0.12011450695827745,
            stderr: 3.4e-4,
            samples: 100_000,
            seed: 7,
            hits: None,
        };
        let with = McEstimate {
            hits: Some(140),
            ..without
        };
        assert_eq!(
            parse_estimate_json(&write_estimate_json(&without)).unwrap(),
            without
        );
        assert_eq!(
            parse_estimate_json(&write_estimate_json(&with)).unwrap(),
            with
        );
        assert!(!write_estimate_json(&without).contains("hits"));
    }

    #[test]
    fn malformed_inputs_name_the_line() {
        let bad_header = "b,v,d,t\n";
        match parse_curve_csv(bad_header) {
            Err(FormatError::Malformed { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad_row = format!("{CURVE_HEADER}\n1.0,2.0,3.0\n");
        match parse_curve_csv(&bad_row) {
            Err(FormatError::Malformed { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad_field = format!("{CURVE_HEADER}\n1.0,two,3.0,4.0\n");
        match parse_curve_csv(&bad_field) {
            Err(FormatError::Malformed { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_estimate_json("{").is_err());
        assert!(parse_estimate_json("[1,2]").is_err());
    }

    #[test]
    fn non_finite_reals_survive_the_json_variant() {
        let rows = vec![RateRow {
            x: 2.0,
            value: f64::INFINITY,
            eta: None,
            in_domain: false,
        }];
        let text = write_rate_json(&rows);
        assert!(text.contains("\"inf\""));
        assert_eq!(parse_rate_json(&text).unwrap(), rows);
    }
}
