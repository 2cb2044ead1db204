//! Floating-point fits and the point tables the fit commands consume.
//!
//! Exact rational polynomial fits live in [`opclass::dimpoly`]; this module
//! holds the deliberately inexact piece, a log-linear least-squares fit for
//! exponentially growing class sizes, plus CSV parsing for both.

use num_bigint::BigInt;
use opclass::{Error, Result};

/// Ordinary least squares of ln(count) against size.
#[derive(Debug, Clone, Copy)]
pub struct ExpFit {
    /// exp(intercept), the c in c * e^(rate * L).
    pub prefactor: f64,
    /// Slope of ln(count) per unit size.
    pub rate: f64,
    /// Coefficient of determination on the log scale, 1 for an exact fit.
    pub r_squared: f64,
    /// Number of points fitted.
    pub points: usize,
}

/// Fit count = c * e^(rate * L) by least squares on (L, ln count).
///
/// Needs at least 4 points so the fit quality is meaningful, and every
/// count must be positive for the logarithm to exist.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExpFit> {
    if points.len() < 4 {
        return Err(Error::Config(format!(
            "exponential fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    for &(l, d) in points {
        if !l.is_finite() || !d.is_finite() || d <= 0.0 {
            return Err(Error::Config(format!(
                "exponential fit needs positive finite counts, got ({l}, {d})"
            )));
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(l, _)| l).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, d)| d.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return Err(Error::Config(
            "exponential fit needs at least two distinct sizes".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let rate = sxy / sxx;
    let intercept = ybar - rate * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + rate * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExpFit {
        prefactor: intercept.exp(),
        rate,
        r_squared,
        points: points.len(),
    })
}

/// Pull (size, count) field pairs out of CSV text.
///
/// Accepts two row layouts: bare `L,count` pairs and scan output
/// `L,seed,oed[,complete]`, where the count is the third column. Blank
/// lines and `#` comments are skipped, as is a single leading header row
/// whose fields fail to parse.
fn extract_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut header_allowed = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let (x, y) = match fields.len() {
            2 => (fields[0], fields[1]),
            3 | 4 => (fields[0], fields[2]),
            k => {
                return Err(Error::Config(format!(
                    "line {}: expected 2 to 4 comma-separated fields, got {k}",
                    idx + 1
                )))
            }
        };
        let numeric = x.parse::<f64>().is_ok() && y.parse::<f64>().is_ok();
        if !numeric && header_allowed {
            header_allowed = false;
            continue;
        }
        header_allowed = false;
        out.push((x.to_string(), y.to_string()));
    }
    if out.is_empty() {
        return Err(Error::Config("no data rows found".into()));
    }
    Ok(out)
}

/// Parse (size, count) rows as floats, for the exponential fit.
pub fn parse_points(text: &str) -> Result<Vec<(f64, f64)>> {
    extract_pairs(text)?
        .into_iter()
        .map(|(x, y)| {
            let l: f64 = x
                .parse()
                .map_err(|_| Error::Config(format!("bad size value {x:?}")))?;
            let d: f64 = y
                .parse()
                .map_err(|_| Error::Config(format!("bad count value {y:?}")))?;
            Ok((l, d))
        })
        .collect()
}

/// Parse (size, count) rows exactly, for the rational polynomial fit.
pub fn parse_integer_points(text: &str) -> Result<Vec<(i64, BigInt)>> {
    extract_pairs(text)?
        .into_iter()
        .map(|(x, y)| {
            let l: i64 = x
                .parse()
                .map_err(|_| Error::Config(format!("bad integer size {x:?}")))?;
            let d: BigInt = y
                .parse()
                .map_err(|_| Error::Config(format!("bad integer count {y:?}")))?;
            Ok((l, d))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_log_linear_data_recovers_the_rate() {
        // counts 2 * 4^(L - 3) are log linear with slope ln 4
        let pts: Vec<(f64, f64)> = (3..10)
            .map(|l| (l as f64, 2.0 * 4f64.powi(l - 3)))
            .collect();
        let fit = fit_exponential(&pts).unwrap();
        assert_abs_diff_eq!(fit.rate, 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.prefactor, 2.0 * 4f64.powi(-3), epsilon = 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.points, 7);
    }

    #[test]
    fn constant_data_has_zero_rate() {
        let pts: Vec<(f64, f64)> = (2..8).map(|l| (l as f64, 5.0)).collect();
        let fit = fit_exponential(&pts).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.prefactor, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let short = [(2.0, 4.0), (3.0, 8.0), (4.0, 16.0)];
        assert!(fit_exponential(&short).is_err());
        let zero = [(2.0, 4.0), (3.0, 0.0), (4.0, 16.0), (5.0, 32.0)];
        assert!(fit_exponential(&zero).is_err());
        let negative = [(2.0, 4.0), (3.0, -8.0), (4.0, 16.0), (5.0, 32.0)];
        assert!(fit_exponential(&negative).is_err());
        let stacked = [(3.0, 4.0), (3.0, 8.0), (3.0, 16.0), (3.0, 32.0)];
        assert!(fit_exponential(&stacked).is_err());
    }

    #[test]
    fn csv_layouts_and_headers_parse() {
        let bare = "L,count\n2,6\n3,15\n";
        assert_eq!(parse_points(bare).unwrap(), vec![(2.0, 6.0), (3.0, 15.0)]);
        let scan = "# schema=1 generated=0\nL,seed,oed,complete\n4,Z1,28,true\n5,Z1,45,true\n";
        assert_eq!(parse_points(scan).unwrap(), vec![(4.0, 28.0), (5.0, 45.0)]);
        let ints = parse_integer_points("2,6\n3,15").unwrap();
        assert_eq!(ints[1].1, BigInt::from(15));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(parse_points("").is_err());
        assert!(parse_points("1,2,3,4,5").is_err());
        // only one header row may fail to parse
        assert!(parse_points("a,b\nc,d\n2,4").is_err());
        assert!(parse_integer_points("2,6.5").is_err());
    }
}
