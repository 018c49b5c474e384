//! OHLC CSV files: header `date,open,high,low,close`, one bar per row.
//!
//! The date column is carried through as an opaque label.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{OhlcSeries, RawBar};
use crate::error::{Error, Result};

pub const OHLC_HEADER: [&str; 5] = ["date", "open", "high", "low", "close"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    date: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
}

pub fn read_ohlc_csv<R: Read>(reader: R) -> Result<Vec<RawBar>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if headers != OHLC_HEADER {
        return Err(Error::invalid(format!(
            "expected header `{}`, found `{}`",
            OHLC_HEADER.join(","),
            headers.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| Error::InvalidBar {
            row: i + 1,
            reason: e.to_string(),
        })?;
        out.push(RawBar::new(row.date, row.open, row.high, row.low, row.close));
    }
    if out.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(out)
}

pub fn write_ohlc_csv<W: Write>(writer: W, series: &OhlcSeries) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (bar, label) in series.bars().iter().zip(series.labels()) {
        wtr.serialize(Row {
            date: label.clone(),
            open: bar.open,
            high: bar.high,
            low: bar.low,
            close: bar.close,
        })?;
    }
    wtr.flush()?;
    Ok(())
}
