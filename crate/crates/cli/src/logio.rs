//! Bid logs and reserve vectors on disk.
//!
//! Bids and reserves are decimal strings with at most six fractional digits.
//! Values are formatted to micro precision on output, so a value parsed from
//! such a string is written back unchanged.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use reserve_core::{BidLog, BidProfile, BidderId, ReserveVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CliError, CliResult};

pub const LOG_HEADER: [&str; 3] = ["auction_id", "bidder_id", "bid"];
pub const RESERVE_HEADER: [&str; 2] = ["bidder_id", "reserve"];

/// Integer digits accepted before a value counts as an overflow.
const MAX_INTEGER_DIGITS: usize = 15;
const MAX_FRACTION_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl LogFormat {
    /// Guesses from the extension; anything but `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => Self::Jsonl,
            _ => Self::Csv,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        }
    }
}

/// Parses a non-negative decimal with up to six fractional digits.
pub fn parse_decimal(text: &str) -> Result<f64, String> {
    if text.starts_with('-') {
        return Err(format!("negative value {text:?}"));
    }
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (text, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return Err(format!("{text:?} is not a plain decimal number"));
    }
    if frac.is_some_and(|f| f.len() > MAX_FRACTION_DIGITS) {
        return Err(format!(
            "{text:?} has more than {MAX_FRACTION_DIGITS} fractional digits"
        ));
    }
    if int.trim_start_matches('0').len() > MAX_INTEGER_DIGITS {
        return Err(format!("{text:?} overflows {MAX_INTEGER_DIGITS} integer digits"));
    }
    text.parse::<f64>().map_err(|e| format!("{text:?}: {e}"))
}

/// Micro-precision decimal with trailing zeros removed.
pub fn format_decimal(value: f64) -> String {
    let s = format!("{value:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Groups records into profiles in first-seen auction order.
struct Grouper {
    order: Vec<String>,
    auctions: HashMap<String, BTreeMap<BidderId, f64>>,
}

impl Grouper {
    fn new() -> Self {
        Self {
            order: Vec::new(),
            auctions: HashMap::new(),
        }
    }

    fn push(&mut self, line: u64, auction: String, bidder: String, bid: &str) -> CliResult<()> {
        if auction.is_empty() || bidder.is_empty() {
            return Err(CliError::Data(format!("line {line}: empty auction or bidder id")));
        }
        let bid = parse_decimal(bid).map_err(|e| CliError::Data(format!("line {line}: bad bid: {e}")))?;
        if !self.auctions.contains_key(&auction) {
            self.order.push(auction.clone());
        }
        let bids = self.auctions.entry(auction.clone()).or_default();
        if bids.insert(BidderId::new(bidder.clone()), bid).is_some() {
            return Err(CliError::Data(format!(
                "line {line}: duplicate bid by {bidder} in auction {auction}"
            )));
        }
        Ok(())
    }

    fn finish(mut self, path: &Path) -> CliResult<BidLog> {
        if self.order.is_empty() {
            return Err(CliError::Data(format!("{} contains no bids", path.display())));
        }
        let profiles = self
            .order
            .into_iter()
            .map(|id| {
                let bids = self.auctions.remove(&id).expect("grouped");
                BidProfile::new(id, bids)
            })
            .collect::<reserve_core::Result<Vec<_>>>()?;
        Ok(BidLog::from_profiles(profiles)?)
    }
}

pub fn parse_log(path: &Path, format: LogFormat) -> CliResult<BidLog> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    match format {
        LogFormat::Csv => parse_csv(path, file),
        LogFormat::Jsonl => parse_jsonl(path, file),
    }
}

fn parse_csv(path: &Path, file: File) -> CliResult<BidLog> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>() != LOG_HEADER {
        return Err(CliError::Data(format!(
            "{}: line 1: header must be exactly {}",
            path.display(),
            LOG_HEADER.join(",")
        )));
    }
    let mut grouper = Grouper::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        grouper.push(line, record[0].to_string(), record[1].to_string(), &record[2])?;
    }
    grouper.finish(path)
}

fn json_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_jsonl(path: &Path, file: File) -> CliResult<BidLog> {
    let mut grouper = Grouper::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::Data(format!("{}: line {line_no}: {msg}", path.display()));
        let value: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| bad("expected a JSON object".into()))?;
        if obj.len() != LOG_HEADER.len() || LOG_HEADER.iter().any(|k| !obj.contains_key(*k)) {
            return Err(bad(format!(
                "object must have exactly the keys {}",
                LOG_HEADER.join(", ")
            )));
        }
        let field = |k: &str| json_text(&obj[k]).ok_or_else(|| bad(format!("{k} must be a string or number")));
        grouper.push(line_no, field("auction_id")?, field("bidder_id")?, &field("bid")?)?;
    }
    grouper.finish(path)
}

pub fn write_log(log: &BidLog, path: &Path, format: LogFormat) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| CliError::io(path, e);
    match format {
        LogFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
            w.write_record(LOG_HEADER).map_err(csv_err)?;
            for a in log.auctions() {
                for &(i, b) in &a.bids {
                    let bidder = log.bidders()[i as usize].as_str();
                    w.write_record([a.auction_id.as_str(), bidder, &format_decimal(b)])
                        .map_err(csv_err)?;
                }
            }
            w.flush().map_err(io)?;
        }
        LogFormat::Jsonl => {
            for a in log.auctions() {
                for &(i, b) in &a.bids {
                    let record = serde_json::json!({
                        "auction_id": a.auction_id,
                        "bidder_id": log.bidders()[i as usize].as_str(),
                        "bid": format_decimal(b),
                    });
                    writeln!(out, "{record}").map_err(io)?;
                }
            }
            out.flush().map_err(io)?;
        }
    }
    Ok(())
}

/// Rounds every bid to micro precision, as if the log had gone through a file.
pub fn quantize_log(log: &BidLog) -> CliResult<BidLog> {
    let mut auctions = log.auctions().to_vec();
    for a in &mut auctions {
        for b in &mut a.bids {
            b.1 = parse_decimal(&format_decimal(b.1)).map_err(CliError::Data)?;
        }
    }
    Ok(BidLog::from_dense(log.bidders().to_vec(), auctions)?)
}

pub fn write_reserves(reserves: &ReserveVector, bidders: &[BidderId], path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(RESERVE_HEADER).map_err(csv_err)?;
    for b in bidders {
        w.write_record([b.as_str(), &format_decimal(reserves.get(b))])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn parse_reserves(path: &Path) -> CliResult<ReserveVector> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>() != RESERVE_HEADER {
        return Err(CliError::Data(format!(
            "{}: line 1: header must be exactly {}",
            path.display(),
            RESERVE_HEADER.join(",")
        )));
    }
    let mut reserves = ReserveVector::zero();
    let mut seen = std::collections::HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |msg: String| CliError::Data(format!("{}: line {line}: {msg}", path.display()));
        if !seen.insert(record[0].to_string()) {
            return Err(bad(format!("bidder {} listed twice", &record[0])));
        }
        let r = parse_decimal(&record[1]).map_err(bad)?;
        reserves.set(BidderId::new(&record[0]), r)?;
    }
    Ok(reserves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(parse_decimal("7"), Ok(7.0));
        assert_eq!(parse_decimal("0.000001"), Ok(1e-6));
        assert_eq!(parse_decimal("12.5"), Ok(12.5));
        for bad in [
            "-1",
            "NaN",
            "inf",
            "1e3",
            "",
            ".5",
            "5.",
            "1.0000001",
            "1 ",
            "+1",
            "9999999999999999",
        ] {
            assert!(parse_decimal(bad).is_err(), "{bad:?} accepted");
        }
        assert_eq!(parse_decimal("000000000000000000001"), Ok(1.0));
    }

    #[test]
    fn formatting() {
        assert_eq!(format_decimal(6.0), "6");
        assert_eq!(format_decimal(0.0), "0");
        assert_eq!(format_decimal(0.1 + 0.2), "0.3");
        assert_eq!(format_decimal(1.2345674), "1.234567");
        assert_eq!(format_decimal(1e-7), "0");
    }

    #[test]
    fn micro_values_round_trip() {
        for micros in [0u64, 1, 999_999, 1_000_000, 123_456_789, 4_503_599_627_370_495] {
            let text = format!("{}.{:06}", micros / 1_000_000, micros % 1_000_000);
            let v = parse_decimal(&text).unwrap();
            assert_eq!(parse_decimal(&format_decimal(v)).unwrap(), v, "{text}");
        }
    }
}
