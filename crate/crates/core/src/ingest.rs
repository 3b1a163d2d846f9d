//! Log ingestion: leading-timestamp parsing, per-minute event counts and
//! fixed-length windows over them.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use chrono::{Duration, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default leading timestamp layout, e.g. `2020-01-15 12:00:10.123`.
pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.3f";

/// Output layout used for timestamps in CSV files.
pub const CSV_TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Arrivals up to this many minutes behind the newest minute are still counted.
pub const REORDER_TOLERANCE_MINUTES: i64 = 2;

/// Parse the timestamp at the start of `line` using a chrono format string.
/// The rest of the line is ignored. Precision is truncated to milliseconds.
pub fn parse_log_line(line: &str, format: &str) -> Option<NaiveDateTime> {
    let (ts, _rest) = NaiveDateTime::parse_and_remainder(line.trim_start(), format).ok()?;
    let ms = ts.nanosecond() / 1_000_000 * 1_000_000;
    ts.with_nanosecond(ms)
}

fn floor_minute(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .expect("zero seconds is always valid")
}

/// Event counts for a contiguous run of minutes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateSeries {
    pub start_minute: NaiveDateTime,
    pub counts: Vec<u64>,
}

impl RateSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn minute(&self, k: usize) -> NaiveDateTime {
        self.start_minute + Duration::minutes(k as i64)
    }

    /// Cut the series into windows of `window_minutes`, starting a new window
    /// every `stride_minutes`. A trailing partial window is dropped.
    pub fn windows(
        &self,
        window_minutes: usize,
        stride_minutes: usize,
    ) -> Result<impl Iterator<Item = WindowSummary> + '_> {
        if window_minutes == 0 {
            return Err(Error::Config("window length must be at least one minute".into()));
        }
        if stride_minutes == 0 || stride_minutes > window_minutes {
            return Err(Error::Config(
                "stride must be between one minute and the window length".into(),
            ));
        }
        let count = if self.counts.len() < window_minutes {
            0
        } else {
            (self.counts.len() - window_minutes) / stride_minutes + 1
        };
        Ok((0..count).map(move |k| {
            let lo = k * stride_minutes;
            WindowSummary::new(
                self.minute(lo),
                self.counts[lo..lo + window_minutes].to_vec(),
            )
        }))
    }

    /// CSV with header `minute_start,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["minute_start", "count"])?;
        for (k, c) in self.counts.iter().enumerate() {
            w.write_record([
                self.minute(k).format(CSV_TIMESTAMP_FORMAT).to_string(),
                c.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Per-window slice of the rate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window_start: NaiveDateTime,
    /// Exclusive end.
    pub window_end: NaiveDateTime,
    pub counts: Vec<u64>,
    pub mean: f64,
}

impl WindowSummary {
    pub fn new(window_start: NaiveDateTime, counts: Vec<u64>) -> Self {
        let mean = if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<u64>() as f64 / counts.len() as f64
        };
        WindowSummary {
            window_start,
            window_end: window_start + Duration::minutes(counts.len() as i64),
            counts,
            mean,
        }
    }

    pub fn min(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// CSV with header `window_start,window_end,mean,min,max`.
pub fn write_windows_csv<'a, W: Write>(
    windows: impl IntoIterator<Item = &'a WindowSummary>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_start", "window_end", "mean", "min", "max"])?;
    for s in windows {
        w.write_record([
            s.window_start.format(CSV_TIMESTAMP_FORMAT).to_string(),
            s.window_end.format(CSV_TIMESTAMP_FORMAT).to_string(),
            s.mean.to_string(),
            s.min().to_string(),
            s.max().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Streaming per-minute counter with a small reorder buffer.
///
/// Minutes within [`REORDER_TOLERANCE_MINUTES`] of the newest minute seen
/// are still open; arrivals for older minutes are dropped and counted.
#[derive(Debug, Clone, Default)]
pub struct RateCounter {
    start: Option<NaiveDateTime>,
    closed: Vec<u64>,
    open: VecDeque<u64>,
    late_dropped: u64,
}

impl RateCounter {
    pub fn new() -> Self {
        Self::default()
    }

    fn open_start(&self) -> Option<NaiveDateTime> {
        self.start
            .map(|s| s + Duration::minutes(self.closed.len() as i64))
    }

    /// Count one event. Returns `false` if it arrived too late to be counted.
    pub fn push(&mut self, ts: NaiveDateTime) -> bool {
        let minute = floor_minute(ts);
        let Some(open_start) = self.open_start() else {
            self.start = Some(minute);
            self.open.push_back(1);
            return true;
        };
        let offset = (minute - open_start).num_minutes();
        if offset < 0 {
            let newest = open_start + Duration::minutes(self.open.len() as i64 - 1);
            let lag = (newest - minute).num_minutes();
            if !self.closed.is_empty() || lag > REORDER_TOLERANCE_MINUTES {
                self.late_dropped += 1;
                return false;
            }
            // still inside the first open span: extend the series backwards
            for _ in 0..-offset {
                self.open.push_front(0);
            }
            self.start = Some(minute);
            self.open[0] += 1;
            return true;
        }
        let offset = offset as usize;
        if offset >= self.open.len() {
            self.open.resize(offset + 1, 0);
        }
        self.open[offset] += 1;
        let keep = REORDER_TOLERANCE_MINUTES as usize + 1;
        while self.open.len() > keep {
            self.closed.push(self.open.pop_front().expect("non-empty"));
        }
        true
    }

    /// Minutes that can no longer change.
    pub fn closed_counts(&self) -> &[u64] {
        &self.closed
    }

    pub fn late_dropped(&self) -> u64 {
        self.late_dropped
    }

    pub fn finish(mut self) -> Option<RateSeries> {
        let start = self.start?;
        self.closed.extend(self.open);
        Some(RateSeries {
            start_minute: start,
            counts: self.closed,
        })
    }
}

/// Build a rate series from an ordered stream of timestamps.
/// Returns `None` for an empty stream.
pub fn rate_series<I: IntoIterator<Item = NaiveDateTime>>(timestamps: I) -> Option<RateSeries> {
    let mut counter = RateCounter::new();
    for ts in timestamps {
        counter.push(ts);
    }
    counter.finish()
}

/// Counters collected while ingesting a line stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: u64,
    pub parsed: u64,
    pub skipped: u64,
    pub late_dropped: u64,
    /// Line numbers (1-based) of the first few unparseable lines.
    pub first_skipped: Vec<u64>,
}

const MAX_SKIPPED_RECORDED: usize = 16;

/// Parse every line, skipping (and counting) the ones without a timestamp.
pub fn ingest_lines<I, S>(lines: I, format: &str) -> (Option<RateSeries>, IngestStats)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut stats = IngestStats::default();
    let mut counter = RateCounter::new();
    for line in lines {
        stats.lines += 1;
        match parse_log_line(line.as_ref(), format) {
            Some(ts) => {
                stats.parsed += 1;
                counter.push(ts);
            }
            None => {
                stats.skipped += 1;
                if stats.first_skipped.len() < MAX_SKIPPED_RECORDED {
                    stats.first_skipped.push(stats.lines);
                }
            }
        }
    }
    stats.late_dropped = counter.late_dropped();
    (counter.finish(), stats)
}

/// Same as [`ingest_lines`] over a buffered reader. Read errors are fatal.
pub fn ingest_reader<R: BufRead>(reader: R, format: &str) -> Result<(Option<RateSeries>, IngestStats)> {
    let mut err = None;
    let lines = reader.lines().map_while(|l| match l {
        Ok(l) => Some(l),
        Err(e) => {
            err = Some(e);
            None
        }
    });
    let out = ingest_lines(lines, format);
    match err {
        Some(e) => Err(Error::io("<log input>", e)),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn t(h: u32, m: u32, s: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2020, 1, 15)
            .unwrap()
            .and_hms_opt(h, m, s)
            .unwrap()
    }

    #[test]
    fn parses_leading_timestamp() {
        let ts = parse_log_line("2020-01-15 12:00:10.123 - INFO something", DEFAULT_TIMESTAMP_FORMAT)
            .unwrap();
        assert_eq!(
            ts,
            NaiveDate::from_ymd_opt(2020, 1, 15)
                .unwrap()
                .and_hms_milli_opt(12, 0, 10, 123)
                .unwrap()
        );
        assert!(parse_log_line("2020-01-15 12:00:10.123", DEFAULT_TIMESTAMP_FORMAT).is_some());
        assert!(parse_log_line("garbage line", DEFAULT_TIMESTAMP_FORMAT).is_none());
        assert!(parse_log_line("", DEFAULT_TIMESTAMP_FORMAT).is_none());
    }

    #[test]
    fn truncates_to_milliseconds() {
        let ts = parse_log_line("2020-01-15 12:00:10.123456 x", "%Y-%m-%d %H:%M:%S%.f").unwrap();
        assert_eq!(ts.nanosecond(), 123_000_000);
    }

    #[test]
    fn skipped_lines_are_counted() {
        let lines = [
            "2020-01-15 12:00:10.000 - a",
            "garbage",
            "2020-01-15 12:00:50.000 -",
        ];
        let (series, stats) = ingest_lines(lines, DEFAULT_TIMESTAMP_FORMAT);
        assert_eq!(series.unwrap().counts, vec![2]);
        assert_eq!(stats.skipped, 1);
        assert_eq!(stats.parsed, 2);
        assert_eq!(stats.first_skipped, vec![2]);
    }

    #[test]
    fn counts_per_minute() {
        let s = rate_series([t(12, 0, 10), t(12, 0, 40), t(12, 1, 5)]).unwrap();
        assert_eq!(s.start_minute, t(12, 0, 0));
        assert_eq!(s.counts, vec![2, 1]);
        assert!(rate_series(std::iter::empty()).is_none());
        let s = rate_series([t(12, 0, 0), t(12, 3, 0)]).unwrap();
        assert_eq!(s.counts, vec![1, 0, 0, 1]);
    }

    #[test]
    fn reorders_small_lateness_and_drops_old() {
        let mut c = RateCounter::new();
        for ts in [t(12, 0, 1), t(12, 3, 0), t(12, 1, 30), t(12, 6, 0), t(12, 1, 45)] {
            c.push(ts);
        }
        assert_eq!(c.late_dropped(), 1);
        assert_eq!(c.finish().unwrap().counts, vec![1, 1, 0, 1, 0, 0, 1]);

        // early arrival ahead of the first event
        let s = rate_series([t(12, 2, 0), t(12, 0, 30)]).unwrap();
        assert_eq!(s.start_minute, t(12, 0, 0));
        assert_eq!(s.counts, vec![1, 0, 1]);
    }

    #[test]
    fn window_means() {
        let s = RateSeries {
            start_minute: t(0, 0, 0),
            counts: vec![10, 20, 30, 40],
        };
        let w: Vec<_> = s.windows(2, 2).unwrap().collect();
        assert_eq!(w.iter().map(|w| w.mean).collect::<Vec<_>>(), vec![15.0, 35.0]);
        assert_eq!(w[1].window_start, t(0, 2, 0));
        assert_eq!(w[1].window_end, t(0, 4, 0));

        let s = RateSeries {
            start_minute: t(0, 0, 0),
            counts: vec![10, 20, 30],
        };
        let means: Vec<_> = s.windows(2, 1).unwrap().map(|w| w.mean).collect();
        assert_eq!(means, vec![15.0, 25.0]);
        assert_eq!(s.windows(4, 4).unwrap().count(), 0);
        assert!(s.windows(0, 1).is_err());
        assert!(s.windows(2, 3).is_err());
    }

    #[test]
    fn csv_outputs() {
        let s = RateSeries {
            start_minute: t(0, 0, 0),
            counts: vec![3, 5],
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "minute_start,count\n2020-01-15 00:00:00,3\n2020-01-15 00:01:00,5\n"
        );
        let w: Vec<_> = s.windows(2, 2).unwrap().collect();
        let mut buf = Vec::new();
        write_windows_csv(&w, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "window_start,window_end,mean,min,max\n2020-01-15 00:00:00,2020-01-15 00:02:00,4,3,5\n"
        );
    }
}
