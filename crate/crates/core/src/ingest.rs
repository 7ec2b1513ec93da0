//! Event-log ingestion: parsing, period aggregation, per-user
//! recency/frequency/monetary time series and classic quintile scores.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::date::Day;
use crate::series::SeriesMatrix;
use crate::{Error, Result};

/// One customer event (purchase, booking, ...).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventRecord {
    pub user_id: String,
    pub day: Day,
    /// Unit count; defaults to 1 when the source format omits it.
    pub quantity: u32,
    /// Monetary value in currency units, non-negative.
    pub amount: f64,
}

/// A parsed event log with its derived date span.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventLog {
    records: Vec<EventRecord>,
    span: (Day, Day),
}

impl EventLog {
    pub fn new(records: Vec<EventRecord>) -> Result<EventLog> {
        if records.is_empty() {
            return Err(Error::EmptyLog("no event records".into()));
        }
        let first = records.iter().map(|r| r.day).min().unwrap();
        let last = records.iter().map(|r| r.day).max().unwrap();
        Ok(EventLog {
            records,
            span: (first, last),
        })
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    /// First and last event dates, derived at construction.
    pub fn span(&self) -> (Day, Day) {
        self.span
    }

    pub fn distinct_users(&self) -> usize {
        self.user_index().len()
    }

    /// Record indices per user, users in lexicographic order.
    pub fn user_index(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.user_id.as_str()).or_default().push(i);
        }
        map
    }
}

/// Supported input layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    /// Whitespace-delimited `user_id date(yyyymmdd) quantity amount`, no header.
    Cdnow,
    /// CSV with header `user_id,date,quantity,amount`, ISO dates, quantity optional.
    GenericCsv,
}

/// Parse outcome: the log plus line accounting.
#[derive(Debug, Clone)]
pub struct ParsedLog {
    pub log: EventLog,
    /// Non-blank data lines seen (header excluded for CSV).
    pub data_lines: usize,
    pub malformed_lines: usize,
}

fn parse_cdnow_line(line: &str) -> Result<EventRecord> {
    let mut it = line.split_whitespace();
    let (user, date, qty, amount) = match (it.next(), it.next(), it.next(), it.next(), it.next()) {
        (Some(u), Some(d), Some(q), Some(a), None) => (u, d, q, a),
        _ => return Err(Error::Data("expected 4 whitespace-separated fields".into())),
    };
    let day = Day::parse_compact(date)?;
    let quantity: u32 = qty
        .parse()
        .map_err(|_| Error::Data(format!("bad quantity '{qty}'")))?;
    let amount: f64 = amount
        .parse()
        .map_err(|_| Error::Data(format!("bad amount '{amount}'")))?;
    validate_fields(quantity, amount)?;
    Ok(EventRecord {
        user_id: user.to_string(),
        day,
        quantity,
        amount,
    })
}

fn validate_fields(quantity: u32, amount: f64) -> Result<()> {
    if quantity < 1 {
        return Err(Error::Data("quantity must be >= 1".into()));
    }
    if !amount.is_finite() || amount < 0.0 {
        return Err(Error::Data("amount must be finite and >= 0".into()));
    }
    Ok(())
}

fn parse_generic_line(line: &str, has_quantity: bool) -> Result<EventRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = if has_quantity { 4 } else { 3 };
    if fields.len() != expected {
        return Err(Error::Data(format!(
            "expected {expected} comma-separated fields, got {}",
            fields.len()
        )));
    }
    let day = Day::parse_iso(fields[1])?;
    let (qty_field, amount_field) = if has_quantity {
        (fields[2], fields[3])
    } else {
        ("", fields[2])
    };
    let quantity: u32 = if qty_field.is_empty() {
        1
    } else {
        qty_field
            .parse()
            .map_err(|_| Error::Data(format!("bad quantity '{qty_field}'")))?
    };
    let amount: f64 = amount_field
        .parse()
        .map_err(|_| Error::Data(format!("bad amount '{amount_field}'")))?;
    validate_fields(quantity, amount)?;
    Ok(EventRecord {
        user_id: fields[0].to_string(),
        day,
        quantity,
        amount,
    })
}

/// Parses an event log from text in the declared format.
///
/// Lines that fail to parse are counted; more than 10% malformed lines is
/// treated as a wrong format choice and rejected outright.
pub fn parse_event_log(text: &str, format: LogFormat) -> Result<ParsedLog> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut has_quantity = true;
    if format == LogFormat::GenericCsv {
        let header = lines
            .next()
            .ok_or_else(|| Error::EmptyLog("no header line".into()))?;
        let cols: Vec<String> = header
            .split(',')
            .map(|c| c.trim().to_ascii_lowercase())
            .collect();
        match cols.as_slice() {
            [a, b, c, d] if a == "user_id" && b == "date" && c == "quantity" && d == "amount" => {}
            [a, b, c] if a == "user_id" && b == "date" && c == "amount" => has_quantity = false,
            _ => {
                return Err(Error::Format {
                    malformed: 1,
                    total: 1,
                    context: format!("unrecognized header '{header}'"),
                })
            }
        }
    }

    let mut records = Vec::new();
    let mut data_lines = 0usize;
    let mut malformed = 0usize;
    for line in lines {
        data_lines += 1;
        let parsed = match format {
            LogFormat::Cdnow => parse_cdnow_line(line),
            LogFormat::GenericCsv => parse_generic_line(line, has_quantity),
        };
        match parsed {
            Ok(r) => records.push(r),
            Err(_) => malformed += 1,
        }
    }
    if data_lines > 0 && malformed * 10 > data_lines {
        return Err(Error::Format {
            malformed,
            total: data_lines,
            context: "more than 10% of lines malformed; wrong format?".into(),
        });
    }
    let log = EventLog::new(records)
        .map_err(|_| Error::EmptyLog(format!("{data_lines} lines, none parseable")))?;
    Ok(ParsedLog {
        log,
        data_lines,
        malformed_lines: malformed,
    })
}

/// Serializes a log in the generic-csv layout. Re-parsing yields the same
/// record multiset.
pub fn to_generic_csv(log: &EventLog) -> String {
    let mut out = String::from("user_id,date,quantity,amount\n");
    for r in log.records() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.user_id,
            r.day.to_iso(),
            r.quantity,
            fmt_amount(r.amount)
        ));
    }
    out
}

fn fmt_amount(v: f64) -> String {
    // Shortest representation that round-trips through f64 parsing.
    let s = format!("{v}");
    s
}

/// A uniform time axis: `num_periods` periods of `period_days` days starting
/// at `origin`. Every covered event maps to exactly one period index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodGrid {
    pub origin: Day,
    pub period_days: u32,
    pub num_periods: usize,
}

impl PeriodGrid {
    pub fn new(origin: Day, period_days: u32, num_periods: usize) -> Result<PeriodGrid> {
        if period_days == 0 {
            return Err(Error::Config("period_days must be >= 1".into()));
        }
        if num_periods < 2 {
            return Err(Error::Config("a grid needs at least 2 periods".into()));
        }
        Ok(PeriodGrid {
            origin,
            period_days,
            num_periods,
        })
    }

    /// Smallest grid with the given origin and period length covering `span`.
    pub fn covering(span: (Day, Day), period_days: u32) -> Result<PeriodGrid> {
        if period_days == 0 {
            return Err(Error::Config("period_days must be >= 1".into()));
        }
        let days = span.1 .0 - span.0 .0;
        let num_periods = ((days / i64::from(period_days)) + 1).max(2) as usize;
        PeriodGrid::new(span.0, period_days, num_periods)
    }

    pub fn index_of(&self, day: Day) -> Result<usize> {
        let offset = day.0 - self.origin.0;
        if offset < 0 {
            return Err(Error::Range(format!("{} precedes the grid origin", day.to_iso())));
        }
        let idx = (offset / i64::from(self.period_days)) as usize;
        if idx >= self.num_periods {
            return Err(Error::Range(format!("{} falls after the grid end", day.to_iso())));
        }
        Ok(idx)
    }
}

/// Which event field to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ValueKind {
    Amount,
    Quantity,
}

/// Sums the chosen value per (period, user). All cells are observed; zeros
/// are real zeros. Users come out in lexicographic order.
pub fn aggregate_demand(
    log: &EventLog,
    grid: &PeriodGrid,
    value: ValueKind,
) -> Result<(Vec<String>, SeriesMatrix)> {
    let index = log.user_index();
    let mut user_ids = Vec::with_capacity(index.len());
    let mut columns = Vec::with_capacity(index.len());
    for (user, recs) in &index {
        let mut col = vec![0.0f64; grid.num_periods];
        for &ri in recs {
            let r = &log.records()[ri];
            let t = grid.index_of(r.day)?;
            col[t] += match value {
                ValueKind::Amount => r.amount,
                ValueKind::Quantity => f64::from(r.quantity),
            };
        }
        user_ids.push(user.to_string());
        columns.push(col);
    }
    let matrix = SeriesMatrix::from_columns(grid.num_periods, &columns)?;
    Ok((user_ids, matrix))
}

/// Per-user recency/frequency/monetary series over a period grid.
///
/// * `recency[t]` — periods since the last event as of the end of period t;
///   0 exactly when an event falls in period t. Before the first event the
///   value is t+1 (a virtual event one period before the grid).
/// * `frequency[t]` — cumulative event count through period t.
/// * `monetary[t]` — amount summed over period t.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RfmSeries {
    pub user_id: String,
    pub recency: Vec<f64>,
    pub frequency: Vec<f64>,
    pub monetary: Vec<f64>,
}

/// Output of [`rfm_series`]: the series plus users skipped for having no
/// events on the grid.
#[derive(Debug, Clone)]
pub struct RfmBuild {
    pub series: Vec<RfmSeries>,
    pub excluded_users: Vec<String>,
}

pub fn rfm_series(log: &EventLog, grid: &PeriodGrid) -> Result<RfmBuild> {
    let index = log.user_index();
    let mut series = Vec::with_capacity(index.len());
    let mut excluded = Vec::new();
    for (user, recs) in &index {
        if recs.is_empty() {
            excluded.push(user.to_string());
            continue;
        }
        let t_len = grid.num_periods;
        let mut counts = vec![0u64; t_len];
        let mut amounts = vec![0.0f64; t_len];
        for &ri in recs {
            let r = &log.records()[ri];
            let t = grid.index_of(r.day)?;
            counts[t] += 1;
            amounts[t] += r.amount;
        }
        let mut recency = Vec::with_capacity(t_len);
        let mut frequency = Vec::with_capacity(t_len);
        let mut cum = 0u64;
        let mut last_event: Option<usize> = None;
        for t in 0..t_len {
            if counts[t] > 0 {
                last_event = Some(t);
            }
            cum += counts[t];
            recency.push(match last_event {
                Some(s) => (t - s) as f64,
                None => (t + 1) as f64,
            });
            frequency.push(cum as f64);
        }
        series.push(RfmSeries {
            user_id: user.to_string(),
            recency,
            frequency,
            monetary: amounts,
        });
    }
    Ok(RfmBuild {
        series,
        excluded_users: excluded,
    })
}

/// Classic quintile scores; each rank is in 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RfmScore {
    pub r: u8,
    pub f: u8,
    pub m: u8,
}

/// Scores for a cohort, in user order.
#[derive(Debug, Clone)]
pub struct RfmScoreSet {
    pub scores: Vec<(String, RfmScore)>,
    /// Set when the cohort has fewer than 5 users; ranks are still assigned
    /// by sorted position.
    pub degenerate_cohort: bool,
}

/// Quintile ranks over a cohort as of a cutoff date.
///
/// Users are sorted by value (ties broken by user id); positional quintile
/// buckets are then assigned, with every member of a tie run taking the
/// bucket of the run's first member, so equal values always share a score.
/// Lowest recency maps to r = 5; highest frequency/monetary map to 5.
pub fn rfm_scores(log: &EventLog, as_of: Day) -> Result<RfmScoreSet> {
    let (_, last) = log.span();
    if as_of < last {
        return Err(Error::Range(format!(
            "as_of {} precedes the last event {}",
            as_of.to_iso(),
            last.to_iso()
        )));
    }
    let index = log.user_index();
    let users: Vec<&str> = index.keys().copied().collect();
    let mut recency = Vec::with_capacity(users.len());
    let mut frequency = Vec::with_capacity(users.len());
    let mut monetary = Vec::with_capacity(users.len());
    for recs in index.values() {
        let last_day = recs
            .iter()
            .map(|&ri| log.records()[ri].day)
            .max()
            .expect("user has records");
        recency.push((as_of.0 - last_day.0) as f64);
        frequency.push(recs.len() as f64);
        monetary.push(recs.iter().map(|&ri| log.records()[ri].amount).sum());
    }
    let r = quintile_scores(&recency, &users, false);
    let f = quintile_scores(&frequency, &users, true);
    let m = quintile_scores(&monetary, &users, true);
    let scores = users
        .iter()
        .enumerate()
        .map(|(i, u)| {
            (
                u.to_string(),
                RfmScore {
                    r: r[i],
                    f: f[i],
                    m: m[i],
                },
            )
        })
        .collect();
    Ok(RfmScoreSet {
        scores,
        degenerate_cohort: users.len() < 5,
    })
}

/// Positional quintile buckets with tie runs sharing their first member's
/// bucket. `high_value_high_score` selects the orientation.
fn quintile_scores(values: &[f64], users: &[&str], high_value_high_score: bool) -> Vec<u8> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| users[a].cmp(users[b]))
    });
    let mut scores = vec![0u8; n];
    let mut run_start = 0usize;
    for pos in 0..n {
        if values[order[pos]] != values[order[run_start]] {
            run_start = pos;
        }
        let bucket = run_start * 5 / n;
        scores[order[pos]] = if high_value_high_score {
            bucket as u8 + 1
        } else {
            5 - bucket as u8
        };
    }
    scores
}
