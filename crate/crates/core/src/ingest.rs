//! Parsing and joining of balance-sheet and invoice tables.
//!
//! Both inputs are comma-separated UTF-8 text with a mandatory header row.
//! Columns are located by name, so their order in the file does not matter.
//!
//! ```text
//! firm_id,year,sales_eur,purchases_eur,rating,sector
//! supplier_id,customer_id,year,amount_eur
//! ```
//!
//! Rows that fail validation are collected as [`Rejection`]s carrying the
//! 1-based physical line number of the offending row (the header is line 1).
//! In strict mode the first rejection aborts the parse.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, Read, Write};
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::stats::{rating_class, RatingClass};

/// Largest amount accepted without loss of integer precision (2^53 EUR).
pub const MAX_EXACT_AMOUNT: f64 = 9_007_199_254_740_992.0;

pub const BALANCE_HEADER: [&str; 6] = [
    "firm_id",
    "year",
    "sales_eur",
    "purchases_eur",
    "rating",
    "sector",
];

pub const INVOICE_HEADER: [&str; 4] = ["supplier_id", "customer_id", "year", "amount_eur"];

/// Anonymized firm identifier: a non-empty token without whitespace.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FirmId(Arc<str>);

impl FirmId {
    pub fn new(raw: &str) -> Option<Self> {
        if raw.is_empty() || raw.chars().any(char::is_whitespace) {
            return None;
        }
        Some(FirmId(Arc::from(raw)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FirmId({})", self.0)
    }
}

impl fmt::Display for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for FirmId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// Accounting year covered by the data (2006, 2007 or 2008).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Year(u16);

impl Year {
    pub const Y2006: Year = Year(2006);
    pub const Y2007: Year = Year(2007);
    pub const Y2008: Year = Year(2008);
    pub const ALL: [Year; 3] = [Year::Y2006, Year::Y2007, Year::Y2008];

    pub fn new(year: i64) -> Option<Self> {
        match year {
            2006..=2008 => Some(Year(year as u16)),
            _ => None,
        }
    }

    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for Year {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordinal default-risk score, 1 (most solvent) to 9.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Rating(u8);

impl Rating {
    pub fn new(value: u8) -> Option<Self> {
        (1..=9).contains(&value).then_some(Rating(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn class(self) -> RatingClass {
        rating_class(self)
    }
}

/// One-letter industrial class.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SectorLetter {
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    K,
    O,
}

impl SectorLetter {
    pub const ALL: [SectorLetter; 9] = [
        SectorLetter::C,
        SectorLetter::D,
        SectorLetter::E,
        SectorLetter::F,
        SectorLetter::G,
        SectorLetter::H,
        SectorLetter::I,
        SectorLetter::K,
        SectorLetter::O,
    ];

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'C' => SectorLetter::C,
            'D' => SectorLetter::D,
            'E' => SectorLetter::E,
            'F' => SectorLetter::F,
            'G' => SectorLetter::G,
            'H' => SectorLetter::H,
            'I' => SectorLetter::I,
            'K' => SectorLetter::K,
            'O' => SectorLetter::O,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            SectorLetter::C => 'C',
            SectorLetter::D => 'D',
            SectorLetter::E => 'E',
            SectorLetter::F => 'F',
            SectorLetter::G => 'G',
            SectorLetter::H => 'H',
            SectorLetter::I => 'I',
            SectorLetter::K => 'K',
            SectorLetter::O => 'O',
        }
    }
}

impl fmt::Display for SectorLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Industrial sector: a class letter plus an optional 4-digit sub-sector,
/// written `D` or `D2811`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectorCode {
    pub letter: SectorLetter,
    pub sub: Option<u16>,
}

impl SectorCode {
    pub fn letter(letter: SectorLetter) -> Self {
        SectorCode { letter, sub: None }
    }

    pub fn parse(raw: &str) -> Result<Self, RejectReason> {
        let mut chars = raw.chars();
        let letter = chars
            .next()
            .and_then(SectorLetter::from_char)
            .ok_or(RejectReason::UnknownSector)?;
        let rest = chars.as_str();
        if rest.is_empty() {
            return Ok(SectorCode { letter, sub: None });
        }
        if rest.len() != 4 || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RejectReason::InvalidSubSector);
        }
        let sub = rest.parse().map_err(|_| RejectReason::InvalidSubSector)?;
        Ok(SectorCode {
            letter,
            sub: Some(sub),
        })
    }
}

impl fmt::Display for SectorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sub {
            Some(sub) => write!(f, "{}{:04}", self.letter, sub),
            None => write!(f, "{}", self.letter),
        }
    }
}

impl Serialize for SectorCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One firm-year of balance-sheet data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceRecord {
    pub firm: FirmId,
    pub year: Year,
    pub sales: f64,
    pub purchases: f64,
    pub rating: Rating,
    pub sector: SectorCode,
}

/// One trade-credit invoice from 2007, before pair aggregation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvoiceRecord {
    pub supplier: FirmId,
    pub customer: FirmId,
    pub amount: f64,
    pub year: Year,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("missing field")]
    MissingField,
    #[error("invalid firm id")]
    InvalidFirmId,
    #[error("year out of range")]
    YearOutOfRange,
    #[error("invoice year must be 2007")]
    InvoiceYear,
    #[error("non-numeric amount")]
    NonNumericAmount,
    #[error("amount exceeds 2^53")]
    AmountTooLarge,
    #[error("non-positive sales")]
    NonPositiveSales,
    #[error("negative purchases")]
    NegativePurchases,
    #[error("non-positive amount")]
    NonPositiveAmount,
    #[error("non-numeric rating")]
    NonNumericRating,
    #[error("rating out of range")]
    RatingOutOfRange,
    #[error("unknown sector letter")]
    UnknownSector,
    #[error("invalid sub-sector code")]
    InvalidSubSector,
    #[error("duplicate (firm, year) key")]
    DuplicateKey,
    #[error("self-loop")]
    SelfLoop,
    #[error("malformed row: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("input has no header row")]
    EmptyInput,
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {reason}")]
    Rejected { line: u64, reason: RejectReason },
}

/// Accepted records of one parse plus the rows that were turned away.
#[derive(Clone, Debug)]
pub struct ParseOutcome<T> {
    pub records: Vec<T>,
    pub rejections: Vec<Rejection>,
    pub total_rows: usize,
}

impl<T> ParseOutcome<T> {
    /// Wraps records built in memory, as if they had all parsed cleanly.
    pub fn from_records(records: Vec<T>) -> Self {
        let total_rows = records.len();
        ParseOutcome {
            records,
            rejections: Vec::new(),
            total_rows,
        }
    }
}

fn parse_amount(raw: &str) -> Result<f64, RejectReason> {
    let digits = raw.strip_prefix(['-', '+']).unwrap_or(raw);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let plain = !(int.is_empty() && frac.is_none_or(str::is_empty))
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()));
    if !plain {
        return Err(RejectReason::NonNumericAmount);
    }
    let value: f64 = raw.parse().map_err(|_| RejectReason::NonNumericAmount)?;
    if value.abs() > MAX_EXACT_AMOUNT {
        return Err(RejectReason::AmountTooLarge);
    }
    Ok(value)
}

fn parse_firm(raw: &str) -> Result<FirmId, RejectReason> {
    FirmId::new(raw).ok_or(RejectReason::InvalidFirmId)
}

fn parse_year(raw: &str) -> Result<Year, RejectReason> {
    raw.parse::<i64>()
        .ok()
        .and_then(Year::new)
        .ok_or(RejectReason::YearOutOfRange)
}

fn parse_rating(raw: &str) -> Result<Rating, RejectReason> {
    let value: i64 = raw.parse().map_err(|_| RejectReason::NonNumericRating)?;
    u8::try_from(value)
        .ok()
        .and_then(Rating::new)
        .ok_or(RejectReason::RatingOutOfRange)
}

/// Reads a header-bearing table and hands each data row, with its column
/// lookup already resolved, to `row`.
fn parse_table<T, const N: usize>(
    input: impl Read,
    columns: [&'static str; N],
    strict: bool,
    mut row: impl FnMut(&[&str; N]) -> Result<T, RejectReason>,
) -> Result<ParseOutcome<T>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        Ok(_) => return Err(IngestError::EmptyInput),
        Err(e) => return Err(csv_to_io(e).into()),
    };
    let mut index = [0usize; N];
    for (slot, name) in index.iter_mut().zip(columns) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::MissingColumn(name))?;
    }

    let mut outcome = ParseOutcome {
        records: Vec::new(),
        rejections: Vec::new(),
        total_rows: 0,
    };
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        let result = match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                let mut fields = [""; N];
                let mut complete = true;
                for (field, &col) in fields.iter_mut().zip(&index) {
                    match record.get(col) {
                        Some(v) if !v.is_empty() => *field = v,
                        _ => complete = false,
                    }
                }
                let parsed = if complete {
                    row(&fields)
                } else {
                    Err(RejectReason::MissingField)
                };
                (line, parsed)
            }
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(csv_to_io(e).into()),
                _ => {
                    let line = e.position().map_or(line, |p| p.line());
                    (line, Err(RejectReason::Malformed(e.to_string())))
                }
            },
        };
        outcome.total_rows += 1;
        match result {
            (_, Ok(rec)) => outcome.records.push(rec),
            (line, Err(reason)) if strict => return Err(IngestError::Rejected { line, reason }),
            (line, Err(reason)) => outcome.rejections.push(Rejection { line, reason }),
        }
    }
    Ok(outcome)
}

fn csv_to_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

/// Parses `balance.csv`. Duplicate `(firm, year)` keys are rejected; the
/// first occurrence wins.
pub fn parse_balance(
    input: impl Read,
    strict: bool,
) -> Result<ParseOutcome<BalanceRecord>, IngestError> {
    let mut seen = HashSet::new();
    parse_table(input, BALANCE_HEADER, strict, |f| {
        let firm = parse_firm(f[0])?;
        let year = parse_year(f[1])?;
        let sales = parse_amount(f[2])?;
        let purchases = parse_amount(f[3])?;
        let rating = parse_rating(f[4])?;
        let sector = SectorCode::parse(f[5])?;
        // NaN cannot reach here: parse_amount only admits plain decimals.
        if sales <= 0.0 {
            return Err(RejectReason::NonPositiveSales);
        }
        if purchases < 0.0 {
            return Err(RejectReason::NegativePurchases);
        }
        if !seen.insert((firm.clone(), year)) {
            return Err(RejectReason::DuplicateKey);
        }
        Ok(BalanceRecord {
            firm,
            year,
            sales,
            purchases,
            rating,
            sector,
        })
    })
}

/// Parses `invoices.csv`. Repeated supplier/customer pairs are kept as
/// separate records.
pub fn parse_invoices(
    input: impl Read,
    strict: bool,
) -> Result<ParseOutcome<InvoiceRecord>, IngestError> {
    parse_table(input, INVOICE_HEADER, strict, |f| {
        let supplier = parse_firm(f[0])?;
        let customer = parse_firm(f[1])?;
        let year = parse_year(f[2])?;
        if year != Year::Y2007 {
            return Err(RejectReason::InvoiceYear);
        }
        let amount = parse_amount(f[3])?;
        if amount <= 0.0 {
            return Err(RejectReason::NonPositiveAmount);
        }
        if supplier == customer {
            return Err(RejectReason::SelfLoop);
        }
        Ok(InvoiceRecord {
            supplier,
            customer,
            amount,
            year,
        })
    })
}

// `{}` on f64 prints the shortest decimal string that parses back to the
// same value and never uses exponent notation, so the output re-parses
// bit-exactly through `parse_amount`.

pub fn write_balance_csv<'a>(
    mut out: impl Write,
    records: impl IntoIterator<Item = &'a BalanceRecord>,
) -> io::Result<()> {
    writeln!(out, "{}", BALANCE_HEADER.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.firm,
            r.year,
            r.sales,
            r.purchases,
            r.rating.get(),
            r.sector
        )?;
    }
    Ok(())
}

pub fn write_invoices_csv<'a>(
    mut out: impl Write,
    records: impl IntoIterator<Item = &'a InvoiceRecord>,
) -> io::Result<()> {
    writeln!(out, "{}", INVOICE_HEADER.join(","))?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.supplier, r.customer, r.year, r.amount)?;
    }
    Ok(())
}

/// Writes one `line_no<TAB>reason` line per rejected row.
pub fn write_rejection_log<'a>(
    mut out: impl Write,
    rejections: impl IntoIterator<Item = &'a Rejection>,
) -> io::Result<()> {
    for r in rejections {
        writeln!(out, "{}\t{}", r.line, r.reason)?;
    }
    Ok(())
}

/// What to do with invoices whose customer lacks balance data for a year
/// the analyses need.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum CoverageAction {
    /// Remove the invoice at assembly time.
    Drop,
    /// Keep it and let each analysis decide.
    #[default]
    Keep,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveragePolicy {
    pub action: CoverageAction,
    pub required_years: Vec<Year>,
}

impl CoveragePolicy {
    pub fn keep() -> Self {
        CoveragePolicy {
            action: CoverageAction::Keep,
            required_years: Year::ALL.to_vec(),
        }
    }

    pub fn drop() -> Self {
        CoveragePolicy {
            action: CoverageAction::Drop,
            ..Self::keep()
        }
    }
}

impl Default for CoveragePolicy {
    fn default() -> Self {
        Self::keep()
    }
}

pub const CUSTOMER_BALANCE_MISSING: &str = "customer-balance-missing";

/// An invoice whose customer is missing balance data for some required year.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvoiceFlag {
    /// Position in the original invoice list.
    pub source_index: usize,
    pub supplier: FirmId,
    pub customer: FirmId,
    pub missing_years: Vec<Year>,
    pub reason: &'static str,
    /// True when the invoice was removed from the dataset.
    pub dropped: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub balance_rows: usize,
    pub balance_accepted: usize,
    pub balance_rejected: usize,
    pub invoice_rows: usize,
    pub invoice_accepted: usize,
    pub invoice_rejected: usize,
    /// Duplicate keys met at assembly (records built outside the parser).
    pub balance_duplicates: usize,
    pub invoices_dropped: usize,
    pub flags: Vec<InvoiceFlag>,
}

/// Joined balance-sheet and invoice data; immutable once assembled.
#[derive(Clone, Debug)]
pub struct Dataset {
    balances: BTreeMap<(FirmId, Year), BalanceRecord>,
    invoices: Vec<InvoiceRecord>,
    report: IngestReport,
}

impl Dataset {
    pub fn balance(&self, firm: &FirmId, year: Year) -> Option<&BalanceRecord> {
        self.balances.get(&(firm.clone(), year))
    }

    pub fn sales(&self, firm: &FirmId, year: Year) -> Option<f64> {
        self.balance(firm, year).map(|b| b.sales)
    }

    pub fn purchases(&self, firm: &FirmId, year: Year) -> Option<f64> {
        self.balance(firm, year).map(|b| b.purchases)
    }

    /// All balance rows, ordered by firm then year.
    pub fn balances(&self) -> impl Iterator<Item = &BalanceRecord> {
        self.balances.values()
    }

    pub fn invoices(&self) -> &[InvoiceRecord] {
        &self.invoices
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }
}

/// Joins parsed balance rows and invoices into one [`Dataset`].
///
/// Customer coverage is checked against `policy.required_years`; offending
/// invoices are flagged and, under [`CoverageAction::Drop`], removed.
pub fn assemble_dataset(
    balances: ParseOutcome<BalanceRecord>,
    invoices: ParseOutcome<InvoiceRecord>,
    policy: &CoveragePolicy,
) -> Dataset {
    let mut report = IngestReport {
        balance_rows: balances.total_rows,
        balance_accepted: balances.records.len(),
        balance_rejected: balances.rejections.len(),
        invoice_rows: invoices.total_rows,
        invoice_accepted: invoices.records.len(),
        invoice_rejected: invoices.rejections.len(),
        ..IngestReport::default()
    };

    let mut map = BTreeMap::new();
    for rec in balances.records {
        let key = (rec.firm.clone(), rec.year);
        match map.entry(key) {
            std::collections::btree_map::Entry::Occupied(_) => report.balance_duplicates += 1,
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(rec);
            }
        }
    }

    let mut kept = Vec::with_capacity(invoices.records.len());
    for (source_index, inv) in invoices.records.into_iter().enumerate() {
        let missing_years: Vec<Year> = policy
            .required_years
            .iter()
            .copied()
            .filter(|&y| !map.contains_key(&(inv.customer.clone(), y)))
            .collect();
        if missing_years.is_empty() {
            kept.push(inv);
            continue;
        }
        let dropped = policy.action == CoverageAction::Drop;
        report.flags.push(InvoiceFlag {
            source_index,
            supplier: inv.supplier.clone(),
            customer: inv.customer.clone(),
            missing_years,
            reason: CUSTOMER_BALANCE_MISSING,
            dropped,
        });
        if dropped {
            report.invoices_dropped += 1;
        } else {
            kept.push(inv);
        }
    }

    Dataset {
        balances: map,
        invoices: kept,
        report,
    }
}
