//! Patent record ingestion, fractional counting, and the country
//! cooperation graph.
//!
//! The node universe is fixed: the 28 EU member countries (UK included for
//! the 1990+ window, Greece under its Eurostat code `EL`) plus a single
//! meta-node `Others` absorbing every non-EU country.

use std::collections::BTreeSet;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use crate::dates::parse_day;
use crate::error::{Error, Result};

/// A node of the cooperation graph. Variants are declared in lexicographic
/// order of their string form so the derived `Ord` matches string order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[rustfmt::skip]
pub enum Country {
    At, Be, Bg, Cy, Cz, De, Dk, Ee, El, Es, Fi, Fr, Gb, Hr, Hu,
    Ie, It, Lt, Lu, Lv, Mt, Nl, Others, Pl, Pt, Ro, Se, Si, Sk,
}

impl Country {
    pub const ALL: [Country; 29] = [
        Country::At,
        Country::Be,
        Country::Bg,
        Country::Cy,
        Country::Cz,
        Country::De,
        Country::Dk,
        Country::Ee,
        Country::El,
        Country::Es,
        Country::Fi,
        Country::Fr,
        Country::Gb,
        Country::Hr,
        Country::Hu,
        Country::Ie,
        Country::It,
        Country::Lt,
        Country::Lu,
        Country::Lv,
        Country::Mt,
        Country::Nl,
        Country::Others,
        Country::Pl,
        Country::Pt,
        Country::Ro,
        Country::Se,
        Country::Si,
        Country::Sk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Country::At => "AT",
            Country::Be => "BE",
            Country::Bg => "BG",
            Country::Cy => "CY",
            Country::Cz => "CZ",
            Country::De => "DE",
            Country::Dk => "DK",
            Country::Ee => "EE",
            Country::El => "EL",
            Country::Es => "ES",
            Country::Fi => "FI",
            Country::Fr => "FR",
            Country::Gb => "GB",
            Country::Hr => "HR",
            Country::Hu => "HU",
            Country::Ie => "IE",
            Country::It => "IT",
            Country::Lt => "LT",
            Country::Lu => "LU",
            Country::Lv => "LV",
            Country::Mt => "MT",
            Country::Nl => "NL",
            Country::Others => "Others",
            Country::Pl => "PL",
            Country::Pt => "PT",
            Country::Ro => "RO",
            Country::Se => "SE",
            Country::Si => "SI",
            Country::Sk => "SK",
        }
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Country {
    type Err = Error;

    /// Parses a node name as it appears in exported files (`"Others"`
    /// included). Raw applicant codes go through [`map_to_universe`].
    fn from_str(s: &str) -> Result<Country> {
        if s == "Others" {
            return Ok(Country::Others);
        }
        Country::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| Error::invalid_input(format!("unknown country node {s:?}")))
    }
}

/// Map a raw 2-letter applicant code onto the node universe: EU codes map to
/// themselves, `GR` normalizes to `EL`, everything else collapses into
/// `Others`. Codes are case-insensitive; anything that is not exactly two
/// ASCII letters is rejected.
pub fn map_to_universe(code: &str) -> Result<Country> {
    let trimmed = code.trim();
    if trimmed.len() != 2 || !trimmed.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(Error::invalid_input(format!(
            "malformed country code {code:?} (expected two letters)"
        )));
    }
    let upper = trimmed.to_ascii_uppercase();
    if upper == "GR" {
        return Ok(Country::El);
    }
    match Country::from_str(&upper) {
        Ok(c) if c != Country::Others => Ok(c),
        _ => Ok(Country::Others),
    }
}

/// One patent family: identifier, publication time in fractional days since
/// 1970-01-01, and the applicant countries as filed (already mapped onto the
/// node universe, one entry per applicant, repetitions preserved).
#[derive(Debug, Clone, PartialEq)]
pub struct PatentRecord {
    pub id: String,
    pub publication_day: f64,
    pub applicants: Vec<Country>,
}

impl PatentRecord {
    pub fn new(id: impl Into<String>, date: &str, raw_codes: &[&str]) -> Result<PatentRecord> {
        if raw_codes.is_empty() {
            return Err(Error::invalid_input("empty applicant country list"));
        }
        let applicants = raw_codes
            .iter()
            .map(|c| map_to_universe(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(PatentRecord {
            id: id.into(),
            publication_day: parse_day(date)?,
            applicants,
        })
    }

    /// Fractional counting: each applicant entry contributes `1/n` to its
    /// country, where `n` is the number of entries as filed.
    pub fn fractional_counts(&self) -> BTreeMap<Country, f64> {
        let weight = 1.0 / self.applicants.len() as f64;
        let mut counts = BTreeMap::new();
        for &c in &self.applicants {
            *counts.entry(c).or_insert(0.0) += weight;
        }
        counts
    }

    /// Every unordered pair of the distinct mapped countries; empty when
    /// only one distinct country remains.
    pub fn cooperation_edges(&self) -> BTreeSet<(Country, Country)> {
        let distinct: Vec<Country> = self
            .applicants
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut pairs = BTreeSet::new();
        for (i, &a) in distinct.iter().enumerate() {
            for &b in &distinct[i + 1..] {
                pairs.insert((a, b));
            }
        }
        pairs
    }

    /// A cooperation patent spans at least two distinct countries after
    /// meta-node mapping.
    pub fn is_cooperation(&self) -> bool {
        let first = self.applicants[0];
        self.applicants.iter().any(|&c| c != first)
    }
}

/// Country cooperation graph: fractional patent counts per node, symmetric
/// cooperation counts per unordered country pair. Every universe country is
/// present in the node map, zero-count ones included.
#[derive(Debug, Clone, PartialEq)]
pub struct CooperationGraph {
    nodes: BTreeMap<Country, f64>,
    edges: BTreeMap<(Country, Country), u64>,
}

impl CooperationGraph {
    pub fn empty() -> CooperationGraph {
        let nodes = Country::ALL.iter().map(|&c| (c, 0.0)).collect();
        CooperationGraph {
            nodes,
            edges: BTreeMap::new(),
        }
    }

    /// Node features are summed fractional counts, each edge count
    /// increments by one per record per emitted pair.
    pub fn from_records(records: &[PatentRecord]) -> CooperationGraph {
        let mut graph = CooperationGraph::empty();
        for record in records {
            for (country, weight) in record.fractional_counts() {
                *graph.nodes.get_mut(&country).expect("universe country") += weight;
            }
            for pair in record.cooperation_edges() {
                *graph.edges.entry(pair).or_insert(0) += 1;
            }
        }
        graph
    }

    pub fn node_count(&self, country: Country) -> f64 {
        self.nodes[&country]
    }

    pub fn edge_count(&self, a: Country, b: Country) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.edges.get(&key).copied().unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Country, f64)> + '_ {
        self.nodes.iter().map(|(&c, &w)| (c, w))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Country, Country, u64)> + '_ {
        self.edges.iter().map(|(&(a, b), &n)| (a, b, n))
    }

    pub fn total_fractional_count(&self) -> f64 {
        self.nodes.values().sum()
    }

    /// Build a graph directly from node counts and edge counts, validating
    /// symmetry and the no-self-edge rule.
    pub fn from_parts(
        nodes: BTreeMap<Country, f64>,
        edge_list: &[(Country, Country, u64)],
    ) -> Result<CooperationGraph> {
        let mut graph = CooperationGraph::empty();
        for (country, count) in nodes {
            if count < 0.0 || !count.is_finite() {
                return Err(Error::invalid_input(format!(
                    "negative or non-finite node count for {country}"
                )));
            }
            graph.nodes.insert(country, count);
        }
        for &(a, b, n) in edge_list {
            if a == b {
                return Err(Error::invalid_input(format!("self-edge on {a}")));
            }
            let key = if a < b { (a, b) } else { (b, a) };
            *graph.edges.entry(key).or_insert(0) += n;
        }
        Ok(graph)
    }

    pub fn write_nodes_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "country,fractional_count")?;
        for (country, count) in &self.nodes {
            writeln!(out, "{country},{count}")?;
        }
        Ok(())
    }

    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "country_a,country_b,count")?;
        for ((a, b), n) in &self.edges {
            writeln!(out, "{a},{b},{n}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read, S: Read>(nodes_csv: R, edges_csv: S) -> Result<CooperationGraph> {
        let mut nodes = BTreeMap::new();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(nodes_csv);
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let country: Country = field(&row, 0, i, "country")?.parse()?;
            let count: f64 = parse_field(&row, 1, i, "fractional_count")?;
            nodes.insert(country, count);
        }
        let mut edge_list = Vec::new();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(edges_csv);
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let a: Country = field(&row, 0, i, "country_a")?.parse()?;
            let b: Country = field(&row, 1, i, "country_b")?.parse()?;
            let n: u64 = parse_field(&row, 2, i, "count")?;
            edge_list.push((a, b, n));
        }
        CooperationGraph::from_parts(nodes, &edge_list)
    }
}

/// Event times of the temporal model: sorted fractional days since
/// 1970-01-01 plus the observation window containing them.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSeries {
    times: Vec<f64>,
    window: (f64, f64),
}

impl EventSeries {
    pub fn new(mut times: Vec<f64>, window: (f64, f64)) -> Result<EventSeries> {
        if window.0 > window.1 || !window.0.is_finite() || !window.1.is_finite() {
            return Err(Error::invalid_input(format!(
                "bad observation window [{}, {}]",
                window.0, window.1
            )));
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        if times
            .iter()
            .any(|&t| !t.is_finite() || t < window.0 || t > window.1)
        {
            return Err(Error::invalid_input(
                "event time outside the observation window",
            ));
        }
        Ok(EventSeries { times, window })
    }

    /// Window spanning exactly the observed times.
    pub fn from_times(times: Vec<f64>) -> Result<EventSeries> {
        if times.is_empty() {
            return Err(Error::invalid_input("empty event series"));
        }
        let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        EventSeries::new(times, (lo, hi))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Split at a cutoff time: strictly-before goes left, the rest right.
    pub fn split_at(&self, cutoff: f64) -> (Vec<f64>, Vec<f64>) {
        let idx = self.times.partition_point(|&t| t < cutoff);
        (self.times[..idx].to_vec(), self.times[idx..].to_vec())
    }

    pub fn write_events<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.times {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }

    pub fn read_events<R: BufRead>(reader: R) -> Result<EventSeries> {
        let mut times = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let s = line.trim();
            if s.is_empty() {
                continue;
            }
            let t: f64 = s
                .parse()
                .map_err(|_| Error::invalid_input(format!("line {}: bad time {s:?}", i + 1)))?;
            times.push(t);
        }
        EventSeries::from_times(times)
    }
}

/// Publication times of the given records, sorted ascending, records at or
/// after the cutoff excluded. Errors when nothing survives.
pub fn event_series(records: &[PatentRecord], cutoff: Option<f64>) -> Result<EventSeries> {
    let times: Vec<f64> = records
        .iter()
        .map(|r| r.publication_day)
        .filter(|&t| cutoff.map_or(true, |c| t < c))
        .collect();
    if times.is_empty() {
        return Err(Error::invalid_input(
            "no events remain after applying the cutoff",
        ));
    }
    EventSeries::from_times(times)
}

/// Read patent records from CSV with header
/// `id,publication_date,applicant_countries`, the country list separated by
/// semicolons. Errors carry the 1-based data row number.
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<PatentRecord>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid_input(format!("missing CSV column {name:?}")))
    };
    let id_col = col("id")?;
    let date_col = col("publication_date")?;
    let countries_col = col("applicant_countries")?;

    let mut records = Vec::new();
    for (i, row) in csv_reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let id = field(&row, id_col, i, "id")?;
        let date = field(&row, date_col, i, "publication_date")?;
        let countries_joined = field(&row, countries_col, i, "applicant_countries")?;
        let codes: Vec<&str> = countries_joined
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let record = PatentRecord::new(id, date, &codes)
            .map_err(|e| Error::invalid_input(format!("row {row_no}: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize, i: usize, name: &str) -> Result<&'a str> {
    row.get(idx)
        .ok_or_else(|| Error::invalid_input(format!("row {}: missing field {name}", i + 1)))
}

fn parse_field<T: FromStr>(row: &csv::StringRecord, idx: usize, i: usize, name: &str) -> Result<T> {
    let raw = field(row, idx, i, name)?;
    raw.parse().map_err(|_| {
        Error::invalid_input(format!("row {}: bad value {raw:?} for {name}", i + 1))
    })
}

/// Quick lookup table from country to a dense index, used by the synthetic
/// generators and the regression dataset builder.
pub fn country_index() -> HashMap<Country, usize> {
    Country::ALL
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i))
        .collect()
}
