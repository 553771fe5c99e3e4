//! IEEE Common Data Format reader.
//!
//! Only the title card, bus data and branch data sections are used. Fields are read by
//! their published fixed columns; when a card does not parse that way (files in
//! circulation often have drifted columns) the card is re-read as whitespace-separated
//! tokens.

use log::warn;
use thiserror::Error;

use crate::grid::{Branch, Bus, BusKind, GridError, Network};

/// Reactance substituted for zero-impedance branches (pu).
pub const MIN_REACTANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdfError {
    #[error("line {line}, column {column}: {message}")]
    MalformedCard { line: usize, column: usize, message: String },
    #[error("missing {0} section")]
    MissingSection(&'static str),
    #[error("no slack (type 3) bus in bus data")]
    NoSlackBus,
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl CdfError {
    pub fn code(&self) -> &'static str {
        match self {
            CdfError::MalformedCard { .. } => "MalformedCard",
            CdfError::MissingSection(_) => "MissingSection",
            CdfError::NoSlackBus => "NoSlackBus",
            CdfError::Grid(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Bus,
    Branch,
}

/// One data card of a section, kept with its 1-based line number.
#[derive(Debug, Clone)]
pub struct RawRecord<'a> {
    pub section: Section,
    pub line: usize,
    pub text: &'a str,
}

impl RawRecord<'_> {
    /// Characters in the 1-based inclusive column range, trimmed.
    fn cols(&self, from: usize, to: usize) -> &str {
        let bytes = self.text.as_bytes();
        if from > bytes.len() {
            return "";
        }
        let end = to.min(bytes.len());
        self.text.get(from - 1..end).unwrap_or("").trim()
    }

    fn malformed(&self, column: usize, message: impl Into<String>) -> CdfError {
        CdfError::MalformedCard {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn num(&self, from: usize, to: usize, what: &str, required: bool) -> Result<f64, CdfError> {
        let field = self.cols(from, to);
        if field.is_empty() && !required {
            return Ok(0.0);
        }
        parse_finite(field).ok_or_else(|| self.malformed(from, format!("{what}: cannot parse {field:?}")))
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, Copy)]
struct BusCard {
    number: u32,
    kind_code: i32,
    v_final: f64,
    load_p: f64,
    load_q: f64,
    gen_p: f64,
    gen_q: f64,
    v_desired: f64,
    shunt_g: f64,
    shunt_b: f64,
}

#[derive(Debug, Clone, Copy)]
struct BranchCard {
    from: u32,
    to: u32,
    kind_code: i32,
    r: f64,
    x: f64,
    b: f64,
    tap: f64,
    angle: f64,
}

fn bus_fixed(rec: &RawRecord) -> Result<BusCard, CdfError> {
    let number = rec.num(1, 4, "bus number", true)?;
    Ok(BusCard {
        number: number as u32,
        kind_code: rec.num(25, 26, "bus type", true)? as i32,
        v_final: rec.num(28, 33, "final voltage", false)?,
        load_p: rec.num(41, 49, "load MW", false)?,
        load_q: rec.num(50, 58, "load MVAR", false)?,
        gen_p: rec.num(59, 67, "generation MW", false)?,
        gen_q: rec.num(68, 75, "generation MVAR", false)?,
        v_desired: rec.num(85, 90, "desired voltage", false)?,
        shunt_g: rec.num(107, 114, "shunt G", false)?,
        shunt_b: rec.num(115, 122, "shunt B", false)?,
    })
}

/// Whitespace fallback: the bus name occupies columns 6-17 and may contain blanks, so the
/// remaining fields are tokenised from column 19 onwards.
fn bus_tokens(rec: &RawRecord) -> Result<BusCard, CdfError> {
    let number = rec.num(1, 4, "bus number", true)?;
    let rest = rec.text.get(18..).unwrap_or("");
    let tok: Vec<&str> = rest.split_whitespace().collect();
    if tok.len() < 15 {
        return Err(rec.malformed(19, format!("expected at least 15 bus fields, found {}", tok.len())));
    }
    let f = |i: usize| parse_finite(tok[i]).ok_or_else(|| rec.malformed(19, format!("cannot parse {:?}", tok[i])));
    Ok(BusCard {
        number: number as u32,
        kind_code: f(2)? as i32,
        v_final: f(3)?,
        load_p: f(5)?,
        load_q: f(6)?,
        gen_p: f(7)?,
        gen_q: f(8)?,
        v_desired: f(10)?,
        shunt_g: f(13)?,
        shunt_b: f(14)?,
    })
}

fn branch_fixed(rec: &RawRecord) -> Result<BranchCard, CdfError> {
    Ok(BranchCard {
        from: rec.num(1, 4, "tap bus", true)? as u32,
        to: rec.num(6, 9, "Z bus", true)? as u32,
        kind_code: rec.num(19, 19, "branch type", false)? as i32,
        r: rec.num(20, 29, "resistance", true)?,
        x: rec.num(30, 40, "reactance", true)?,
        b: rec.num(41, 50, "line charging", false)?,
        tap: rec.num(77, 82, "turns ratio", false)?,
        angle: rec.num(84, 90, "phase angle", false)?,
    })
}

fn branch_tokens(rec: &RawRecord) -> Result<BranchCard, CdfError> {
    let tok: Vec<&str> = rec.text.split_whitespace().collect();
    if tok.len() < 9 {
        return Err(rec.malformed(1, format!("expected at least 9 branch fields, found {}", tok.len())));
    }
    let f = |i: usize| -> Result<f64, CdfError> {
        match tok.get(i) {
            Some(t) => parse_finite(t).ok_or_else(|| rec.malformed(1, format!("cannot parse {t:?}"))),
            None => Ok(0.0),
        }
    };
    Ok(BranchCard {
        from: f(0)? as u32,
        to: f(1)? as u32,
        kind_code: f(5)? as i32,
        r: f(6)?,
        x: f(7)?,
        b: f(8)?,
        tap: f(14)?,
        angle: f(15)?,
    })
}

fn title_base_mva(title: &str) -> f64 {
    let fixed = RawRecord {
        section: Section::Bus,
        line: 1,
        text: title,
    };
    let drifted = title
        .as_bytes()
        .get(30)
        .is_some_and(|c| c.is_ascii_digit() || *c == b'.');
    if !drifted {
        if let Some(v) = parse_finite(fixed.cols(32, 37)).filter(|v| *v > 0.0) {
            return v;
        }
    }
    title
        .get(20..)
        .unwrap_or("")
        .split_whitespace()
        .filter_map(parse_finite)
        .find(|v| *v > 0.0)
        .unwrap_or(100.0)
}

fn section_header(line: &str) -> Option<Section> {
    let upper = line.trim_start().to_ascii_uppercase();
    if upper.starts_with("BUS DATA FOLLOWS") {
        Some(Section::Bus)
    } else if upper.starts_with("BRANCH DATA FOLLOWS") {
        Some(Section::Branch)
    } else {
        None
    }
}

/// Title card, bus records, branch records.
type Sections<'a> = (Option<&'a str>, Vec<RawRecord<'a>>, Vec<RawRecord<'a>>);

fn collect_records(text: &str) -> Result<Sections<'_>, CdfError> {
    let mut title = None;
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut seen_bus = false;
    let mut seen_branch = false;
    let mut current: Option<Section> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if title.is_none() && !line.trim().is_empty() && section_header(line).is_none() {
            title = Some(line);
            continue;
        }
        match current {
            None => {
                if let Some(sec) = section_header(line) {
                    match sec {
                        Section::Bus => seen_bus = true,
                        Section::Branch => seen_branch = true,
                    }
                    current = Some(sec);
                }
            }
            Some(sec) => {
                if line.trim_start().starts_with("-999") {
                    current = None;
                    continue;
                }
                if line.trim().is_empty() {
                    continue;
                }
                let rec = RawRecord {
                    section: sec,
                    line: i + 1,
                    text: line,
                };
                match sec {
                    Section::Bus => buses.push(rec),
                    Section::Branch => branches.push(rec),
                }
            }
        }
    }
    if !seen_bus {
        return Err(CdfError::MissingSection("bus data"));
    }
    if !seen_branch {
        return Err(CdfError::MissingSection("branch data"));
    }
    Ok((title, buses, branches))
}

/// Parse an IEEE CDF document into a validated [`Network`].
///
/// Bus types map 3 → slack, 2 → PV, 0/1 → PQ. Voltage-regulated buses take their
/// setpoint as nominal voltage; PQ buses are nominal at 1.0 pu. Branch ids are the
/// 1-based order of the branch cards.
pub fn parse_cdf(text: &str) -> Result<Network, CdfError> {
    let (title, bus_recs, branch_recs) = collect_records(text)?;
    let base_mva = title.map(title_base_mva).unwrap_or(100.0);

    let mut buses = Vec::with_capacity(bus_recs.len());
    for rec in &bus_recs {
        let card = bus_fixed(rec).or_else(|e| bus_tokens(rec).map_err(|_| e))?;
        let kind = match card.kind_code {
            3 => BusKind::Slack,
            2 => BusKind::Pv,
            0 | 1 => BusKind::Pq,
            other => return Err(rec.malformed(25, format!("unknown bus type {other}"))),
        };
        let v_setpoint = if card.v_desired > 0.0 {
            card.v_desired
        } else if card.v_final > 0.0 {
            card.v_final
        } else {
            1.0
        };
        let v_nominal = if kind == BusKind::Pq { 1.0 } else { v_setpoint };
        buses.push(Bus {
            id: card.number,
            kind,
            load_p: card.load_p,
            load_q: card.load_q,
            gen_p: card.gen_p,
            gen_q: card.gen_q,
            v_nominal,
            v_setpoint,
            shunt_g: card.shunt_g,
            shunt_b: card.shunt_b,
        });
    }
    if !buses.iter().any(|b| b.kind == BusKind::Slack) {
        return Err(CdfError::NoSlackBus);
    }

    let mut branches = Vec::with_capacity(branch_recs.len());
    for (k, rec) in branch_recs.iter().enumerate() {
        let card = branch_fixed(rec).or_else(|e| branch_tokens(rec).map_err(|_| e))?;
        if card.kind_code == 4 || card.angle != 0.0 {
            return Err(rec.malformed(84, "phase-shifting transformers are not supported"));
        }
        let id = k as u32 + 1;
        let mut branch = Branch::new(id, card.from, card.to, card.r, card.x);
        branch.charging = card.b;
        if card.tap != 0.0 {
            branch.tap = card.tap;
        }
        if card.r == 0.0 && card.x == 0.0 {
            warn!("branch {id} ({}-{}) has zero impedance; using x = {MIN_REACTANCE} pu", card.from, card.to);
            branch.reactance = MIN_REACTANCE;
        }
        branches.push(branch);
    }
    Ok(Network::new(buses, branches, base_mva)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::too_many_arguments)]
    fn bus_card(n: u32, kind: i32, vm: f64, pd: f64, qd: f64, pg: f64, vset: f64, bs: f64) -> String {
        format!(
            "{n:4} {:<12} {:2}{:3} {kind:2} {vm:6.4}{:7.2}{pd:9.2}{qd:9.2}{pg:9.2}{:8.2} {:7.2} {vset:6.4}{:8.2}{:8.2}{:8.4}{bs:8.4} {:4}",
            format!("Bus {n}"),
            1,
            1,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0
        )
    }

    fn branch_card(f: u32, t: u32, kind: i32, r: f64, x: f64, b: f64, tap: f64, angle: f64) -> String {
        format!(
            "{f:4} {t:4} {:2}{:2}  {:1} {kind:1}{r:10.6}{x:11.6}{b:10.6}{:5} {:5} {:5} {:4} {:1}  {tap:6.4} {angle:7.2}",
            1, 1, 1, 0, 0, 0, 0, 0
        )
    }

    fn two_bus_with(branch: &str) -> String {
        [
            format!("{:<8}  {:<20} {:6.1} {:4} W two bus", "01/01/00", "TEST", 100.0, 2000),
            "BUS DATA FOLLOWS                             2 ITEMS".into(),
            bus_card(1, 3, 1.02, 0.0, 0.0, 0.0, 1.02, 0.0),
            bus_card(2, 0, 1.0, 10.0, 5.0, 0.0, 0.0, 0.05),
            "-999".into(),
            "BRANCH DATA FOLLOWS                          1 ITEMS".into(),
            branch.into(),
            "-999".into(),
            "END OF DATA".into(),
        ]
        .join("\n")
    }

    fn two_bus() -> String {
        two_bus_with(&branch_card(1, 2, 0, 0.01, 0.1, 0.02, 0.0, 0.0))
    }

    #[test]
    fn parses_fixed_columns() {
        let net = parse_cdf(&two_bus()).unwrap();
        assert_eq!(net.bus_count(), 2);
        assert_eq!(net.base_mva(), 100.0);
        let b2 = net.bus(2).unwrap();
        assert_eq!(b2.kind, BusKind::Pq);
        assert_eq!((b2.load_p, b2.load_q, b2.shunt_b), (10.0, 5.0, 0.05));
        let slack = net.slack();
        assert_eq!((slack.v_setpoint, slack.v_nominal), (1.02, 1.02));
        let br = net.branch(1).unwrap();
        assert_eq!((br.resistance, br.reactance, br.charging, br.tap), (0.01, 0.1, 0.02, 1.0));
    }

    #[test]
    fn drifted_columns_fall_back_to_tokens() {
        let drifted = "\
08/19/93 UW ARCHIVE           100.0  1962 W IEEE drifted
BUS DATA FOLLOWS                            2 ITEMS
   1 Bus 1     HV  1  1  3 1.060    0.0      0.0      0.0      0.0     0.0     0.0 1.060     0.0     0.0   0.0    0.0        0
   2 Bus 2     HV  1  1   0 1.0  -4.98     21.7     12.7      0.0     0.0      0.0 0.0      0.0     0.0   0.0    0.0        0
-999
BRANCH DATA FOLLOWS                         1 ITEMS
   1    2  1  1 1 0  0.01938   0.05917     0.0528     0     0     0    0 0  0.0       0.0 0.0    0.0     0.0    0.0   0.0
-999
";
        let net = parse_cdf(drifted).unwrap();
        assert_eq!(net.base_mva(), 100.0);
        assert_eq!(net.bus(2).unwrap().load_p, 21.7);
        assert_eq!(net.branch(1).unwrap().resistance, 0.01938);
        assert_eq!(net.branch(1).unwrap().charging, 0.0528);
    }

    #[test]
    fn bus_section_only_is_missing_branches() {
        let text: String = two_bus().lines().take(5).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_cdf(&text).unwrap_err(), CdfError::MissingSection("branch data"));
        assert_eq!(parse_cdf("title only\n").unwrap_err(), CdfError::MissingSection("bus data"));
    }

    #[test]
    fn no_slack_is_reported() {
        let text = two_bus().replacen(&bus_card(1, 3, 1.02, 0.0, 0.0, 0.0, 1.02, 0.0), &bus_card(1, 2, 1.02, 0.0, 0.0, 0.0, 1.02, 0.0), 1);
        assert_eq!(parse_cdf(&text).unwrap_err(), CdfError::NoSlackBus);
    }

    #[test]
    fn malformed_card_reports_position() {
        let text = two_bus().replacen("0.010000", "0.01x000", 1);
        match parse_cdf(&text).unwrap_err() {
            CdfError::MalformedCard { line, column, .. } => assert_eq!((line, column), (7, 20)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transformer_tap_and_phase_shifter() {
        let tapped = two_bus_with(&branch_card(1, 2, 1, 0.0, 0.2, 0.0, 0.978, 0.0));
        assert_eq!(parse_cdf(&tapped).unwrap().branch(1).unwrap().tap, 0.978);
        let shifter = two_bus_with(&branch_card(1, 2, 4, 0.0, 0.2, 0.0, 1.0, 5.0));
        assert!(matches!(parse_cdf(&shifter).unwrap_err(), CdfError::MalformedCard { .. }));
    }

    #[test]
    fn zero_impedance_is_clamped() {
        let text = two_bus_with(&branch_card(1, 2, 0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let net = parse_cdf(&text).unwrap();
        assert_eq!(net.branch(1).unwrap().reactance, MIN_REACTANCE);
    }
}
