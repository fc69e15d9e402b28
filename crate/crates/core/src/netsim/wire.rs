//! Line protocol between sensors, the concentrator and consumers.
//!
//! ASCII, one message per `\n`-terminated line, fields separated by exactly
//! one space:
//!
//! ```text
//! PUT <id> <unix_ms> <value>      -> OK | ERR <code>
//! GET <k>                         -> BEGIN <m>, m x REC <id> <unix_ms> <value>, END
//! STAT                            -> STAT <occupancy> <capacity> <dropped_total>
//! ```
//!
//! `value` is a decimal with an optional sign and at most 6 fractional digits;
//! `unix_ms` is a non-negative integer. Error codes: `BADVERB`, `BADFIELDS`,
//! `BADTS`, `BADVAL`, `BADID`.

use std::fmt;

use crate::field::{is_valid_id, SensorId};

/// Longest fractional part accepted for a value.
pub const MAX_FRACTION_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    BadVerb,
    BadFields,
    BadTs,
    BadVal,
    BadId,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 5] =
        [ErrorCode::BadVerb, ErrorCode::BadFields, ErrorCode::BadTs, ErrorCode::BadVal, ErrorCode::BadId];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadVerb => "BADVERB",
            ErrorCode::BadFields => "BADFIELDS",
            ErrorCode::BadTs => "BADTS",
            ErrorCode::BadVal => "BADVAL",
            ErrorCode::BadId => "BADID",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ErrorCode::BadVerb => "unknown verb",
            ErrorCode::BadFields => "wrong fields",
            ErrorCode::BadTs => "bad timestamp",
            ErrorCode::BadVal => "bad value",
            ErrorCode::BadId => "bad sensor id",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The `(id, unix_ms, value)` payload of `PUT` and `REC`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    id: SensorId,
    unix_ms: u64,
    value: f64,
}

impl Record {
    /// Fails with the protocol error code if a field cannot be encoded.
    pub fn new(id: &str, unix_ms: u64, value: f64) -> Result<Self, ErrorCode> {
        if !is_valid_id(id) {
            return Err(ErrorCode::BadId);
        }
        if !value_is_encodable(value) {
            return Err(ErrorCode::BadVal);
        }
        Ok(Self { id: SensorId::new(id).map_err(|_| ErrorCode::BadId)?, unix_ms, value })
    }

    pub fn id(&self) -> &SensorId {
        &self.id
    }

    pub fn unix_ms(&self) -> u64 {
        self.unix_ms
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

fn value_is_encodable(v: f64) -> bool {
    if !v.is_finite() {
        return false;
    }
    let s = v.to_string();
    s.split_once('.').is_none_or(|(_, frac)| frac.len() <= MAX_FRACTION_DIGITS)
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Put(Record),
    PutAck,
    PutErr(ErrorCode),
    Get { k: u64 },
    Begin { m: u64 },
    Rec(Record),
    End,
    Stat,
    StatReply { occupancy: u64, capacity: u64, dropped_total: u64 },
}

/// Serializes one message including the trailing `\n`.
///
/// Fails with `BadFields` for `GET 0`.
pub fn encode_message(msg: &WireMessage) -> Result<String, ErrorCode> {
    let line = match msg {
        WireMessage::Put(r) => format!("PUT {} {} {}", r.id, r.unix_ms, r.value),
        WireMessage::PutAck => "OK".to_string(),
        WireMessage::PutErr(code) => format!("ERR {code}"),
        WireMessage::Get { k } => {
            if *k == 0 {
                return Err(ErrorCode::BadFields);
            }
            format!("GET {k}")
        }
        WireMessage::Begin { m } => format!("BEGIN {m}"),
        WireMessage::Rec(r) => format!("REC {} {} {}", r.id, r.unix_ms, r.value),
        WireMessage::End => "END".to_string(),
        WireMessage::Stat => "STAT".to_string(),
        WireMessage::StatReply { occupancy, capacity, dropped_total } => {
            format!("STAT {occupancy} {capacity} {dropped_total}")
        }
    };
    Ok(line + "\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeError {
    pub code: ErrorCode,
    /// Byte offset of the offending field in the line.
    pub position: usize,
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.code.describe(), self.position)
    }
}

impl std::error::Error for DecodeError {}

fn fail<T>(code: ErrorCode, position: usize) -> Result<T, DecodeError> {
    Err(DecodeError { code, position })
}

fn parse_uint(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_value(s: &str) -> Option<f64> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int) {
        return None;
    }
    if let Some(f) = frac {
        if !all_digits(f) || f.len() > MAX_FRACTION_DIGITS {
            return None;
        }
    }
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

/// Parses one complete line (the trailing `\n` is required).
pub fn decode_message(line: &[u8]) -> Result<WireMessage, DecodeError> {
    let Some(body) = line.strip_suffix(b"\n") else {
        return fail(ErrorCode::BadFields, line.len());
    };
    if let Some(pos) = body.iter().position(|b| !b.is_ascii() || b.is_ascii_control()) {
        return fail(ErrorCode::BadFields, pos);
    }
    // ASCII checked above
    let body = std::str::from_utf8(body).expect("ascii is utf-8");

    let mut fields: Vec<(usize, &str)> = Vec::new();
    let mut start = 0;
    for part in body.split(' ') {
        fields.push((start, part));
        start += part.len() + 1;
    }
    let (_, verb) = fields[0];
    let args = &fields[1..];
    if let Some(&(pos, _)) = args.iter().find(|(_, f)| f.is_empty()) {
        return fail(ErrorCode::BadFields, pos);
    }
    let expect = |n: usize| -> Result<(), DecodeError> {
        if args.len() == n {
            Ok(())
        } else {
            fail(ErrorCode::BadFields, verb.len())
        }
    };
    let uint = |(pos, s): (usize, &str), code| parse_uint(s).ok_or(DecodeError { code, position: pos });
    let record = || -> Result<Record, DecodeError> {
        let (id_pos, id) = args[0];
        if !is_valid_id(id) {
            return fail(ErrorCode::BadId, id_pos);
        }
        let unix_ms = uint(args[1], ErrorCode::BadTs)?;
        let (val_pos, val) = args[2];
        let value = parse_value(val).ok_or(DecodeError { code: ErrorCode::BadVal, position: val_pos })?;
        Record::new(id, unix_ms, value).map_err(|code| DecodeError { code, position: val_pos })
    };

    match verb {
        "PUT" => {
            expect(3)?;
            Ok(WireMessage::Put(record()?))
        }
        "REC" => {
            expect(3)?;
            Ok(WireMessage::Rec(record()?))
        }
        "OK" => {
            expect(0)?;
            Ok(WireMessage::PutAck)
        }
        "ERR" => {
            expect(1)?;
            let (pos, code) = args[0];
            ErrorCode::parse(code)
                .map(WireMessage::PutErr)
                .ok_or(DecodeError { code: ErrorCode::BadFields, position: pos })
        }
        "GET" => {
            expect(1)?;
            let k = uint(args[0], ErrorCode::BadVal)?;
            if k == 0 {
                return fail(ErrorCode::BadVal, args[0].0);
            }
            Ok(WireMessage::Get { k })
        }
        "BEGIN" => {
            expect(1)?;
            Ok(WireMessage::Begin { m: uint(args[0], ErrorCode::BadVal)? })
        }
        "END" => {
            expect(0)?;
            Ok(WireMessage::End)
        }
        "STAT" => match args.len() {
            0 => Ok(WireMessage::Stat),
            3 => Ok(WireMessage::StatReply {
                occupancy: uint(args[0], ErrorCode::BadVal)?,
                capacity: uint(args[1], ErrorCode::BadVal)?,
                dropped_total: uint(args[2], ErrorCode::BadVal)?,
            }),
            _ => fail(ErrorCode::BadFields, verb.len()),
        },
        _ => fail(ErrorCode::BadVerb, 0),
    }
}
