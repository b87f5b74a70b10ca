//! The message format: a nine-field record with a `/`-delimited URI wire
//! form, lifecycle predicates (expiry, receive count), and a pluggable
//! encryption envelope.
//!
//! Wire grammar, exactly nine fields, ASCII, no trailing separator:
//!
//! ```text
//! <type>/<target>/<id>/<source>/<creator>/<time>/<expire>/<count>/<body>
//! alert/11-newton-7/john3/6-king-1/john/092310/10000/NULL/accident
//! ```
//!
//! Absent EXPIRES, COUNT, and BODY encode as the literal `NULL`. The body
//! percent-escapes `/` and `%`; every other field is a restricted token.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::roadnet::{LocatorParseError, SegmentLocator};
use crate::walltime::{WallTime, WallTimeError};

pub const FIELD_COUNT: usize = 9;
const NULL: &str = "NULL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MsgType {
    /// A request that queries attributes of an area; expects a response.
    Query,
    /// Dissemination of alert information; expects no response.
    Alert,
    /// A service interaction (identification requests, offers, updates).
    Service,
}

impl MsgType {
    pub fn as_str(&self) -> &'static str {
        match self {
            MsgType::Query => "query",
            MsgType::Alert => "alert",
            MsgType::Service => "service",
        }
    }

    pub fn parse(s: &str) -> Result<Self, MessageError> {
        match s {
            "query" => Ok(MsgType::Query),
            "alert" => Ok(MsgType::Alert),
            "service" => Ok(MsgType::Service),
            other => Err(MessageError::UnknownType(other.to_string())),
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The nine-field message record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub msg_type: MsgType,
    pub msg_target: SegmentLocator,
    pub msg_id: String,
    pub msg_source: SegmentLocator,
    pub msg_creator: String,
    /// Wall-clock creation time, HHMMSS.
    pub msg_time: WallTime,
    /// Lifetime in seconds from `msg_time`; `None` never expires.
    pub msg_expire: Option<u32>,
    /// Remaining receive budget; `None` is unlimited.
    pub msg_count: Option<u32>,
    pub msg_body: Option<String>,
}

impl Message {
    /// Validates the token and body invariants. An empty body is
    /// normalized to absent before calling this.
    pub fn validate(&self) -> Result<(), MessageError> {
        validate_token("msg_id", &self.msg_id)?;
        validate_token("msg_creator", &self.msg_creator)?;
        if let Some(body) = &self.msg_body {
            if body.is_empty() {
                return Err(MessageError::EmptyBody);
            }
            if body == NULL {
                // The grammar has no escape that would distinguish a literal
                // NULL body from an absent one.
                return Err(MessageError::ReservedBody);
            }
            if !body.is_ascii() {
                return Err(MessageError::NonAscii("msg_body"));
            }
        }
        Ok(())
    }
}

fn validate_token(field: &'static str, value: &str) -> Result<(), MessageError> {
    if value.is_empty() {
        return Err(MessageError::EmptyToken(field));
    }
    if !value.is_ascii() {
        return Err(MessageError::NonAscii(field));
    }
    if value
        .bytes()
        .any(|b| b == b'/' || b == b'%' || b.is_ascii_whitespace() || !b.is_ascii_graphic())
    {
        return Err(MessageError::BadToken {
            field,
            value: value.to_string(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MessageError {
    #[error("expected {FIELD_COUNT} '/'-separated fields, found {found}{hint}", hint = field_count_hint(*.found))]
    FieldCount { found: usize },
    #[error("unknown message type {0:?}")]
    UnknownType(String),
    #[error("field {field} is not a valid locator: {source}")]
    Locator {
        field: &'static str,
        source: LocatorParseError,
    },
    #[error("field {0} must be a non-empty token, got empty")]
    EmptyToken(&'static str),
    #[error("field {field} contains '/', '%', whitespace, or a non-printable byte: {value:?}")]
    BadToken { field: &'static str, value: String },
    #[error("field {0} must be ASCII")]
    NonAscii(&'static str),
    #[error("bad TIME field: {0}")]
    Time(#[from] WallTimeError),
    #[error("field {field} must be a non-negative integer or NULL, got {value:?}")]
    BadNumber { field: &'static str, value: String },
    #[error("body may not be empty; encode an absent body as NULL")]
    EmptyBody,
    #[error("body may not be the literal NULL; that spelling is reserved for an absent body")]
    ReservedBody,
    #[error("bad percent escape {0:?} in body (only %2F and %25 are defined)")]
    BadEscape(String),
}

fn field_count_hint(found: usize) -> &'static str {
    if found == FIELD_COUNT - 1 {
        " (a fused field at the creator/time boundary, fields 5/6, is the usual culprit)"
    } else {
        ""
    }
}

fn escape_body(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    for ch in body.chars() {
        match ch {
            '%' => out.push_str("%25"),
            '/' => out.push_str("%2F"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_body(wire: &str) -> Result<String, MessageError> {
    let bytes = wire.as_bytes();
    let mut out = String::with_capacity(wire.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let esc = wire.get(i..i + 3).unwrap_or(&wire[i..]);
            match esc {
                "%25" => out.push('%'),
                "%2F" => out.push('/'),
                other => return Err(MessageError::BadEscape(other.to_string())),
            }
            i += 3;
        } else {
            out.push(bytes[i] as char);
            i += 1;
        }
    }
    Ok(out)
}

/// Renders the exact nine-field URI wire form.
pub fn format_message(msg: &Message) -> Result<String, MessageError> {
    msg.validate()?;
    let opt_num = |v: &Option<u32>| match v {
        Some(n) => n.to_string(),
        None => NULL.to_string(),
    };
    let body = match &msg.msg_body {
        Some(b) => escape_body(b),
        None => NULL.to_string(),
    };
    Ok(format!(
        "{}/{}/{}/{}/{}/{}/{}/{}/{}",
        msg.msg_type,
        msg.msg_target,
        msg.msg_id,
        msg.msg_source,
        msg.msg_creator,
        msg.msg_time,
        opt_num(&msg.msg_expire),
        opt_num(&msg.msg_count),
        body,
    ))
}

fn parse_opt_number(field: &'static str, value: &str) -> Result<Option<u32>, MessageError> {
    if value == NULL {
        return Ok(None);
    }
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(MessageError::BadNumber {
            field,
            value: value.to_string(),
        });
    }
    value
        .parse::<u32>()
        .map(Some)
        .map_err(|_| MessageError::BadNumber {
            field,
            value: value.to_string(),
        })
}

/// Strict parse of the wire form: exactly nine fields, valid type, valid
/// locators, six-digit time, non-negative numbers.
pub fn parse_message(uri: &str) -> Result<Message, MessageError> {
    let fields: Vec<&str> = uri.split('/').collect();
    if fields.len() != FIELD_COUNT {
        return Err(MessageError::FieldCount {
            found: fields.len(),
        });
    }
    let msg_type = MsgType::parse(fields[0])?;
    let msg_target = SegmentLocator::parse(fields[1]).map_err(|source| MessageError::Locator {
        field: "msg_target",
        source,
    })?;
    validate_token("msg_id", fields[2])?;
    let msg_source = SegmentLocator::parse(fields[3]).map_err(|source| MessageError::Locator {
        field: "msg_source",
        source,
    })?;
    validate_token("msg_creator", fields[4])?;
    let msg_time = WallTime::parse(fields[5])?;
    let msg_expire = parse_opt_number("msg_expire", fields[6])?;
    let msg_count = parse_opt_number("msg_count", fields[7])?;
    let msg_body = if fields[8] == NULL {
        None
    } else if fields[8].is_empty() {
        return Err(MessageError::EmptyBody);
    } else {
        Some(unescape_body(fields[8])?)
    };
    let msg = Message {
        msg_type,
        msg_target,
        msg_id: fields[2].to_string(),
        msg_source,
        msg_creator: fields[4].to_string(),
        msg_time,
        msg_expire,
        msg_count,
        msg_body,
    };
    msg.validate()?;
    Ok(msg)
}

/// A message is expired once the forward elapsed time from its TIME field
/// exceeds EXPIRES, crossing at most one midnight. No EXPIRES, no expiry.
pub fn is_expired(msg: &Message, now: WallTime) -> bool {
    match msg.msg_expire {
        None => false,
        Some(expire) => msg.msg_time.elapsed_until(now) > expire,
    }
}

/// Result of spending one unit of a message's receive budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDecrement {
    pub message: Message,
    /// False once the budget was already exhausted on arrival.
    pub forwardable: bool,
}

/// COUNT is a remaining-recipients budget: each accepting vehicle spends
/// one unit. A NULL count is unlimited; an exhausted count marks the
/// message non-forwardable.
pub fn decrement_count(msg: &Message) -> CountDecrement {
    match msg.msg_count {
        None => CountDecrement {
            message: msg.clone(),
            forwardable: true,
        },
        Some(0) => CountDecrement {
            message: msg.clone(),
            forwardable: false,
        },
        Some(n) => {
            let mut m = msg.clone();
            m.msg_count = Some(n - 1);
            CountDecrement {
                message: m,
                forwardable: true,
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Encryption envelope
// ---------------------------------------------------------------------------

/// The pluggable message envelope. `XorChecksum` is a keyed byte-stream XOR
/// of the UTF-8 wire form with a repeating key-derived pad plus a CRC-32
/// trailer; it documents the envelope surface and is NOT secure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CipherSuite {
    /// Plain UTF-8 of the wire form; no checksum.
    Identity,
    XorChecksum {
        key: Vec<u8>,
    },
}

impl CipherSuite {
    pub fn xor_checksum(key: impl AsRef<[u8]>) -> Result<Self, SealError> {
        let key = key.as_ref();
        if key.is_empty() {
            return Err(SealError::EmptyKey);
        }
        Ok(CipherSuite::XorChecksum { key: key.to_vec() })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CipherSuite::Identity => "identity",
            CipherSuite::XorChecksum { .. } => "xor-checksum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SealError {
    #[error("keyed suites need a non-empty key")]
    EmptyKey,
    #[error("message does not satisfy the wire invariants: {0}")]
    Message(#[from] MessageError),
    #[error("sealed payload too short ({0} bytes)")]
    Truncated(usize),
    #[error("checksum mismatch: payload was altered in transit")]
    ChecksumMismatch,
    #[error("sealed payload does not decode to UTF-8")]
    NotUtf8,
}

fn xor_with_pad(data: &[u8], key: &[u8]) -> Vec<u8> {
    data.iter()
        .enumerate()
        .map(|(i, b)| b ^ key[i % key.len()])
        .collect()
}

/// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320). Detects every
/// single-bit error in the sealed payload.
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

/// Encrypts a message into its sealed byte form.
pub fn seal(msg: &Message, suite: &CipherSuite) -> Result<Vec<u8>, SealError> {
    let wire = format_message(msg)?;
    match suite {
        CipherSuite::Identity => Ok(wire.into_bytes()),
        CipherSuite::XorChecksum { key } => {
            let mut cipher = xor_with_pad(wire.as_bytes(), key);
            let sum = crc32(&cipher);
            cipher.extend_from_slice(&sum.to_be_bytes());
            Ok(cipher)
        }
    }
}

/// Decrypts and parses a sealed payload; any alteration is a tamper error.
pub fn open(bytes: &[u8], suite: &CipherSuite) -> Result<Message, SealError> {
    match suite {
        CipherSuite::Identity => {
            let wire = std::str::from_utf8(bytes).map_err(|_| SealError::NotUtf8)?;
            Ok(parse_message(wire)?)
        }
        CipherSuite::XorChecksum { key } => {
            if bytes.len() < 4 {
                return Err(SealError::Truncated(bytes.len()));
            }
            let (cipher, trailer) = bytes.split_at(bytes.len() - 4);
            let expected = u32::from_be_bytes(trailer.try_into().unwrap());
            if crc32(cipher) != expected {
                return Err(SealError::ChecksumMismatch);
            }
            let plain = xor_with_pad(cipher, key);
            let wire = String::from_utf8(plain).map_err(|_| SealError::NotUtf8)?;
            Ok(parse_message(&wire)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn alert_example() -> Message {
        Message {
            msg_type: MsgType::Alert,
            msg_target: SegmentLocator::new(11, "newton", 7),
            msg_id: "john3".into(),
            msg_source: SegmentLocator::new(6, "king", 1),
            msg_creator: "john".into(),
            msg_time: WallTime::parse("092310").unwrap(),
            msg_expire: Some(10_000),
            msg_count: None,
            msg_body: Some("accident".into()),
        }
    }

    const ALERT_WIRE: &str = "alert/11-newton-7/john3/6-king-1/john/092310/10000/NULL/accident";

    #[test]
    fn formats_the_alert_example_exactly() {
        assert_eq!(format_message(&alert_example()).unwrap(), ALERT_WIRE);
    }

    #[test]
    fn parses_the_alert_example_to_exact_fields() {
        let m = parse_message(ALERT_WIRE).unwrap();
        assert_eq!(m, alert_example());
        assert_eq!(m.msg_time.to_string(), "092310");
        assert_eq!(m.msg_expire, Some(10_000));
        assert_eq!(m.msg_count, None);
        assert_eq!(m.msg_body.as_deref(), Some("accident"));
    }

    #[test]
    fn eight_field_query_is_rejected_with_boundary_hint() {
        // A known-malformed line whose creator and time fields are fused.
        let fused = "query/5-william-2/nevirvj1/2-hilton-9/nevirvj101523/5000/NULL/NULL";
        let err = parse_message(fused).unwrap_err();
        assert_eq!(err, MessageError::FieldCount { found: 8 });
        let text = err.to_string();
        assert!(text.contains("found 8"), "{text}");
        assert!(text.contains("fields 5/6"), "{text}");
    }

    #[test]
    fn repaired_query_parses() {
        let repaired = "query/5-william-2/nevirvj1/2-hilton-9/nevirvj/101523/5000/NULL/NULL";
        let m = parse_message(repaired).unwrap();
        assert_eq!(m.msg_type, MsgType::Query);
        assert_eq!(m.msg_expire, Some(5000));
        assert_eq!(m.msg_count, None);
        assert_eq!(m.msg_body, None);
        assert_eq!(format_message(&m).unwrap(), repaired);
    }

    #[test]
    fn short_uri_is_a_field_count_error() {
        assert_eq!(
            parse_message("query/a/b").unwrap_err(),
            MessageError::FieldCount { found: 3 }
        );
    }

    #[test]
    fn body_escaping_round_trips() {
        let mut m = alert_example();
        m.msg_body = Some("left/lane".into());
        let wire = format_message(&m).unwrap();
        assert!(wire.ends_with("/left%2Flane"));
        assert_eq!(parse_message(&wire).unwrap(), m);

        m.msg_body = Some("50%/blocked".into());
        let wire = format_message(&m).unwrap();
        assert!(wire.ends_with("/50%25%2Fblocked"));
        assert_eq!(parse_message(&wire).unwrap(), m);

        assert!(matches!(
            parse_message(&wire.replace("%25", "%zz")).unwrap_err(),
            MessageError::BadEscape(_)
        ));
    }

    #[test]
    fn null_body_and_numbers() {
        let mut m = alert_example();
        m.msg_body = None;
        m.msg_expire = None;
        m.msg_count = Some(0);
        let wire = format_message(&m).unwrap();
        assert!(wire.ends_with("/NULL/0/NULL"));
        assert_eq!(parse_message(&wire).unwrap(), m);

        let bad = ALERT_WIRE.replace("/10000/", "/-5/");
        assert!(matches!(
            parse_message(&bad).unwrap_err(),
            MessageError::BadNumber {
                field: "msg_expire",
                ..
            }
        ));
        let bad_time = ALERT_WIRE.replace("/092310/", "/096310/");
        assert!(matches!(
            parse_message(&bad_time).unwrap_err(),
            MessageError::Time(_)
        ));
    }

    #[test]
    fn expiry_second_arithmetic() {
        let m = alert_example(); // created 09:23:10, expires after 10000 s
        assert!(!is_expired(&m, WallTime::parse("092310").unwrap()));
        // 12:10:00 is 10,010 s later: expired.
        assert!(is_expired(&m, WallTime::parse("121000").unwrap()));
        // 12:09:50 is exactly 10,000 s later: not yet expired (strict >).
        assert!(!is_expired(&m, WallTime::parse("120950").unwrap()));

        let mut never = m.clone();
        never.msg_expire = None;
        for t in ["000000", "092310", "235959"] {
            assert!(!is_expired(&never, WallTime::parse(t).unwrap()));
        }
    }

    #[test]
    fn expiry_is_monotone_within_a_day() {
        let m = alert_example();
        let mut flipped = false;
        for s in 0..86_400u32 {
            let now = m.msg_time.advanced_by(s as f64);
            let e = is_expired(&m, now);
            if flipped {
                assert!(e, "expiry un-flipped at +{s}s");
            }
            flipped = e;
        }
    }

    #[test]
    fn count_budget_semantics() {
        let mut m = alert_example();
        m.msg_count = Some(3);
        let d = decrement_count(&m);
        assert!(d.forwardable);
        assert_eq!(d.message.msg_count, Some(2));

        m.msg_count = Some(0);
        let d = decrement_count(&m);
        assert!(!d.forwardable);
        assert_eq!(d.message.msg_count, Some(0));

        m.msg_count = None;
        let d = decrement_count(&m);
        assert!(d.forwardable);
        assert_eq!(d.message.msg_count, None);
    }

    #[test]
    fn identity_suite_is_plain_wire_bytes() {
        let m = alert_example();
        let sealed = seal(&m, &CipherSuite::Identity).unwrap();
        assert_eq!(sealed, ALERT_WIRE.as_bytes());
        assert_eq!(open(&sealed, &CipherSuite::Identity).unwrap(), m);
    }

    #[test]
    fn xor_suite_round_trips_and_needs_a_key() {
        let suite = CipherSuite::xor_checksum("sharedpad").unwrap();
        let m = alert_example();
        let sealed = seal(&m, &suite).unwrap();
        assert_ne!(&sealed[..sealed.len() - 4], ALERT_WIRE.as_bytes());
        assert_eq!(open(&sealed, &suite).unwrap(), m);
        assert_eq!(CipherSuite::xor_checksum(""), Err(SealError::EmptyKey));
    }

    #[test]
    fn every_registered_suite_round_trips() {
        let m = alert_example();
        for suite in [
            CipherSuite::Identity,
            CipherSuite::xor_checksum("k1").unwrap(),
            CipherSuite::xor_checksum([0u8, 255, 17]).unwrap(),
        ] {
            let sealed = seal(&m, &suite).unwrap();
            assert_eq!(open(&sealed, &suite).unwrap(), m, "suite {}", suite.name());
        }
    }

    #[test]
    fn single_bit_flips_are_always_detected() {
        let suite = CipherSuite::xor_checksum("tamperpad").unwrap();
        let sealed = seal(&alert_example(), &suite).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let mut evil = sealed.clone();
            let byte = rng.gen_range(0..evil.len());
            let bit = rng.gen_range(0..8);
            evil[byte] ^= 1 << bit;
            assert!(
                open(&evil, &suite).is_err(),
                "flip at byte {byte} bit {bit} went undetected"
            );
        }
    }
}
