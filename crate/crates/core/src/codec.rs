//! Minimal DER (X.690 definite-length subset) TLV encoder and decoder.
//!
//! Only single-byte tags are supported (tag numbers 0..=30), which covers every
//! universal type used by certificates and SignedData plus the context-specific
//! tags `[0]`..`[3]`. Lengths are always definite and minimal, so a decoded
//! tree re-encodes to the exact input bytes.

use std::borrow::Cow;
use std::fmt;
use std::fmt::Write as _;

use chrono::{DateTime, NaiveDateTime, Utc};
use thiserror::Error;

/// Maximum nesting accepted by [`decode`].
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("input truncated")]
    Truncated,
    #[error("{0} trailing byte(s) after the top-level element")]
    TrailingBytes(usize),
    #[error("indefinite length encoding is not allowed")]
    IndefiniteLength,
    #[error("length is not minimally encoded")]
    NonMinimalLength,
    #[error("length does not fit in this platform's address space")]
    LengthOverflow,
    #[error("multi-byte (high tag number) tags are not supported")]
    HighTagNumber,
    #[error("nesting deeper than {MAX_DEPTH} levels")]
    TooDeep,
    #[error("expected tag {expected}, found {found}")]
    UnexpectedTag { expected: Tag, found: Tag },
    #[error("expected a constructed element")]
    NotConstructed,
    #[error("expected a primitive element")]
    NotPrimitive,
    #[error("missing element: {0}")]
    MissingElement(&'static str),
    #[error("unexpected extra element after {0}")]
    ExtraElement(&'static str),
    #[error("invalid {0} value")]
    InvalidValue(&'static str),
}

/// A single-byte identifier octet.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag(u8);

impl Tag {
    pub const BOOLEAN: Tag = Tag(0x01);
    pub const INTEGER: Tag = Tag(0x02);
    pub const BIT_STRING: Tag = Tag(0x03);
    pub const OCTET_STRING: Tag = Tag(0x04);
    pub const NULL: Tag = Tag(0x05);
    pub const OID: Tag = Tag(0x06);
    pub const UTF8_STRING: Tag = Tag(0x0c);
    pub const GENERALIZED_TIME: Tag = Tag(0x18);
    pub const SEQUENCE: Tag = Tag(0x30);
    pub const SET: Tag = Tag(0x31);

    /// Context-specific constructed tag `[n]`.
    pub const fn context(n: u8) -> Tag {
        assert!(n < 0x1f);
        Tag(0xa0 | n)
    }

    /// Context-specific primitive tag `[n]` (IMPLICIT over a primitive type).
    pub const fn context_primitive(n: u8) -> Tag {
        assert!(n < 0x1f);
        Tag(0x80 | n)
    }

    pub fn from_byte(b: u8) -> Result<Tag, DecodeError> {
        if b & 0x1f == 0x1f {
            return Err(DecodeError::HighTagNumber);
        }
        Ok(Tag(b))
    }

    pub fn byte(self) -> u8 {
        self.0
    }

    pub fn is_constructed(self) -> bool {
        self.0 & 0x20 != 0
    }

    fn name(self) -> Option<&'static str> {
        Some(match self.0 {
            0x01 => "BOOLEAN",
            0x02 => "INTEGER",
            0x03 => "BIT STRING",
            0x04 => "OCTET STRING",
            0x05 => "NULL",
            0x06 => "OBJECT IDENTIFIER",
            0x0c => "UTF8String",
            0x18 => "GeneralizedTime",
            0x30 => "SEQUENCE",
            0x31 => "SET",
            _ => return None,
        })
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(n) => f.write_str(n),
            None if self.0 & 0xc0 == 0x80 => write!(f, "[{}]", self.0 & 0x1f),
            None => write!(f, "tag 0x{:02x}", self.0),
        }
    }
}

impl fmt::Debug for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tag({self})")
    }
}

/// Object identifier. Constants can be declared with [`Oid::from_static`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Oid(Cow<'static, [u64]>);

impl Oid {
    pub const fn from_static(arcs: &'static [u64]) -> Oid {
        Oid(Cow::Borrowed(arcs))
    }

    pub fn new(arcs: Vec<u64>) -> Result<Oid, DecodeError> {
        let oid = Oid(Cow::Owned(arcs));
        oid.check()?;
        Ok(oid)
    }

    fn check(&self) -> Result<(), DecodeError> {
        let arcs = &self.0;
        if arcs.len() < 2 || arcs[0] > 2 || (arcs[0] < 2 && arcs[1] >= 40) {
            return Err(DecodeError::InvalidValue("OBJECT IDENTIFIER"));
        }
        if arcs[0] == 2 && arcs[1] > u64::MAX - 80 {
            return Err(DecodeError::InvalidValue("OBJECT IDENTIFIER"));
        }
        Ok(())
    }

    pub fn arcs(&self) -> &[u64] {
        &self.0
    }

    /// Content octets (without tag and length).
    pub fn to_der_content(&self) -> Vec<u8> {
        debug_assert!(self.check().is_ok(), "invalid OID constant {self}");
        let mut out = Vec::with_capacity(self.0.len() + 4);
        push_base128(&mut out, self.0[0] * 40 + self.0[1]);
        for &arc in &self.0[2..] {
            push_base128(&mut out, arc);
        }
        out
    }

    pub fn from_der_content(bytes: &[u8]) -> Result<Oid, DecodeError> {
        const BAD: DecodeError = DecodeError::InvalidValue("OBJECT IDENTIFIER");
        if bytes.is_empty() {
            return Err(BAD);
        }
        let mut arcs = Vec::new();
        let mut acc: u64 = 0;
        let mut fresh = true;
        for &b in bytes {
            if fresh && b == 0x80 {
                return Err(BAD);
            }
            if acc > (u64::MAX >> 7) {
                return Err(BAD);
            }
            acc = (acc << 7) | u64::from(b & 0x7f);
            fresh = b & 0x80 == 0;
            if fresh {
                if arcs.is_empty() {
                    let (first, second) = match acc {
                        0..=39 => (0, acc),
                        40..=79 => (1, acc - 40),
                        _ => (2, acc - 80),
                    };
                    arcs.push(first);
                    arcs.push(second);
                } else {
                    arcs.push(acc);
                }
                acc = 0;
            }
        }
        if !fresh {
            return Err(BAD);
        }
        Ok(Oid(Cow::Owned(arcs)))
    }
}

fn push_base128(out: &mut Vec<u8>, mut v: u64) {
    let mut tmp = [0u8; 10];
    let mut i = tmp.len();
    loop {
        i -= 1;
        tmp[i] = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    let last = tmp.len() - 1;
    for (j, b) in tmp.iter().enumerate().skip(i) {
        out.push(if j == last { *b } else { *b | 0x80 });
    }
}

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, arc) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{arc}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Oid({self})")
    }
}

/// Seconds since the Unix epoch, UTC. Encoded as a 15-byte GeneralizedTime.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Timestamp(pub i64);

impl Timestamp {
    /// Earliest and latest instants representable with a four-digit year.
    pub const MIN: Timestamp = Timestamp(-62_167_219_200);
    pub const MAX: Timestamp = Timestamp(253_402_300_799);

    pub fn now() -> Timestamp {
        Timestamp(Utc::now().timestamp())
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn plus_seconds(self, secs: i64) -> Timestamp {
        Timestamp(self.0.saturating_add(secs))
    }

    pub fn to_generalized_time(self) -> Option<String> {
        if self < Self::MIN || self > Self::MAX {
            return None;
        }
        let dt = DateTime::<Utc>::from_timestamp(self.0, 0)?;
        Some(dt.format("%Y%m%d%H%M%SZ").to_string())
    }

    pub fn from_generalized_time(s: &str) -> Result<Timestamp, DecodeError> {
        const BAD: DecodeError = DecodeError::InvalidValue("GeneralizedTime");
        let digits = s.strip_suffix('Z').ok_or(BAD)?;
        if digits.len() != 14 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(BAD);
        }
        let naive = NaiveDateTime::parse_from_str(digits, "%Y%m%d%H%M%S").map_err(|_| BAD)?;
        Ok(Timestamp(naive.and_utc().timestamp()))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%SZ")),
            None => write!(f, "@{}", self.0),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Content {
    Primitive(Vec<u8>),
    Constructed(Vec<Tlv>),
}

/// One DER element: a tag plus either raw content octets or child elements.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tlv {
    tag: Tag,
    content: Content,
}

impl Tlv {
    /// Builds a primitive element. Panics if `tag` is a constructed tag.
    pub fn primitive(tag: Tag, value: impl Into<Vec<u8>>) -> Tlv {
        assert!(!tag.is_constructed(), "{tag} is constructed");
        Tlv { tag, content: Content::Primitive(value.into()) }
    }

    /// Builds a constructed element. Panics if `tag` is a primitive tag.
    pub fn constructed(tag: Tag, children: Vec<Tlv>) -> Tlv {
        assert!(tag.is_constructed(), "{tag} is primitive");
        Tlv { tag, content: Content::Constructed(children) }
    }

    pub fn sequence(children: Vec<Tlv>) -> Tlv {
        Tlv::constructed(Tag::SEQUENCE, children)
    }

    /// SET OF with elements in DER order (sorted by their encodings).
    pub fn set(mut children: Vec<Tlv>) -> Tlv {
        children.sort_by_cached_key(Tlv::to_der);
        Tlv::constructed(Tag::SET, children)
    }

    /// `[n] EXPLICIT` wrapper.
    pub fn explicit(n: u8, inner: Tlv) -> Tlv {
        Tlv::constructed(Tag::context(n), vec![inner])
    }

    pub fn null() -> Tlv {
        Tlv::primitive(Tag::NULL, Vec::new())
    }

    pub fn boolean(v: bool) -> Tlv {
        Tlv::primitive(Tag::BOOLEAN, vec![if v { 0xff } else { 0x00 }])
    }

    pub fn integer_u64(v: u64) -> Tlv {
        Tlv::unsigned_integer(&v.to_be_bytes())
    }

    /// Non-negative INTEGER from a big-endian magnitude.
    pub fn unsigned_integer(magnitude: &[u8]) -> Tlv {
        let start = magnitude.iter().position(|&b| b != 0).unwrap_or(magnitude.len());
        let trimmed = &magnitude[start..];
        let mut value = Vec::with_capacity(trimmed.len() + 1);
        if trimmed.is_empty() || trimmed[0] & 0x80 != 0 {
            value.push(0);
        }
        value.extend_from_slice(trimmed);
        Tlv::primitive(Tag::INTEGER, value)
    }

    pub fn octet_string(bytes: impl Into<Vec<u8>>) -> Tlv {
        Tlv::primitive(Tag::OCTET_STRING, bytes)
    }

    /// BIT STRING with zero unused bits.
    pub fn bit_string(bytes: &[u8]) -> Tlv {
        let mut value = Vec::with_capacity(bytes.len() + 1);
        value.push(0);
        value.extend_from_slice(bytes);
        Tlv::primitive(Tag::BIT_STRING, value)
    }

    /// BIT STRING holding a named-bit list (bit 0 is the MSB of the first
    /// byte). Trailing zero bits are dropped as DER requires.
    pub fn named_bits(bits: &[usize]) -> Tlv {
        let Some(&max) = bits.iter().max() else {
            return Tlv::primitive(Tag::BIT_STRING, vec![0]);
        };
        let mut bytes = vec![0u8; max / 8 + 1];
        for &b in bits {
            bytes[b / 8] |= 0x80 >> (b % 8);
        }
        let unused = 7 - (max % 8) as u8;
        let mut value = vec![unused];
        value.extend_from_slice(&bytes);
        Tlv::primitive(Tag::BIT_STRING, value)
    }

    pub fn oid(oid: &Oid) -> Tlv {
        Tlv::primitive(Tag::OID, oid.to_der_content())
    }

    pub fn utf8(s: &str) -> Tlv {
        Tlv::primitive(Tag::UTF8_STRING, s.as_bytes())
    }

    /// Panics for instants outside years 0000..=9999.
    pub fn generalized_time(t: Timestamp) -> Tlv {
        let s = t.to_generalized_time().expect("timestamp outside GeneralizedTime range");
        Tlv::primitive(Tag::GENERALIZED_TIME, s.into_bytes())
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn content(&self) -> &Content {
        &self.content
    }

    pub fn into_content(self) -> Content {
        self.content
    }

    /// Length of the content octets.
    pub fn content_len(&self) -> usize {
        match &self.content {
            Content::Primitive(v) => v.len(),
            Content::Constructed(children) => children.iter().map(Tlv::encoded_len).sum(),
        }
    }

    /// Total encoded length: tag + length-of-length + content.
    pub fn encoded_len(&self) -> usize {
        let len = self.content_len();
        1 + length_octets(len) + len
    }

    pub fn to_der(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_der(&mut out);
        out
    }

    pub fn write_der(&self, out: &mut Vec<u8>) {
        out.push(self.tag.0);
        write_length(out, self.content_len());
        match &self.content {
            Content::Primitive(v) => out.extend_from_slice(v),
            Content::Constructed(children) => {
                for c in children {
                    c.write_der(out);
                }
            }
        }
    }

    pub fn expect_tag(&self, tag: Tag) -> Result<&Tlv, DecodeError> {
        if self.tag != tag {
            return Err(DecodeError::UnexpectedTag { expected: tag, found: self.tag });
        }
        Ok(self)
    }

    pub fn children(&self) -> Result<&[Tlv], DecodeError> {
        match &self.content {
            Content::Constructed(c) => Ok(c),
            Content::Primitive(_) => Err(DecodeError::NotConstructed),
        }
    }

    pub fn value(&self) -> Result<&[u8], DecodeError> {
        match &self.content {
            Content::Primitive(v) => Ok(v),
            Content::Constructed(_) => Err(DecodeError::NotPrimitive),
        }
    }

    /// Reader over the children of a constructed element with the given tag.
    pub fn reader(&self, tag: Tag) -> Result<Reader<'_>, DecodeError> {
        Ok(Reader { items: self.expect_tag(tag)?.children()?, pos: 0 })
    }

    /// The single child of an `[n] EXPLICIT` wrapper.
    pub fn explicit_inner(&self, n: u8) -> Result<&Tlv, DecodeError> {
        match self.expect_tag(Tag::context(n))?.children()? {
            [inner] => Ok(inner),
            [] => Err(DecodeError::MissingElement("explicit inner value")),
            _ => Err(DecodeError::ExtraElement("explicit inner value")),
        }
    }

    pub fn as_null(&self) -> Result<(), DecodeError> {
        if self.expect_tag(Tag::NULL)?.value()?.is_empty() {
            Ok(())
        } else {
            Err(DecodeError::InvalidValue("NULL"))
        }
    }

    pub fn as_bool(&self) -> Result<bool, DecodeError> {
        match self.expect_tag(Tag::BOOLEAN)?.value()? {
            [0x00] => Ok(false),
            [0xff] => Ok(true),
            _ => Err(DecodeError::InvalidValue("BOOLEAN")),
        }
    }

    /// Magnitude bytes of a non-negative minimal INTEGER (no sign octet).
    pub fn as_unsigned_bytes(&self) -> Result<&[u8], DecodeError> {
        const BAD: DecodeError = DecodeError::InvalidValue("INTEGER");
        let v = self.expect_tag(Tag::INTEGER)?.value()?;
        match v {
            [] => Err(BAD),
            [b, ..] if b & 0x80 != 0 => Err(BAD),
            [0] => Ok(&v[1..]),
            [0, b, ..] if b & 0x80 == 0 => Err(BAD),
            [0, ..] => Ok(&v[1..]),
            _ => Ok(v),
        }
    }

    pub fn as_u64(&self) -> Result<u64, DecodeError> {
        let mag = self.as_unsigned_bytes()?;
        if mag.len() > 8 {
            return Err(DecodeError::InvalidValue("INTEGER"));
        }
        Ok(mag.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b)))
    }

    pub fn as_octets(&self) -> Result<&[u8], DecodeError> {
        self.expect_tag(Tag::OCTET_STRING)?.value()
    }

    /// Payload of a BIT STRING that has zero unused bits.
    pub fn as_bit_string(&self) -> Result<&[u8], DecodeError> {
        match self.expect_tag(Tag::BIT_STRING)?.value()? {
            [0, rest @ ..] => Ok(rest),
            _ => Err(DecodeError::InvalidValue("BIT STRING")),
        }
    }

    pub fn as_oid(&self) -> Result<Oid, DecodeError> {
        Oid::from_der_content(self.expect_tag(Tag::OID)?.value()?)
    }

    pub fn as_utf8(&self) -> Result<&str, DecodeError> {
        std::str::from_utf8(self.expect_tag(Tag::UTF8_STRING)?.value()?)
            .map_err(|_| DecodeError::InvalidValue("UTF8String"))
    }

    pub fn as_time(&self) -> Result<Timestamp, DecodeError> {
        let v = self.expect_tag(Tag::GENERALIZED_TIME)?.value()?;
        let s = std::str::from_utf8(v).map_err(|_| DecodeError::InvalidValue("GeneralizedTime"))?;
        Timestamp::from_generalized_time(s)
    }
}

/// Sequential access to the children of a constructed element.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    items: &'a [Tlv],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn next(&mut self, what: &'static str) -> Result<&'a Tlv, DecodeError> {
        let item = self.items.get(self.pos).ok_or(DecodeError::MissingElement(what))?;
        self.pos += 1;
        Ok(item)
    }

    /// Consumes the next child only if it carries `tag`.
    pub fn optional(&mut self, tag: Tag) -> Option<&'a Tlv> {
        match self.items.get(self.pos) {
            Some(item) if item.tag == tag => {
                self.pos += 1;
                Some(item)
            }
            _ => None,
        }
    }

    pub fn finish(self, after: &'static str) -> Result<(), DecodeError> {
        if self.pos == self.items.len() {
            Ok(())
        } else {
            Err(DecodeError::ExtraElement(after))
        }
    }
}

fn length_octets(len: usize) -> usize {
    if len < 0x80 {
        1
    } else {
        1 + (usize::BITS as usize / 8 - len.leading_zeros() as usize / 8)
    }
}

fn write_length(out: &mut Vec<u8>, len: usize) {
    if len < 0x80 {
        out.push(len as u8);
        return;
    }
    let bytes = len.to_be_bytes();
    let skip = len.leading_zeros() as usize / 8;
    out.push(0x80 | (bytes.len() - skip) as u8);
    out.extend_from_slice(&bytes[skip..]);
}

/// Decodes exactly one complete element.
pub fn decode(bytes: &[u8]) -> Result<Tlv, DecodeError> {
    let (tlv, used) = decode_prefix(bytes)?;
    if used != bytes.len() {
        return Err(DecodeError::TrailingBytes(bytes.len() - used));
    }
    Ok(tlv)
}

/// Decodes one element from the front of `bytes`, returning it and the
/// number of bytes consumed.
pub fn decode_prefix(bytes: &[u8]) -> Result<(Tlv, usize), DecodeError> {
    decode_at(bytes, 0)
}

fn read_header(bytes: &[u8]) -> Result<(Tag, usize, usize), DecodeError> {
    let (&first, rest) = bytes.split_first().ok_or(DecodeError::Truncated)?;
    let tag = Tag::from_byte(first)?;
    let (&lb, rest) = rest.split_first().ok_or(DecodeError::Truncated)?;
    if lb < 0x80 {
        return Ok((tag, usize::from(lb), 2));
    }
    if lb == 0x80 {
        return Err(DecodeError::IndefiniteLength);
    }
    let n = usize::from(lb & 0x7f);
    if n > std::mem::size_of::<usize>() {
        return Err(DecodeError::LengthOverflow);
    }
    let len_bytes = rest.get(..n).ok_or(DecodeError::Truncated)?;
    if len_bytes[0] == 0 {
        return Err(DecodeError::NonMinimalLength);
    }
    let len = len_bytes.iter().fold(0usize, |acc, &b| (acc << 8) | usize::from(b));
    if len < 0x80 {
        return Err(DecodeError::NonMinimalLength);
    }
    Ok((tag, len, 2 + n))
}

fn decode_at(bytes: &[u8], depth: usize) -> Result<(Tlv, usize), DecodeError> {
    if depth > MAX_DEPTH {
        return Err(DecodeError::TooDeep);
    }
    let (tag, len, header) = read_header(bytes)?;
    let end = header.checked_add(len).ok_or(DecodeError::LengthOverflow)?;
    let body = bytes.get(header..end).ok_or(DecodeError::Truncated)?;
    let content = if tag.is_constructed() {
        let mut children = Vec::new();
        let mut pos = 0;
        while pos < body.len() {
            let (child, used) = decode_at(&body[pos..], depth + 1)?;
            children.push(child);
            pos += used;
        }
        Content::Constructed(children)
    } else {
        Content::Primitive(body.to_vec())
    };
    Ok((Tlv { tag, content }, end))
}

/// Human-readable indented dump of a TLV tree.
pub fn dump(tlv: &Tlv) -> String {
    let mut out = String::new();
    dump_into(&mut out, tlv, 0);
    out
}

fn dump_into(out: &mut String, tlv: &Tlv, depth: usize) {
    let indent = "  ".repeat(depth);
    let len = tlv.content_len();
    match &tlv.content {
        Content::Constructed(children) => {
            let _ = writeln!(out, "{indent}{} ({len} bytes)", tlv.tag);
            for c in children {
                dump_into(out, c, depth + 1);
            }
        }
        Content::Primitive(v) => {
            let rendered = match tlv.tag {
                Tag::OID => tlv.as_oid().map(|o| o.to_string()).ok(),
                Tag::UTF8_STRING => tlv.as_utf8().map(|s| format!("{s:?}")).ok(),
                Tag::GENERALIZED_TIME => tlv.as_time().map(|t| t.to_string()).ok(),
                Tag::INTEGER if v.len() <= 8 => tlv.as_u64().map(|n| n.to_string()).ok(),
                Tag::NULL => Some(String::new()),
                Tag::BOOLEAN => tlv.as_bool().map(|b| b.to_string()).ok(),
                _ => None,
            };
            let rendered = rendered.unwrap_or_else(|| hex_preview(v));
            let _ = writeln!(out, "{indent}{} ({len} bytes) {rendered}", tlv.tag);
        }
    }
}

fn hex_preview(v: &[u8]) -> String {
    const SHOWN: usize = 24;
    let head = hex::encode(&v[..v.len().min(SHOWN)]);
    if v.len() > SHOWN {
        format!("{head}...")
    } else {
        head
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sequence() {
        assert_eq!(Tlv::sequence(vec![]).to_der(), [0x30, 0x00]);
    }

    #[test]
    fn integer_zero() {
        assert_eq!(Tlv::integer_u64(0).to_der(), [0x02, 0x01, 0x00]);
        assert_eq!(decode(&[0x02, 0x01, 0x00]).unwrap().as_u64().unwrap(), 0);
    }

    #[test]
    fn integer_sign_octet() {
        assert_eq!(Tlv::integer_u64(0x80).to_der(), [0x02, 0x02, 0x00, 0x80]);
        assert_eq!(Tlv::integer_u64(0x7f).to_der(), [0x02, 0x01, 0x7f]);
        let bad = decode(&[0x02, 0x02, 0x00, 0x10]).unwrap();
        assert!(bad.as_u64().is_err());
        let neg = decode(&[0x02, 0x01, 0xff]).unwrap();
        assert!(neg.as_u64().is_err());
    }

    #[test]
    fn shake256_oid() {
        // Computed independently: 2*40+16 = 0x60, 840 = 0x86 0x48, then 1.101.3.4.2.12.
        let oid = Oid::from_static(&[2, 16, 840, 1, 101, 3, 4, 2, 12]);
        assert_eq!(Tlv::oid(&oid).to_der(), [0x06, 0x09, 0x60, 0x86, 0x48, 0x01, 0x65, 0x03, 0x04, 0x02, 0x0c]);
        let back = decode(&Tlv::oid(&oid).to_der()).unwrap().as_oid().unwrap();
        assert_eq!(back, oid);
        assert_eq!(back.to_string(), "2.16.840.1.101.3.4.2.12");
    }

    #[test]
    fn oid_rejects_invalid() {
        assert!(Oid::new(vec![1]).is_err());
        assert!(Oid::new(vec![3, 1]).is_err());
        assert!(Oid::new(vec![1, 40]).is_err());
        assert!(Oid::new(vec![2, 999, 3]).is_ok());
        assert!(Oid::from_der_content(&[]).is_err());
        assert!(Oid::from_der_content(&[0x2a, 0x80, 0x01]).is_err());
        assert!(Oid::from_der_content(&[0x2a, 0x86]).is_err());
    }

    #[test]
    fn long_form_lengths() {
        let t = Tlv::octet_string(vec![0u8; 200]);
        assert_eq!(&t.to_der()[..3], &[0x04, 0x81, 200]);
        let t = Tlv::octet_string(vec![0u8; 70_000]);
        assert_eq!(&t.to_der()[..5], &[0x04, 0x83, 0x01, 0x11, 0x70]);
        assert_eq!(t.encoded_len(), 70_005);
    }

    #[test]
    fn distinct_parse_errors() {
        assert_eq!(decode(&[0x30, 0x00, 0x00]), Err(DecodeError::TrailingBytes(1)));
        assert_eq!(decode(&[0x30, 0x80, 0x00, 0x00]), Err(DecodeError::IndefiniteLength));
        assert_eq!(decode(&[0x04, 0x81, 0x05, 1, 2, 3, 4, 5]), Err(DecodeError::NonMinimalLength));
        assert_eq!(decode(&[0x04, 0x82, 0x00, 0x90]), Err(DecodeError::NonMinimalLength));
        assert_eq!(decode(&[0x04, 0x05, 1, 2]), Err(DecodeError::Truncated));
        assert_eq!(decode(&[0x30]), Err(DecodeError::Truncated));
        assert_eq!(decode(&[0x1f, 0x01, 0x00]), Err(DecodeError::HighTagNumber));
    }

    #[test]
    fn depth_limit() {
        let nest = |levels: usize| {
            let mut t = Tlv::null();
            for _ in 0..levels {
                t = Tlv::sequence(vec![t]);
            }
            t.to_der()
        };
        assert!(decode(&nest(MAX_DEPTH)).is_ok());
        assert_eq!(decode(&nest(MAX_DEPTH + 1)), Err(DecodeError::TooDeep));
    }

    #[test]
    fn set_is_sorted() {
        let s = Tlv::set(vec![Tlv::integer_u64(300), Tlv::integer_u64(2)]);
        let der = s.to_der();
        assert_eq!(der, [0x31, 0x07, 0x02, 0x01, 0x02, 0x02, 0x02, 0x01, 0x2c]);
    }

    #[test]
    fn named_bits_trailing_zero_dropped() {
        // digitalSignature(0) + keyEncipherment(2): 101xxxxx, 5 unused bits.
        assert_eq!(Tlv::named_bits(&[0, 2]).to_der(), [0x03, 0x02, 0x05, 0xa0]);
        assert_eq!(Tlv::named_bits(&[5, 6]).to_der(), [0x03, 0x02, 0x01, 0x06]);
    }

    #[test]
    fn generalized_time_is_fifteen_bytes() {
        let t = Timestamp(1_700_000_000);
        let tlv = Tlv::generalized_time(t);
        assert_eq!(tlv.value().unwrap(), b"20231114221320Z");
        assert_eq!(tlv.encoded_len(), 17);
        assert_eq!(tlv.as_time().unwrap(), t);
        assert!(Timestamp::from_generalized_time("2023111422132Z").is_err());
        assert!(Timestamp::from_generalized_time("20231314221320Z").is_err());
    }

    #[test]
    fn reader_tracks_missing_and_extra() {
        let seq = Tlv::sequence(vec![Tlv::integer_u64(1), Tlv::null()]);
        let mut r = seq.reader(Tag::SEQUENCE).unwrap();
        assert_eq!(r.next("version").unwrap().as_u64().unwrap(), 1);
        assert!(r.optional(Tag::BOOLEAN).is_none());
        assert!(r.clone().finish("version").is_err());
        r.next("null").unwrap().as_null().unwrap();
        assert!(r.clone().next("more").is_err());
        r.finish("null").unwrap();
    }

    #[test]
    fn dump_shows_structure() {
        let t = Tlv::sequence(vec![
            Tlv::oid(&Oid::from_static(&[1, 2, 3])),
            Tlv::utf8("Bob"),
            Tlv::octet_string(vec![0xab; 40]),
        ]);
        let text = dump(&t);
        assert!(text.starts_with("SEQUENCE"));
        assert!(text.contains("OBJECT IDENTIFIER (2 bytes) 1.2.3"));
        assert!(text.contains("\"Bob\""));
        assert!(text.contains("abab..."));
    }
}
