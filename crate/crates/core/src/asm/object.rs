//! Object images and their binary container.
//!
//! ```text
//! "MCRL"  version(1)=0x01  flags(1)  entry(2)  origin(2)  code_len(2 | 4)
//! code bytes
//! macro_count(1)  { opcode(1)  length(1)  body bytes }*
//! ```
//!
//! Multi-byte fields are high byte first. Flag bit 0 marks a raw packed
//! byte string rather than an executable; bit 1 widens `code_len` to four
//! bytes for packed inputs over 64 KiB.

use thiserror::Error;

use super::MACRO_BASE;
use crate::compact::MAX_MACROS;

pub const MAGIC: &[u8; 4] = b"MCRL";
pub const VERSION: u8 = 0x01;
pub const FLAG_RAW: u8 = 0x01;
pub const FLAG_LONG: u8 = 0x02;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObjectError {
    #[error("not an object file (bad magic)")]
    BadMagic,
    #[error("unsupported object version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unknown flag bits {0:#04x}")]
    UnknownFlags(u8),
    #[error("object file truncated while reading {0}")]
    Truncated(&'static str),
    #[error("{0} trailing bytes after macro table")]
    TrailingBytes(usize),
    #[error("macro body {0} longer than 255 bytes")]
    BodyTooLong(usize),
    #[error("{0} macros exceed the opcode space")]
    TooManyMacros(usize),
    #[error("code of {0} bytes needs the long-length flag, which only raw images may use")]
    CodeTooLong(usize),
    #[error("macro {index} has opcode {opcode:#04x}; executable opcodes run densely from 0x50")]
    NotDense { index: usize, opcode: u8 },
    #[error("macro {0} contains a macro opcode in its first byte")]
    NestedBody(usize),
    #[error("raw packed image is not executable")]
    RawImage,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroEntry {
    pub opcode: u8,
    pub body: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectImage {
    pub entry: u16,
    pub origin: u16,
    pub code: Vec<u8>,
    pub macros: Vec<MacroEntry>,
    pub raw: bool,
}

impl ObjectImage {
    /// `||M||`: total bytes of macro bodies.
    pub fn table_bytes(&self) -> usize {
        self.macros.iter().map(|m| m.body.len()).sum()
    }

    pub fn macro_body(&self, opcode: u8) -> Option<&[u8]> {
        self.macros.iter().find(|m| m.opcode == opcode).map(|m| m.body.as_slice())
    }

    /// Executable images: opcodes dense from `0x50`, no raw flag, bodies
    /// that do not open with a macro opcode.
    pub fn validate_executable(&self) -> Result<(), ObjectError> {
        if self.raw {
            return Err(ObjectError::RawImage);
        }
        if self.macros.len() > MAX_MACROS {
            return Err(ObjectError::TooManyMacros(self.macros.len()));
        }
        for (i, m) in self.macros.iter().enumerate() {
            if usize::from(m.opcode) != usize::from(MACRO_BASE) + i {
                return Err(ObjectError::NotDense {
                    index: i,
                    opcode: m.opcode,
                });
            }
            if m.body.first().is_some_and(|&b| b >= MACRO_BASE) {
                return Err(ObjectError::NestedBody(i));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ObjectError> {
        let long = self.code.len() > 0xFFFF;
        if long && !self.raw {
            return Err(ObjectError::CodeTooLong(self.code.len()));
        }
        if self.macros.len() > MAX_MACROS {
            return Err(ObjectError::TooManyMacros(self.macros.len()));
        }
        let mut out = Vec::with_capacity(16 + self.code.len() + self.table_bytes() + 2 * self.macros.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        let mut flags = 0;
        if self.raw {
            flags |= FLAG_RAW;
        }
        if long {
            flags |= FLAG_LONG;
        }
        out.push(flags);
        out.extend(self.entry.to_be_bytes());
        out.extend(self.origin.to_be_bytes());
        if long {
            out.extend((self.code.len() as u32).to_be_bytes());
        } else {
            out.extend((self.code.len() as u16).to_be_bytes());
        }
        out.extend_from_slice(&self.code);
        out.push(self.macros.len() as u8);
        for (i, m) in self.macros.iter().enumerate() {
            let len = u8::try_from(m.body.len()).map_err(|_| ObjectError::BodyTooLong(i))?;
            out.push(m.opcode);
            out.push(len);
            out.extend_from_slice(&m.body);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ObjectImage, ObjectError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(ObjectError::BadMagic);
        }
        let version = r.u8("version")?;
        if version != VERSION {
            return Err(ObjectError::UnsupportedVersion(version));
        }
        let flags = r.u8("flags")?;
        if flags & !(FLAG_RAW | FLAG_LONG) != 0 {
            return Err(ObjectError::UnknownFlags(flags));
        }
        let entry = r.u16("entry")?;
        let origin = r.u16("origin")?;
        let len = if flags & FLAG_LONG != 0 {
            u32::from_be_bytes(r.take(4, "code length")?.try_into().unwrap()) as usize
        } else {
            usize::from(r.u16("code length")?)
        };
        let code = r.take(len, "code")?.to_vec();
        let count = usize::from(r.u8("macro count")?);
        if count > MAX_MACROS {
            return Err(ObjectError::TooManyMacros(count));
        }
        let mut macros = Vec::with_capacity(count);
        for _ in 0..count {
            let opcode = r.u8("macro opcode")?;
            let n = usize::from(r.u8("macro length")?);
            macros.push(MacroEntry {
                opcode,
                body: r.take(n, "macro body")?.to_vec(),
            });
        }
        if r.pos != bytes.len() {
            return Err(ObjectError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(ObjectImage {
            entry,
            origin,
            code,
            macros,
            raw: flags & FLAG_RAW != 0,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ObjectError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(ObjectError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, ObjectError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, ObjectError> {
        let b = self.take(2, what)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ObjectImage {
        ObjectImage {
            entry: 0x0100,
            origin: 0x0100,
            code: vec![0x50, 0x2A, 0x04, 0x00],
            macros: vec![MacroEntry {
                opcode: 0x50,
                body: vec![0x32, 0x94],
            }],
            raw: false,
        }
    }

    #[test]
    fn exact_layout() {
        let b = sample().to_bytes().unwrap();
        assert_eq!(
            b,
            vec![
                b'M', b'C', b'R', b'L', 0x01, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00, 0x04, 0x50, 0x2A, 0x04,
                0x00, 0x01, 0x50, 0x02, 0x32, 0x94
            ]
        );
        assert_eq!(ObjectImage::from_bytes(&b).unwrap(), sample());
    }

    #[test]
    fn malformed_inputs() {
        let b = sample().to_bytes().unwrap();
        assert_eq!(ObjectImage::from_bytes(&b[..b.len() - 1]), Err(ObjectError::Truncated("macro body")));
        assert_eq!(ObjectImage::from_bytes(b"XXXX"), Err(ObjectError::BadMagic));
        let mut v = b.clone();
        v[4] = 2;
        assert_eq!(ObjectImage::from_bytes(&v), Err(ObjectError::UnsupportedVersion(2)));
        let mut v = b.clone();
        v.push(0);
        assert_eq!(ObjectImage::from_bytes(&v), Err(ObjectError::TrailingBytes(1)));
    }

    #[test]
    fn executable_checks() {
        let mut img = sample();
        assert!(img.validate_executable().is_ok());
        img.macros[0].opcode = 0x51;
        assert!(matches!(img.validate_executable(), Err(ObjectError::NotDense { .. })));
        let mut img = sample();
        img.raw = true;
        assert_eq!(img.validate_executable(), Err(ObjectError::RawImage));
        let mut img = sample();
        img.code = vec![0; 0x10000];
        assert_eq!(img.to_bytes(), Err(ObjectError::CodeTooLong(0x10000)));
    }

    proptest! {
        #[test]
        fn round_trip(code in proptest::collection::vec(any::<u8>(), 0..300),
                      bodies in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..20), 0..5),
                      raw in any::<bool>()) {
            let img = ObjectImage {
                entry: 7,
                origin: 0x200,
                code,
                macros: bodies.into_iter().enumerate().map(|(i, body)| MacroEntry { opcode: 0x50 + i as u8, body }).collect(),
                raw,
            };
            prop_assert_eq!(ObjectImage::from_bytes(&img.to_bytes().unwrap()).unwrap(), img);
        }
    }
}
