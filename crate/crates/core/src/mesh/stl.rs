//! Binary and ASCII STL reading and writing.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{is_finite, Vec3};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [Vec3; 3],
    pub normal: Option<Vec3>,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Self {
            vertices: [a, b, c],
            normal: None,
        }
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal from the winding, or zero for a zero-area triangle.
    pub fn geometric_normal(&self) -> Vec3 {
        let [a, b, c] = &self.vertices;
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }
}

/// Triangles in file order, as read from STL.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleSoup {
    pub triangles: Vec<Triangle>,
}

impl TriangleSoup {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        Self { triangles }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Indices of zero-area triangles. They are kept on load and only flagged.
    pub fn degenerate_triangles(&self) -> Vec<usize> {
        self.triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| t.area() == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = &Vec3> {
        self.triangles.iter().flat_map(|t| t.vertices.iter())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StlError {
    #[error("file is {len} bytes, shorter than the 84-byte binary STL preamble")]
    TooShort { len: usize },
    #[error("truncated binary STL: header declares {declared} triangles but record {record} is missing ({len} bytes)")]
    Truncated {
        declared: u32,
        /// 1-based ordinal of the first missing record.
        record: usize,
        len: usize,
    },
    #[error("binary STL declares {declared} triangles ({expected} bytes) but file is {len} bytes")]
    CountMismatch {
        declared: u32,
        expected: usize,
        len: usize,
    },
    #[error("non-finite coordinate in triangle {triangle}")]
    NonFinite { triangle: usize },
    #[error("ASCII STL parse error at line {line} (byte {offset}): {message}")]
    Ascii {
        line: usize,
        offset: usize,
        message: String,
    },
}

/// Reads an STL file, detecting the binary or ASCII flavour.
///
/// A file is treated as binary when its length matches the declared
/// triangle count exactly (`84 + 50·n`), or when it does not begin with
/// `solid`. Some binary exporters write `solid` into the header, so the
/// size check takes precedence over the keyword.
pub fn load_stl(bytes: &[u8]) -> Result<TriangleSoup, StlError> {
    if looks_ascii(bytes) && !binary_size_consistent(bytes) {
        parse_ascii(bytes)
    } else {
        parse_binary(bytes)
    }
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let trimmed = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .map(|i| &bytes[i..])
        .unwrap_or(&[]);
    trimmed.starts_with(b"solid")
}

fn binary_size_consistent(bytes: &[u8]) -> bool {
    if bytes.len() < HEADER_LEN + 4 {
        return false;
    }
    let count = read_u32(bytes, HEADER_LEN) as usize;
    count
        .checked_mul(RECORD_LEN)
        .and_then(|n| n.checked_add(HEADER_LEN + 4))
        == Some(bytes.len())
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_vec3(bytes: &[u8], at: usize) -> Vec3 {
    let f = |o: usize| f32::from_le_bytes(bytes[at + o..at + o + 4].try_into().unwrap()) as f64;
    Vec3::new(f(0), f(4), f(8))
}

fn parse_binary(bytes: &[u8]) -> Result<TriangleSoup, StlError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(StlError::TooShort { len: bytes.len() });
    }
    let declared = read_u32(bytes, HEADER_LEN);
    let body = bytes.len() - HEADER_LEN - 4;
    let expected = HEADER_LEN + 4 + declared as usize * RECORD_LEN;
    if body < declared as usize * RECORD_LEN {
        return Err(StlError::Truncated {
            declared,
            record: body / RECORD_LEN + 1,
            len: bytes.len(),
        });
    }
    if bytes.len() != expected {
        return Err(StlError::CountMismatch {
            declared,
            expected,
            len: bytes.len(),
        });
    }

    let mut triangles = Vec::with_capacity(declared as usize);
    for i in 0..declared as usize {
        let at = HEADER_LEN + 4 + i * RECORD_LEN;
        let normal = read_vec3(bytes, at);
        let tri = Triangle {
            vertices: [
                read_vec3(bytes, at + 12),
                read_vec3(bytes, at + 24),
                read_vec3(bytes, at + 36),
            ],
            normal: Some(normal),
        };
        if !tri.vertices.iter().all(is_finite) {
            return Err(StlError::NonFinite { triangle: i });
        }
        triangles.push(tri);
    }
    Ok(TriangleSoup { triangles })
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(&'a str, usize, usize)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            if bytes[self.pos] == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Some((&self.text[start..self.pos], self.line, start))
    }

    /// Rest of the current line, used for the optional solid name.
    fn skip_line(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
    }

    fn error(&self, line: usize, offset: usize, message: impl Into<String>) -> StlError {
        StlError::Ascii {
            line,
            offset,
            message: message.into(),
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<(), StlError> {
        match self.next() {
            Some((tok, _, _)) if tok.eq_ignore_ascii_case(keyword) => Ok(()),
            Some((tok, line, off)) => {
                Err(self.error(line, off, format!("expected `{keyword}`, found `{tok}`")))
            }
            None => Err(self.error(self.line, self.pos, format!("expected `{keyword}`, found end of file"))),
        }
    }

    fn number(&mut self) -> Result<f64, StlError> {
        match self.next() {
            Some((tok, line, off)) => match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.error(line, off, format!("invalid number `{tok}`"))),
            },
            None => Err(self.error(self.line, self.pos, "expected a number, found end of file")),
        }
    }

    fn vec3(&mut self) -> Result<Vec3, StlError> {
        Ok(Vec3::new(self.number()?, self.number()?, self.number()?))
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<TriangleSoup, StlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| StlError::Ascii {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    let mut toks = Tokens {
        text,
        pos: 0,
        line: 1,
    };
    toks.expect("solid")?;
    toks.skip_line();

    let mut triangles = Vec::new();
    loop {
        match toks.next() {
            Some((tok, _, _)) if tok.eq_ignore_ascii_case("facet") => {
                toks.expect("normal")?;
                let normal = toks.vec3()?;
                toks.expect("outer")?;
                toks.expect("loop")?;
                let mut vertices = [Vec3::zeros(); 3];
                for v in &mut vertices {
                    toks.expect("vertex")?;
                    *v = toks.vec3()?;
                }
                toks.expect("endloop")?;
                toks.expect("endfacet")?;
                triangles.push(Triangle {
                    vertices,
                    normal: Some(normal),
                });
            }
            Some((tok, _, _)) if tok.eq_ignore_ascii_case("endsolid") => break,
            Some((tok, line, off)) => {
                return Err(toks.error(line, off, format!("expected `facet` or `endsolid`, found `{tok}`")))
            }
            None => return Err(toks.error(toks.line, toks.pos, "missing `endsolid`")),
        }
    }
    Ok(TriangleSoup { triangles })
}

/// Writes ASCII STL. Vertex coordinates are printed in the shortest form that
/// reads back bit-identically; normals are narrowed to `f32`.
pub fn write_ascii_stl(soup: &TriangleSoup, name: &str) -> String {
    let mut out = String::with_capacity(64 + soup.len() * 256);
    let _ = writeln!(out, "solid {name}");
    for tri in &soup.triangles {
        let n = tri.normal.unwrap_or_else(|| tri.geometric_normal());
        let _ = writeln!(out, "  facet normal {} {} {}", n.x as f32, n.y as f32, n.z as f32);
        out.push_str("    outer loop\n");
        for v in &tri.vertices {
            let _ = writeln!(out, "      vertex {} {} {}", v.x, v.y, v.z);
        }
        out.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(out, "endsolid {name}");
    out
}

pub fn write_binary_stl(soup: &TriangleSoup) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + soup.len() * RECORD_LEN);
    let mut header = [b' '; HEADER_LEN];
    header[..10].copy_from_slice(b"binary stl");
    out.extend_from_slice(&header);
    out.extend_from_slice(&(soup.len() as u32).to_le_bytes());
    for tri in &soup.triangles {
        let n = tri.normal.unwrap_or_else(|| tri.geometric_normal());
        for v in std::iter::once(&n).chain(tri.vertices.iter()) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}
