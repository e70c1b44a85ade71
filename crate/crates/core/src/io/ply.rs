//! Minimal PLY reader covering ASCII and binary encodings.
//!
//! Only the subset needed by the point-cloud and mesh loaders is supported:
//! scalar and list properties of the standard numeric types. Element counts
//! in the header are treated as untrusted; no allocation is sized from them
//! before the corresponding bytes have actually been read.

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    BinaryLittleEndian,
    BinaryBigEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, ScalarType::F32 | ScalarType::F64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub kind: PropertyKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementDef {
    pub name: String,
    pub count: usize,
    pub properties: Vec<Property>,
}

impl ElementDef {
    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

impl Value {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(v) => Some(*v),
            Value::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[f64]> {
        match self {
            Value::List(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub def: ElementDef,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ply {
    pub encoding: Encoding,
    pub elements: Vec<Element>,
}

impl Ply {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.def.name == name)
    }
}

/// Largest list length accepted from a file; a triangle mesh needs 3.
const MAX_LIST_LEN: usize = 1 << 16;

struct Header {
    encoding: Encoding,
    elements: Vec<ElementDef>,
    body_offset: usize,
    /// Number of header lines, used to report ASCII body line numbers.
    lines: usize,
}

fn header_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<ElementDef> = Vec::new();

    loop {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| header_err(line_no + 1, "unterminated PLY header"))?;
        let raw = &rest[..end];
        offset += end + 1;
        line_no += 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| header_err(line_no, "header is not valid UTF-8"))?
            .trim_end_matches('\r')
            .trim();

        if line_no == 1 {
            if line != "ply" {
                return Err(header_err(1, "missing `ply` magic"));
            }
            continue;
        }

        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        match keyword {
            "format" => {
                let fmt = tokens.next().unwrap_or("");
                encoding = Some(match fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLittleEndian,
                    "binary_big_endian" => Encoding::BinaryBigEndian,
                    other => return Err(header_err(line_no, format!("unknown format `{other}`"))),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| header_err(line_no, "element without name"))?;
                let count = tokens
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| header_err(line_no, "element without valid count"))?;
                elements.push(ElementDef {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let ty = tokens
                    .next()
                    .ok_or_else(|| header_err(line_no, "property without type"))?;
                let kind = if ty == "list" {
                    let count = tokens.next().and_then(ScalarType::parse);
                    let item = tokens.next().and_then(ScalarType::parse);
                    match (count, item) {
                        (Some(count), Some(item)) if count.is_integer() => {
                            PropertyKind::List { count, item }
                        }
                        _ => return Err(header_err(line_no, "malformed list property")),
                    }
                } else {
                    PropertyKind::Scalar(
                        ScalarType::parse(ty)
                            .ok_or_else(|| header_err(line_no, format!("unknown type `{ty}`")))?,
                    )
                };
                let name = tokens
                    .next()
                    .ok_or_else(|| header_err(line_no, "property without name"))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            "end_header" => break,
            other => return Err(header_err(line_no, format!("unexpected header keyword `{other}`"))),
        }
    }

    let encoding = encoding.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
        lines: line_no,
    })
}

/// Parse a complete PLY file from memory.
pub fn parse(bytes: &[u8]) -> Result<Ply> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let elements = match header.encoding {
        Encoding::Ascii => parse_ascii_body(body, &header)?,
        Encoding::BinaryLittleEndian => parse_binary_body::<LittleEndian>(body, &header.elements)?,
        Encoding::BinaryBigEndian => parse_binary_body::<BigEndian>(body, &header.elements)?,
    };
    Ok(Ply {
        encoding: header.encoding,
        elements,
    })
}

fn parse_ascii_body(body: &[u8], header: &Header) -> Result<Vec<Element>> {
    let text = std::str::from_utf8(body).map_err(|_| Error::Format("PLY body is not valid UTF-8".into()))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (header.lines + i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut out = Vec::with_capacity(header.elements.len());
    for def in &header.elements {
        let mut rows = Vec::new();
        for _ in 0..def.count {
            let (line_no, line) = lines.next().ok_or_else(|| {
                Error::Format(format!("PLY body ended before all `{}` rows", def.name))
            })?;
            let mut tokens = line.split_whitespace();
            let mut next_num = |ty: ScalarType| -> Result<f64> {
                let tok = tokens
                    .next()
                    .ok_or_else(|| header_err(line_no, "too few values"))?;
                let v: f64 = tok
                    .parse()
                    .map_err(|_| header_err(line_no, format!("invalid number `{tok}`")))?;
                if ty.is_integer() && v.fract() != 0.0 {
                    return Err(header_err(line_no, format!("expected integer, got `{tok}`")));
                }
                Ok(v)
            };
            let mut row = Vec::with_capacity(def.properties.len());
            for prop in &def.properties {
                match prop.kind {
                    PropertyKind::Scalar(ty) => row.push(Value::Scalar(next_num(ty)?)),
                    PropertyKind::List { count, item } => {
                        let n = next_num(count)?;
                        if !(0.0..=MAX_LIST_LEN as f64).contains(&n) {
                            return Err(header_err(line_no, "list length out of range"));
                        }
                        let mut items = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            items.push(next_num(item)?);
                        }
                        row.push(Value::List(items));
                    }
                }
            }
            rows.push(row);
        }
        out.push(Element {
            def: def.clone(),
            rows,
        });
    }
    Ok(out)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Format("PLY binary body truncated".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn read<B: ByteOrder>(&mut self, ty: ScalarType) -> Result<f64> {
        let b = self.take(ty.size())?;
        Ok(match ty {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => B::read_i16(b) as f64,
            ScalarType::U16 => B::read_u16(b) as f64,
            ScalarType::I32 => B::read_i32(b) as f64,
            ScalarType::U32 => B::read_u32(b) as f64,
            ScalarType::F32 => B::read_f32(b) as f64,
            ScalarType::F64 => B::read_f64(b),
        })
    }
}

fn parse_binary_body<B: ByteOrder>(body: &[u8], defs: &[ElementDef]) -> Result<Vec<Element>> {
    let mut cur = Cursor { data: body, pos: 0 };
    let mut out = Vec::with_capacity(defs.len());
    for def in defs {
        let mut rows = Vec::new();
        for _ in 0..def.count {
            let mut row = Vec::with_capacity(def.properties.len());
            for prop in &def.properties {
                match prop.kind {
                    PropertyKind::Scalar(ty) => row.push(Value::Scalar(cur.read::<B>(ty)?)),
                    PropertyKind::List { count, item } => {
                        let n = cur.read::<B>(count)?;
                        if !(0.0..=MAX_LIST_LEN as f64).contains(&n) {
                            return Err(Error::Format("PLY list length out of range".into()));
                        }
                        let n = n as usize;
                        if (body.len() - cur.pos) < n * item.size() {
                            return Err(Error::Format("PLY binary body truncated".into()));
                        }
                        let mut items = Vec::with_capacity(n);
                        for _ in 0..n {
                            items.push(cur.read::<B>(item)?);
                        }
                        row.push(Value::List(items));
                    }
                }
            }
            rows.push(row);
        }
        out.push(Element {
            def: def.clone(),
            rows,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_vertices_and_faces() {
        let src = b"ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let ply = parse(src).unwrap();
        assert_eq!(ply.encoding, Encoding::Ascii);
        let v = ply.element("vertex").unwrap();
        assert_eq!(v.rows.len(), 3);
        assert_eq!(v.rows[1][0], Value::Scalar(1.0));
        let f = ply.element("face").unwrap();
        assert_eq!(f.rows[0][0].as_list().unwrap(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn binary_big_endian_scalar() {
        let mut src = b"ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty double x\nend_header\n".to_vec();
        src.extend_from_slice(&2.5f64.to_be_bytes());
        let ply = parse(&src).unwrap();
        assert_eq!(ply.element("vertex").unwrap().rows[0][0], Value::Scalar(2.5));
    }

    #[test]
    fn huge_count_does_not_allocate_up_front() {
        let src = b"ply\nformat binary_little_endian 1.0\nelement vertex 18446744073709551615\nproperty float x\nend_header\n";
        assert!(parse(src).is_err());
    }

    #[test]
    fn rejects_missing_magic_and_bad_types() {
        assert!(parse(b"plx\nend_header\n").is_err());
        assert!(parse(b"ply\nformat ascii 1.0\nelement v 1\nproperty quad x\nend_header\n").is_err());
        assert!(parse(b"ply\nformat ascii 1.0\n").is_err());
    }
}
