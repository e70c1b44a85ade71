use std::fs;
use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::io::ply;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    /// Binary little-endian, `float` coordinates, optional `quality`.
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            _ => Err(Error::Format(format!("unknown mesh format for {}", path.display()))),
        }
    }
}

pub fn write_mesh(mesh: &TriangleMesh, path: &Path, format: MeshFormat) -> Result<()> {
    mesh.validate()?;
    let bytes = match format {
        MeshFormat::Obj => to_obj(mesh),
        MeshFormat::Ply => to_ply(mesh),
    };
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Read a mesh, choosing the parser by extension.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let format = MeshFormat::from_path(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => {
            let text = std::str::from_utf8(&bytes).map_err(|_| Error::Format("OBJ is not UTF-8".into()))?;
            parse_obj(text)
        }
        MeshFormat::Ply => parse_ply_mesh(&bytes),
    }
}

fn to_obj(mesh: &TriangleMesh) -> Vec<u8> {
    let mut s = String::new();
    for v in &mesh.vertices {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    s.into_bytes()
}

fn to_ply(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::new();
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n",
        mesh.vertices.len()
    );
    if mesh.scalar.is_some() {
        header.push_str("property float quality\n");
    }
    header.push_str(&format!(
        "element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.faces.len()
    ));
    out.extend_from_slice(header.as_bytes());
    for (i, v) in mesh.vertices.iter().enumerate() {
        for d in 0..3 {
            out.write_f32::<LittleEndian>(v[d] as f32).unwrap();
        }
        if let Some(s) = &mesh.scalar {
            out.write_f32::<LittleEndian>(s[i] as f32).unwrap();
        }
    }
    for f in &mesh.faces {
        out.push(3);
        for &i in f {
            out.write_i32::<LittleEndian>(i as i32).unwrap();
        }
    }
    out
}

/// `v` and `f` records; polygons are fan-triangulated, texture and normal indices ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad coordinate {t:?}"))))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(err("non-finite coordinate".into()));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in it {
                    let head = t.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| err(format!("bad index {t:?}")))?;
                    let n = vertices.len() as i64;
                    let resolved = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || resolved < 0 || resolved >= n {
                        return Err(err(format!("index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(err("face needs at least three vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mesh = TriangleMesh {
        vertices,
        faces,
        scalar: None,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Vertex `x y z [quality]` and face `vertex_indices` (or `vertex_index`) lists.
pub fn parse_ply_mesh(bytes: &[u8]) -> Result<TriangleMesh> {
    let ply = ply::parse(bytes)?;
    let vert = ply
        .element("vertex")
        .ok_or_else(|| Error::Format("PLY has no vertex element".into()))?;
    let col = |name: &str| vert.def.property_index(name);
    let (x, y, z) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Format("vertex element lacks x, y or z".into())),
    };
    let quality = col("quality");
    let mut vertices = Vec::with_capacity(vert.rows.len());
    let mut scalar = quality.map(|_| Vec::with_capacity(vert.rows.len()));
    let num = |v: &ply::Value| v.as_scalar().ok_or_else(|| Error::Format("expected a scalar property".into()));
    for row in &vert.rows {
        vertices.push(Vec3::new(num(&row[x])?, num(&row[y])?, num(&row[z])?));
        if let (Some(q), Some(s)) = (quality, scalar.as_mut()) {
            s.push(num(&row[q])?);
        }
    }
    let mut faces = Vec::new();
    if let Some(face) = ply.element("face") {
        let li = face
            .def
            .property_index("vertex_indices")
            .or_else(|| face.def.property_index("vertex_index"))
            .ok_or_else(|| Error::Format("face element lacks vertex_indices".into()))?;
        for (fi, row) in face.rows.iter().enumerate() {
            let list = row[li].as_list().ok_or_else(|| Error::Format("vertex_indices is not a list".into()))?;
            if list.len() < 3 {
                return Err(Error::Format(format!("face {fi} has fewer than three vertices")));
            }
            let mut idx = Vec::with_capacity(list.len());
            for &v in list {
                if v < 0.0 || v.fract() != 0.0 || v >= vertices.len() as f64 {
                    return Err(Error::Format(format!("face {fi} references vertex {v}")));
                }
                idx.push(v as u32);
            }
            for k in 1..idx.len() - 1 {
                faces.push([idx[0], idx[k], idx[k + 1]]);
            }
        }
    }
    let mesh = TriangleMesh {
        vertices,
        faces,
        scalar,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::mesh::marching_cubes;

    fn triangle() -> TriangleMesh {
        TriangleMesh::new(vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.5)], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn obj_single_triangle() {
        let text = String::from_utf8(to_obj(&triangle())).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).collect::<Vec<_>>(), vec!["f 1 2 3"]);
        assert_eq!(parse_obj(&text).unwrap(), triangle());
    }

    #[test]
    fn sphere_round_trips_in_both_formats() {
        let mut m = marching_cubes(&|x: &Vec3| x.norm() - 1.0, 0.1, &[Aabb::new(Vec3::repeat(-1.2), Vec3::repeat(1.2))]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (name, fmt) in [("a.obj", MeshFormat::Obj), ("a.ply", MeshFormat::Ply)] {
            let p = dir.path().join(name);
            write_mesh(&m, &p, fmt).unwrap();
            let r = read_mesh(&p).unwrap();
            assert_eq!(r.faces, m.faces);
            for (a, b) in r.vertices.iter().zip(&m.vertices) {
                assert!((a - b).norm() < 1e-6);
            }
        }
        m.scalar = Some((0..m.vertices.len()).map(|i| i as f64 * 0.5).collect());
        let p = dir.path().join("q.ply");
        write_mesh(&m, &p, MeshFormat::Ply).unwrap();
        let r = read_mesh(&p).unwrap();
        assert_eq!(r.scalar, m.scalar);
    }

    #[test]
    fn empty_mesh_writes_valid_files() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["e.obj", "e.ply"] {
            let p = dir.path().join(name);
            write_mesh(&TriangleMesh::default(), &p, MeshFormat::from_path(&p).unwrap()).unwrap();
            assert_eq!(read_mesh(&p).unwrap(), TriangleMesh::default());
        }
    }

    #[test]
    fn obj_polygons_and_errors() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 -1\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(matches!(parse_obj("v 0 0 0\nf 1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_obj("v 0 nan 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(MeshFormat::from_path(Path::new("x.stl")).is_err());
    }
}
