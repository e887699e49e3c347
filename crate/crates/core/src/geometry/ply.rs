//! ASCII PLY reading and writing for point clouds.
//!
//! Supported vertex properties: `x y z`, optional `nx ny nz`, optional
//! `red green blue` (uchar).  Coordinates are written in shortest
//! round-trip `f32` notation, so a write→read cycle preserves at least six
//! significant digits.

use super::{Point3, PointCloud};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub fn write_ply(w: &mut impl Write, cloud: &PointCloud) -> Result<()> {
    let n = cloud.len();
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {n}")?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    if cloud.normals.is_some() {
        writeln!(w, "property float nx")?;
        writeln!(w, "property float ny")?;
        writeln!(w, "property float nz")?;
    }
    if cloud.colors.is_some() {
        writeln!(w, "property uchar red")?;
        writeln!(w, "property uchar green")?;
        writeln!(w, "property uchar blue")?;
    }
    writeln!(w, "end_header")?;

    for i in 0..n {
        let p = cloud.points[i];
        write!(w, "{} {} {}", p.x as f32, p.y as f32, p.z as f32)?;
        if let Some(nrm) = &cloud.normals {
            let m = nrm[i];
            write!(w, " {} {} {}", m.x as f32, m.y as f32, m.z as f32)?;
        }
        if let Some(cols) = &cloud.colors {
            let c = cols[i];
            write!(w, " {} {} {}", c[0], c[1], c[2])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Prop {
    X,
    Y,
    Z,
    Nx,
    Ny,
    Nz,
    Red,
    Green,
    Blue,
    Ignored,
}

pub fn read_ply(r: &mut impl BufRead) -> Result<PointCloud> {
    let mut lines = r.lines();
    let magic = next_line(&mut lines)?;
    if magic.trim() != "ply" {
        return Err(Error::format("not a PLY file (missing 'ply' magic)"));
    }

    let mut format_seen = false;
    // (name, count, vertex properties if this is the vertex element)
    let mut elements: Vec<(String, usize, Vec<Prop>)> = Vec::new();

    loop {
        let line = next_line(&mut lines)?;
        let line = line.trim();
        if line == "end_header" {
            break;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                let kind = tok.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(Error::format(format!("unsupported PLY format '{kind}'")));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| Error::format("element without name"))?;
                let count: usize = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::format("element without count"))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            Some("property") => {
                let (name, count, props) = elements
                    .last_mut()
                    .ok_or_else(|| Error::format("property before any element"))?;
                let ty = tok.next().unwrap_or("");
                let pname = tok.last().unwrap_or("");
                if name == "vertex" {
                    if ty == "list" {
                        return Err(Error::format("list properties on vertices are unsupported"));
                    }
                    props.push(match pname {
                        "x" => Prop::X,
                        "y" => Prop::Y,
                        "z" => Prop::Z,
                        "nx" => Prop::Nx,
                        "ny" => Prop::Ny,
                        "nz" => Prop::Nz,
                        "red" => Prop::Red,
                        "green" => Prop::Green,
                        "blue" => Prop::Blue,
                        _ => Prop::Ignored,
                    });
                }
                let _ = count;
            }
            Some(other) => {
                return Err(Error::format(format!("unexpected header line '{other}'")));
            }
        }
    }
    if !format_seen {
        return Err(Error::format("header has no format line"));
    }

    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut colors = Vec::new();
    let mut has_normals = false;
    let mut has_colors = false;

    for (name, count, props) in &elements {
        if name != "vertex" {
            // Foreign elements (faces, edges…): consume and discard.
            for _ in 0..*count {
                next_line(&mut lines)?;
            }
            continue;
        }
        has_normals = props.contains(&Prop::Nx);
        has_colors = props.contains(&Prop::Red);
        let want_n = props.contains(&Prop::Nx) as u8
            + props.contains(&Prop::Ny) as u8
            + props.contains(&Prop::Nz) as u8;
        if want_n != 0 && want_n != 3 {
            return Err(Error::format("vertex normals must have all of nx ny nz"));
        }
        let want_c = props.contains(&Prop::Red) as u8
            + props.contains(&Prop::Green) as u8
            + props.contains(&Prop::Blue) as u8;
        if want_c != 0 && want_c != 3 {
            return Err(Error::format("vertex colors must have all of red green blue"));
        }
        if !(props.contains(&Prop::X) && props.contains(&Prop::Y) && props.contains(&Prop::Z)) {
            return Err(Error::format("vertex element lacks x/y/z"));
        }

        for row in 0..*count {
            let line = next_line(&mut lines)
                .map_err(|_| Error::format(format!("vertex {row}: unexpected end of file")))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < props.len() {
                return Err(Error::format(format!(
                    "vertex {row}: {} fields, header declares {}",
                    fields.len(),
                    props.len()
                )));
            }
            let mut p = Point3::ZERO;
            let mut nrm = Point3::ZERO;
            let mut col = [0u8; 3];
            for (slot, prop) in props.iter().enumerate() {
                let field = fields[slot];
                match prop {
                    Prop::Ignored => {}
                    Prop::Red | Prop::Green | Prop::Blue => {
                        let v: u8 = field.parse().map_err(|_| {
                            Error::format(format!("vertex {row}: bad color value '{field}'"))
                        })?;
                        match prop {
                            Prop::Red => col[0] = v,
                            Prop::Green => col[1] = v,
                            _ => col[2] = v,
                        }
                    }
                    _ => {
                        let v: f64 = field.parse().map_err(|_| {
                            Error::format(format!("vertex {row}: bad float '{field}'"))
                        })?;
                        match prop {
                            Prop::X => p.x = v,
                            Prop::Y => p.y = v,
                            Prop::Z => p.z = v,
                            Prop::Nx => nrm.x = v,
                            Prop::Ny => nrm.y = v,
                            Prop::Nz => nrm.z = v,
                            _ => unreachable!(),
                        }
                    }
                }
            }
            points.push(p);
            if has_normals {
                normals.push(nrm);
            }
            if has_colors {
                colors.push(col);
            }
        }
    }

    PointCloud::new(
        points,
        has_normals.then_some(normals),
        has_colors.then_some(colors),
    )
}

fn next_line(lines: &mut std::io::Lines<impl BufRead>) -> Result<String> {
    loop {
        match lines.next() {
            None => return Err(Error::format("unexpected end of PLY stream")),
            Some(Err(e)) => return Err(Error::Io(e)),
            Some(Ok(l)) => {
                if !l.trim().is_empty() {
                    return Ok(l);
                }
            }
        }
    }
}
