//! ASCII point cloud formats: XYZ, PLY 1.0 and the curvature CSV.

use std::io::{BufRead, Write};

use varifold_curvature::{Error, Result};

/// Formats with 9 significant digits, `%.9g` style. NaN prints as `NaN`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-5..9).contains(&exponent) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exponent.abs())
    } else {
        let decimals = (8 - exponent).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_floats(line: &str, number: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse { line: number, message: format!("`{tok}` is not a number") })
        })
        .collect()
}

/// Reads `n` whitespace-separated coordinates per line. Blank lines and
/// everything after `#` are ignored.
pub fn read_xyz(reader: impl BufRead, n: usize) -> Result<Vec<f64>> {
    let mut positions = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let number = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let values = parse_floats(content, number)?;
        if values.len() != n {
            return Err(Error::Parse {
                line: number,
                message: format!("expected {n} coordinates, found {}", values.len()),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse { line: number, message: format!("non-finite coordinate {bad}") });
        }
        positions.extend(values);
    }
    if positions.is_empty() {
        return Err(Error::Parse { line: 0, message: "no points in input".into() });
    }
    Ok(positions)
}

pub fn write_xyz(mut writer: impl Write, positions: &[f64], n: usize) -> Result<()> {
    for p in positions.chunks(n) {
        let line: Vec<String> = p.iter().map(|v| format_float(*v)).collect();
        writeln!(writer, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Vertex data of an ASCII PLY file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlyCloud {
    pub positions: Vec<f64>,
    pub normals: Option<Vec<f64>>,
}

/// Reads the `vertex` element of an ASCII 1.0 PLY file. Properties other
/// than `x y z nx ny nz` are skipped, as are elements declared after the
/// vertices.
pub fn read_ply(reader: impl BufRead) -> Result<PlyCloud> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((number, line)) => Ok((number, line?)),
            None => Err(Error::Parse { line: 0, message: format!("unexpected end of file, expected {expect}") }),
        }
    };
    let (number, magic) = next("`ply`")?;
    if magic.trim() != "ply" {
        return Err(Error::Parse { line: number, message: "missing `ply` magic".into() });
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut properties: Vec<String> = Vec::new();
    loop {
        let (number, line) = next("`end_header`")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", "1.0"] => {}
            ["format", other, ..] => {
                return Err(Error::Parse { line: number, message: format!("unsupported PLY format `{other}`") });
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    let count = count
                        .parse::<usize>()
                        .map_err(|_| Error::Parse { line: number, message: format!("bad vertex count `{count}`") })?;
                    vertex_count = Some(count);
                }
            }
            ["property", "list", ..] => {
                if in_vertex {
                    return Err(Error::Parse { line: number, message: "list properties on vertices are not supported".into() });
                }
            }
            ["property", _, name] => {
                if in_vertex {
                    properties.push((*name).to_string());
                }
            }
            _ => return Err(Error::Parse { line: number, message: format!("unrecognized header line `{line}`") }),
        }
    }
    let count = vertex_count.ok_or(Error::Parse { line: 0, message: "no vertex element".into() })?;
    let column = |name: &str| properties.iter().position(|p| p == name);
    let (Some(ix), Some(iy), Some(iz)) = (column("x"), column("y"), column("z")) else {
        return Err(Error::Parse { line: 0, message: "vertex element lacks x, y, z".into() });
    };
    let normal_columns = match (column("nx"), column("ny"), column("nz")) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    let mut positions = Vec::with_capacity(3 * count);
    let mut normals = normal_columns.map(|_| Vec::with_capacity(3 * count));
    for _ in 0..count {
        let (number, line) = next("vertex data")?;
        let values = parse_floats(&line, number)?;
        if values.len() != properties.len() {
            return Err(Error::Parse {
                line: number,
                message: format!("expected {} values, found {}", properties.len(), values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse { line: number, message: "non-finite vertex value".into() });
        }
        positions.extend([values[ix], values[iy], values[iz]]);
        if let (Some(cols), Some(out)) = (normal_columns, normals.as_mut()) {
            out.extend(cols.iter().map(|&c| values[c]));
        }
    }
    if count == 0 {
        return Err(Error::Parse { line: 0, message: "no points in input".into() });
    }
    Ok(PlyCloud { positions, normals })
}

/// Optional per-vertex payload of a written PLY file.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlyExtras<'a> {
    pub normals: Option<&'a [f64]>,
    pub colors: Option<&'a [[u8; 3]]>,
    pub quality: Option<&'a [f64]>,
}

/// Writes an ASCII PLY file with three-dimensional vertices.
pub fn write_ply(mut writer: impl Write, positions: &[f64], extras: PlyExtras<'_>) -> Result<()> {
    let count = positions.len() / 3;
    writeln!(writer, "ply")?;
    writeln!(writer, "format ascii 1.0")?;
    writeln!(writer, "element vertex {count}")?;
    for name in ["x", "y", "z"] {
        writeln!(writer, "property float {name}")?;
    }
    if extras.normals.is_some() {
        for name in ["nx", "ny", "nz"] {
            writeln!(writer, "property float {name}")?;
        }
    }
    if extras.colors.is_some() {
        for name in ["red", "green", "blue"] {
            writeln!(writer, "property uchar {name}")?;
        }
    }
    if extras.quality.is_some() {
        writeln!(writer, "property float quality")?;
    }
    writeln!(writer, "end_header")?;
    for i in 0..count {
        let mut fields: Vec<String> = positions[3 * i..3 * i + 3].iter().map(|v| format_float(*v)).collect();
        if let Some(normals) = extras.normals {
            fields.extend(normals[3 * i..3 * i + 3].iter().map(|v| format_float(*v)));
        }
        if let Some(colors) = extras.colors {
            fields.extend(colors[i].iter().map(|c| c.to_string()));
        }
        if let Some(quality) = extras.quality {
            fields.push(format_float(quality[i]));
        }
        writeln!(writer, "{}", fields.join(" "))?;
    }
    Ok(())
}
