//! Plain-text mesh format:
//!
//! ```text
//! vertices N triangles M boundary_edges K omega W
//! x y                      (N lines)
//! a b c                    (M lines, newest vertex first)
//! a b nx ny segment        (K lines)
//! ```
//!
//! Floats are written with 17 significant digits so a round trip is exact.
//! Bisection genealogy is not stored.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::{BoundaryEdge, Mesh};

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Mesh {
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "vertices {} triangles {} boundary_edges {} omega {}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len(),
            fmt_f64(self.omega)
        )?;
        for p in &self.vertices {
            writeln!(w, "{} {}", fmt_f64(p[0]), fmt_f64(p[1]))?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary_edges {
            writeln!(
                w,
                "{} {} {} {} {}",
                e.vertices[0],
                e.vertices[1],
                fmt_f64(e.normal[0]),
                fmt_f64(e.normal[1]),
                e.segment
            )?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Mesh> {
        let mut lines = r.lines().enumerate();
        let mut next_line = || -> Result<(usize, String)> {
            loop {
                match lines.next() {
                    Some((i, l)) => {
                        let l = l?;
                        if !l.trim().is_empty() {
                            return Ok((i + 1, l));
                        }
                    }
                    None => {
                        return Err(Error::Parse {
                            line: 0,
                            msg: "unexpected end of file".into(),
                        })
                    }
                }
            }
        };
        let (ln, header) = next_line()?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 8
            || tok[0] != "vertices"
            || tok[2] != "triangles"
            || tok[4] != "boundary_edges"
            || tok[6] != "omega"
        {
            return Err(Error::Parse {
                line: ln,
                msg: format!("bad header {header:?}"),
            });
        }
        let n: usize = parse(tok[1], ln)?;
        let m: usize = parse(tok[3], ln)?;
        let k: usize = parse(tok[5], ln)?;
        let omega: f64 = parse(tok[7], ln)?;

        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = next_line()?;
            let f = fields::<f64>(&l, 2, ln)?;
            vertices.push([f[0], f[1]]);
        }
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = next_line()?;
            let f = fields::<u32>(&l, 3, ln)?;
            if f.iter().any(|&v| v as usize >= n) {
                return Err(Error::Parse {
                    line: ln,
                    msg: "vertex index out of range".into(),
                });
            }
            triangles.push([f[0], f[1], f[2]]);
        }
        let mut boundary_edges = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, l) = next_line()?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            if tok.len() != 5 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "expected 5 fields".into(),
                });
            }
            let a: u32 = parse(tok[0], ln)?;
            let b: u32 = parse(tok[1], ln)?;
            if a as usize >= n || b as usize >= n {
                return Err(Error::Parse {
                    line: ln,
                    msg: "vertex index out of range".into(),
                });
            }
            boundary_edges.push(BoundaryEdge {
                vertices: [a, b],
                normal: [parse(tok[2], ln)?, parse(tok[3], ln)?],
                segment: parse(tok[4], ln)?,
            });
        }
        let corner = vertices
            .iter()
            .position(|p| p[0] == 0.0 && p[1] == 0.0)
            .ok_or_else(|| Error::Invalid("mesh has no vertex at the origin".into()))?;
        Mesh::assemble(
            vertices,
            triangles,
            boundary_edges,
            vec![None; n],
            omega,
            corner as u32,
        )
    }
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {s:?}"),
    })
}

fn fields<T: std::str::FromStr>(l: &str, count: usize, line: usize) -> Result<Vec<T>> {
    let v = l
        .split_whitespace()
        .map(|s| parse(s, line))
        .collect::<Result<Vec<T>>>()?;
    if v.len() != count {
        return Err(Error::Parse {
            line,
            msg: format!("expected {count} fields, found {}", v.len()),
        });
    }
    Ok(v)
}
