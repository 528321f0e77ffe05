//! Text checkpoints:
//!
//! ```text
//! dyngem-checkpoint v1
//! n <n> d <d> K <K>
//! enc <k> <out> <in>
//! <out rows of in values>
//! <bias line>
//! dec <k> <out> <in>
//! …
//! ```
//!
//! Values are written with 17 significant digits so a load reproduces them
//! bit for bit.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::AutoencoderParams;
use crate::error::{Error, Result};
use crate::nn::LayerParams;

const MAGIC: &str = "dyngem-checkpoint v1";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_checkpoint<W: Write>(params: &AutoencoderParams, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "n {} d {} K {}",
        params.n(),
        params.d(),
        params.depth()
    )?;
    for (tag, layers) in [("enc", &params.encoder), ("dec", &params.decoder)] {
        for (k, layer) in layers.iter().enumerate() {
            writeln!(out, "{tag} {k} {} {}", layer.out_dim(), layer.in_dim())?;
            for row in layer.weights.rows() {
                let line: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            let bias: Vec<String> = layer.bias.iter().map(|&v| fmt(v)).collect();
            writeln!(out, "{}", bias.join(" "))?;
        }
    }
    Ok(())
}

pub fn save_checkpoint(params: &AutoencoderParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_checkpoint(params, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<AutoencoderParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a Path,
    current: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            line: self.current,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((idx, line)) => {
                self.current = idx + 1;
                Ok(line)
            }
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn values(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| self.err(format!("invalid number {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != expected {
            return Err(self.err(format!(
                "expected {expected} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    }

    fn layer(&mut self, tag: &str, k: usize) -> Result<LayerParams> {
        let header = self.next_line()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (out, inp) = match fields.as_slice() {
            [t, idx, out, inp] if *t == tag && idx.parse::<usize>().ok() == Some(k) => {
                let out = out
                    .parse::<usize>()
                    .map_err(|_| self.err("invalid layer height"))?;
                let inp = inp
                    .parse::<usize>()
                    .map_err(|_| self.err("invalid layer width"))?;
                (out, inp)
            }
            _ => return Err(self.err(format!("expected `{tag} {k} <out> <in>`, got {header:?}"))),
        };
        let mut weights = Array2::zeros((out, inp));
        for r in 0..out {
            let row = self.values(inp)?;
            weights.row_mut(r).assign(&Array1::from(row));
        }
        let bias = Array1::from(self.values(out)?);
        LayerParams::new(weights, bias).map_err(|e| self.err(e.to_string()))
    }
}

pub fn read_checkpoint(text: &str, origin: &Path) -> Result<AutoencoderParams> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        origin,
        current: 0,
    };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err(format!("missing `{MAGIC}` header")));
    }
    let dims = lines.next_line()?;
    let fields: Vec<&str> = dims.split_whitespace().collect();
    let (n, d, depth) = match fields.as_slice() {
        ["n", n, "d", d, "K", k] => {
            let parse = |s: &str| s.parse::<usize>().ok();
            match (parse(n), parse(d), parse(k)) {
                (Some(n), Some(d), Some(k)) => (n, d, k),
                _ => return Err(lines.err("invalid dimensions line")),
            }
        }
        _ => return Err(lines.err(format!("expected `n <n> d <d> K <K>`, got {dims:?}"))),
    };
    let encoder = (0..depth)
        .map(|k| lines.layer("enc", k))
        .collect::<Result<Vec<_>>>()?;
    let decoder = (0..depth)
        .map(|k| lines.layer("dec", k))
        .collect::<Result<Vec<_>>>()?;
    let params = AutoencoderParams::new(encoder, decoder).map_err(|e| lines.err(e.to_string()))?;
    if params.n() != n || params.d() != d {
        return Err(lines.err(format!(
            "header says n={n} d={d} but layers give n={} d={}",
            params.n(),
            params.d()
        )));
    }
    Ok(params)
}
