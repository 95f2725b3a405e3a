//! Frontier snapshot for offline plotting.
//!
//! A text header of `key value` lines ending with `end`:
//!
//! ```text
//! TVSSNAP1
//! n 128
//! a 3.14159
//! b 3.14159
//! seed 7
//! runs 412
//! components 35
//! end
//! ```
//!
//! then a little-endian payload: `runs` u32 run lengths over the `n × n` dual
//! cells in row-major order, alternating off/on and starting with off; then per
//! component `id: u32, size: u32, label: i8, mixed: u8`.

use std::io::{BufRead, Write};

use super::{Level, TvsApprox};
use crate::{Error, Result};

const MAGIC: &str = "TVSSNAP1";

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRecord {
    pub id: u32,
    pub size: u32,
    pub label: Level,
    pub mixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvsSnapshot {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    /// Row-major `n × n` frontier mask.
    pub mask: Vec<bool>,
    pub components: Vec<ComponentRecord>,
}

fn run_lengths(mask: &[bool]) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut state = false;
    let mut len = 0u32;
    for &m in mask {
        if m != state {
            runs.push(len);
            state = m;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);
    runs
}

impl TvsApprox {
    pub fn write_snapshot<W: Write>(&self, mut w: W, seed: u64) -> Result<()> {
        let cells = self.n * self.n;
        let mut mask = vec![false; cells];
        for &c in self.frontier_cells() {
            mask[c as usize] = true;
        }
        let runs = run_lengths(&mask);
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "n {}", self.n)?;
        writeln!(w, "a {:?}", self.params.a())?;
        writeln!(w, "b {:?}", self.params.b())?;
        writeln!(w, "seed {seed}")?;
        writeln!(w, "runs {}", runs.len())?;
        writeln!(w, "components {}", self.components.len())?;
        writeln!(w, "end")?;
        for r in runs {
            w.write_all(&r.to_le_bytes())?;
        }
        for c in &self.components {
            w.write_all(&(c.id() as u32).to_le_bytes())?;
            w.write_all(&(c.len() as u32).to_le_bytes())?;
            w.write_all(&c.label().sign().to_le_bytes())?;
            w.write_all(&[u8::from(c.is_mixed())])?;
        }
        Ok(())
    }
}

fn header_value<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    let rest = line
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("expected `{key}`, found `{line}`")))?;
    rest.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad value for `{key}`: `{rest}`")))
}

pub fn read_snapshot<R: BufRead>(mut r: R) -> Result<TvsSnapshot> {
    let mut lines = Vec::new();
    loop {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("header ended early".into()));
        }
        let line = line.trim_end().to_string();
        if line == "end" {
            break;
        }
        lines.push(line);
        if lines.len() > 16 {
            return Err(Error::Format("header too long".into()));
        }
    }
    if lines.len() != 7 || lines[0] != MAGIC {
        return Err(Error::Format("not a frontier snapshot".into()));
    }
    let n: usize = header_value(&lines[1], "n")?;
    let a: f64 = header_value(&lines[2], "a")?;
    let b: f64 = header_value(&lines[3], "b")?;
    let seed: u64 = header_value(&lines[4], "seed")?;
    let run_count: usize = header_value(&lines[5], "runs")?;
    let component_count: usize = header_value(&lines[6], "components")?;
    let cells = n * n;
    if run_count > cells + 1 || component_count > cells {
        return Err(Error::Format("implausible counts".into()));
    }
    let mut word = [0u8; 4];
    let mut mask = Vec::with_capacity(cells);
    for k in 0..run_count {
        r.read_exact(&mut word)?;
        let len = u32::from_le_bytes(word) as usize;
        if mask.len() + len > cells {
            return Err(Error::Format("runs overflow the mask".into()));
        }
        mask.extend(std::iter::repeat_n(k % 2 == 1, len));
    }
    if mask.len() != cells {
        return Err(Error::Format("runs do not cover the mask".into()));
    }
    let mut components = Vec::with_capacity(component_count);
    for _ in 0..component_count {
        r.read_exact(&mut word)?;
        let id = u32::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let size = u32::from_le_bytes(word);
        let mut tail = [0u8; 2];
        r.read_exact(&mut tail)?;
        let label = match tail[0] as i8 {
            -1 => Level::Lower,
            1 => Level::Upper,
            x => return Err(Error::Format(format!("bad label {x}"))),
        };
        components.push(ComponentRecord {
            id,
            size,
            label,
            mixed: tail[1] != 0,
        });
    }
    Ok(TvsSnapshot {
        n,
        a,
        b,
        seed,
        mask,
        components,
    })
}
