//! JSON interchange for sampled symbols.
//!
//! Only the samples are written; carried jets are dropped and re-imported
//! symbols are differentiated spectrally.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ClassicalSymbol, HomogeneousTerm};
use crate::error::{Error, Result};
use crate::fiber::C64;
use crate::manifold::ModelManifold;

pub const FORMAT: &str = "psdo-symbol";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermRecord {
    pub degree: i32,
    /// Complex samples as `[re, im]`, row-major over point, direction, row, column.
    pub samples: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SymbolRecord {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub n: usize,
    pub dirs: usize,
    pub fiber: usize,
    pub degrees: Vec<i32>,
    pub terms: Vec<TermRecord>,
}

impl SymbolRecord {
    pub fn from_symbol(symbol: &ClassicalSymbol) -> Self {
        let m = symbol.manifold();
        Self {
            format: FORMAT.into(),
            version: VERSION,
            dim: m.dim(),
            n: m.n(),
            dirs: m.dirs(),
            fiber: symbol.fiber(),
            degrees: symbol.terms().iter().map(|t| t.degree()).collect(),
            terms: symbol
                .terms()
                .iter()
                .map(|t| TermRecord {
                    degree: t.degree(),
                    samples: t.samples().iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_symbol(&self) -> Result<ClassicalSymbol> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported symbol format {} v{}",
                self.format, self.version
            )));
        }
        let manifold = ModelManifold::new(self.dim, self.n, self.dirs)?;
        if self.degrees.len() != self.terms.len()
            || self.degrees.iter().zip(&self.terms).any(|(d, t)| *d != t.degree)
        {
            return Err(Error::InvalidInput("degree list does not match the terms".into()));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let data = t.samples.iter().map(|&[re, im]| C64::new(re, im)).collect();
                HomogeneousTerm::from_parts(manifold, t.degree, self.fiber, 0, data)
            })
            .collect::<Result<Vec<_>>>()?;
        ClassicalSymbol::new(terms)
    }
}

pub fn write_json<W: Write>(symbol: &ClassicalSymbol, out: W) -> Result<()> {
    serde_json::to_writer(out, &SymbolRecord::from_symbol(symbol))?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<ClassicalSymbol> {
    let record: SymbolRecord = serde_json::from_reader(input)?;
    record.to_symbol()
}
