//! The `zkb1` container: little-endian integers, 32-byte big-endian field
//! elements, sections in a fixed order and a trailing sponge checksum.
//!
//! ```text
//! magic "zkb1" | version u16 | prime [32] | w u8 | alg u8 | n u32 | m u32 | l u32 | iteration u32
//! layout digest [32]
//! publics: count u32, elements
//! system: num_public u32, num_witness u32, count u32, per constraint A B C as
//!         (terms u32, (var u32, coeff [32]) sorted by var)
//! witness: flag u8, then count u32 and the witness-only elements
//! checksum [32]
//! ```

use std::io::{self, Write};

use num_bigint::BigUint;

use crate::commitment::SpongeParams;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::inference::Algorithm;
use crate::r1cs::{Constraint, ConstraintSystem, LinearCombination, VarId, VarKind, Witness};

use super::{assemble_witness, Dims, PublicParams};

pub const BUNDLE_MAGIC: &[u8; 4] = b"zkb1";
pub const BUNDLE_VERSION: u16 = 1;
const CHUNK: usize = 31;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleHeader {
    pub version: u16,
    pub prime: [u8; 32],
    pub w: u32,
    pub alg: Algorithm,
    pub dims: Dims,
    pub iteration: u32,
}

impl BundleHeader {
    pub fn new(pp: &PublicParams, alg: Algorithm, dims: Dims, iteration: u32) -> Self {
        BundleHeader { version: BUNDLE_VERSION, prime: pp.field.modulus_be_bytes(), w: pp.w(), alg, dims, iteration }
    }
}

#[derive(Clone, Debug)]
pub struct ProofBundle {
    pub header: BundleHeader,
    pub layout_digest: [u8; 32],
    pub public_inputs: Vec<FieldElement>,
    pub cs: ConstraintSystem,
    /// Full assignment; absent in witness-stripped bundles.
    pub witness: Option<Witness>,
}

impl PartialEq for ProofBundle {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header
            && self.layout_digest == other.layout_digest
            && self.public_inputs == other.public_inputs
            && self.cs == other.cs
            && self.cs.num_public() == other.cs.num_public()
            && self.witness == other.witness
    }
}

fn put_u32(out: &mut impl Write, v: usize) -> io::Result<()> {
    let v = u32::try_from(v).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "length exceeds u32"))?;
    out.write_all(&v.to_le_bytes())
}

fn put_lc(out: &mut impl Write, lc: &LinearCombination) -> io::Result<()> {
    put_u32(out, lc.len())?;
    for (var, coeff) in lc.terms() {
        out.write_all(&var.index.to_le_bytes())?;
        out.write_all(&coeff.to_be_bytes())?;
    }
    Ok(())
}

/// The system section; also the input of the layout digest.
pub(crate) fn write_system(out: &mut impl Write, cs: &ConstraintSystem) -> io::Result<()> {
    put_u32(out, cs.num_public())?;
    put_u32(out, cs.num_witness())?;
    put_u32(out, cs.num_constraints())?;
    for con in cs.constraints() {
        put_lc(out, &con.a)?;
        put_lc(out, &con.b)?;
        put_lc(out, &con.c)?;
    }
    Ok(())
}

/// Sponge digest of a byte string: its length, then 31-byte big-endian chunks.
pub fn byte_checksum(sponge: &SpongeParams, bytes: &[u8]) -> [u8; 32] {
    let f = sponge.field();
    let mut elems = Vec::with_capacity(bytes.len() / CHUNK + 2);
    elems.push(FieldElement::from_u64(bytes.len() as u64));
    for chunk in bytes.chunks(CHUNK) {
        let mut buf = [0u8; 32];
        buf[32 - chunk.len()..].copy_from_slice(chunk);
        elems.push(f.from_be_bytes(&buf).expect("31 bytes are below the modulus"));
    }
    sponge.hash(&elems).to_be_bytes()
}

impl ProofBundle {
    /// Canonical encoding; byte-identical for equal bundles.
    pub fn export(&self, sponge: &SpongeParams, include_witness: bool) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_body(&mut out, include_witness)?;
        let sum = byte_checksum(sponge, &out);
        out.extend_from_slice(&sum);
        Ok(out)
    }

    fn write_body(&self, out: &mut Vec<u8>, include_witness: bool) -> io::Result<()> {
        let h = &self.header;
        out.write_all(BUNDLE_MAGIC)?;
        out.write_all(&h.version.to_le_bytes())?;
        out.write_all(&h.prime)?;
        out.push(u8::try_from(h.w).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "w exceeds u8"))?);
        out.push(h.alg.code());
        put_u32(out, h.dims.n)?;
        put_u32(out, h.dims.m)?;
        out.write_all(&h.dims.l.to_le_bytes())?;
        out.write_all(&h.iteration.to_le_bytes())?;
        out.write_all(&self.layout_digest)?;
        put_u32(out, self.public_inputs.len())?;
        for x in &self.public_inputs {
            out.write_all(&x.to_be_bytes())?;
        }
        write_system(out, &self.cs)?;
        match (&self.witness, include_witness) {
            (Some(w), true) => {
                out.push(1);
                let tail = &w.assignment[1 + self.cs.num_public()..];
                put_u32(out, tail.len())?;
                for x in tail {
                    out.write_all(&x.to_be_bytes())?;
                }
            }
            _ => out.push(0),
        }
        Ok(())
    }

    pub fn import(sponge: &SpongeParams, bytes: &[u8]) -> Result<ProofBundle> {
        if bytes.len() < 4 + 2 + 32 {
            return Err(Error::Format("bundle is truncated".into()));
        }
        if &bytes[..4] != BUNDLE_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != BUNDLE_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let (body, sum) = bytes.split_at(bytes.len() - 32);
        if byte_checksum(sponge, body) != sum {
            return Err(Error::Format("checksum mismatch".into()));
        }
        let mut r = Reader { bytes: body, pos: 6 };
        let prime: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let field = Field::new(&BigUint::from_bytes_be(&prime)).map_err(|e| Error::Format(e.to_string()))?;
        let w = r.u8()? as u32;
        let alg = Algorithm::from_code(r.u8()?).ok_or_else(|| Error::Format("unknown algorithm code".into()))?;
        let dims = Dims { n: r.u32()? as usize, m: r.u32()? as usize, l: r.u32()? };
        let iteration = r.u32()?;
        let layout_digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let num_pub = r.u32()? as usize;
        let public_inputs = (0..num_pub).map(|_| r.element(&field)).collect::<Result<Vec<_>>>()?;
        let cs_public = r.u32()? as usize;
        if cs_public != num_pub {
            return Err(Error::Format("public input count disagrees with the system".into()));
        }
        let num_witness = r.u32()? as usize;
        let num_vars = 1 + num_pub + num_witness;
        let count = r.u32()? as usize;
        let mut constraints = Vec::with_capacity(count.min(body.len() / 12));
        for _ in 0..count {
            let a = r.lc(&field, num_pub, num_vars)?;
            let b = r.lc(&field, num_pub, num_vars)?;
            let c = r.lc(&field, num_pub, num_vars)?;
            constraints.push(Constraint { a, b, c });
        }
        let cs = ConstraintSystem::from_parts(field, num_pub, num_witness, constraints)?;
        let witness = match r.u8()? {
            0 => None,
            1 => {
                let len = r.u32()? as usize;
                if len != num_witness {
                    return Err(Error::Format("witness length disagrees with the system".into()));
                }
                let tail = (0..len).map(|_| r.element(&field)).collect::<Result<Vec<_>>>()?;
                Some(assemble_witness(&public_inputs, tail))
            }
            _ => return Err(Error::Format("bad witness flag".into())),
        };
        if r.pos != body.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        let header = BundleHeader { version, prime, w, alg, dims, iteration };
        Ok(ProofBundle { header, layout_digest, public_inputs, cs, witness })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("bundle is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn element(&mut self, field: &Field) -> Result<FieldElement> {
        let raw: &[u8; 32] = self.take(32)?.try_into().expect("32 bytes");
        field.from_be_bytes(raw).map_err(|_| Error::Format("field element is not reduced".into()))
    }

    fn lc(&mut self, field: &Field, num_pub: usize, num_vars: usize) -> Result<LinearCombination> {
        let len = self.u32()? as usize;
        let mut terms = Vec::with_capacity(len.min(num_vars));
        let mut last: Option<u32> = None;
        for _ in 0..len {
            let index = self.u32()?;
            if last.is_some_and(|p| p >= index) {
                return Err(Error::Format("linear combination is not sorted".into()));
            }
            if index as usize >= num_vars {
                return Err(Error::Format(format!("variable {index} is not allocated")));
            }
            let coeff = self.element(field)?;
            if coeff.is_zero() {
                return Err(Error::Format("zero coefficient".into()));
            }
            let kind = match index as usize {
                0 => VarKind::One,
                i if i <= num_pub => VarKind::Public,
                _ => VarKind::Witness,
            };
            terms.push((VarId { index, kind }, coeff));
            last = Some(index);
        }
        Ok(LinearCombination::from_terms(field, terms))
    }
}
