//! Sponge-hash commitments over a width-5 x^5 permutation, natively and in-circuit.

use std::sync::OnceLock;

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use crate::builder::{Builder, Lc};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};

/// The bundled parameter set for the default 254-bit prime.
pub const BUNDLED_PARAMS: &str = include_str!("../params/poseidon_bn254_t5.params");

const FORMAT_TAG: &str = "zkti-sponge-params";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpongeParams {
    field: Field,
    width: usize,
    full_rounds: usize,
    partial_rounds: usize,
    round_constants: Vec<FieldElement>,
    mds: Vec<Vec<FieldElement>>,
    /// Montgomery forms of the above for the native permutation.
    rc_mont: Vec<[u64; 4]>,
    mds_mont: Vec<Vec<[u64; 4]>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::SpongeParams(msg.into())
}

fn parse_hex(field: &Field, s: &str) -> Result<FieldElement> {
    let raw = hex::decode(s).map_err(|e| bad(format!("bad hex `{s}`: {e}")))?;
    if raw.len() > 32 {
        return Err(bad(format!("constant `{s}` is longer than 32 bytes")));
    }
    let mut buf = [0u8; 32];
    buf[32 - raw.len()..].copy_from_slice(&raw);
    field.from_be_bytes(&buf).map_err(|_| bad(format!("constant `{s}` is not reduced")))
}

struct Lines<'a> {
    iter: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.iter.next().ok_or_else(|| bad("unexpected end of parameter file"))
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| bad(format!("expected `{key}`, found `{line}`")))
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        self.keyed(key)?.trim().parse().map_err(|_| bad(format!("`{key}` is not a number")))
    }
}

impl SpongeParams {
    /// Parses and validates a versioned, checksummed parameter file.
    pub fn parse(text: &str) -> Result<Self> {
        let body_end = text.rfind("sha256 ").ok_or_else(|| bad("missing checksum line"))?;
        let (body, tail) = text.split_at(body_end);
        let expected = tail.trim_start_matches("sha256 ").trim();
        let actual = hex::encode(Sha256::digest(body.as_bytes()));
        if expected != actual {
            return Err(bad("checksum mismatch"));
        }
        let mut lines = Lines { iter: body.lines().peekable() };
        if lines.keyed("format")? != FORMAT_TAG {
            return Err(bad("unknown format tag"));
        }
        let version = lines.keyed_usize("version")?;
        if version != FORMAT_VERSION as usize {
            return Err(bad(format!("unsupported version {version}")));
        }
        let prime = BigUint::parse_bytes(lines.keyed("prime")?.as_bytes(), 16).ok_or_else(|| bad("bad prime"))?;
        let field = Field::new(&prime)?;
        let width = lines.keyed_usize("width")?;
        let full_rounds = lines.keyed_usize("full_rounds")?;
        let partial_rounds = lines.keyed_usize("partial_rounds")?;
        let alpha = lines.keyed_usize("alpha")?;
        if alpha != 5 {
            return Err(bad(format!("only the x^5 S-box is supported, got alpha={alpha}")));
        }
        if width < 2 || full_rounds % 2 != 0 {
            return Err(bad("width must be at least 2 and full rounds even"));
        }
        let count = lines.keyed_usize("round_constants")?;
        if count != width * (full_rounds + partial_rounds) {
            return Err(bad(format!("expected {} round constants, got {count}", width * (full_rounds + partial_rounds))));
        }
        let round_constants = (0..count)
            .map(|_| lines.next_line().and_then(|l| parse_hex(&field, l.trim())))
            .collect::<Result<Vec<_>>>()?;
        if lines.keyed_usize("mds")? != width {
            return Err(bad("MDS matrix size does not match width"));
        }
        let mds = (0..width)
            .map(|_| {
                let row = lines.next_line()?.split_whitespace().map(|h| parse_hex(&field, h)).collect::<Result<Vec<_>>>()?;
                if row.len() == width {
                    Ok(row)
                } else {
                    Err(bad("MDS row has the wrong length"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if lines.iter.peek().is_some_and(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data before checksum"));
        }
        let rc_mont = round_constants.iter().map(|c| field.to_montgomery(*c)).collect();
        let mds_mont = mds.iter().map(|row| row.iter().map(|c| field.to_montgomery(*c)).collect()).collect();
        Ok(SpongeParams { field, width, full_rounds, partial_rounds, round_constants, mds, rc_mont, mds_mont })
    }

    /// The bundled set (parsed once).
    pub fn bn254() -> &'static SpongeParams {
        static PARAMS: OnceLock<SpongeParams> = OnceLock::new();
        PARAMS.get_or_init(|| SpongeParams::parse(BUNDLED_PARAMS).expect("bundled parameters are valid"))
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rate(&self) -> usize {
        self.width - 1
    }

    fn rounds(&self) -> usize {
        self.full_rounds + self.partial_rounds
    }

    fn is_full(&self, round: usize) -> bool {
        let half = self.full_rounds / 2;
        round < half || round >= half + self.partial_rounds
    }

    #[inline]
    fn pow5(&self, x: &[u64; 4]) -> [u64; 4] {
        let f = &self.field;
        let x2 = f.mont_product(x, x);
        let x4 = f.mont_product(&x2, &x2);
        f.mont_product(&x4, x)
    }

    pub fn permute(&self, state: &mut [FieldElement]) {
        let f = &self.field;
        let t = self.width;
        assert_eq!(state.len(), t);
        let mut cur: Vec<[u64; 4]> = state.iter().map(|x| f.to_montgomery(*x)).collect();
        let mut next = vec![[0u64; 4]; t];
        for round in 0..self.rounds() {
            for (i, x) in cur.iter_mut().enumerate() {
                *x = f.add_limbs_mod(x, &self.rc_mont[round * t + i]);
            }
            if self.is_full(round) {
                for x in cur.iter_mut() {
                    *x = self.pow5(x);
                }
            } else {
                cur[0] = self.pow5(&cur[0]);
            }
            for (i, out) in next.iter_mut().enumerate() {
                let mut acc = [0u64; 4];
                for (m, y) in self.mds_mont[i].iter().zip(&cur) {
                    acc = f.add_limbs_mod(&acc, &f.mont_product(m, y));
                }
                *out = acc;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        for (x, y) in state.iter_mut().zip(&cur) {
            *x = f.from_montgomery(y);
        }
    }

    /// Sponge: the capacity slot starts at the message length, the message is
    /// absorbed in zero-padded rate-sized chunks (at least one), and the first
    /// state element is squeezed.
    pub fn hash(&self, message: &[FieldElement]) -> FieldElement {
        let f = &self.field;
        let mut state = vec![FieldElement::ZERO; self.width];
        state[0] = FieldElement::from_u64(message.len() as u64);
        let mut chunks: Vec<&[FieldElement]> = message.chunks(self.rate()).collect();
        if chunks.is_empty() {
            chunks.push(&[]);
        }
        for chunk in chunks {
            for (slot, x) in state[1..].iter_mut().zip(chunk) {
                *slot = f.add(*slot, *x);
            }
            self.permute(&mut state);
        }
        state[0]
    }

    /// Number of permutation calls for a message of `len` elements.
    pub fn permutations_for(&self, len: usize) -> usize {
        len.div_ceil(self.rate()).max(1)
    }

    fn synth_permute(&self, b: &mut Builder, state: Vec<Lc>) -> Result<Vec<Lc>> {
        let f = self.field;
        let mut state = state;
        for round in 0..self.rounds() {
            for (i, x) in state.iter_mut().enumerate() {
                *x = x.add_const(&f, self.round_constants[round * self.width + i]);
            }
            let active = if self.is_full(round) { self.width } else { 1 };
            for x in state.iter_mut().take(active) {
                let x2 = b.mul("sbox x^2", x, x)?;
                let x4 = b.mul("sbox x^4", &x2, &x2)?;
                *x = b.mul("sbox x^5", &x4, x)?;
            }
            let mixed: Vec<Lc> = (0..self.width)
                .map(|i| {
                    self.mds[i].iter().zip(&state).fold(Lc::zero(), |acc, (m, y)| acc.add_scaled(&f, y, *m))
                })
                .collect();
            state = Vec::with_capacity(self.width);
            for lc in &mixed {
                state.push(b.materialize("mds", lc)?.into());
            }
        }
        Ok(state)
    }

    /// In-circuit sponge over the same layout as [`SpongeParams::hash`].
    pub fn synth_hash(&self, b: &mut Builder, message: &[Lc]) -> Result<Lc> {
        if b.field() != self.field {
            return Err(bad("builder field differs from the sponge field"));
        }
        let f = self.field;
        let mut state = vec![Lc::zero(); self.width];
        state[0] = Lc::constant(FieldElement::from_u64(message.len() as u64));
        let mut chunks: Vec<&[Lc]> = message.chunks(self.rate()).collect();
        if chunks.is_empty() {
            chunks.push(&[]);
        }
        for chunk in chunks {
            for (slot, x) in state[1..].iter_mut().zip(chunk) {
                *slot = slot.add(&f, x);
            }
            state = self.synth_permute(b, state)?;
        }
        Ok(state.swap_remove(0))
    }
}

/// A commitment digest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub digest: FieldElement,
}

pub fn sponge_hash(params: &SpongeParams, message: &[FieldElement]) -> FieldElement {
    params.hash(message)
}

/// `hash(randomness || message)`
pub fn commit(params: &SpongeParams, message: &[FieldElement], randomness: FieldElement) -> Commitment {
    let mut input = Vec::with_capacity(message.len() + 1);
    input.push(randomness);
    input.extend_from_slice(message);
    Commitment { digest: params.hash(&input) }
}

/// Constrains `commitment = hash(randomness || message)`.
pub fn synth_open(b: &mut Builder, params: &SpongeParams, commitment: &Lc, message: &[Lc], randomness: &Lc) -> Result<()> {
    let mut input = Vec::with_capacity(message.len() + 1);
    input.push(randomness.clone());
    input.extend_from_slice(message);
    let digest = params.synth_hash(b, &input)?;
    b.assert_equal(&digest, commitment)
}
