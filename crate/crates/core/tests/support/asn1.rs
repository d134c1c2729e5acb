//! Minimal DER reader, enough to pull the modulus out of an RSA
//! SubjectPublicKeyInfo without going through the crypto stack.

pub struct Tlv<'a> {
    pub tag: u8,
    pub body: &'a [u8],
    pub rest: &'a [u8],
}

pub fn read_tlv(input: &[u8]) -> Result<Tlv<'_>, String> {
    let (&tag, after_tag) = input.split_first().ok_or("truncated tag")?;
    let (&first, mut after_len) = after_tag.split_first().ok_or("truncated length")?;
    let len = if first < 0x80 {
        usize::from(first)
    } else {
        let n = usize::from(first & 0x7f);
        if n == 0 || n > 4 || after_len.len() < n {
            return Err(format!("bad long-form length {first:#x}"));
        }
        let len = after_len[..n].iter().fold(0usize, |acc, b| acc << 8 | usize::from(*b));
        after_len = &after_len[n..];
        len
    };
    if after_len.len() < len {
        return Err(format!("length {len} exceeds remaining {}", after_len.len()));
    }
    Ok(Tlv { tag, body: &after_len[..len], rest: &after_len[len..] })
}

const RSA_ENCRYPTION_OID: [u8; 9] = [0x2a, 0x86, 0x48, 0x86, 0xf7, 0x0d, 0x01, 0x01, 0x01];

#[derive(Debug)]
pub struct RsaSpki {
    pub modulus_bits: usize,
    pub exponent: u64,
}

/// Parses SEQUENCE { SEQUENCE { OID rsaEncryption, NULL }, BIT STRING {
/// SEQUENCE { INTEGER n, INTEGER e } } } and requires no trailing bytes.
pub fn parse_rsa_spki(der: &[u8]) -> Result<RsaSpki, String> {
    let outer = read_tlv(der)?;
    if outer.tag != 0x30 || !outer.rest.is_empty() {
        return Err("outer SEQUENCE expected".into());
    }
    let alg = read_tlv(outer.body)?;
    if alg.tag != 0x30 {
        return Err("AlgorithmIdentifier expected".into());
    }
    let oid = read_tlv(alg.body)?;
    if oid.tag != 0x06 || oid.body != RSA_ENCRYPTION_OID {
        return Err("rsaEncryption OID expected".into());
    }
    let params = read_tlv(oid.rest)?;
    if params.tag != 0x05 || !params.body.is_empty() {
        return Err("NULL parameters expected".into());
    }
    let bits = read_tlv(alg.rest)?;
    if bits.tag != 0x03 || bits.body.first() != Some(&0) || !bits.rest.is_empty() {
        return Err("BIT STRING with no unused bits expected".into());
    }
    let key = read_tlv(&bits.body[1..])?;
    if key.tag != 0x30 {
        return Err("RSAPublicKey SEQUENCE expected".into());
    }
    let n = read_tlv(key.body)?;
    let e = read_tlv(n.rest)?;
    if n.tag != 0x02 || e.tag != 0x02 || !e.rest.is_empty() {
        return Err("two INTEGERs expected".into());
    }
    let modulus: &[u8] = match n.body {
        [0, rest @ ..] => rest,
        all => all,
    };
    let lead = modulus.first().ok_or("empty modulus")?;
    let modulus_bits = modulus.len() * 8 - lead.leading_zeros() as usize;
    let exponent = e.body.iter().fold(0u64, |acc, b| acc << 8 | u64::from(*b));
    Ok(RsaSpki { modulus_bits, exponent })
}
