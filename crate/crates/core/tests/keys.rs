mod support;

use std::sync::OnceLock;

use mobility_core::crypto::{decrypt_field, encrypt_field, generate_keypair, CipherField, KeyPairHandle};
use support::asn1::parse_rsa_spki;

fn key2048() -> &'static KeyPairHandle {
    static KEY: OnceLock<KeyPairHandle> = OnceLock::new();
    KEY.get_or_init(|| generate_keypair(2048).unwrap())
}

#[test]
fn public_der_is_rsa_spki_of_stated_size() {
    let der = key2048().public_der();
    assert!((290..=300).contains(&der.len()), "{}", der.len());
    let spki = parse_rsa_spki(der).unwrap();
    assert_eq!(spki.modulus_bits, 2048);
    assert_eq!(spki.exponent, 65537);

    let big = generate_keypair(4096).unwrap();
    assert_eq!(parse_rsa_spki(big.public_der()).unwrap().modulus_bits, 4096);
}

#[test]
fn unsupported_size_rejected() {
    let err = generate_keypair(1024).unwrap_err();
    assert!(err.to_string().starts_with("unsupported key size"));
}

#[test]
fn key_files_reload_to_same_public_key() {
    let dir = tempfile::tempdir().unwrap();
    let (private, public) = (dir.path().join("private.pem"), dir.path().join("public.der"));
    key2048().save(&private, &public).unwrap();
    assert_eq!(std::fs::read(&public).unwrap(), key2048().public_der());
    let loaded = KeyPairHandle::load(&private).unwrap();
    assert_eq!(loaded.public_der(), key2048().public_der());
    let c = encrypt_field(b"abc", loaded.public_der()).unwrap();
    assert_eq!(decrypt_field(&c, key2048()).unwrap(), b"abc");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        assert_eq!(std::fs::metadata(&private).unwrap().permissions().mode() & 0o777, 0o600);
    }
}

#[test]
fn every_flipped_digit_fails_uniformly() {
    let c = encrypt_field(b"usu_hash_value", key2048().public_der()).unwrap();
    let hex = c.as_str();
    for i in (0..hex.len()).step_by(37) {
        let mut bytes = hex.as_bytes().to_vec();
        bytes[i] = if bytes[i] == b'0' { b'1' } else { b'0' };
        let flipped = CipherField::new(String::from_utf8(bytes).unwrap()).unwrap();
        match decrypt_field(&flipped, key2048()) {
            Err(e) => assert_eq!(e.to_string(), "decryption failed"),
            // a flip can land on a still-valid padding; never on the same plaintext
            Ok(p) => assert_ne!(p, b"usu_hash_value"),
        }
    }
}

#[test]
fn uppercase_hex_accepted() {
    let c = encrypt_field(b"x", key2048().public_der()).unwrap();
    let upper = CipherField::new(c.as_str().to_uppercase()).unwrap();
    assert_eq!(decrypt_field(&upper, key2048()).unwrap(), b"x");
}
