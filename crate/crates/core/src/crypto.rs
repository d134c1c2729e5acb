//! Per-field RSA envelope.
//!
//! The server owns an RSA keypair and publishes the public half as DER
//! (SubjectPublicKeyInfo). Clients encrypt each sensitive form field as a
//! single PKCS#1 v1.5 block and send it hex-encoded; the server decrypts
//! with the private key. There is no chunking: a field must fit in one
//! block (245 bytes with a 2048-bit key).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::OsRng;
use rand::RngCore;
use rsa::pkcs1::DecodeRsaPrivateKey;
use rsa::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey, LineEnding};
use rsa::traits::PublicKeyParts;
use rsa::{Pkcs1v15Encrypt, RsaPrivateKey, RsaPublicKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpu::thread_cpu_time;

pub const SUPPORTED_KEY_BITS: [usize; 2] = [2048, 4096];
pub const DEFAULT_KEY_BITS: usize = 2048;
pub const PRIVATE_KEY_FILE: &str = "private.pem";
pub const PUBLIC_KEY_FILE: &str = "public.der";

const PKCS1_V15_OVERHEAD: usize = 11;

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("unsupported key size {0} (expected 2048 or 4096)")]
    UnsupportedKeySize(usize),
    #[error("field too long for single RSA block ({len} > {max} bytes)")]
    FieldTooLong { len: usize, max: usize },
    #[error("ciphertext has {got} hex digits, expected {expected}")]
    CipherLength { got: usize, expected: usize },
    #[error("ciphertext is not hex")]
    NotHex,
    /// Deliberately carries no detail about why.
    #[error("decryption failed")]
    DecryptionFailed,
    #[error("invalid public key: {0}")]
    InvalidPublicKey(String),
    #[error("invalid private key: {0}")]
    InvalidPrivateKey(String),
    #[error("key generation failed: {0}")]
    KeyGeneration(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CryptoError + '_ {
    move |source| CryptoError::Io { path: path.to_path_buf(), source }
}

fn check_bits(bits: usize) -> Result<usize, CryptoError> {
    if SUPPORTED_KEY_BITS.contains(&bits) {
        Ok(bits)
    } else {
        Err(CryptoError::UnsupportedKeySize(bits))
    }
}

/// Largest plaintext that fits one PKCS#1 v1.5 block for a key size.
pub fn max_plaintext_len(bits: usize) -> usize {
    bits / 8 - PKCS1_V15_OVERHEAD
}

/// Hex-encoded ciphertext of one field.
///
/// Either hex case is accepted on input; [`encrypt_field`] emits lowercase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CipherField(String);

impl CipherField {
    pub fn new(hex: impl Into<String>) -> Result<Self, CryptoError> {
        let hex = hex.into();
        if hex.len() % 2 != 0 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(CryptoError::NotHex);
        }
        Ok(CipherField(hex))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Length of the decoded ciphertext in bits.
    pub fn bits(&self) -> usize {
        self.0.len() * 4
    }
}

impl fmt::Display for CipherField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A parsed public key, for encrypting many fields with one key.
#[derive(Debug, Clone)]
pub struct PublicKey {
    key: RsaPublicKey,
    bits: usize,
}

impl PublicKey {
    pub fn from_der(der: &[u8]) -> Result<Self, CryptoError> {
        let key = RsaPublicKey::from_public_key_der(der)
            .map_err(|e| CryptoError::InvalidPublicKey(e.to_string()))?;
        let bits = check_bits(key.size() * 8)?;
        Ok(PublicKey { key, bits })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn encrypt_field(&self, plaintext: &[u8]) -> Result<CipherField, CryptoError> {
        let max = max_plaintext_len(self.bits);
        if plaintext.len() > max {
            return Err(CryptoError::FieldTooLong { len: plaintext.len(), max });
        }
        let block = self
            .key
            .encrypt(&mut OsRng, Pkcs1v15Encrypt, plaintext)
            .map_err(|_| CryptoError::FieldTooLong { len: plaintext.len(), max })?;
        Ok(CipherField(hex::encode(block)))
    }
}

/// Server keypair. The private half is never serialized except by
/// [`KeyPairHandle::save`].
pub struct KeyPairHandle {
    bits: usize,
    private: RsaPrivateKey,
    public_der: Vec<u8>,
}

impl fmt::Debug for KeyPairHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPairHandle")
            .field("bits", &self.bits)
            .field("public_der", &format_args!("{} bytes", self.public_der.len()))
            .finish_non_exhaustive()
    }
}

impl KeyPairHandle {
    fn from_private(private: RsaPrivateKey) -> Result<Self, CryptoError> {
        let bits = check_bits(private.size() * 8)?;
        let public_der = RsaPublicKey::from(&private)
            .to_public_key_der()
            .map_err(|e| CryptoError::InvalidPublicKey(e.to_string()))?
            .into_vec();
        Ok(KeyPairHandle { bits, private, public_der })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// DER SubjectPublicKeyInfo, as served to clients.
    pub fn public_der(&self) -> &[u8] {
        &self.public_der
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey { key: RsaPublicKey::from(&self.private), bits: self.bits }
    }

    /// Reads a PEM private key, PKCS#8 or PKCS#1.
    pub fn from_private_pem(pem: &str) -> Result<Self, CryptoError> {
        let private = RsaPrivateKey::from_pkcs8_pem(pem)
            .or_else(|_| RsaPrivateKey::from_pkcs1_pem(pem))
            .map_err(|e| CryptoError::InvalidPrivateKey(e.to_string()))?;
        Self::from_private(private)
    }

    pub fn load(private_pem_path: &Path) -> Result<Self, CryptoError> {
        let pem = fs::read_to_string(private_pem_path).map_err(io_err(private_pem_path))?;
        Self::from_private_pem(&pem)
    }

    /// Writes `private.pem` (owner read/write only) and `public.der`.
    pub fn save(&self, private_pem_path: &Path, public_der_path: &Path) -> Result<(), CryptoError> {
        let pem = self
            .private
            .to_pkcs8_pem(LineEnding::LF)
            .map_err(|e| CryptoError::InvalidPrivateKey(e.to_string()))?;
        write_private(private_pem_path, pem.as_bytes())?;
        fs::write(public_der_path, &self.public_der).map_err(io_err(public_der_path))
    }

    pub fn decrypt_field(&self, field: &CipherField) -> Result<Vec<u8>, CryptoError> {
        decrypt_field(field, self)
    }
}

#[cfg(unix)]
fn write_private(path: &Path, bytes: &[u8]) -> Result<(), CryptoError> {
    use std::io::Write;
    use std::os::unix::fs::{OpenOptionsExt, PermissionsExt};
    let mut f = fs::OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .mode(0o600)
        .open(path)
        .map_err(io_err(path))?;
    f.set_permissions(fs::Permissions::from_mode(0o600)).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

#[cfg(not(unix))]
fn write_private(path: &Path, bytes: &[u8]) -> Result<(), CryptoError> {
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn generate_keypair(bits: usize) -> Result<KeyPairHandle, CryptoError> {
    let bits = check_bits(bits)?;
    let private =
        RsaPrivateKey::new(&mut OsRng, bits).map_err(|e| CryptoError::KeyGeneration(e.to_string()))?;
    KeyPairHandle::from_private(private)
}

/// Encrypts one field with a DER public key.
pub fn encrypt_field(plaintext: &[u8], public_der: &[u8]) -> Result<CipherField, CryptoError> {
    PublicKey::from_der(public_der)?.encrypt_field(plaintext)
}

/// Decrypts one field. Length is checked before any key operation; every
/// failure after that is reported as [`CryptoError::DecryptionFailed`].
pub fn decrypt_field(field: &CipherField, key: &KeyPairHandle) -> Result<Vec<u8>, CryptoError> {
    let expected = key.bits / 4;
    if field.0.len() != expected {
        return Err(CryptoError::CipherLength { got: field.0.len(), expected });
    }
    let block = hex::decode(&field.0).map_err(|_| CryptoError::NotHex)?;
    key.private
        .decrypt(Pkcs1v15Encrypt, &block)
        .map_err(|_| CryptoError::DecryptionFailed)
}

/// Timing of repeated decryptions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DecryptBenchReport {
    pub bits: usize,
    pub ops_completed: usize,
    /// Scheduled ticks dropped because a previous decrypt overran.
    pub ticks_missed: usize,
    pub latencies: Vec<Duration>,
    pub cpu_time: Duration,
}

impl DecryptBenchReport {
    pub fn mean_latency(&self) -> Option<Duration> {
        let n = u32::try_from(self.latencies.len()).ok().filter(|n| *n > 0)?;
        Some(self.latencies.iter().sum::<Duration>() / n)
    }
}

struct BenchInputs {
    ciphertexts: Vec<CipherField>,
    next: usize,
}

impl BenchInputs {
    fn new(key: &KeyPairHandle) -> Self {
        let public = key.public_key();
        let ciphertexts = (0..16)
            .map(|_| {
                let mut msg = [0u8; 32];
                OsRng.fill_bytes(&mut msg);
                public.encrypt_field(&hex::encode(msg).into_bytes()).expect("64 bytes fit one block")
            })
            .collect();
        BenchInputs { ciphertexts, next: 0 }
    }

    fn decrypt_once(&mut self, key: &KeyPairHandle) -> Duration {
        let c = &self.ciphertexts[self.next % self.ciphertexts.len()];
        self.next += 1;
        let t = Instant::now();
        decrypt_field(c, key).expect("bench ciphertext decrypts");
        t.elapsed()
    }
}

/// Decrypts at a fixed cadence: one attempt per `period` for `duration`.
///
/// Completes `floor(duration / period)` decryptions when each one fits
/// within its period; ticks that fall more than a period behind are
/// skipped. A zero `period` runs back to back until `duration` elapses.
pub fn bench_decrypt(key: &KeyPairHandle, duration: Duration, period: Duration) -> DecryptBenchReport {
    let mut report = DecryptBenchReport { bits: key.bits, ..Default::default() };
    if duration.is_zero() {
        return report;
    }
    let mut inputs = BenchInputs::new(key);
    let cpu_start = thread_cpu_time();
    let start = Instant::now();
    if period.is_zero() {
        while start.elapsed() < duration {
            report.latencies.push(inputs.decrypt_once(key));
        }
    } else {
        let ticks = (duration.as_nanos() / period.as_nanos()) as u32;
        for k in 0..ticks {
            let scheduled = start + period * k;
            let now = Instant::now();
            if now > scheduled + period {
                report.ticks_missed += 1;
                continue;
            }
            if scheduled > now {
                std::thread::sleep(scheduled - now);
            }
            report.latencies.push(inputs.decrypt_once(key));
        }
    }
    report.cpu_time = thread_cpu_time().saturating_sub(cpu_start);
    report.ops_completed = report.latencies.len();
    report
}

/// Closed-loop variant: exactly `ops` decryptions back to back.
pub fn bench_decrypt_ops(key: &KeyPairHandle, ops: usize) -> DecryptBenchReport {
    let mut inputs = BenchInputs::new(key);
    let cpu_start = thread_cpu_time();
    let latencies: Vec<_> = (0..ops).map(|_| inputs.decrypt_once(key)).collect();
    DecryptBenchReport {
        bits: key.bits,
        ops_completed: latencies.len(),
        ticks_missed: 0,
        latencies,
        cpu_time: thread_cpu_time().saturating_sub(cpu_start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    pub(crate) fn key2048() -> &'static KeyPairHandle {
        static KEY: OnceLock<KeyPairHandle> = OnceLock::new();
        KEY.get_or_init(|| generate_keypair(2048).unwrap())
    }

    #[test]
    fn rejects_unsupported_sizes() {
        for bits in [512, 1024, 3072] {
            let err = generate_keypair(bits).unwrap_err();
            assert!(err.to_string().starts_with("unsupported key size"));
        }
    }

    #[test]
    fn round_trip_and_bound() {
        let key = key2048();
        let msg = vec![0x5a; 245];
        let c = encrypt_field(&msg, key.public_der()).unwrap();
        assert_eq!(c.as_str().len(), 512);
        assert_eq!(c.as_str(), c.as_str().to_lowercase());
        assert_eq!(key.decrypt_field(&c).unwrap(), msg);

        let err = encrypt_field(&[0u8; 246], key.public_der()).unwrap_err();
        assert_eq!(err.to_string(), "field too long for single RSA block (246 > 245 bytes)");
    }

    #[test]
    fn uppercase_hex_accepted() {
        let key = key2048();
        let c = encrypt_field(b"abc123", key.public_der()).unwrap();
        let upper = CipherField::new(c.as_str().to_uppercase()).unwrap();
        assert_eq!(key.decrypt_field(&upper).unwrap(), b"abc123");
    }

    #[test]
    fn wrong_length_rejected_before_decrypting() {
        let key = key2048();
        let c = CipherField::new("ab".repeat(100)).unwrap();
        assert!(matches!(key.decrypt_field(&c), Err(CryptoError::CipherLength { got: 200, expected: 512 })));
        assert!(CipherField::new("xyz0").is_err());
        assert!(CipherField::new("abc").is_err());
    }

    #[test]
    fn randomized_padding() {
        let key = key2048();
        let a = encrypt_field(b"same", key.public_der()).unwrap();
        let b = encrypt_field(b"same", key.public_der()).unwrap();
        assert_ne!(a, b);
        assert_eq!(key.decrypt_field(&a).unwrap(), key.decrypt_field(&b).unwrap());
    }

    #[test]
    fn pem_round_trip_preserves_key() {
        let dir = tempfile::tempdir().unwrap();
        let (pem, der) = (dir.path().join(PRIVATE_KEY_FILE), dir.path().join(PUBLIC_KEY_FILE));
        let key = key2048();
        key.save(&pem, &der).unwrap();
        let loaded = KeyPairHandle::load(&pem).unwrap();
        assert_eq!(loaded.public_der(), key.public_der());
        assert_eq!(fs::read(&der).unwrap(), key.public_der());
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            assert_eq!(fs::metadata(&pem).unwrap().permissions().mode() & 0o777, 0o600);
        }
        let c = encrypt_field(b"x", key.public_der()).unwrap();
        assert_eq!(loaded.decrypt_field(&c).unwrap(), b"x");
    }

    #[test]
    fn debug_does_not_leak_private_material() {
        let s = format!("{:?}", key2048());
        assert!(s.contains("2048"));
        assert!(!s.contains("private"));
    }

    #[test]
    fn zero_duration_bench_is_empty() {
        let r = bench_decrypt(key2048(), Duration::ZERO, Duration::from_secs(1));
        assert_eq!(r.ops_completed, 0);
        assert!(r.mean_latency().is_none());
    }

    #[test]
    fn bench_completes_one_op_per_period() {
        let r = bench_decrypt(key2048(), Duration::from_millis(600), Duration::from_millis(50));
        assert_eq!(r.ops_completed + r.ticks_missed, 12);
        // a 2048-bit decrypt takes a few ms, far below the period
        assert_eq!(r.ops_completed, 12);
        assert!(r.mean_latency().unwrap() < Duration::from_millis(50));
    }
}
