//! Download-once cache for external reference data.
//!
//! Each URL maps to an entry named after the hash of the URL: the content
//! (`.data`), its recorded SHA-256 (`.sha256`) and the URL itself (`.url`).
//! A cached entry is re-hashed on every use and refused if it no longer
//! matches. Writers take a per-entry lock file, so concurrent processes
//! download a URL at most once.

use std::fs::OpenOptions;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};

use sha2::{Digest, Sha256};

use crate::error::{AppError, IoContext, Result};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "MELTPOOL_CACHE_DIR";

/// Source of bytes for a URL.
pub trait Transport {
    fn get(&self, url: &str) -> std::result::Result<Vec<u8>, String>;
}

/// Plain HTTP(S) via `ureq`.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> std::result::Result<Vec<u8>, String> {
        let mut resp = ureq::get(url).call().map_err(|e| e.to_string())?;
        resp.body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct FetchCache {
    dir: PathBuf,
    /// How long to wait for another writer before giving up.
    lock_timeout: Duration,
}

/// Removes the lock file when dropped.
struct EntryLock(PathBuf);

impl Drop for EntryLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Locks older than this are left over from a crashed process.
const STALE_LOCK: Duration = Duration::from_secs(600);

impl FetchCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            lock_timeout: Duration::from_secs(120),
        }
    }

    /// `$MELTPOOL_CACHE_DIR`, else `$XDG_CACHE_HOME/meltpool`, else
    /// `~/.cache/meltpool`.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("XDG_CACHE_HOME").map(|d| PathBuf::from(d).join("meltpool")))
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache/meltpool")))
            .unwrap_or_else(|| std::env::temp_dir().join("meltpool-cache"));
        Self::new(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn key(url: &str) -> String {
        sha256_hex(url.as_bytes())[..32].to_string()
    }

    /// Path of the cached content for `url`, whether or not it exists.
    pub fn entry_path(&self, url: &str) -> PathBuf {
        self.dir.join(format!("{}.data", Self::key(url)))
    }

    /// Recorded content hash of `url`, if cached.
    pub fn recorded_hash(&self, url: &str) -> Option<String> {
        let p = self.dir.join(format!("{}.sha256", Self::key(url)));
        std::fs::read_to_string(p).ok().map(|s| s.trim().to_string())
    }

    fn lock(&self, key: &str) -> Result<EntryLock> {
        let path = self.dir.join(format!("{key}.lock"));
        let start = SystemTime::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(EntryLock(path)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    let stale = std::fs::metadata(&path)
                        .and_then(|m| m.modified())
                        .ok()
                        .and_then(|t| t.elapsed().ok())
                        .is_some_and(|age| age > STALE_LOCK);
                    if stale {
                        let _ = std::fs::remove_file(&path);
                        continue;
                    }
                    if start.elapsed().unwrap_or_default() > self.lock_timeout {
                        return Err(AppError::io(
                            format!("waiting for cache lock {}", path.display()),
                            std::io::Error::new(std::io::ErrorKind::TimedOut, "lock held by another process"),
                        ));
                    }
                    std::thread::sleep(Duration::from_millis(50));
                }
                Err(e) => return Err(AppError::io(format!("creating {}", path.display()), e)),
            }
        }
    }

    /// Local path of `url`'s content, downloading it on first use. With
    /// `expected`, the content must hash to that hex digest.
    pub fn fetch(&self, url: &str, expected: Option<&str>, transport: &dyn Transport) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).context(|| format!("creating {}", self.dir.display()))?;
        let key = Self::key(url);
        let _guard = self.lock(&key)?;
        let data = self.dir.join(format!("{key}.data"));
        let hash_file = self.dir.join(format!("{key}.sha256"));
        let mismatch = |expected: &str, actual: &str| AppError::HashMismatch {
            url: url.to_string(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        };
        if data.exists() && hash_file.exists() {
            let recorded = std::fs::read_to_string(&hash_file)
                .context(|| format!("reading {}", hash_file.display()))?
                .trim()
                .to_string();
            let mut bytes = Vec::new();
            std::fs::File::open(&data)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .context(|| format!("reading {}", data.display()))?;
            let actual = sha256_hex(&bytes);
            if actual != recorded {
                return Err(mismatch(&recorded, &actual));
            }
            if let Some(e) = expected.filter(|e| !e.eq_ignore_ascii_case(&recorded)) {
                return Err(mismatch(e, &recorded));
            }
            return Ok(data);
        }
        let bytes = transport.get(url).map_err(|reason| AppError::Offline {
            url: url.to_string(),
            reason,
        })?;
        let actual = sha256_hex(&bytes);
        if let Some(e) = expected.filter(|e| !e.eq_ignore_ascii_case(&actual)) {
            return Err(mismatch(e, &actual));
        }
        let tmp = self.dir.join(format!("{key}.partial"));
        std::fs::write(&tmp, &bytes).context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, &data).context(|| format!("writing {}", data.display()))?;
        std::fs::write(self.dir.join(format!("{key}.url")), url).context(|| "recording url".to_string())?;
        std::fs::write(&hash_file, &actual).context(|| format!("writing {}", hash_file.display()))?;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    struct Counting<'a> {
        body: &'a [u8],
        calls: Cell<usize>,
    }

    impl Transport for Counting<'_> {
        fn get(&self, _url: &str) -> std::result::Result<Vec<u8>, String> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.body.to_vec())
        }
    }

    struct Down;

    impl Transport for Down {
        fn get(&self, _url: &str) -> std::result::Result<Vec<u8>, String> {
            Err("network unreachable".into())
        }
    }

    const URL: &str = "https://example.org/ammt/profile.txt";

    #[test]
    fn warm_cache_does_not_touch_the_network() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FetchCache::new(dir.path());
        let t = Counting {
            body: b"2 2 0.01 0.01\n1 1 1 1\n",
            calls: Cell::new(0),
        };
        let a = cache.fetch(URL, None, &t).unwrap();
        let b = cache.fetch(URL, None, &Down).unwrap();
        assert_eq!(a, b);
        assert_eq!(t.calls.get(), 1);
        assert_eq!(cache.recorded_hash(URL).unwrap(), sha256_hex(t.body));
        assert_eq!(std::fs::read(a).unwrap(), t.body);
    }

    #[test]
    fn corrupted_entry_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FetchCache::new(dir.path());
        let t = Counting {
            body: b"payload",
            calls: Cell::new(0),
        };
        let p = cache.fetch(URL, None, &t).unwrap();
        std::fs::write(&p, b"tampered").unwrap();
        assert!(matches!(cache.fetch(URL, None, &t), Err(AppError::HashMismatch { .. })));
    }

    #[test]
    fn pinned_hash_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FetchCache::new(dir.path());
        let t = Counting {
            body: b"payload",
            calls: Cell::new(0),
        };
        let wrong = sha256_hex(b"other");
        assert!(matches!(cache.fetch(URL, Some(&wrong), &t), Err(AppError::HashMismatch { .. })));
        assert!(!cache.entry_path(URL).exists());
        let right = sha256_hex(b"payload");
        assert!(cache.fetch(URL, Some(&right.to_uppercase()), &t).is_ok());
    }

    #[test]
    fn empty_cache_without_network_is_an_offline_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = FetchCache::new(dir.path()).fetch(URL, None, &Down).unwrap_err();
        assert!(matches!(err, AppError::Offline { .. }));
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn concurrent_fetches_download_once() {
        struct Slow(std::sync::atomic::AtomicUsize);
        impl Transport for Slow {
            fn get(&self, _url: &str) -> std::result::Result<Vec<u8>, String> {
                self.0.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(100));
                Ok(b"x".to_vec())
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let cache = FetchCache::new(dir.path());
        let t = Slow(Default::default());
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| cache.fetch(URL, None, &t).unwrap());
            }
        });
        assert_eq!(t.0.load(std::sync::atomic::Ordering::SeqCst), 1);
    }
}
