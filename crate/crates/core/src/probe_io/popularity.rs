//! Author popularity as Wikipedia page length, with an on-disk cache and a
//! manual override file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::ProbeError;

pub const POPULARITY_CACHE_FILE: &str = "popularity.csv";
pub const MANUAL_FILE: &str = "manual.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopularitySource {
    Live,
    Cache,
    Manual,
}

impl PopularitySource {
    pub fn as_str(self) -> &'static str {
        match self {
            PopularitySource::Live => "live",
            PopularitySource::Cache => "cache",
            PopularitySource::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularityRecord {
    pub author: String,
    pub wiki_char_length: u64,
    /// RFC 3339, UTC. Empty for manual entries without one.
    pub fetched_at: String,
    pub source: PopularitySource,
}

/// Something that can report the raw wikitext length of a page.
pub trait PageSource {
    /// `Ok(None)` when the page does not exist.
    fn page_length(&self, title: &str) -> Result<Option<u64>, ProbeError>;
}

/// Live client for the English Wikipedia raw-source endpoint.
pub struct WikipediaSource {
    agent: ureq::Agent,
    endpoint: String,
}

impl WikipediaSource {
    pub fn new() -> Self {
        Self::with_endpoint("https://en.wikipedia.org/w/index.php")
    }

    pub fn with_endpoint(endpoint: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .user_agent(concat!("stylus/", env!("CARGO_PKG_VERSION"), " (stylometry research toolkit)"))
            .build();
        WikipediaSource { agent: ureq::Agent::new_with_config(config), endpoint: endpoint.to_string() }
    }

    fn fetch(&self, title: &str) -> Result<Option<String>, ProbeError> {
        let resp = self
            .agent
            .get(&self.endpoint)
            .query("title", title.replace(' ', "_"))
            .query("action", "raw")
            .call();
        match resp {
            Ok(mut r) => r.body_mut().read_to_string().map(Some).map_err(|e| ProbeError::Network(e.to_string())),
            Err(ureq::Error::StatusCode(404)) => Ok(None),
            Err(e) => Err(ProbeError::Network(e.to_string())),
        }
    }
}

impl Default for WikipediaSource {
    fn default() -> Self {
        Self::new()
    }
}

fn redirect_target(text: &str) -> Option<&str> {
    let head = text.trim_start();
    if !head.get(..9)?.eq_ignore_ascii_case("#redirect") {
        return None;
    }
    let start = head.find("[[")? + 2;
    let end = start + head[start..].find("]]")?;
    let target = &head[start..end];
    Some(target.split(['#', '|']).next().unwrap_or(target))
}

impl PageSource for WikipediaSource {
    fn page_length(&self, title: &str) -> Result<Option<u64>, ProbeError> {
        let mut title = title.to_string();
        for _ in 0..3 {
            let Some(text) = self.fetch(&title)? else {
                return Ok(None);
            };
            match redirect_target(&text) {
                Some(t) => title = t.to_string(),
                None => return Ok(Some(text.chars().count() as u64)),
            }
        }
        Err(ProbeError::Network(format!("redirect chain too long at {title:?}")))
    }
}

/// Looks up page lengths with precedence manual file > cache > live fetch.
/// Live results are appended to the cache, which is rewritten atomically.
pub struct PopularityClient {
    cache_dir: PathBuf,
    offline: bool,
    source: Option<Box<dyn PageSource>>,
    manual: BTreeMap<String, PopularityRecord>,
    cache: BTreeMap<String, PopularityRecord>,
    min_interval: Duration,
    last_request: Option<Instant>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    author: String,
    chars: u64,
    #[serde(default)]
    timestamp: String,
    #[serde(default)]
    source: Option<String>,
}

fn read_csv(path: &Path, source: PopularitySource) -> Result<BTreeMap<String, PopularityRecord>, ProbeError> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let text = fs::read_to_string(path).map_err(|e| ProbeError::Io { path: path.to_path_buf(), source: e })?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let line_no = i + 2;
        let row = row.map_err(|e| ProbeError::MalformedLine { line_no, reason: format!("{}: {e}", path.display()) })?;
        if row.author.is_empty() {
            return Err(ProbeError::MalformedLine { line_no, reason: format!("{}: empty author", path.display()) });
        }
        if let Some(s) = &row.source {
            if !matches!(s.as_str(), "" | "live" | "cache" | "manual") {
                return Err(ProbeError::MalformedLine { line_no, reason: format!("unknown source {s:?}") });
            }
        }
        out.insert(
            row.author.clone(),
            PopularityRecord { author: row.author, wiki_char_length: row.chars, fetched_at: row.timestamp, source },
        );
    }
    Ok(out)
}

impl PopularityClient {
    pub fn open(cache_dir: &Path, offline: bool, source: Option<Box<dyn PageSource>>) -> Result<Self, ProbeError> {
        Ok(PopularityClient {
            manual: read_csv(&cache_dir.join(MANUAL_FILE), PopularitySource::Manual)?,
            cache: read_csv(&cache_dir.join(POPULARITY_CACHE_FILE), PopularitySource::Cache)?,
            cache_dir: cache_dir.to_path_buf(),
            offline,
            source,
            min_interval: Duration::from_secs(1),
            last_request: None,
        })
    }

    /// Adds overrides from another manual CSV; its entries win over the
    /// cache-directory manual file.
    pub fn add_manual_file(&mut self, path: &Path) -> Result<(), ProbeError> {
        if !path.exists() {
            return Err(ProbeError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "manual popularity file not found"),
            });
        }
        self.manual.extend(read_csv(path, PopularitySource::Manual)?);
        Ok(())
    }

    pub fn with_min_interval(mut self, d: Duration) -> Self {
        self.min_interval = d;
        self
    }

    pub fn lookup(&mut self, author: &str) -> Result<PopularityRecord, ProbeError> {
        if let Some(r) = self.manual.get(author) {
            return Ok(r.clone());
        }
        if let Some(r) = self.cache.get(author) {
            return Ok(r.clone());
        }
        let source = match (&self.source, self.offline) {
            (Some(s), false) => s,
            _ => return Err(ProbeError::NetworkUnavailable(author.to_string())),
        };
        if let Some(t) = self.last_request {
            let elapsed = t.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        let result = source.page_length(author);
        self.last_request = Some(Instant::now());
        let chars = result?.ok_or_else(|| ProbeError::PageNotFound(author.to_string()))?;
        let record = PopularityRecord {
            author: author.to_string(),
            wiki_char_length: chars,
            fetched_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            source: PopularitySource::Live,
        };
        self.cache.insert(author.to_string(), PopularityRecord { source: PopularitySource::Cache, ..record.clone() });
        self.save_cache()?;
        Ok(record)
    }

    fn save_cache(&self) -> Result<(), ProbeError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |e: std::io::Error| ProbeError::Io { path, source: e }
        };
        fs::create_dir_all(&self.cache_dir).map_err(io(&self.cache_dir))?;
        let dest = self.cache_dir.join(POPULARITY_CACHE_FILE);
        let tmp = self.cache_dir.join(format!(".{POPULARITY_CACHE_FILE}.{}.tmp", std::process::id()));
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| ProbeError::Io { path: dest.clone(), source: e.into() };
        w.write_record(["author", "chars", "timestamp", "source"]).map_err(csv_err)?;
        for r in self.cache.values() {
            w.write_record([r.author.as_str(), &r.wiki_char_length.to_string(), &r.fetched_at, "live"]).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| ProbeError::Io { path: dest.clone(), source: e.into_error() })?;
        fs::write(&tmp, bytes).map_err(io(&tmp))?;
        fs::rename(&tmp, &dest).map_err(io(&dest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    struct Fake {
        pages: BTreeMap<String, u64>,
        calls: std::rc::Rc<Cell<usize>>,
    }

    impl PageSource for Fake {
        fn page_length(&self, title: &str) -> Result<Option<u64>, ProbeError> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.pages.get(title).copied())
        }
    }

    fn fake(pages: &[(&str, u64)]) -> (Box<dyn PageSource>, std::rc::Rc<Cell<usize>>) {
        let calls = std::rc::Rc::new(Cell::new(0));
        let f = Fake { pages: pages.iter().map(|(a, n)| (a.to_string(), *n)).collect(), calls: calls.clone() };
        (Box::new(f), calls)
    }

    #[test]
    fn cache_hit() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(POPULARITY_CACHE_FILE), "author,chars,timestamp,source\nCharles Dickens,140276,2024-05-01T00:00:00Z,live\n").unwrap();
        let mut c = PopularityClient::open(dir.path(), true, None).unwrap();
        let r = c.lookup("Charles Dickens").unwrap();
        assert_eq!(r.wiki_char_length, 140276);
        assert_eq!(r.source, PopularitySource::Cache);
    }

    #[test]
    fn offline_uncached() {
        let dir = tempfile::tempdir().unwrap();
        let (src, calls) = fake(&[("George Gissing", 11532)]);
        let mut c = PopularityClient::open(dir.path(), true, Some(src)).unwrap();
        assert!(matches!(c.lookup("George Gissing"), Err(ProbeError::NetworkUnavailable(_))));
        assert_eq!(calls.get(), 0);
    }

    #[test]
    fn manual_overrides_cache() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(POPULARITY_CACHE_FILE), "author,chars,timestamp,source\nAnne Brontë,30000,2024-05-01T00:00:00Z,live\n").unwrap();
        fs::write(dir.path().join(MANUAL_FILE), "author,chars\nAnne Brontë,12345\n").unwrap();
        let mut c = PopularityClient::open(dir.path(), true, None).unwrap();
        let r = c.lookup("Anne Brontë").unwrap();
        assert_eq!((r.wiki_char_length, r.source), (12345, PopularitySource::Manual));
    }

    #[test]
    fn live_fetch_is_cached() {
        let dir = tempfile::tempdir().unwrap();
        let (src, calls) = fake(&[("George Gissing", 11532)]);
        let mut c = PopularityClient::open(dir.path(), false, Some(src)).unwrap().with_min_interval(Duration::ZERO);
        let r = c.lookup("George Gissing").unwrap();
        assert_eq!((r.wiki_char_length, r.source), (11532, PopularitySource::Live));
        assert_eq!(c.lookup("George Gissing").unwrap().source, PopularitySource::Cache);
        assert_eq!(calls.get(), 1);
        assert!(matches!(c.lookup("Nobody Atall"), Err(ProbeError::PageNotFound(_))));

        let mut reopened = PopularityClient::open(dir.path(), true, None).unwrap();
        assert_eq!(reopened.lookup("George Gissing").unwrap().wiki_char_length, 11532);
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(leftovers, vec![std::ffi::OsString::from(POPULARITY_CACHE_FILE)]);
    }

    #[test]
    fn malformed_cache_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(POPULARITY_CACHE_FILE), "author,chars,timestamp,source\nX,-5,,live\n").unwrap();
        assert!(matches!(PopularityClient::open(dir.path(), true, None), Err(ProbeError::MalformedLine { line_no: 2, .. })));
    }

    #[test]
    fn redirects() {
        assert_eq!(redirect_target("#REDIRECT [[Charles Dickens#Life|x]]"), Some("Charles Dickens"));
        assert_eq!(redirect_target("#redirect [[Mary Shelley]]"), Some("Mary Shelley"));
        assert_eq!(redirect_target("'''Charles Dickens''' was"), None);
    }
}
