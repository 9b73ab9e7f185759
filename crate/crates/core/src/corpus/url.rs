//! Canonical URL form used to decide whether two results are the same page.

use std::sync::OnceLock;

use url::Url;

use crate::{Error, Result};

/// Query parameters dropped by default. A trailing `*` matches any suffix.
pub const DEFAULT_STRIP_PARAMS: &[&str] = &[
    "utm_*", "gclid", "fbclid", "msclkid", "yclid", "dclid", "ved", "usg", "ei", "sa", "oq",
    "aqs", "sourceid", "ie", "sessionid", "sid", "sessid", "phpsessid", "jsessionid", "srsltid",
];

/// Paths that engines use for click-tracking redirects.
pub const DEFAULT_REDIRECT_PATHS: &[&str] = &["/url", "/link", "/redirect", "/r", "/aclk", "/goto"];

/// Parameters of a redirect wrapper that carry the target URL.
pub const DEFAULT_REDIRECT_PARAMS: &[&str] = &["url", "q", "u", "target", "dest"];

const MAX_UNWRAP_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlNormalizer {
    pub strip_params: Vec<String>,
    pub redirect_paths: Vec<String>,
    pub redirect_params: Vec<String>,
}

impl Default for UrlNormalizer {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        UrlNormalizer {
            strip_params: owned(DEFAULT_STRIP_PARAMS),
            redirect_paths: owned(DEFAULT_REDIRECT_PATHS),
            redirect_params: owned(DEFAULT_REDIRECT_PARAMS),
        }
    }
}

/// Normalize with the default strip list.
pub fn normalize_url(raw: &str) -> Result<String> {
    UrlNormalizer::default_ref().normalize(raw)
}

impl UrlNormalizer {
    pub fn default_ref() -> &'static UrlNormalizer {
        static DEFAULT: OnceLock<UrlNormalizer> = OnceLock::new();
        DEFAULT.get_or_init(UrlNormalizer::default)
    }

    fn strips(&self, key: &str) -> bool {
        let key = key.to_ascii_lowercase();
        self.strip_params.iter().any(|p| match p.strip_suffix('*') {
            Some(prefix) => key.starts_with(prefix),
            None => key == *p,
        })
    }

    /// Lowercase scheme and host, drop default ports, fragments, stripped
    /// query parameters and trailing slashes, and uppercase percent escapes.
    pub fn normalize(&self, raw: &str) -> Result<String> {
        let mut parsed = parse(raw)?;
        for _ in 0..MAX_UNWRAP_DEPTH {
            match self.redirect_target(&parsed) {
                Some(target) => parsed = target,
                None => break,
            }
        }
        Ok(self.render(&parsed))
    }

    fn redirect_target(&self, url: &Url) -> Option<Url> {
        let path = url.path().trim_end_matches('/');
        if !self.redirect_paths.iter().any(|p| p == path) {
            return None;
        }
        url.query_pairs()
            .find(|(k, _)| self.redirect_params.iter().any(|p| p == k.as_ref()))
            .and_then(|(_, v)| Url::parse(&v).ok())
            .filter(|t| matches!(t.scheme(), "http" | "https"))
    }

    fn render(&self, url: &Url) -> String {
        let mut out = String::with_capacity(url.as_str().len());
        out.push_str(url.scheme());
        out.push(':');
        if let Some(host) = url.host_str() {
            out.push_str("//");
            if !url.username().is_empty() {
                out.push_str(url.username());
                if let Some(pw) = url.password() {
                    out.push(':');
                    out.push_str(pw);
                }
                out.push('@');
            }
            out.push_str(host);
            // `Url` already drops ports equal to the scheme default.
            if let Some(port) = url.port() {
                out.push(':');
                out.push_str(&port.to_string());
            }
        }
        out.push_str(&upper_hex(url.path().trim_end_matches('/')));
        if let Some(query) = url.query() {
            let kept: Vec<&str> = query
                .split('&')
                .filter(|pair| !pair.is_empty())
                .filter(|pair| {
                    let key = pair.split('=').next().unwrap_or_default();
                    !self.strips(key)
                })
                .collect();
            if !kept.is_empty() {
                out.push('?');
                out.push_str(&upper_hex(&kept.join("&")));
            }
        }
        out
    }
}

fn parse(raw: &str) -> Result<Url> {
    let url = Url::parse(raw.trim()).map_err(|e| Error::Url {
        url: raw.to_string(),
        reason: e.to_string(),
    })?;
    if url.cannot_be_a_base() {
        return Err(Error::Url {
            url: raw.to_string(),
            reason: "not a hierarchical url".into(),
        });
    }
    Ok(url)
}

fn upper_hex(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%'
            && i + 2 < bytes.len()
            && bytes[i + 1].is_ascii_hexdigit()
            && bytes[i + 2].is_ascii_hexdigit()
        {
            out.push('%');
            out.push(bytes[i + 1].to_ascii_uppercase() as char);
            out.push(bytes[i + 2].to_ascii_uppercase() as char);
            i += 3;
        } else {
            // `s` is ASCII after url serialization.
            out.push(bytes[i] as char);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_tracking_port_fragment_and_slash() {
        assert_eq!(
            normalize_url("HTTP://Example.com:80/a/?utm_source=x#f").unwrap(),
            "http://example.com/a"
        );
    }

    #[test]
    fn canonical_input_is_unchanged() {
        assert_eq!(normalize_url("http://example.com/a").unwrap(), "http://example.com/a");
    }

    #[test]
    fn host_case_and_trailing_slash_collapse() {
        assert_eq!(
            normalize_url("https://Site.org/p/").unwrap(),
            normalize_url("https://site.org/p").unwrap()
        );
    }

    #[test]
    fn keeps_meaningful_query_and_uppercases_escapes() {
        assert_eq!(
            normalize_url("http://a.org/s?id=7&utm_medium=m&x=%2f").unwrap(),
            "http://a.org/s?id=7&x=%2F"
        );
        assert_eq!(normalize_url("http://a.org/%7ebob").unwrap(), "http://a.org/%7Ebob");
    }

    #[test]
    fn non_default_port_is_kept() {
        assert_eq!(normalize_url("http://a.org:8080/").unwrap(), "http://a.org:8080");
    }

    #[test]
    fn unwraps_engine_redirects() {
        assert_eq!(
            normalize_url("https://www.google.com/url?q=http://Target.org/page/&sa=U&ved=1").unwrap(),
            "http://target.org/page"
        );
    }

    #[test]
    fn custom_strip_list() {
        let n = UrlNormalizer {
            strip_params: vec!["ref".into()],
            ..UrlNormalizer::default()
        };
        assert_eq!(n.normalize("http://a.org/x?ref=1&utm_x=2").unwrap(), "http://a.org/x?utm_x=2");
    }

    #[test]
    fn unparseable_input_names_the_string() {
        let err = normalize_url("not a url").unwrap_err();
        assert!(err.to_string().contains("not a url"));
        assert!(normalize_url("/relative/path").is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(
            scheme in prop::sample::select(vec!["http", "HTTPS", "Http"]),
            host in "[A-Za-z]{1,8}\\.(com|ORG|net)",
            port in prop::option::of(prop::sample::select(vec![80u16, 443, 8080])),
            segs in prop::collection::vec("[a-zA-Z0-9%._~-]{0,6}", 0..4),
            trailing in 0usize..3,
            params in prop::collection::vec(
                (prop::sample::select(vec!["utm_source", "id", "q", "sid", "page", "Utm_Term"]), "[a-z0-9%]{0,4}"),
                0..4
            ),
            frag in prop::option::of("[a-z]{0,5}"),
        ) {
            let mut raw = format!("{scheme}://{host}");
            if let Some(p) = port { raw.push_str(&format!(":{p}")); }
            for s in &segs { raw.push('/'); raw.push_str(s); }
            raw.push_str(&"/".repeat(trailing));
            if !params.is_empty() {
                raw.push('?');
                let q: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                raw.push_str(&q.join("&"));
            }
            if let Some(f) = frag { raw.push('#'); raw.push_str(&f); }
            if let Ok(once) = normalize_url(&raw) {
                let twice = normalize_url(&once).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
