//! Twitter-style preprocessing: URLs become `https`, user handles become `@user`.
//!
//! A URL is a whitespace-delimited run that starts (at a word boundary) with
//! `http://`, `https://` or `www.`; the whole run up to the next whitespace is
//! replaced. A handle is `@` followed by one or more word characters where the
//! `@` is not glued to a preceding word character (so `me@host` is untouched).
//! Nothing else is modified; in particular no Unicode normalization happens.

use std::borrow::Cow;
use std::sync::LazyLock;

use regex::Regex;

pub const URL_TOKEN: &str = "https";
pub const USER_TOKEN: &str = "@user";

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").expect("url pattern"));
static HANDLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\B@\w+").expect("handle pattern"));

/// Normalizes a raw post. Idempotent: `normalize(&normalize(x)) == normalize(x)`.
pub fn normalize(text: &str) -> String {
    let without_urls = URL.replace_all(text, URL_TOKEN);
    match HANDLE.replace_all(&without_urls, USER_TOKEN) {
        Cow::Borrowed(_) => without_urls.into_owned(),
        Cow::Owned(s) => s,
    }
}

/// True if `text` contains something the URL pattern would rewrite.
pub fn contains_url(text: &str) -> bool {
    URL.is_match(text)
}
