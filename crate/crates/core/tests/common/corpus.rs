//! Synthetic verbal-autopsy corpora for end-to-end tests.
#![allow(dead_code)]

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLASSES: [&str; 3] = ["non-communicable", "communicable", "external"];
const WORDS: [&str; 3] = ["chest pain heart pressure", "fever cough chills", "road accident injury fall"];
const FILLER: &str = "patient was taken to hospital and died";

pub struct Row {
    pub id: String,
    pub site: String,
    pub age: f64,
    pub narrative: String,
    pub cause: Option<&'static str>,
}

/// `per_site` rows for each site. A fraction `confusing` of narratives
/// describes a random class rather than the true one.
pub fn rows(sites: &[&str], per_site: usize, confusing: f64, seed: u64) -> Vec<Row> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (s, site) in sites.iter().enumerate() {
        for i in 0..per_site {
            // Sites differ in their class mix.
            let u: f64 = rng.random();
            let k = if u < 0.4 + 0.1 * s as f64 { 0 } else if u < 0.75 { 1 } else { 2 };
            let base = [60.0, 42.0, 33.0][k];
            let age = (base + 11.0 * (rng.random::<f64>() - 0.5) * 3.4).max(15.0).round();
            let shown = if rng.random::<f64>() < confusing { rng.random_range(0..3) } else { k };
            out.push(Row {
                id: format!("{site}-{i}"),
                site: site.to_string(),
                age,
                narrative: format!("{FILLER} {}", WORDS[shown]),
                cause: Some(CLASSES[k]),
            });
        }
    }
    out
}

/// CSV with the default column names and broad cause strings.
pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::from("newid,site,age_years,open_response,gs_text34\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},\"{}\",{}", r.id, r.site, r.age, r.narrative, r.cause.unwrap_or(""));
    }
    s
}
