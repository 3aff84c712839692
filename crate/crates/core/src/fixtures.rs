//! Bundled plateau filter designs of orders 3 through 7, tuned for a
//! roughly constant 2e-5 S response over 7-8 GHz into 50 ohms. Shipped as
//! `data/plateau_filters.json` and embedded here.

use std::sync::LazyLock;

use serde::Deserialize;

use crate::filter::LadderFilter;

const RAW: &str = include_str!("../data/plateau_filters.json");

#[derive(Deserialize)]
struct FixtureFile {
    z0_ohms: f64,
    filters: Vec<FixtureEntry>,
}

#[derive(Deserialize)]
struct FixtureEntry {
    order: usize,
    values: Vec<f64>,
}

static FILTERS: LazyLock<Vec<LadderFilter>> = LazyLock::new(|| {
    let file: FixtureFile = serde_json::from_str(RAW).expect("bundled fixture file parses");
    file.filters
        .into_iter()
        .map(|e| {
            assert_eq!(e.order, e.values.len(), "fixture order/value mismatch");
            LadderFilter::new(e.values, file.z0_ohms).expect("bundled fixture is valid")
        })
        .collect()
});

/// The bundled designs, ordered 3rd through 7th.
#[must_use]
pub fn reference_filters() -> &'static [LadderFilter] {
    &FILTERS
}

/// Look up a bundled design by element count.
#[must_use]
pub fn reference_filter(order: usize) -> Option<&'static LadderFilter> {
    FILTERS.iter().find(|f| f.order() == order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load_and_cover_orders_3_to_7() {
        let filters = reference_filters();
        assert_eq!(filters.len(), 5);
        for (i, f) in filters.iter().enumerate() {
            assert_eq!(f.order(), i + 3);
            assert_eq!(f.z0_ohms(), 50.0);
        }
        assert_eq!(reference_filter(4).unwrap().values()[0], 9.13e-15);
        assert!(reference_filter(8).is_none());
    }
}
