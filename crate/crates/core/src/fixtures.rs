//! Seeded synthetic datasets for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::RawGrid;
use crate::table::{CanonicalTable, Provenance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn table(name: &str, attributes: &[&str], rows: Vec<Vec<String>>) -> CanonicalTable {
    CanonicalTable::new(
        attributes.iter().map(|a| a.to_string()).collect(),
        rows,
        Provenance {
            source_name: name.to_string(),
            steps: Vec::new(),
        },
    )
    .expect("fixture rows are well formed")
}

pub const PRODUCT_ORDER_ATTRIBUTES: [&str; 9] = [
    "idCustomer",
    "nameCustomer",
    "cityCustomer",
    "countryCustomer",
    "classCustomer",
    "idProduct",
    "nameProduct",
    "categoryProduct",
    "quantity",
];

/// Dependencies the product-order data is built on.
pub const PRODUCT_ORDER_FDS: [(&str, &str); 6] = [
    ("idCustomer", "nameCustomer"),
    ("nameCustomer", "cityCustomer"),
    ("cityCustomer", "countryCustomer"),
    ("nameCustomer", "classCustomer"),
    ("idProduct", "nameProduct"),
    ("nameProduct", "categoryProduct"),
];

const COUNTRIES: [&str; 4] = ["France", "Spain", "Italy", "Germany"];
const CITIES: [&str; 12] = [
    "Paris", "Lyon", "Toulouse", "Madrid", "Sevilla", "Valencia", "Rome", "Milan", "Naples", "Berlin",
    "Hamburg", "Munich",
];
const CUSTOMER_NAMES: [&str; 30] = [
    "Martin", "Bernard", "Dubois", "Thomas", "Robert", "Richard", "Petit", "Durand", "Leroy", "Moreau",
    "Simon", "Laurent", "Lefebvre", "Michel", "Garcia", "David", "Bertrand", "Roux", "Vincent", "Fournier",
    "Morel", "Girard", "Andre", "Mercier", "Dupont", "Lambert", "Bonnet", "Francois", "Martinez", "Legrand",
];
const CLASSES: [&str; 3] = ["gold", "silver", "bronze"];
const PRODUCT_NAMES: [&str; 15] = [
    "Pen", "Pencil", "Eraser", "Ruler", "Stapler", "Notebook", "Folder", "Marker", "Scissors", "Glue",
    "Tape", "Binder", "Envelope", "Calculator", "Compass",
];
const CATEGORIES: [&str; 4] = ["writing", "paper", "office", "tools"];

/// Orders over 40 customers and 20 products. Ten customer ids and five
/// product ids reuse a name, every city holds several names of different
/// classes, and every country several cities, so the six dependencies in
/// [`PRODUCT_ORDER_FDS`] and their consequences are the only ones.
pub fn product_orders(seed: u64, n_rows: usize) -> CanonicalTable {
    assert!(n_rows >= 60, "need room for every customer and product");
    let mut rng = rng(seed);
    let customer = |id: usize| {
        let name = if id < 30 { id } else { id - 30 };
        let city = name % 12;
        let class = (name / 12 + name) % 3;
        [
            (id + 1).to_string(),
            CUSTOMER_NAMES[name].to_string(),
            CITIES[city].to_string(),
            COUNTRIES[city / 3].to_string(),
            CLASSES[class].to_string(),
        ]
    };
    let product = |id: usize| {
        let name = id % 15;
        [
            (101 + id).to_string(),
            PRODUCT_NAMES[name].to_string(),
            CATEGORIES[name % 4].to_string(),
        ]
    };
    // every id appears at least twice, with two different partners
    let mut pairs: Vec<(usize, usize)> = (0..40).flat_map(|c| [(c, c % 20), (c, (c + 7) % 20)]).collect();
    while pairs.len() < n_rows {
        pairs.push((rng.gen_range(0..40), rng.gen_range(0..20)));
    }
    pairs.truncate(n_rows);
    pairs.shuffle(&mut rng);
    let rows = pairs
        .into_iter()
        .map(|(c, p)| {
            let mut row: Vec<String> = customer(c).into();
            row.extend(product(p));
            row.push(rng.gen_range(1..=50).to_string());
            row
        })
        .collect();
    table("product_orders", &PRODUCT_ORDER_ATTRIBUTES, rows)
}

pub const SPEAKING_TIME_ATTRIBUTES: [&str; 7] = [
    "media_type",
    "channel_name",
    "is_public_channel",
    "year",
    "women_expression_rate",
    "speech_rate",
    "nb_hours_analyzed",
];

/// Yearly speaking-time figures for 21 radio stations and 34 TV channels,
/// 1995 to 2019. Both media types have public and private channels.
pub fn speaking_time(seed: u64) -> CanonicalTable {
    let mut rng = rng(seed);
    let mut channels: Vec<(String, &str, bool)> = Vec::new();
    for i in 1..=21 {
        channels.push((format!("Radio {i:02}"), "radio", i % 3 == 0));
    }
    for i in 1..=34 {
        channels.push((format!("Channel {i:02}"), "tv", i % 4 == 0));
    }
    let mut rows = Vec::new();
    for (name, media, public) in &channels {
        let base: f64 = rng.gen_range(0.15..0.45);
        for year in 1995..=2019 {
            let women = (base + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0);
            rows.push(vec![
                media.to_string(),
                name.clone(),
                public.to_string(),
                year.to_string(),
                format!("{women:.4}"),
                format!("{:.4}", rng.gen_range(0.3..0.9)),
                format!("{:.1}", rng.gen_range(50.0..9000.0)),
            ]);
        }
    }
    table("speaking_time", &SPEAKING_TIME_ATTRIBUTES, rows)
}

/// Random categorical table: `n_attrs` columns `a0..`, domain sizes in
/// `domain`, a share `missing` of blank cells. Some columns are functions
/// of an earlier one so that dependencies occur.
pub fn random_table(
    rng: &mut impl Rng,
    n_attrs: usize,
    n_rows: usize,
    domain: std::ops::RangeInclusive<usize>,
    missing: f64,
) -> CanonicalTable {
    let mut cols: Vec<Vec<String>> = Vec::new();
    for j in 0..n_attrs {
        let size = rng.gen_range(domain.clone());
        let col: Vec<String> = if j > 0 && rng.gen_bool(0.4) {
            let src = rng.gen_range(0..j);
            let map: Vec<usize> = (0..64).map(|_| rng.gen_range(0..size)).collect();
            cols[src]
                .iter()
                .map(|v| {
                    let k: usize = v.trim_start_matches('v').parse().unwrap_or(0);
                    format!("v{}", map[k % 64])
                })
                .collect()
        } else {
            (0..n_rows).map(|_| format!("v{}", rng.gen_range(0..size))).collect()
        };
        cols.push(col);
    }
    let mut rows: Vec<Vec<String>> = (0..n_rows)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect();
    for row in &mut rows {
        for cell in row.iter_mut() {
            if rng.gen_bool(missing) {
                cell.clear();
            }
        }
        if row.iter().all(String::is_empty) {
            row[0] = "v0".into();
        }
    }
    let names: Vec<String> = (0..n_attrs).map(|j| format!("a{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    table("random", &refs, rows)
}

/// Random cross table with `rows` x `cols` numeric interior. Each row keeps
/// at least one value. Returns the grid and its (row, column, value)
/// triples.
pub fn random_cross(
    rng: &mut impl Rng,
    rows: usize,
    cols: usize,
    empty: f64,
) -> (RawGrid, Vec<(String, String, String)>) {
    let corner = if rng.gen_bool(0.5) { "" } else { "region/period" };
    let mut grid = vec![std::iter::once(corner.to_string())
        .chain((0..cols).map(|c| format!("P{c}")))
        .collect::<Vec<_>>()];
    let mut triples = Vec::new();
    for r in 0..rows {
        let label = format!("R{r}");
        let keep = rng.gen_range(0..cols);
        let mut line = vec![label.clone()];
        for c in 0..cols {
            let v = if c != keep && rng.gen_bool(empty) {
                String::new()
            } else {
                let v = rng.gen_range(0..1000).to_string();
                triples.push((label.clone(), format!("P{c}"), v.clone()));
                v
            };
            line.push(v);
        }
        grid.push(line);
    }
    (RawGrid::from_rows(grid, "cross").expect("rectangular"), triples)
}

pub const ORDER_LINE_ATTRIBUTES: [&str; 10] = [
    "order_id", "customer", "city", "country", "product", "category", "year", "quantity", "price",
    "discount",
];

/// Large order-line table: a unique order id, customer -> city -> country,
/// product -> category, a year and three numeric measures.
pub fn order_lines(seed: u64, n_rows: usize) -> CanonicalTable {
    let mut rng = rng(seed);
    let rows = (0..n_rows)
        .map(|i| {
            let customer = rng.gen_range(0..1000);
            let city = customer % 100;
            let product = rng.gen_range(0..500);
            vec![
                (i + 1).to_string(),
                format!("cust{customer}"),
                format!("city{city}"),
                format!("country{}", city % 10),
                format!("prod{product}"),
                format!("cat{}", product % 20),
                rng.gen_range(2000..2020).to_string(),
                rng.gen_range(1..=50).to_string(),
                format!("{:.2}", rng.gen_range(1.0..500.0)),
                format!("{:.2}", rng.gen_range(0.0..0.3)),
            ]
        })
        .collect();
    table("order_lines", &ORDER_LINE_ATTRIBUTES, rows)
}
