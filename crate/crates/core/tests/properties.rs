use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use tabstar::classify::{classify_table, Orientation, Structure};
use tabstar::fdmine::{brute_force_fds, g3_error, minimal_cover, mine_unary_fds, FunctionalDependency};
use tabstar::fdmine::equivalence_classes;
use tabstar::profile::{formula, profile_table, select_measures, Aggregation, Kind, MeasureSpec, Origin};
use tabstar::schema::{
    assemble_schema, build_dependency_graph, extract_hierarchies, group_dimensions, populate_star, Dimension, Hierarchy,
    Level, SchemaError,
};
use tabstar::table::Provenance;
use tabstar::transform::{explode_multivalued, normalize, replay};
use tabstar::{detect_orientation, read_source, split_tables, CanonicalTable, FormatHint, RawGrid};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

/// Categorical table `a0..` with values `v0..`, blanks where the mask says.
fn categorical() -> impl Strategy<Value = CanonicalTable> {
    (2usize..=6, 2usize..=60, 2usize..=8).prop_flat_map(|(n_attrs, n_rows, domain)| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.93, 0..domain), n_attrs), n_rows)
            .prop_map(move |cells| {
                let rows = cells
                    .into_iter()
                    .map(|r| {
                        let mut row: Vec<String> =
                            r.into_iter().map(|v| v.map_or_else(String::new, |k| format!("v{k}"))).collect();
                        if row.iter().all(String::is_empty) {
                            row[0] = "v0".into();
                        }
                        row
                    })
                    .collect();
                let attrs = (0..n_attrs).map(|j| format!("a{j}")).collect();
                CanonicalTable::new(attrs, rows, Provenance::default()).unwrap()
            })
    })
}

fn key_set(fds: &[FunctionalDependency]) -> BTreeSet<(String, String)> {
    fds.iter().map(|f| (f.lhs.clone(), f.rhs.clone())).collect()
}

fn reach(edges: &BTreeSet<(String, String)>) -> BTreeSet<(String, String)> {
    let mut out = edges.clone();
    loop {
        let extra: Vec<_> = out
            .iter()
            .flat_map(|(a, b)| out.iter().filter(move |(c, _)| c == b).map(move |(_, d)| (a.clone(), d.clone())))
            .filter(|(a, d)| a != d && !out.contains(&(a.clone(), d.clone())))
            .collect();
        if extra.is_empty() {
            return out;
        }
        out.extend(extra);
    }
}

fn random_dag() -> impl Strategy<Value = Vec<FunctionalDependency>> {
    (2usize..=9).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut bits = bits.into_iter();
            let mut fds = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if bits.next().unwrap() {
                        fds.push(FunctionalDependency::exact(&format!("n{i}"), &format!("n{j}")));
                    }
                }
            }
            fds
        })
    })
}

/// Horizontal table whose columns each hold one type: text, integers or
/// decimals. Column 0 is always text.
fn typed_grid() -> impl Strategy<Value = RawGrid> {
    // a body of a single type reads the same both ways, so at least two
    // types occur after the label column
    (prop::collection::vec(0u8..3, 3..=6), 4usize..=20).prop_map(|(mut kinds, n_rows)| {
        kinds[0] = 0;
        if kinds[1..].iter().all(|&k| k == kinds[1]) {
            kinds[2] = (kinds[1] + 1) % 3;
        }
        let mut rows = vec![(0..kinds.len()).map(|j| format!("field{j}")).collect::<Vec<_>>()];
        for r in 0..n_rows {
            rows.push(
                kinds
                    .iter()
                    .enumerate()
                    .map(|(j, k)| match k {
                        0 => format!("name{}x{}", r, j),
                        1 => (r * 7 + j * 13 + 3).to_string(),
                        _ => format!("{}.{}", r * 3 + j, (r * 17 + j) % 100),
                    })
                    .collect(),
            );
        }
        RawGrid::from_rows(rows, "typed").unwrap()
    })
}

fn cross_grid() -> impl Strategy<Value = (RawGrid, Vec<(String, String, String)>)> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::option::weighted(0.8, 0u32..1000), r * c).prop_map(move |vals| {
            let mut grid = vec![std::iter::once(String::new()).chain((0..c).map(|j| format!("P{j}"))).collect::<Vec<_>>()];
            let mut triples = Vec::new();
            for i in 0..r {
                let mut line = vec![format!("R{i}")];
                for j in 0..c {
                    // keep the first cell of every row
                    let v = vals[i * c + j].or(if j == 0 { Some(1) } else { None });
                    line.push(v.map_or_else(String::new, |v| v.to_string()));
                    if let Some(v) = v {
                        triples.push((format!("R{i}"), format!("P{j}"), v.to_string()));
                    }
                }
                grid.push(line);
            }
            (RawGrid::from_rows(grid, "cross").unwrap(), triples)
        })
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn split_keeps_every_cell(blocks in prop::collection::vec((1usize..=4, 1usize..=4), 1..=4), side in any::<bool>()) {
        // blocks laid out one after another with a blank row or column between
        let (h, w) = if side {
            (blocks.iter().map(|b| b.0).max().unwrap(), blocks.iter().map(|b| b.1 + 1).sum::<usize>())
        } else {
            (blocks.iter().map(|b| b.0 + 1).sum::<usize>(), blocks.iter().map(|b| b.1).max().unwrap())
        };
        let mut cells = vec![vec![String::new(); w]; h];
        let mut offset = 0;
        for (k, &(bh, bw)) in blocks.iter().enumerate() {
            for r in 0..bh {
                for c in 0..bw {
                    let (rr, cc) = if side { (r, offset + c) } else { (offset + r, c) };
                    cells[rr][cc] = format!("b{k}r{r}c{c}");
                }
            }
            offset += if side { bw + 1 } else { bh + 1 };
        }
        let grid = RawGrid::from_rows(cells, "sheet").unwrap();
        let pieces = split_tables(&grid);
        prop_assert_eq!(pieces.len(), blocks.len());
        let mut seen: Vec<String> = pieces.iter().flat_map(|p| p.to_text_rows()).flatten().filter(|c| !c.is_empty()).collect();
        let mut all: Vec<String> = grid.to_text_rows().into_iter().flatten().filter(|c| !c.is_empty()).collect();
        seen.sort();
        all.sort();
        prop_assert_eq!(seen, all);
    }

    #[test]
    fn transpose_flips_orientation(grid in typed_grid()) {
        prop_assert_eq!(grid.transpose().transpose(), grid.clone());
        let o = detect_orientation(&grid);
        let flipped = detect_orientation(&grid.transpose());
        prop_assert_eq!(o, Orientation::RowsAreTuples);
        prop_assert_eq!(flipped, Orientation::ColumnsAreTuples);
    }

    #[test]
    fn classify_swaps_horizontal_and_vertical(grid in typed_grid()) {
        let t = classify_table(&grid).unwrap();
        let flipped = classify_table(&grid.transpose()).unwrap();
        prop_assert_eq!(t.structure, Structure::Horizontal);
        prop_assert_eq!(flipped.structure, Structure::Vertical);
        prop_assert_eq!(&t.cell_content, &flipped.cell_content);
        prop_assert_eq!(classify_table(&grid.clone()).unwrap(), t);
    }

    #[test]
    fn cross_unpivot_pivots_back((grid, triples) in cross_grid()) {
        let typology = classify_table(&grid).unwrap();
        prop_assert_eq!(typology.structure, Structure::Cross);
        let (table, _) = normalize(&grid, &typology).unwrap();
        let mut got: Vec<(String, String, String)> =
            table.rows().iter().map(|r| (r[0].clone(), r[1].clone(), r[2].clone())).collect();
        let mut want = triples;
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn replay_reproduces_the_table((grid, _) in cross_grid()) {
        let typology = classify_table(&grid).unwrap();
        let (table, hints) = normalize(&grid, &typology).unwrap();
        let (again, hints_again) = replay(&grid, &table.provenance.steps).unwrap();
        prop_assert_eq!(again.to_csv(), table.to_csv());
        prop_assert_eq!(hints_again, hints);
    }

    #[test]
    fn explode_keeps_the_value_multiset(lists in prop::collection::vec(prop::collection::vec(0u32..50, 1..=4), 2..=12)) {
        let mut rows = vec![vec!["key".to_string(), "tags".to_string()]];
        for (i, l) in lists.iter().enumerate() {
            rows.push(vec![format!("k{i}"), l.iter().map(|v| format!("t{v}")).collect::<Vec<_>>().join(";")]);
        }
        let out = explode_multivalued(&RawGrid::from_rows(rows, "mv").unwrap(), &[';']).unwrap();
        let mut got: Vec<(String, String)> =
            (1..out.n_rows()).map(|r| (out.text(r, 0).to_string(), out.text(r, 1).to_string())).collect();
        let mut want: Vec<(String, String)> = lists
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |v| (format!("k{i}"), format!("t{v}"))))
            .collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn miner_matches_oracle(t in categorical(), tau in prop::sample::select(vec![0.0, 0.02, 0.05, 0.2])) {
        prop_assert_eq!(mine_unary_fds(&t, &BTreeSet::new(), tau).unwrap(), brute_force_fds(&t, tau));
    }

    #[test]
    fn g3_is_bounded_and_zero_on_exact(t in categorical()) {
        let exact = key_set(&mine_unary_fds(&t, &BTreeSet::new(), 0.0).unwrap());
        for a in t.attributes() {
            for b in t.attributes() {
                if a == b {
                    continue;
                }
                let e = g3_error(&t, a, b).unwrap();
                prop_assert!((0.0..=1.0).contains(&e));
                prop_assert_eq!(e == 0.0, exact.contains(&(a.clone(), b.clone())));
            }
        }
    }

    #[test]
    fn more_tolerance_never_loses_dependencies(t in categorical()) {
        let mut previous = BTreeSet::new();
        for tau in [0.0, 0.01, 0.05, 0.1, 0.3, 0.6] {
            let now = key_set(&mine_unary_fds(&t, &BTreeSet::new(), tau).unwrap());
            prop_assert!(previous.is_subset(&now));
            previous = now;
        }
    }

    #[test]
    fn cover_keeps_closure_and_is_idempotent(fds in random_dag()) {
        let cover = minimal_cover(&fds);
        prop_assert_eq!(reach(&key_set(&cover)), reach(&key_set(&fds)));
        prop_assert_eq!(minimal_cover(&cover), cover.clone());
        for f in &cover {
            let mut rest = key_set(&cover);
            rest.remove(&(f.lhs.clone(), f.rhs.clone()));
            prop_assert!(!reach(&rest).contains(&(f.lhs.clone(), f.rhs.clone())));
        }
    }

    #[test]
    fn cover_of_mined_sets(t in categorical()) {
        let fds = mine_unary_fds(&t, &BTreeSet::new(), 0.0).unwrap();
        let cover = minimal_cover(&fds);
        prop_assert_eq!(reach(&key_set(&cover)), reach(&key_set(&fds)));
        prop_assert_eq!(minimal_cover(&cover), cover);
    }

    #[test]
    fn population_conserves_sums(cells in prop::collection::vec((0u8..6, 0u8..4, -500i32..500), 1..=80)) {
        let rows: Vec<Vec<String>> = cells
            .iter()
            .map(|(k1, k2, m)| vec![format!("k{k1}"), format!("g{}", k1 % 2), format!("s{k2}"), format!("{}", *m as f64 + 0.5)])
            .collect();
        let t = CanonicalTable::new(
            ["k1", "g", "k2", "m"].iter().map(|s| s.to_string()).collect(),
            rows,
            Provenance::default(),
        )
        .unwrap();
        let level = |p: &str| Level { parameter: p.into(), weak_attributes: vec![] };
        let dims = vec![
            Dimension {
                name: "D1".into(),
                root: "k1".into(),
                attributes: vec!["k1".into(), "g".into()],
                hierarchies: vec![Hierarchy { name: "H1".into(), levels: vec![level("k1"), level("g")] }],
            },
            Dimension {
                name: "D2".into(),
                root: "k2".into(),
                attributes: vec!["k2".into()],
                hierarchies: vec![Hierarchy { name: "H2".into(), levels: vec![level("k2")] }],
            },
        ];
        let m = MeasureSpec {
            name: "m".into(),
            source: Some("m".into()),
            aggregations: [Aggregation::Sum, Aggregation::Min, Aggregation::Max].into_iter().collect(),
            formula: None,
            origin: Origin::Auto,
        };
        let schema = assemble_schema("F1", vec![m, MeasureSpec::row_count()], dims, "s").unwrap();
        let star = populate_star(&schema, &t).unwrap();
        let col = |n: &str| star.fact.columns.iter().position(|c| c == n).unwrap();
        let total: f64 = star.fact.rows.iter().map(|r| r[col("m_sum")].parse::<f64>().unwrap()).sum();
        let source: f64 = cells.iter().map(|c| c.2 as f64 + 0.5).sum();
        prop_assert!((total - source).abs() <= 1e-9 * source.abs().max(1.0));
        let count: usize = star.fact.rows.iter().map(|r| r[col("row_count")].parse::<usize>().unwrap()).sum();
        prop_assert_eq!(count, t.n_rows());
        let keys: BTreeSet<(&String, &String)> = star.fact.rows.iter().map(|r| (&r[0], &r[1])).collect();
        prop_assert_eq!(keys.len(), star.fact.rows.len());
        let mut by_key: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for c in &cells {
            by_key.entry((format!("k{}", c.0), format!("s{}", c.1))).or_default().push(c.2 as f64 + 0.5);
        }
        for r in &star.fact.rows {
            let vals = &by_key[&(r[0].clone(), r[1].clone())];
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r[col("m_min")].parse::<f64>().unwrap(), min);
        }
    }

    #[test]
    fn mining_is_deterministic(t in categorical()) {
        let a = mine_unary_fds(&t, &BTreeSet::new(), 0.05).unwrap();
        let b = mine_unary_fds(&t.clone(), &BTreeSet::new(), 0.05).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn g3_stays_below_the_lhs_bound(t in categorical()) {
        let n = t.n_rows() as f64;
        for (i, a) in t.attributes().iter().enumerate() {
            let distinct = t.column(i).filter(|v| !v.is_empty()).collect::<BTreeSet<_>>().len() as f64;
            for b in t.attributes() {
                if a != b {
                    prop_assert!(g3_error(&t, a, b).unwrap() <= (n - distinct) / n + 1e-12);
                }
            }
        }
    }

    #[test]
    fn mined_graphs_are_acyclic_and_hierarchies_follow_the_cover(t in categorical(), tau in prop::sample::select(vec![0.0, 0.1])) {
        let fds = mine_unary_fds(&t, &BTreeSet::new(), tau).unwrap();
        let cover = minimal_cover(&fds);
        let graph = build_dependency_graph(&cover, &BTreeSet::new(), &profile_table(&t)).unwrap();
        let classes = equivalence_classes(&cover);
        let class_of = |a: &str| classes.iter().find(|c| c.contains(a)).cloned().unwrap_or_else(|| BTreeSet::from([a.to_string()]));
        let hierarchies = extract_hierarchies(&graph);
        for h in &hierarchies {
            let params: Vec<&str> = h.parameters().collect();
            for w in params.windows(2) {
                let linked = class_of(w[0]).iter().any(|p| class_of(w[1]).iter().any(|q| cover.iter().any(|f| &f.lhs == p && &f.rhs == q)));
                prop_assert!(linked, "{} -> {} not backed by the cover", w[0], w[1]);
            }
        }
        match group_dimensions(&hierarchies, &BTreeMap::new()) {
            Ok(dims) => {
                let mut placed: Vec<&String> = dims.iter().flat_map(|d| &d.attributes).collect();
                placed.sort();
                let mut all: Vec<&String> = t.attributes().iter().collect();
                all.sort();
                prop_assert_eq!(placed, all);
            }
            // a level shared by two roots cannot sit in exactly one dimension
            Err(SchemaError::InvariantViolation(_)) => {
                let roots_per_attr = hierarchies.iter().fold(BTreeMap::<&str, BTreeSet<&str>>::new(), |mut m, h| {
                    for a in h.attributes() {
                        m.entry(a).or_default().insert(h.root());
                    }
                    m
                });
                prop_assert!(roots_per_attr.values().any(|r| r.len() > 1));
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn csv_reading_is_deterministic_and_spanless(rows in prop::collection::vec(prop::collection::vec("[a-z0-9 ]{0,6}", 3), 1..=10)) {
        let mut text = String::from("x,y,z\n");
        for r in &rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        let a = read_source(text.as_bytes(), Some(FormatHint::Csv), "s").unwrap();
        let b = read_source(text.as_bytes(), Some(FormatHint::Csv), "s").unwrap();
        prop_assert_eq!(&a, &b);
        for g in &a {
            prop_assert!(g.rows().iter().flatten().all(|c| c.row_span == 1 && c.col_span == 1));
        }
    }

    #[test]
    fn auto_measures_come_from_numeric_attributes(t in categorical(), numeric in prop::collection::vec(-1e4f64..1e4, 60)) {
        // add one numeric column next to the categorical ones
        let attrs: Vec<String> = t.attributes().iter().cloned().chain(["amount".to_string()]).collect();
        let rows = t.rows().iter().enumerate().map(|(i, r)| {
            let mut r = r.clone();
            r.push(format!("{:.2}", numeric[i % numeric.len()]));
            r
        }).collect();
        let t = CanonicalTable::new(attrs, rows, Provenance::default()).unwrap();
        let profiles = profile_table(&t);
        prop_assert_eq!(profile_table(&t), profiles.clone());
        for m in select_measures(&profiles) {
            match &m.source {
                None => prop_assert_eq!(m.name.as_str(), "row_count"),
                Some(src) => {
                    let p = profiles.iter().find(|p| &p.attribute == src).unwrap();
                    prop_assert!(matches!(p.kind, Kind::Interval | Kind::Ratio));
                }
            }
        }
    }

    #[test]
    fn formulas_evaluate_when_inputs_parse(a in prop::option::of(-100.0f64..100.0), b in prop::option::of(1.0f64..100.0)) {
        let expr = formula::parse("(a + 2) * b - a / b").unwrap();
        let got = expr.eval(&|name| match name { "a" => a, "b" => b, _ => None });
        match (a, b) {
            (Some(a), Some(b)) => {
                let want = (a + 2.0) * b - a / b;
                prop_assert!((got.unwrap() - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
            _ => prop_assert_eq!(got, None),
        }
    }
}
