use std::collections::HashMap;

use super::FunctionalDependency;
use crate::table::CanonicalTable;

#[derive(PartialEq, Eq, Hash)]
enum RhsKey<'a> {
    Value(&'a str),
    // a missing right-hand value agrees with nothing, so it is keyed by row
    Missing(usize),
}

/// Reference miner for small tables: groups rows with plain maps and counts
/// deletions directly. Meant for checking [`super::mine_unary_fds`].
pub fn brute_force_fds(table: &CanonicalTable, threshold: f64) -> Vec<FunctionalDependency> {
    let n = table.n_rows();
    let attrs = table.attributes();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    for (a, lhs) in attrs.iter().enumerate() {
        for (b, rhs) in attrs.iter().enumerate() {
            if a == b {
                continue;
            }
            let mut groups: HashMap<&str, HashMap<RhsKey, usize>> = HashMap::new();
            for (i, row) in table.rows().iter().enumerate() {
                if row[a].is_empty() {
                    continue;
                }
                let key = if row[b].is_empty() {
                    RhsKey::Missing(i)
                } else {
                    RhsKey::Value(&row[b])
                };
                *groups.entry(&row[a]).or_default().entry(key).or_default() += 1;
            }
            let deletions: usize = groups
                .values()
                .map(|sub| sub.values().sum::<usize>() - sub.values().max().copied().unwrap_or(0))
                .sum();
            let error = deletions as f64 / n as f64;
            if error <= threshold {
                out.push(FunctionalDependency {
                    lhs: lhs.clone(),
                    rhs: rhs.clone(),
                    error,
                });
            }
        }
    }
    out.sort_by(|x, y| x.key().cmp(&y.key()));
    out
}
