use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::FunctionalDependency;

struct Digraph<'a> {
    names: Vec<&'a str>,
    adj: Vec<BTreeSet<usize>>,
}

impl<'a> Digraph<'a> {
    fn new(fds: &'a [FunctionalDependency]) -> Self {
        let names: Vec<&str> = fds
            .iter()
            .flat_map(|f| [f.lhs.as_str(), f.rhs.as_str()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let id: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut adj = vec![BTreeSet::new(); names.len()];
        for f in fds {
            if f.lhs != f.rhs {
                adj[id[f.lhs.as_str()]].insert(id[f.rhs.as_str()]);
            }
        }
        Digraph { names, adj }
    }

    fn id(&self, name: &str) -> usize {
        self.names.binary_search(&name).expect("node of this graph")
    }

    fn reachable(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.names.len()];
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Drops every dependency implied through other kept ones, visiting edges in
/// (lhs, rhs) order. The closure is unchanged and the result is its own cover.
pub fn minimal_cover(fds: &[FunctionalDependency]) -> Vec<FunctionalDependency> {
    let mut sorted: Vec<&FunctionalDependency> = fds.iter().filter(|f| f.lhs != f.rhs).collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    sorted.dedup_by(|a, b| a.key() == b.key());

    let mut graph = Digraph::new(fds);
    let mut kept = Vec::new();
    for f in sorted {
        let (u, v) = (graph.id(&f.lhs), graph.id(&f.rhs));
        graph.adj[u].remove(&v);
        if graph.reachable(u)[v] {
            continue;
        }
        graph.adj[u].insert(v);
        kept.push(f.clone());
    }
    kept
}

/// Groups of at least two mutually dependent attributes, each sorted, in
/// order of their first member.
pub fn equivalence_classes(fds: &[FunctionalDependency]) -> Vec<BTreeSet<String>> {
    let graph = Digraph::new(fds);
    let reach: Vec<Vec<bool>> = (0..graph.names.len()).map(|u| graph.reachable(u)).collect();
    let mut assigned = vec![false; graph.names.len()];
    let mut out = Vec::new();
    for u in 0..graph.names.len() {
        if assigned[u] {
            continue;
        }
        let class: BTreeSet<String> = (0..graph.names.len())
            .filter(|&v| v == u || (reach[u][v] && reach[v][u]))
            .map(|v| {
                assigned[v] = true;
                graph.names[v].to_string()
            })
            .collect();
        if class.len() >= 2 {
            out.push(class);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fds(edges: &[(&str, &str)]) -> Vec<FunctionalDependency> {
        edges.iter().map(|(a, b)| FunctionalDependency::exact(a, b)).collect()
    }

    fn keys(v: &[FunctionalDependency]) -> Vec<(&str, &str)> {
        v.iter().map(FunctionalDependency::key).collect()
    }

    #[test]
    fn transitive_edge_removed() {
        let out = minimal_cover(&fds(&[("A", "B"), ("B", "C"), ("A", "C")]));
        assert_eq!(keys(&out), [("A", "B"), ("B", "C")]);
    }

    #[test]
    fn product_order_cover() {
        let input = fds(&[
            ("idCustomer", "nameCustomer"),
            ("nameCustomer", "cityCustomer"),
            ("cityCustomer", "countryCustomer"),
            ("nameCustomer", "classCustomer"),
            ("idProduct", "nameProduct"),
            ("nameProduct", "categoryProduct"),
            ("idCustomer", "cityCustomer"),
            ("idCustomer", "countryCustomer"),
            ("idCustomer", "classCustomer"),
            ("nameCustomer", "countryCustomer"),
            ("idProduct", "categoryProduct"),
        ]);
        let out = minimal_cover(&input);
        assert_eq!(
            keys(&out),
            [
                ("cityCustomer", "countryCustomer"),
                ("idCustomer", "nameCustomer"),
                ("idProduct", "nameProduct"),
                ("nameCustomer", "cityCustomer"),
                ("nameCustomer", "classCustomer"),
                ("nameProduct", "categoryProduct"),
            ]
        );
        assert!(equivalence_classes(&out).is_empty());
    }

    #[test]
    fn cycles_keep_membership() {
        let clique = fds(&[("A", "B"), ("B", "A"), ("A", "C"), ("C", "A"), ("B", "C"), ("C", "B")]);
        let out = minimal_cover(&clique);
        assert_eq!(keys(&out), [("A", "C"), ("B", "C"), ("C", "A"), ("C", "B")]);
        assert_eq!(
            equivalence_classes(&out),
            vec![BTreeSet::from(["A".to_string(), "B".into(), "C".into()])]
        );
    }

    #[test]
    fn classes() {
        assert_eq!(
            equivalence_classes(&fds(&[("A", "B"), ("B", "A")])),
            vec![BTreeSet::from(["A".to_string(), "B".into()])]
        );
        assert_eq!(
            equivalence_classes(&fds(&[("A", "B"), ("B", "C"), ("C", "A"), ("C", "D")])),
            vec![BTreeSet::from(["A".to_string(), "B".into(), "C".into()])]
        );
        assert!(equivalence_classes(&fds(&[("A", "B")])).is_empty());
    }
}
