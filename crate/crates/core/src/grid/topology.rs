use std::collections::VecDeque;

use super::{BusKind, NetworkCase};

/// Rooted view of the feeder. Bus and line positions are indices into
/// `case.buses` / `case.lines`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopologyReport {
    pub connected: bool,
    pub radial: bool,
    /// Bus id of the root PCC.
    pub root: Option<usize>,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Breadth-first order from the root; parents precede children.
    pub order: Vec<usize>,
    /// Sending (parent) and receiving (child) bus of every line.
    pub line_parent: Vec<usize>,
    pub line_child: Vec<usize>,
    /// Line feeding each bus from its parent.
    pub feeder_line: Vec<Option<usize>>,
    /// Lines leaving each bus towards its children.
    pub child_lines: Vec<Vec<usize>>,
    pub violations: Vec<String>,
}

impl TopologyReport {
    pub fn parent_of(&self, case: &NetworkCase, id: usize) -> Option<usize> {
        let i = case.bus_index(id)?;
        self.parent[i].map(|p| case.buses[p].id)
    }

    pub fn depth_of(&self, case: &NetworkCase, id: usize) -> Option<usize> {
        case.bus_index(id).map(|i| self.depth[i])
    }
}

fn find(uf: &mut [usize], mut a: usize) -> usize {
    while uf[a] != a {
        uf[a] = uf[uf[a]];
        a = uf[a];
    }
    a
}

fn path_between(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &w in &adj[u] {
            if prev[w] == usize::MAX {
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

pub fn validate_topology(case: &NetworkCase) -> TopologyReport {
    let n = case.buses.len();
    let mut rep = TopologyReport {
        parent: vec![None; n],
        depth: vec![0; n],
        line_parent: vec![usize::MAX; case.lines.len()],
        line_child: vec![usize::MAX; case.lines.len()],
        feeder_line: vec![None; n],
        child_lines: vec![Vec::new(); n],
        ..Default::default()
    };
    let mut uf: Vec<usize> = (0..n).collect();
    // adjacency of accepted (cycle-free) edges: (neighbour, line)
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut plain: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut has_cycle = false;
    for (li, l) in case.lines.iter().enumerate() {
        let (Some(a), Some(b)) = (case.bus_index(l.from), case.bus_index(l.to)) else {
            rep.violations.push(format!("line {} references an unknown bus", l.label()));
            continue;
        };
        if a == b {
            rep.violations.push(format!("line {} is a self-loop", l.label()));
            continue;
        }
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra == rb {
            has_cycle = true;
            let mut ids: Vec<String> =
                path_between(&plain, a, b).into_iter().map(|i| case.buses[i].id.to_string()).collect();
            ids.push(case.buses[a].id.to_string());
            rep.violations.push(format!("line {} closes cycle {}", l.label(), ids.join("-")));
            continue;
        }
        uf[ra] = rb;
        adj[a].push((b, li));
        adj[b].push((a, li));
        plain[a].push(b);
        plain[b].push(a);
    }

    let root = case.buses.iter().position(|b| b.kind == BusKind::Pcc);
    let Some(root) = root else {
        rep.violations.push("no PCC bus to root the feeder".into());
        return rep;
    };
    rep.root = Some(case.buses[root].id);
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        rep.order.push(u);
        for &(w, li) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                rep.parent[w] = Some(u);
                rep.depth[w] = rep.depth[u] + 1;
                rep.line_parent[li] = u;
                rep.line_child[li] = w;
                rep.feeder_line[w] = Some(li);
                rep.child_lines[u].push(li);
                queue.push_back(w);
            }
        }
    }
    rep.connected = rep.order.len() == n;
    if !rep.connected {
        let missing: Vec<String> =
            (0..n).filter(|&i| !seen[i]).map(|i| case.buses[i].id.to_string()).collect();
        rep.violations.push(format!("buses {} are not connected to the PCC", missing.join(", ")));
    }
    rep.radial = rep.connected && !has_cycle && case.lines.len() + 1 == n;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BusSpec, LineSpec, PerUnitBase};

    fn bus(id: usize, kind: BusKind) -> BusSpec {
        BusSpec {
            id,
            kind,
            v_min: 0.9,
            v_max: 1.1,
            v_setpoint: None,
            fixed_load: vec![1.0],
            load_power_factor: 0.95,
            min_energy: 0.0,
        }
    }

    fn raw(buses: Vec<BusSpec>, lines: &[(usize, usize)]) -> NetworkCase {
        let base = PerUnitBase::default();
        let lines = lines.iter().map(|&(a, b)| LineSpec::new(a, b, 0.1, 0.1, 1000.0, &base)).collect();
        // bypass validation so broken topologies can be inspected
        NetworkCase {
            name: "t".into(),
            base,
            buses,
            lines,
            horizon: 1,
            dt: 1.0,
            pcc_buses: vec![1],
            import_limit_kw: None,
            allow_multiple_pcc: false,
            topology: TopologyReport::default(),
        }
    }

    #[test]
    fn two_bus_parent() {
        let c = raw(vec![bus(1, BusKind::Pcc), bus(2, BusKind::Load)], &[(1, 2)]);
        let r = validate_topology(&c);
        assert!(r.radial && r.connected);
        assert_eq!(r.parent_of(&c, 2), Some(1));
        assert_eq!(r.parent_of(&c, 1), None);
    }

    #[test]
    fn reversed_line_is_oriented_from_root() {
        let c = raw(vec![bus(1, BusKind::Pcc), bus(2, BusKind::Load), bus(3, BusKind::Load)], &[(2, 1), (3, 2)]);
        let r = validate_topology(&c);
        assert!(r.radial);
        assert_eq!((r.line_parent[0], r.line_child[0]), (0, 1));
        assert_eq!((r.line_parent[1], r.line_child[1]), (1, 2));
        assert_eq!(r.order, vec![0, 1, 2]);
    }

    #[test]
    fn isolated_bus_is_disconnected() {
        let c = raw(vec![bus(1, BusKind::Pcc), bus(2, BusKind::Load), bus(3, BusKind::Load)], &[(1, 2)]);
        let r = validate_topology(&c);
        assert!(!r.connected && !r.radial);
        assert!(r.violations[0].contains('3'));
    }

    #[test]
    fn cycle_is_named() {
        let c = raw(
            vec![bus(1, BusKind::Pcc), bus(2, BusKind::Load), bus(3, BusKind::Load)],
            &[(1, 2), (2, 3), (3, 1)],
        );
        let r = validate_topology(&c);
        assert!(!r.radial);
        assert_eq!(r.violations, vec!["line 3-1 closes cycle 3-2-1-3".to_string()]);
    }
}
