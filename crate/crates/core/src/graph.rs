//! Strongly connected components (iterative Tarjan).

/// Component id per node; `None` for inactive nodes. Edges to inactive nodes
/// are ignored. Ids are assigned in the order components complete.
pub(crate) fn scc(adj: &[Vec<usize>], active: &[bool]) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![None; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // (node, next edge position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if !active[root] || index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if !active[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = Some(next_comp);
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Nodes that can reach `targets` (including the targets), backward BFS.
pub(crate) fn can_reach(adj: &[Vec<usize>], targets: &[bool]) -> Vec<bool> {
    let n = adj.len();
    let mut rev = vec![Vec::new(); n];
    for (v, succ) in adj.iter().enumerate() {
        for &w in succ {
            rev[w].push(v);
        }
    }
    let mut seen = targets.to_vec();
    let mut queue: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
    while let Some(w) = queue.pop() {
        for &v in &rev[w] {
            if !seen[v] {
                seen[v] = true;
                queue.push(v);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_and_chains() {
        let adj = vec![vec![1], vec![0, 2], vec![2], vec![]];
        let c = scc(&adj, &[true; 4]);
        assert_eq!(c[0], c[1]);
        assert_ne!(c[0], c[2]);
        assert_ne!(c[2], c[3]);
        let c = scc(&adj, &[true, false, true, true]);
        assert_eq!(c[1], None);
        assert_ne!(c[0], c[2]);
    }

    #[test]
    fn backward_reachability() {
        let adj = vec![vec![1], vec![2], vec![2], vec![3]];
        assert_eq!(
            can_reach(&adj, &[false, false, true, false]),
            vec![true, true, true, false]
        );
    }
}
