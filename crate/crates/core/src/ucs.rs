//! Upward-closed sets of markings represented by their minimal elements, and
//! the one-step predecessor bases of net transitions.

use std::collections::BTreeMap;

use crate::combin::{Compositions, Odometer};
use crate::net::{ExtendedNet, GenConfig, Marking, OrdinaryTransition};

/// Componentwise `a <= b`.
pub fn leq(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// A finite antichain; denotes every marking above one of its elements.
/// Elements are kept in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Basis {
    elems: Vec<Marking>,
}

impl Basis {
    pub fn elems(&self) -> &[Marking] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Membership of a possibly-ω vector in the denoted set.
    pub fn contains(&self, v: &GenConfig) -> bool {
        self.elems.iter().any(|e| v.covers(e))
    }

    pub fn contains_marking(&self, v: &[u32]) -> bool {
        self.elems.iter().any(|e| leq(e, v))
    }
}

impl From<Basis> for Vec<Marking> {
    fn from(b: Basis) -> Self {
        b.elems
    }
}

/// Minimal elements of `items` by their markings, keeping the payload of the
/// first occurrence of each marking. Output is sorted by marking.
pub fn minimize_tagged<T>(items: impl IntoIterator<Item = (Marking, T)>) -> Vec<(Marking, T)> {
    let mut first: BTreeMap<Marking, T> = BTreeMap::new();
    for (m, tag) in items {
        first.entry(m).or_insert(tag);
    }
    let mut by_size: Vec<&Marking> = first.keys().collect();
    by_size.sort_by_key(|m| m.iter().map(|&k| k as u64).sum::<u64>());
    let mut kept: Vec<&Marking> = Vec::new();
    for m in by_size {
        if !kept.iter().any(|k| leq(k, m)) {
            kept.push(m);
        }
    }
    let keep: std::collections::BTreeSet<Marking> = kept.into_iter().cloned().collect();
    first.into_iter().filter(|(m, _)| keep.contains(m)).collect()
}

pub fn minimize(vs: impl IntoIterator<Item = Marking>) -> Basis {
    Basis {
        elems: minimize_tagged(vs.into_iter().map(|m| (m, ())))
            .into_iter()
            .map(|(m, ())| m)
            .collect(),
    }
}

/// `↑b2 ⊆ ↑b1`.
pub fn subsumed(b1: &Basis, b2: &Basis) -> bool {
    b2.elems.iter().all(|e| b1.contains_marking(e))
}

/// The unique minimal `d` with `fire(d, t) >= m`: `pre + max(m - post, 0)`.
pub fn pred_basis_ordinary(t: &OrdinaryTransition, m: &[u32]) -> Marking {
    t.pre
        .iter()
        .zip(&t.post)
        .zip(m)
        .map(|((&pre, &post), &need)| pre + need.saturating_sub(post))
        .collect()
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum UcsError {
    #[error("vector has {got} entries, net has {expected} places")]
    Dimension { expected: usize, got: usize },
}

/// Designated tokens of a broadcast predecessor: `((from, to), count)`.
pub type Designation = Vec<((usize, usize), u32)>;

/// Predecessor candidates of `↑m` under broadcast `b`, each with the routing of
/// the tokens that supply the demand. The sender covers one unit of demand at
/// its post place; every remaining unit on a template state must come from a
/// receiver in that state's transfer preimage.
pub fn broadcast_pred_candidates(
    net: &ExtendedNet,
    b: usize,
    m: &[u32],
) -> Result<Vec<(Marking, Designation)>, UcsError> {
    if m.len() != net.num_places() {
        return Err(UcsError::Dimension {
            expected: net.num_places(),
            got: m.len(),
        });
    }
    let bt = &net.broadcasts[b];
    let mut residual: Vec<u32> = m[..net.num_states].to_vec();
    residual[bt.sender_post] = residual[bt.sender_post].saturating_sub(1);

    let mut demanded = Vec::new();
    for (p, &r) in residual.iter().enumerate() {
        if r == 0 {
            continue;
        }
        let pre = bt.preimage(p);
        if pre.is_empty() {
            return Ok(Vec::new());
        }
        let comps: Vec<Vec<u32>> = Compositions::new(r, pre.len()).collect();
        demanded.push((p, pre, comps));
    }

    let mut base = m.to_vec();
    for k in base.iter_mut().take(net.num_states) {
        *k = 0;
    }
    base[bt.sender_pre] += 1;

    let sizes = demanded.iter().map(|(_, _, c)| c.len()).collect();
    Ok(Odometer::new(sizes)
        .map(|choice| {
            let mut d = base.clone();
            let mut designation = Vec::new();
            for ((p, pre, comps), &ci) in demanded.iter().zip(&choice) {
                for (&from, &k) in pre.iter().zip(&comps[ci]) {
                    if k > 0 {
                        d[from] += k;
                        designation.push(((from, *p), k));
                    }
                }
            }
            (d, designation)
        })
        .collect())
}

/// Minimal markings from which some firing of broadcast `b` covers `m`.
pub fn pred_basis_broadcast(net: &ExtendedNet, b: usize, m: &[u32]) -> Result<Basis, UcsError> {
    Ok(minimize(
        broadcast_pred_candidates(net, b, m)?.into_iter().map(|(d, _)| d),
    ))
}

/// Predecessor basis of `↑m` over every transition of the net.
pub fn pred_basis_all(net: &ExtendedNet, m: &[u32]) -> Result<Basis, UcsError> {
    let mut all: Vec<Marking> = net.ordinary.iter().map(|t| pred_basis_ordinary(t, m)).collect();
    for b in 0..net.broadcasts.len() {
        all.extend(broadcast_pred_candidates(net, b, m)?.into_iter().map(|(d, _)| d));
    }
    Ok(minimize(all))
}

/// Lexicographically least element of `b` compatible with `init`: below every
/// finite entry, unconstrained at ω entries.
pub fn intersects_initial<'a>(b: &'a Basis, init: &GenConfig) -> Option<&'a Marking> {
    b.elems.iter().find(|e| init.covers(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::Count;
    use crate::model::parse_template;
    use crate::net::compile;

    fn leader_net() -> ExtendedNet {
        let t = parse_template(
            "semantics broadcast\nvalues a\nstates q1 q2 q3\ninit q1=omega\ntarget q2\n\
             trans q1 a!! q2\ntrans q1 a?? q3\n",
        )
        .unwrap()
        .complete_receives()
        .unwrap();
        compile(&t).unwrap()
    }

    fn basis(vs: &[&[u32]]) -> Basis {
        minimize(vs.iter().map(|v| v.to_vec()))
    }

    #[test]
    fn minimize_drops_dominated() {
        assert_eq!(basis(&[&[1, 0], &[2, 0], &[0, 1]]).elems(), &[vec![0, 1], vec![1, 0]]);
        assert!(minimize(Vec::new()).is_empty());
        assert_eq!(basis(&[&[1, 1], &[2, 0], &[0, 2]]).len(), 3);
        assert_eq!(basis(&[&[1, 1], &[1, 1]]).len(), 1);
    }

    #[test]
    fn contains_with_omega() {
        let b = basis(&[&[1, 0]]);
        assert!(b.contains(&GenConfig(vec![Count::Omega, Count::ZERO])));
        assert!(!basis(&[&[0, 2]]).contains(&GenConfig(vec![Count::Fin(5), Count::Fin(1)])));
        assert!(!Basis::default().contains(&GenConfig(vec![Count::Omega, Count::Omega])));
    }

    #[test]
    fn subsumption() {
        let b1 = basis(&[&[1, 0]]);
        assert!(subsumed(&b1, &basis(&[&[2, 0], &[1, 3]])));
        assert!(!subsumed(&basis(&[&[2, 0]]), &b1));
        assert!(subsumed(&b1, &b1));
    }

    #[test]
    fn ordinary_pred_basis() {
        let t = OrdinaryTransition {
            pre: vec![1, 1, 0, 0],
            post: vec![0, 0, 1, 1],
            tag: crate::net::OrdinaryTag::Tau(0),
        };
        assert_eq!(pred_basis_ordinary(&t, &[0, 0, 1, 0]), vec![1, 1, 0, 0]);
        assert_eq!(pred_basis_ordinary(&t, &[0, 1, 0, 0]), vec![1, 2, 0, 0]);
        assert_eq!(pred_basis_ordinary(&t, &t.post), t.pre);
    }

    #[test]
    fn leader_broadcast_pred_bases() {
        let net = leader_net();
        assert_eq!(
            pred_basis_broadcast(&net, 0, &[0, 1, 0]).unwrap().elems(),
            &[vec![1, 0, 0]]
        );
        assert_eq!(
            pred_basis_broadcast(&net, 0, &[0, 2, 0]).unwrap().elems(),
            &[vec![1, 1, 0]]
        );
        assert_eq!(
            pred_basis_broadcast(&net, 0, &[0, 0, 2]).unwrap().elems(),
            &[vec![1, 0, 2], vec![2, 0, 1], vec![3, 0, 0]]
        );
        assert!(pred_basis_broadcast(&net, 0, &[1, 0, 0]).unwrap().is_empty());
        assert!(matches!(
            pred_basis_broadcast(&net, 0, &[1, 0]),
            Err(UcsError::Dimension { .. })
        ));
    }

    #[test]
    fn initial_intersection() {
        let omega_q1 = GenConfig(vec![Count::Omega, Count::ZERO]);
        assert_eq!(intersects_initial(&basis(&[&[1, 0]]), &omega_q1), Some(&vec![1, 0]));
        assert_eq!(intersects_initial(&basis(&[&[0, 2], &[1, 1]]), &omega_q1), None);
        assert_eq!(
            intersects_initial(&basis(&[&[2]]), &GenConfig(vec![Count::Fin(1)])),
            None
        );
    }
}
