use num_traits::{One, Zero};

use super::{ActionId, ExecutionFragment, Model, ModelError};
use crate::adversary::{resolve, Adversary, AdversaryError, Choice};
use crate::rational::Rational;

/// Why a leaf of an execution tree stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafStatus {
    /// The adversary halted; the execution is maximal.
    Maximal,
    /// The adversary asked for time to pass beyond the horizon.
    PastHorizon,
}

#[derive(Debug, Clone)]
pub struct TreeNode<S> {
    pub parent: Option<usize>,
    pub action: Option<ActionId>,
    pub state: S,
    pub time: Rational,
    /// Weight of the edge from the parent.
    pub weight: Rational,
    /// Product of edge weights from the root.
    pub prob: Rational,
    pub children: Vec<usize>,
    pub leaf: Option<LeafStatus>,
}

/// The execution automaton `H(M, A, α)` cut at a time horizon. Nodes are
/// fragments extending the root; the subtree below a node is the rectangle
/// of executions having that fragment as a prefix.
#[derive(Debug, Clone)]
pub struct ExecutionTree<S> {
    nodes: Vec<TreeNode<S>>,
    root_fragment: ExecutionFragment<S>,
}

impl<S: Clone + PartialEq> ExecutionTree<S> {
    pub fn nodes(&self) -> &[TreeNode<S>] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].leaf.is_some())
    }

    /// The fragment a node stands for, including the root fragment.
    pub fn fragment(&self, node: usize) -> ExecutionFragment<S> {
        let mut path = Vec::new();
        let mut cur = Some(node);
        while let Some(k) = cur {
            if k == 0 {
                break;
            }
            path.push(k);
            cur = self.nodes[k].parent;
        }
        let mut frag = self.root_fragment.clone();
        for &k in path.iter().rev() {
            let n = &self.nodes[k];
            let elapse = &n.time - &self.nodes[n.parent.unwrap()].time;
            frag.push(n.action.clone().unwrap(), n.state.clone(), &elapse)
                .expect("tree edges are valid fragment extensions");
        }
        frag
    }

    /// `P_H[R_α]` for the rectangle anchored at `node`.
    pub fn rectangle_probability(&self, node: usize) -> &Rational {
        &self.nodes[node].prob
    }

    /// Total probability of the leaves whose fragment satisfies `pred`.
    pub fn probability_where(
        &self,
        mut pred: impl FnMut(&ExecutionFragment<S>, LeafStatus) -> bool,
    ) -> Rational {
        let mut total = Rational::zero();
        for k in self.leaves() {
            let frag = self.fragment(k);
            if pred(&frag, self.nodes[k].leaf.unwrap()) {
                total += &self.nodes[k].prob;
            }
        }
        total
    }

    pub fn leaf_mass(&self) -> Rational {
        self.leaves()
            .fold(Rational::zero(), |acc, k| acc + &self.nodes[k].prob)
    }

    /// Sibling weights sum to one and every leaf probability is the product
    /// of its edge weights.
    pub fn check_invariants(&self) -> bool {
        for (k, n) in self.nodes.iter().enumerate() {
            if !n.children.is_empty() {
                let sum = n
                    .children
                    .iter()
                    .fold(Rational::zero(), |acc, &c| acc + &self.nodes[c].weight);
                if !sum.is_one() {
                    return false;
                }
            }
            let expected = match n.parent {
                Some(p) => &self.nodes[p].prob * &n.weight,
                None => Rational::one(),
            };
            if expected != n.prob {
                return false;
            }
            if n.children.is_empty() != n.leaf.is_some() && k != 0 {
                return false;
            }
        }
        self.leaf_mass().is_one()
    }
}

/// Expansion limits for tree walks.
#[derive(Debug, Clone, Copy)]
pub struct ExploreBudget {
    pub nodes: usize,
    /// Longest fragment (in actions) explored below the root.
    pub depth: usize,
}

impl Default for ExploreBudget {
    fn default() -> Self {
        ExploreBudget {
            nodes: 2_000_000,
            depth: 512,
        }
    }
}

/// Builds the execution tree of `model` under `adv` from `start`, expanding
/// every branch until the adversary halts or asks for time beyond
/// `horizon` (measured from the start of `start`).
pub fn build_tree<M, A>(
    model: &M,
    adv: &A,
    start: &ExecutionFragment<M::State>,
    horizon: &Rational,
    budget: ExploreBudget,
) -> Result<ExecutionTree<M::State>, AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let mut tree = ExecutionTree {
        nodes: vec![TreeNode {
            parent: None,
            action: None,
            state: start.lstate().clone(),
            time: start.end_time().clone(),
            weight: Rational::one(),
            prob: Rational::one(),
            children: Vec::new(),
            leaf: None,
        }],
        root_fragment: start.clone(),
    };
    let deadline = start.start_time() + horizon;
    let mut frag = start.clone();
    expand(model, adv, &mut tree, 0, &mut frag, &deadline, budget, 0)?;
    Ok(tree)
}

#[allow(clippy::too_many_arguments)]
fn expand<M, A>(
    model: &M,
    adv: &A,
    tree: &mut ExecutionTree<M::State>,
    node: usize,
    frag: &mut ExecutionFragment<M::State>,
    deadline: &Rational,
    budget: ExploreBudget,
    depth: usize,
) -> Result<(), AdversaryError>
where
    M: Model + ?Sized,
    A: Adversary<M> + ?Sized,
{
    let step = match resolve(model, adv, frag)? {
        Choice::Halt => {
            tree.nodes[node].leaf = Some(LeafStatus::Maximal);
            return Ok(());
        }
        Choice::Step(step) => step,
    };
    if &(frag.end_time() + &step.elapse) > deadline {
        tree.nodes[node].leaf = Some(LeafStatus::PastHorizon);
        return Ok(());
    }
    if depth >= budget.depth {
        return Err(AdversaryError::Model(ModelError::Budget {
            budget: budget.depth,
        }));
    }
    for (s, w) in step.next.support() {
        if tree.nodes.len() >= budget.nodes {
            return Err(AdversaryError::Model(ModelError::Budget {
                budget: budget.nodes,
            }));
        }
        let child = tree.nodes.len();
        let prob = &tree.nodes[node].prob * w;
        tree.nodes.push(TreeNode {
            parent: Some(node),
            action: Some(step.action.clone()),
            state: s.clone(),
            time: frag.end_time() + &step.elapse,
            weight: w.clone(),
            prob,
            children: Vec::new(),
            leaf: None,
        });
        tree.nodes[node].children.push(child);
        frag.push(step.action.clone(), s.clone(), &step.elapse)?;
        let r = expand(model, adv, tree, child, frag, deadline, budget, depth + 1);
        frag.pop();
        r?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::coin::{Coin, HeadThenQ, TwoCoins};
    use crate::rational::{int, rat};

    fn coin_tree() -> ExecutionTree<crate::models::coin::CoinState> {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        build_tree(&TwoCoins, &HeadThenQ, &start, &int(10), ExploreBudget::default()).unwrap()
    }

    #[test]
    fn coin_tree_has_three_leaves() {
        let tree = coin_tree();
        assert_eq!(tree.nodes().len(), 5);
        assert_eq!(tree.leaves().count(), 3);
        assert!(tree.check_invariants());
        assert_eq!(tree.leaf_mass(), int(1));
        assert!(tree.leaves().all(|k| tree.nodes()[k].leaf == Some(LeafStatus::Maximal)));
    }

    #[test]
    fn leaf_probabilities_multiply_along_the_path() {
        let tree = coin_tree();
        let both_heads = tree.probability_where(|f, _| f.lstate().p == Coin::Head && f.lstate().q == Coin::Head);
        assert_eq!(both_heads, rat(1, 4));
        let p_tail = tree.probability_where(|f, _| f.lstate().p == Coin::Tail);
        assert_eq!(p_tail, rat(1, 2));
        for k in tree.leaves() {
            let frag = tree.fragment(k);
            assert_eq!(frag.fstate(), &TwoCoins::start());
            assert_eq!(frag.lstate(), &tree.nodes()[k].state);
        }
    }

    #[test]
    fn node_budget_is_enforced() {
        let start = ExecutionFragment::singleton(TwoCoins::start());
        let budget = ExploreBudget { nodes: 2, depth: 10 };
        let err = build_tree(&TwoCoins, &HeadThenQ, &start, &int(10), budget).unwrap_err();
        assert!(matches!(err, AdversaryError::Model(ModelError::Budget { budget: 2 })));
    }
}
