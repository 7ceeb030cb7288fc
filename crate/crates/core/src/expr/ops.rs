use super::{ExprId, ExprStore, Node};
use std::collections::{HashMap, HashSet};

impl ExprStore {
    /// Number of distinct nodes reachable from `e`; shared subexpressions
    /// count once. This is the output-size objective.
    pub fn dag_size(&self, e: ExprId) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![e];
        while let Some(id) = stack.pop() {
            if seen.insert(id) {
                self.node(id).for_each_child(|c| stack.push(c));
            }
        }
        seen.len()
    }

    /// Node count of the tree unfolding of `e` (sharing expanded).
    pub fn tree_size(&self, e: ExprId) -> usize {
        let mut memo = HashMap::new();
        self.tree_size_memo(e, &mut memo)
    }

    fn tree_size_memo(&self, e: ExprId, memo: &mut HashMap<ExprId, usize>) -> usize {
        if let Some(&n) = memo.get(&e) {
            return n;
        }
        let mut n = 1usize;
        self.node(e).for_each_child(|c| n = n.saturating_add(self.tree_size_memo(c, memo)));
        memo.insert(e, n);
        n
    }

    /// True when the variable `var` does not occur in `e`.
    pub fn free_of(&self, e: ExprId, var: ExprId) -> bool {
        !self.contains(e, var)
    }

    /// True when `needle` occurs as a subexpression of `e`.
    pub fn contains(&self, e: ExprId, needle: ExprId) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![e];
        while let Some(id) = stack.pop() {
            if id == needle {
                return true;
            }
            if seen.insert(id) {
                self.node(id).for_each_child(|c| stack.push(c));
            }
        }
        false
    }

    /// All distinct subexpressions of `e`, in post-order (children first).
    pub fn subterms(&self, e: ExprId) -> Vec<ExprId> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.post_order(e, &mut seen, &mut out);
        out
    }

    fn post_order(&self, e: ExprId, seen: &mut HashSet<ExprId>, out: &mut Vec<ExprId>) {
        if !seen.insert(e) {
            return;
        }
        self.node(e).for_each_child(|c| self.post_order(c, seen, out));
        out.push(e);
    }

    /// Replaces every occurrence of the variable `var` by `replacement` and
    /// re-canonicalizes.
    pub fn substitute(&mut self, e: ExprId, var: ExprId, replacement: ExprId) -> ExprId {
        self.replace(e, var, replacement)
    }

    /// Replaces every occurrence of the subexpression `target` (any node,
    /// not just a variable) and re-canonicalizes.
    pub fn replace(&mut self, e: ExprId, target: ExprId, with: ExprId) -> ExprId {
        let mut memo = HashMap::new();
        self.replace_memo(e, target, with, &mut memo)
    }

    fn replace_memo(
        &mut self,
        e: ExprId,
        target: ExprId,
        with: ExprId,
        memo: &mut HashMap<ExprId, ExprId>,
    ) -> ExprId {
        if e == target {
            return with;
        }
        if let Some(&r) = memo.get(&e) {
            return r;
        }
        let out = match self.node(e).clone() {
            Node::Int(_) | Node::Const(_) | Node::Var(_) => e,
            Node::Func(f, a) => {
                let a2 = self.replace_memo(a, target, with, memo);
                if a2 == a {
                    e
                } else {
                    self.func(f, a2)
                }
            }
            Node::Pow(b, x) => {
                let b2 = self.replace_memo(b, target, with, memo);
                let x2 = self.replace_memo(x, target, with, memo);
                if b2 == b && x2 == x {
                    e
                } else {
                    self.pow(b2, x2)
                }
            }
            Node::Mul(xs) => {
                let ys: Vec<_> = xs.iter().map(|&c| self.replace_memo(c, target, with, memo)).collect();
                if ys == xs {
                    e
                } else {
                    self.mul(ys)
                }
            }
            Node::Add(xs) => {
                let ys: Vec<_> = xs.iter().map(|&c| self.replace_memo(c, target, with, memo)).collect();
                if ys == xs {
                    e
                } else {
                    self.add(ys)
                }
            }
        };
        memo.insert(e, out);
        out
    }

    /// Rebuilds `e` bottom-up through the canonical constructors. For a
    /// canonical `e` this is the identity.
    pub fn rebuild(&mut self, e: ExprId) -> ExprId {
        let mut memo = HashMap::new();
        self.rebuild_memo(e, &mut memo)
    }

    fn rebuild_memo(&mut self, e: ExprId, memo: &mut HashMap<ExprId, ExprId>) -> ExprId {
        if let Some(&r) = memo.get(&e) {
            return r;
        }
        let out = match self.node(e).clone() {
            Node::Int(_) | Node::Const(_) | Node::Var(_) => e,
            Node::Func(f, a) => {
                let a = self.rebuild_memo(a, memo);
                self.func(f, a)
            }
            Node::Pow(b, x) => {
                let b = self.rebuild_memo(b, memo);
                let x = self.rebuild_memo(x, memo);
                self.pow(b, x)
            }
            Node::Mul(xs) => {
                let ys = xs.into_iter().map(|c| self.rebuild_memo(c, memo)).collect();
                self.mul(ys)
            }
            Node::Add(xs) => {
                let ys = xs.into_iter().map(|c| self.rebuild_memo(c, memo)).collect();
                self.add(ys)
            }
        };
        memo.insert(e, out);
        out
    }

    /// Copies `e` from `other` into this store, canonicalizing on the way.
    pub fn import(&mut self, other: &ExprStore, e: ExprId) -> ExprId {
        let mut memo = HashMap::new();
        self.import_memo(other, e, &mut memo)
    }

    fn import_memo(
        &mut self,
        other: &ExprStore,
        e: ExprId,
        memo: &mut HashMap<ExprId, ExprId>,
    ) -> ExprId {
        if let Some(&r) = memo.get(&e) {
            return r;
        }
        let out = match other.node(e) {
            Node::Int(n) => self.int(n.clone()),
            Node::Const(c) => self.constant(*c),
            Node::Var(v) => self.var(v),
            Node::Func(f, a) => {
                let a = self.import_memo(other, *a, memo);
                self.func(*f, a)
            }
            Node::Pow(b, x) => {
                let b = self.import_memo(other, *b, memo);
                let x = self.import_memo(other, *x, memo);
                self.pow(b, x)
            }
            Node::Mul(xs) => {
                let ys = xs.iter().map(|&c| self.import_memo(other, c, memo)).collect();
                self.mul(ys)
            }
            Node::Add(xs) => {
                let ys = xs.iter().map(|&c| self.import_memo(other, c, memo)).collect();
                self.add(ys)
            }
        };
        memo.insert(e, out);
        out
    }

    /// Terms of a sum, or `[e]` for anything else.
    pub fn terms(&self, e: ExprId) -> Vec<ExprId> {
        match self.node(e) {
            Node::Add(xs) => xs.clone(),
            _ => vec![e],
        }
    }

    /// Factors of a product, or `[e]` for anything else.
    pub fn factors(&self, e: ExprId) -> Vec<ExprId> {
        match self.node(e) {
            Node::Mul(xs) => xs.clone(),
            _ => vec![e],
        }
    }
}
