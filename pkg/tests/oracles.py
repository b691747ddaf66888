"""Independent reference implementations used only by the tests."""

import itertools
import random

import numpy as np
import sympy

from cpsrisk.attack import AND, BASIC, OR, AttackNode


def to_sympy(tree: AttackNode):
    """Rare-event expression built directly with sympy."""
    if tree.gate == BASIC:
        return sympy.Symbol(tree.var)
    parts = [to_sympy(c) for c in tree.children]
    return sympy.Add(*parts) if tree.gate == OR else sympy.Mul(*parts)


def poly_to_sympy(poly):
    total = sympy.Integer(0)
    for mono, c in poly.terms.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for v in mono:
            term *= sympy.Symbol(v)
        total += term
    return sympy.expand(total)


def _bool_eval(tree, rows, index):
    if tree.gate == BASIC:
        return rows[:, index[tree.var]]
    vals = [_bool_eval(c, rows, index) for c in tree.children]
    out = vals[0].copy()
    for v in vals[1:]:
        out = (out & v) if tree.gate == AND else (out | v)
    return out


def truth_table_probability(tree, a):
    """Sum of P(row) over every satisfying row of the 2^n table."""
    names = sorted({leaf for leaf in _vars(tree)})
    n = len(names)
    rows = np.array(list(itertools.product((0, 1), repeat=n)), dtype=bool).reshape(-1, n)
    index = {v: i for i, v in enumerate(names)}
    p = np.array([a[v] for v in names])
    weights = np.prod(np.where(rows, p, 1.0 - p), axis=1)
    return float(np.sum(weights[_bool_eval(tree, rows, index)]))


def _vars(tree):
    if tree.gate == BASIC:
        yield tree.var
    for c in tree.children:
        yield from _vars(c)


def random_tree(rng: random.Random, n_vars=12, max_depth=5, read_once=False):
    """Random AND/OR tree; with ``read_once`` no variable occurs twice."""
    pool = [f"x{i}" for i in range(1, n_vars + 1)]
    rng.shuffle(pool)
    counter = itertools.count()

    def leaf():
        var = pool.pop() if read_once else rng.choice(pool)
        return AttackNode(BASIC, (), var, f"n{next(counter)}")

    def build(depth):
        if depth >= max_depth or (read_once and len(pool) < 2) or rng.random() < 0.3:
            return leaf() if (not read_once or pool) else None
        k = rng.randint(2, 3)
        kids = [build(depth + 1) for _ in range(k)]
        kids = [c for c in kids if c is not None]
        if not kids:
            return None
        if len(kids) == 1:
            return kids[0]
        return AttackNode(rng.choice((AND, OR)), tuple(kids), None, f"n{next(counter)}")

    tree = None
    while tree is None:
        if read_once:
            pool[:] = [f"x{i}" for i in range(1, n_vars + 1)]
            rng.shuffle(pool)
        tree = build(0)
    return tree


def shortest_simple_path(edges, source, target):
    """Length of the shortest simple path, by exhaustive DFS."""
    best = None

    def dfs(u, seen, length):
        nonlocal best
        if u == target:
            best = length if best is None else min(best, length)
            return
        for v in edges.get(u, ()):
            if v not in seen:
                dfs(v, seen | {v}, length + 1)

    dfs(source, {source}, 0)
    return best
