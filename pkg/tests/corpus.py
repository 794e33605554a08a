"""Seeded random small PSS for the property and acceptance suites."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from psslab import FieldSpec, build_pss
from psslab.model import Graph, LocalFunction, Schedule, enumerate_update_functions, sds_to_pss
from psslab.expr import parse_expr

F2 = FieldSpec(2)


def random_graph(rng: random.Random, n: int) -> list[tuple[int, int]]:
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    return [e for e in pairs if rng.random() < 0.6]


def closed_nbhd(n, edges, i):
    out = {i}
    for a, b in edges:
        if a == i:
            out.add(b)
        if b == i:
            out.add(a)
    return sorted(out)


def random_anf(rng: random.Random, variables: list[int]) -> str:
    """Random Boolean function in algebraic normal form over ``variables``."""
    monomials = []
    for r in range(len(variables) + 1):
        monomials.extend(itertools.combinations(variables, r))
    chosen = [m for m in monomials if rng.random() < 0.4]
    if not chosen:
        return "0"
    return " + ".join("1" if not m else "*".join(f"x{v}" for v in m) for m in chosen)


def random_probs(rng: random.Random, k: int) -> list[Fraction]:
    """k positive probabilities in hundredths summing to 1."""
    cuts = sorted(rng.sample(range(1, 100), k - 1))
    bounds = [0] + cuts + [100]
    return [Fraction(bounds[i + 1] - bounds[i], 100) for i in range(k)]


def random_pss(rng: random.Random, name: str, max_n: int = 3, max_functions: int = 4):
    n = rng.randint(1, max_n)
    edges = random_graph(rng, n)
    local = {}
    for i in range(1, n + 1):
        nb = closed_nbhd(n, edges, i)
        k = rng.randint(1, 2)
        local[i] = [(f"l{i}{j}", random_anf(rng, nb)) for j in range(1, k + 1)]
    perms = list(itertools.permutations(range(1, n + 1)))
    scheds = rng.sample(perms, min(len(perms), rng.randint(1, 2)))
    schedules = {f"s{j}": list(s) for j, s in enumerate(scheds, start=1)}
    skeleton = build_pss(name, 2, n, edges, local, schedules)
    all_fns = enumerate_update_functions(skeleton.families, skeleton.schedules)
    k = rng.randint(1, min(max_functions, len(all_fns)))
    picked = sorted(rng.sample(range(len(all_fns)), k))
    probs = random_probs(rng, k)
    updates = []
    for j, (idx, q) in enumerate(zip(picked, probs), start=1):
        f = all_fns[idx]
        updates.append((f"u{j}", f.schedule.label, list(f.selection_labels), q))
    return build_pss(name, 2, n, edges, local, schedules, updates)


def variant(rng: random.Random, pss, name: str):
    """Same data with fresh probabilities on the same support."""
    k = len(pss.support)
    probs = random_probs(rng, k) if k > 1 else [Fraction(1)]
    from psslab.model import PSS

    new = {f.label: q for f, q in zip(pss.support, probs)}
    return PSS(name, pss.field, pss.graph, pss.families, pss.schedules, pss.support, new)


def corpus_pairs(seed: int = 20240531, count: int = 200):
    """``count`` (source, target) pairs; every third target is a reweighted copy."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        a = random_pss(rng, f"A{i}")
        if i % 3 == 0:
            b = variant(rng, a, f"B{i}")
        else:
            b = random_pss(rng, f"B{i}")
        out.append((a, b))
    return out


def random_sds(rng: random.Random, name: str, max_n: int = 3):
    n = rng.randint(1, max_n)
    edges = random_graph(rng, n)
    graph = Graph.from_pairs(n, edges)
    lfs = [LocalFunction(i, parse_expr(random_anf(rng, closed_nbhd(n, edges, i)), n, F2), f"l{i}") for i in range(1, n + 1)]
    order = list(range(1, n + 1))
    rng.shuffle(order)
    return sds_to_pss(name, F2, graph, lfs, Schedule("s", tuple(order)))
