"""Pure-Python enumeration kernels.

These are the reference implementations; ``_kernels.pyx`` mirrors them
and must return identical results (same lists, same order).
"""

from __future__ import annotations

from typing import Sequence


class KernelLimit(Exception):
    """Raised when an enumeration produces more than ``limit`` results."""


def closure(mask: int, down: Sequence[int]) -> int:
    out = mask
    m = mask
    while m:
        low = m & -m
        out |= down[low.bit_length() - 1]
        m ^= low
    return out


def closed_subsets(down: Sequence[int], limit: int = -1) -> list[int]:
    """Every mask ``S`` with ``down[i] <= S`` for all ``i in S``, sorted.

    ``down[i]`` must contain ``i`` and be transitively closed.
    """
    n = len(down)
    out: list[int] = []
    # explicit stack of (position, included, excluded)
    stack = [(0, 0, 0)]
    while stack:
        i, inc, exc = stack.pop()
        while i < n and (inc >> i) & 1:
            i += 1
        if i == n:
            out.append(inc)
            if 0 <= limit < len(out):
                raise KernelLimit(len(out))
            continue
        new = inc | down[i]
        if not new & exc:
            stack.append((i + 1, new, exc))
        stack.append((i + 1, inc, exc | (1 << i)))
    out.sort()
    return out


def natural_maps(
    constraints: Sequence[Sequence[tuple[int, int]]],
    candidates: Sequence[Sequence[int]],
    tgt_act: Sequence[Sequence[int]],
    limit: int = -1,
) -> list[tuple[int, ...]]:
    """Enumerate assignments ``f`` with ``f[j] == tgt_act[m][f[i]]``.

    ``constraints[i]`` lists ``(m, j)`` meaning source element ``j`` is the
    restriction of ``i`` along morphism ``m``. ``candidates[i]`` are the
    admissible target elements for ``i``; values forced through a constraint
    are not re-checked against them, so callers pass whole stages. Forced
    elements are not expanded either: ``constraints`` must be closed under
    composition, as the restriction lists of a presheaf are. Results come
    out in lexicographic order of the free choices.
    """
    n = len(constraints)
    f = [-1] * n
    out: list[tuple[int, ...]] = []

    def assign(i: int, q: int, trail: list[int]) -> bool:
        f[i] = q
        trail.append(i)
        for m, j in constraints[i]:
            r = tgt_act[m][q]
            if r < 0:
                return False
            cur = f[j]
            if cur < 0:
                f[j] = r
                trail.append(j)
            elif cur != r:
                return False
        return True

    def rec(i: int) -> None:
        while i < n and f[i] >= 0:
            i += 1
        if i == n:
            out.append(tuple(f))
            if 0 <= limit < len(out):
                raise KernelLimit(len(out))
            return
        for q in candidates[i]:
            trail: list[int] = []
            if assign(i, q, trail):
                rec(i + 1)
            for k in trail:
                f[k] = -1

    rec(0)
    return out


def congruence(n: int, pairs: Sequence[tuple[int, int]], act: Sequence[Sequence[int]]) -> list[int]:
    """Least equivalence containing ``pairs`` and closed under every ``act``.

    ``act[m][x]`` is the image of ``x`` under morphism ``m`` or ``-1``.
    Returns, for every element, the least member of its class.
    """
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    todo = list(pairs)
    while todo:
        a, b = todo.pop()
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if rb < ra:
            ra, rb = rb, ra
        parent[rb] = ra
        for table in act:
            x, y = table[a], table[b]
            if x >= 0 and y >= 0 and x != y:
                todo.append((x, y))
    return [find(x) for x in range(n)]
