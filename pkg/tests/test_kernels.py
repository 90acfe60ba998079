from __future__ import annotations

import itertools
import os
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nelson_topos import _kernels_py, kernels
from nelson_topos.catalog import BASES, all_presheaves
from nelson_topos.topos import ToposCtx

compiled = pytest.importorskip("nelson_topos._kernels")


@st.composite
def preorders(draw, max_n=10):
    """``down`` tables of a random finite preorder (reflexive, transitive)."""
    n = draw(st.integers(0, max_n))
    down = [1 << i for i in range(n)]
    for i in range(n):
        for j in range(i):
            if draw(st.booleans()):
                down[i] |= down[j]
    return down


@st.composite
def hom_problems(draw):
    n = draw(st.integers(0, 7))
    size = draw(st.integers(1, 4))
    n_mor = draw(st.integers(0, 3))
    act = [draw(st.lists(st.integers(-1, size - 1), min_size=size, max_size=size)) for _ in range(n_mor)]
    cons = [
        draw(st.lists(st.tuples(st.integers(0, n_mor - 1), st.integers(0, n - 1)), max_size=2)) if n_mor else []
        for _ in range(n)
    ]
    cands = [sorted(draw(st.sets(st.integers(0, size - 1)))) for _ in range(n)]
    return cons, cands, act


def brute_closed(down):
    n = len(down)
    return [m for m in range(1 << n) if all(down[i] & ~m == 0 for i in range(n) if m >> i & 1)]


@given(preorders())
def test_closed_subsets_match_bruteforce(down):
    assert _kernels_py.closed_subsets(down) == brute_closed(down)


@given(preorders(max_n=14))
def test_compiled_closed_subsets_match_fallback(down):
    assert compiled.closed_subsets(down) == _kernels_py.closed_subsets(down)


@settings(max_examples=300)
@given(hom_problems())
def test_compiled_natural_maps_match_fallback(problem):
    assert compiled.natural_maps(*problem) == _kernels_py.natural_maps(*problem)


@pytest.mark.parametrize("base", ["terminal", "Z/2", "arrow"])
def test_natural_maps_are_exactly_the_natural_functions(base):
    ctx = ToposCtx(BASES[base]())
    objs = all_presheaves(ctx, 3)
    for P in objs:
        for Q in objs:
            stages = [range(Q.offsets[P.stage[e]], Q.offsets[P.stage[e]] + len(Q.carriers[P.stage[e]])) for e in range(P.size)]
            want = [
                f
                for f in itertools.product(*stages)
                if all(Q.restrict(m, f[e]) == f[P.restrict(m, e)] for e in range(P.size) for m in ctx.base.into[P.stage[e]])
            ]
            assert [h.flat for h in ctx.maps(P, Q)] == want


def test_wide_masks_fall_back_to_python():
    down = [1 << i for i in range(64)]
    down[63] |= 1
    with pytest.raises(_kernels_py.KernelLimit):
        compiled.closed_subsets(down, limit=10)
    chain = [(1 << (i + 1)) - 1 for i in range(70)]
    assert compiled.closed_subsets(chain) == [(1 << k) - 1 for k in range(71)]


@pytest.mark.parametrize("mod", [compiled, _kernels_py], ids=["cython", "python"])
def test_limit_raises_kernel_limit(mod):
    with pytest.raises(kernels.KernelLimit):
        mod.closed_subsets([1, 2, 4, 8], limit=3)
    with pytest.raises(kernels.KernelLimit):
        mod.natural_maps([[], []], [[0, 1], [0, 1]], [], limit=2)
    assert len(mod.closed_subsets([1, 2, 4, 8], limit=16)) == 16


def test_empty_problems():
    assert compiled.natural_maps([], [], []) == [()]
    assert compiled.closed_subsets([]) == [0]


def test_backend_selection_honours_environment():
    code = "import nelson_topos.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, NELSON_TOPOS_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("NELSON_TOPOS_PURE")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"
