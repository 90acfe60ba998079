"""Time the compiled kernels against the pure-Python fallback.

Inputs are taken from real constructions (subobject lattices and hom-sets of
presheaves), so the numbers reflect what the library actually asks for.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import sys
import timeit

from nelson_topos import _kernels_py
from nelson_topos.catalog import BASES, finite_set, regular
from nelson_topos.topos import ToposCtx

try:
    from nelson_topos import _kernels
except ImportError:
    _kernels = None


def _candidates(P, Q):
    return [
        tuple(range(Q.offsets[P.stage[e]], Q.offsets[P.stage[e]] + len(Q.carriers[P.stage[e]])))
        for e in range(P.size)
    ]


def workloads():
    fs = ToposCtx(BASES["terminal"]())
    z2 = ToposCtx(BASES["Z/2"]())
    arrow = ToposCtx(BASES["arrow"]())
    G, T, O = regular(z2), finite_set(z2, 2), arrow.omega().obj
    out = []
    for label, A in (
        ("subobjects of an 18-element set", finite_set(fs, 18)),
        ("subobjects of G^3 x 2 x 2 (Z/2)", z2.product(G, G, G, T, T).obj),
        ("subobjects of 2^4 with trivial action (Z/2)", z2.product(T, T, T, T).obj),
    ):
        out.append((label, "closed_subsets", (A.down,)))
    for label, P, Q in (
        ("maps 7 -> 5 (FinSet)", finite_set(fs, 7), finite_set(fs, 5)),
        ("maps G^3 -> G^3 (Z/2)", z2.product(G, G, G).obj, z2.product(G, G, G).obj),
        ("maps Omega^2 -> Omega^2 (arrow)", arrow.product(O, O).obj, arrow.product(O, O).obj),
    ):
        out.append((label, "natural_maps", (P.restrictions, _candidates(P, Q), Q.flat_act)))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'workload':48} {'results':>8} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for label, fn, inputs in workloads():
        py, cy = getattr(_kernels_py, fn), getattr(_kernels, fn)
        res = py(*inputs)
        if cy(*inputs) != res:
            print(f"{label}: backends disagree", file=sys.stderr)
            return 1
        t_py = min(timeit.repeat(lambda: py(*inputs), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: cy(*inputs), number=1, repeat=args.repeat))
        print(f"{label:48} {len(res):>8} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
