"""Small builders shared by the test modules."""

from __future__ import annotations

from nelson_topos.catalog import regular
from nelson_topos.topos import ToposCtx
from nelson_topos.ultra import principal_ultrafilter


def fixed_point_set(ctx: ToposCtx):
    """``point + regular`` over Z/2: three elements, one of them fixed."""
    return ctx.coproduct(ctx.terminal(), regular(ctx))[0]


def principal_at(ctx: ToposCtx, X, k: int = 0):
    return principal_ultrafilter(ctx, ctx.global_elements(X)[k])
