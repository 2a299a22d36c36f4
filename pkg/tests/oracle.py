"""Brute-force reference for unification on tiny signatures.

Enumerates every closed beta-normal eta-long term of a type up to a size
bound, then tries every assignment of such terms to the variables of a
system. Slow, but it shares no code with the unifier beyond the term
datatypes and normalization.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from sloppy.terms import Abs, App, Bound, Const, normalize, substitute
from sloppy.types import E, Arrow, arrow

TOY = {
    "a": E,
    "b": E,
    "g": arrow(E, E),
    "f": arrow(E, E, E),
}


def _split(ty):
    args = []
    while isinstance(ty, Arrow):
        args.append(ty.dom)
        ty = ty.cod
    return args, ty


def _compositions(total, parts):
    """Ways to write ``total`` as an ordered sum of ``parts`` positive ints."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _exact(ty, ctx, n, consts):
    """Normal terms of type ``ty`` under bound-variable types ``ctx`` with size exactly ``n``."""
    args, base = _split(ty)
    inner = tuple(reversed(args)) + ctx
    heads = [Const(name, cty) for name, cty in consts if _split(cty)[1] == base]
    heads += [Bound(i) for i, bty in enumerate(inner) if _split(bty)[1] == base]
    out = []
    for h in heads:
        hty = h.type if isinstance(h, Const) else inner[h.index]
        h_args = _split(hty)[0]
        for sizes in _compositions(n - 1, len(h_args)):
            choices = [_exact(aty, inner, k, consts) for aty, k in zip(h_args, sizes)]
            for picked in itertools.product(*choices):
                body = h
                for a in picked:
                    body = App(body, a)
                for aty in reversed(args):
                    body = Abs(aty, body)
                out.append(body)
    return tuple(out)


def normal_terms(ty, max_size, consts=None):
    """All closed normal terms of ``ty`` with between 1 and ``max_size`` symbol occurrences."""
    consts = tuple(sorted((consts or TOY).items(), key=lambda kv: kv[0]))
    out = []
    for n in range(1, max_size + 1):
        out.extend(_exact(ty, (), n, consts))
    return out


def solutions(equations, variables, max_size, consts=None):
    """Every assignment of terms (size <= ``max_size``) to ``variables`` solving all equations.

    ``variables`` maps names to types. The result is a set of tuples ordered
    like ``sorted(variables)``.
    """
    names = sorted(variables)
    pools = [normal_terms(variables[v], max_size, consts) for v in names]
    found = set()
    for values in itertools.product(*pools):
        sub = dict(zip(names, values))
        if all(normalize(substitute(l, sub)) == normalize(substitute(r, sub)) for l, r in equations):
            found.add(values)
    return found
