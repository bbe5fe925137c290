"""Symmetric star ordering and its behavior under integration and variation.

``symmetric_star`` averages the star chain over all n! operand orderings
with a 1/n! normalization.  Under an integral, cyclicity collapses that
average to a single pivoted chain, ``A_i * (average over the remaining
(n-1)! orderings)`` — implemented by ``reduced_symmetric_star`` with the
matching 1/(n-1)! factor, so the reduction identity holds with
coefficient exactly one.

``variation_coefficient`` differentiates the integrated ordering with
respect to one operand: an operand occurring m times contributes m
copies of the pivot-reduced complement.  Occurrence counting is by
declared identity, not by value: a field equal to another but listed
under a different label is a different operand.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .lattice import ScalarField
from .staralg import StarCache, ThetaMatrix

__all__ = [
    "OperandList",
    "symmetric_star",
    "reduced_symmetric_star",
    "variation_coefficient",
]

MAX_OPERANDS = 6


@dataclass(frozen=True)
class OperandList:
    """Ordered star-product operands with identity labels.

    By default two entries share identity exactly when they are the same
    field object.  Explicit labels override that, e.g. to declare two
    numerically different tensor slots as the same dynamical variable.
    """

    fields: tuple[ScalarField, ...]
    labels: tuple[Hashable, ...]

    def __init__(self, fields: Sequence[ScalarField],
                 labels: Sequence[Hashable] | None = None):
        fields = tuple(fields)
        if not fields:
            raise ValueError("operand list must not be empty")
        grid = fields[0].grid
        for f in fields:
            if f.grid != grid:
                raise ValueError("operands live on different grids")
        if labels is None:
            first_seen: dict[int, int] = {}
            labels = tuple(first_seen.setdefault(id(f), i)
                           for i, f in enumerate(fields))
        else:
            labels = tuple(labels)
            if len(labels) != len(fields):
                raise ValueError("labels and fields must have equal length")
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.fields)

    def occurrences(self, label: Hashable) -> list[int]:
        return [i for i, l in enumerate(self.labels) if l == label]


def _check_size(n: int) -> None:
    if n > MAX_OPERANDS:
        raise ValueError(
            f"symmetric ordering of {n} operands needs {math.factorial(n)} "
            f"chains; the supported bound is n <= {MAX_OPERANDS}")


def _chain(fields: Sequence[ScalarField], cache: StarCache) -> ScalarField:
    acc = fields[0]
    for f in fields[1:]:
        acc = cache.star(acc, f)
    return acc


def _fingerprint(f: ScalarField):
    m = f.modes
    return (float(np.abs(m).sum()), float(m.real.sum()), float(m.imag.sum()))


def symmetric_star(ops: OperandList, theta: ThetaMatrix,
                   cache: StarCache | None = None) -> ScalarField:
    """Average of the star chain over all permutations, normalized by 1/n!.

    Operands are first put in a canonical content-based order, then the
    permutations are enumerated lexicographically and summed in that fixed
    sequence.  Reordering the input therefore reproduces the result bit
    for bit, and identical scenarios give identical outputs across runs.
    """
    n = len(ops)
    _check_size(n)
    if cache is None:
        cache = StarCache(theta)
    canon = sorted(range(n), key=lambda i: _fingerprint(ops.fields[i]))
    fields = [ops.fields[i] for i in canon]
    total = None
    for perm in itertools.permutations(range(n)):
        term = _chain([fields[i] for i in perm], cache)
        total = term if total is None else total + term
    out = total * (1.0 / math.factorial(n))
    if all(f.real for f in ops.fields):
        return ScalarField(out.grid, modes=out.modes, real=True,
                           overflow=out.overflow)
    return out


def reduced_symmetric_star(pivot: int, ops: OperandList, theta: ThetaMatrix,
                           cache: StarCache | None = None) -> ScalarField:
    """Pivoted form ``A_i * (symmetric average of the other n-1 operands)``.

    Integrates to the same value as :func:`symmetric_star` of the full
    list, by cyclicity of the integrated star chain.
    """
    n = len(ops)
    _check_size(n)
    if not 0 <= pivot < n:
        raise ValueError(f"pivot index {pivot} out of range for {n} operands")
    if cache is None:
        cache = StarCache(theta)
    rest = [ops.fields[i] for i in range(n) if i != pivot]
    if not rest:
        return ops.fields[pivot]
    complement = symmetric_star(
        OperandList(rest, labels=[ops.labels[i] for i in range(n) if i != pivot]),
        theta, cache)
    return cache.star(ops.fields[pivot], complement)


def variation_coefficient(ops: OperandList, target: Hashable,
                          theta: ThetaMatrix,
                          cache: StarCache | None = None) -> ScalarField:
    """Functional-derivative coefficient of the integrated symmetric ordering.

    For a target occurring m times, the derivative of the integral pairs
    the perturbation against m times the symmetric average of the
    remaining n-1 operands (one target occurrence removed, the rest
    kept).  The m = 2 case is the usual factor of two from varying a
    quadratic slot.
    """
    slots = ops.occurrences(target)
    if not slots:
        raise ValueError(f"target label {target!r} does not occur in the operand list")
    if cache is None:
        cache = StarCache(theta)
    n = len(ops)
    first = slots[0]
    rest_fields = [ops.fields[i] for i in range(n) if i != first]
    rest_labels = [ops.labels[i] for i in range(n) if i != first]
    if not rest_fields:
        from .lattice import constant_field
        complement = constant_field(ops.fields[0].grid, 1.0)
    else:
        complement = symmetric_star(OperandList(rest_fields, rest_labels),
                                    theta, cache)
    return complement * float(len(slots))
