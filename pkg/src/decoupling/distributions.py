from fractions import Fraction
from typing import Callable, Hashable, Iterable

import numpy as np

type Dist[T: Hashable] = dict[T, Fraction]


def dirac[T: Hashable](value: T) -> Dist[T]:
    return {value: Fraction(1)}


def uniform[T: Hashable](values: Iterable[T]) -> Dist[T]:
    support: list[T] = list(dict.fromkeys(values))
    if not support:
        raise ValueError("uniform distribution over an empty set")
    p: Fraction = Fraction(1, len(support))
    return {value: p for value in support}


def mixture[T: Hashable](weighted: Iterable[tuple[Fraction, Dist[T]]]) -> Dist[T]:
    result: Dist[T] = {}
    for weight, dist in weighted:
        if weight == 0:
            continue
        for value, p in dist.items():
            result[value] = result.get(value, Fraction(0)) + weight * p
    return result


def push[T: Hashable, U: Hashable](dist: Dist[T], f: Callable[[T], U]) -> Dist[U]:
    return mixture((p, dirac(f(value))) for value, p in dist.items())


def condition[T: Hashable](dist: Dist[T], keep: Callable[[T], bool]) -> Dist[T] | None:
    """dist restricted to `keep` and renormalized; None when no mass survives."""
    kept: Dist[T] = {value: p for value, p in dist.items() if p > 0 and keep(value)}
    total: Fraction = sum(kept.values(), Fraction(0))
    if total == 0:
        return None
    return {value: p / total for value, p in kept.items()}


def total_mass[T: Hashable](dist: Dist[T]) -> Fraction:
    return sum(dist.values(), Fraction(0))


def sample[T: Hashable](dist: Dist[T], rng: np.random.Generator) -> T:
    """One draw from the generator per call, dirac distributions included."""
    items: list[tuple[T, Fraction]] = [(value, p) for value, p in dist.items() if p > 0]
    index: int = int(rng.choice(len(items), p=[float(p) for _, p in items]))
    return items[index][0]
