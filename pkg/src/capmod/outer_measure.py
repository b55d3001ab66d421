"""Set functions on a finite ground set and integration against them.

Subsets are keyed by bitmask integers (bit ``i`` set means element ``i``
belongs to the subset); boolean masks and index iterables are accepted
wherever a subset is expected.
"""
from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .space import bits_to_mask, mask_to_bits

TOL = 1e-12
EXHAUSTIVE_LIMIT = 16

UNKNOWN = "unknown"


class NonMonotoneError(ValueError):
    """The set function decreases along a chain where it must not."""


class OuterMeasure:
    """A cached set function ``mu`` on subsets of ``{0, ..., n-1}``.

    ``func`` receives a bitmask and must be pure. Reads are lock free;
    cache writes are serialised.
    """

    def __init__(self, n: int, func: Callable[[int], float], name: str = "custom"):
        self.n = int(n)
        self.name = name
        self._func = func
        self._cache: dict[int, float] = {0: 0.0}
        self._lock = threading.Lock()
        self.flags: dict[str, tuple[str, object]] = {
            "monotone": (UNKNOWN, None),
            "subadditive": (UNKNOWN, None),
            "submodular": (UNKNOWN, None),
        }

    def bits(self, subset) -> int:
        if isinstance(subset, (int, np.integer)) and not isinstance(subset, bool):
            bits = int(subset)
            if bits < 0 or bits >> self.n:
                raise ValueError(f"subset {bits:#x} outside a ground set of size {self.n}")
            return bits
        if isinstance(subset, np.ndarray) and subset.dtype == bool:
            if subset.shape != (self.n,):
                raise ValueError(f"mask shape {subset.shape} != ({self.n},)")
            return mask_to_bits(subset)
        bits = 0
        for i in subset:
            i = int(i)
            if not 0 <= i < self.n:
                raise ValueError(f"element {i} outside a ground set of size {self.n}")
            bits |= 1 << i
        return bits

    def __call__(self, subset) -> float:
        bits = self.bits(subset)
        try:
            return self._cache[bits]
        except KeyError:
            pass
        value = float(self._func(bits))
        if math.isnan(value) or value < 0:
            raise ValueError(f"{self.name}: invalid value {value} on subset {bits:#x}")
        with self._lock:
            self._cache.setdefault(bits, value)
        return value

    def all_values(self) -> np.ndarray:
        """Values on all ``2**n`` subsets, indexed by bitmask."""
        if self.n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"refusing to tabulate 2**{self.n} subsets")
        return np.array([self(b) for b in range(1 << self.n)])

    @property
    def cache_size(self) -> int:
        return len(self._cache)

    def __repr__(self) -> str:
        return f"OuterMeasure({self.name!r}, n={self.n})"


# -- builtin set functions ------------------------------------------------------

def _card(b: int) -> int:
    return bin(b).count("1")


def counting(n: int) -> OuterMeasure:
    return OuterMeasure(n, lambda b: float(_card(b)), "counting")


def sqrt_card(n: int) -> OuterMeasure:
    return OuterMeasure(n, lambda b: math.sqrt(_card(b)), "sqrt_card")


def card_squared(n: int) -> OuterMeasure:
    return OuterMeasure(n, lambda b: float(_card(b) ** 2), "card_squared")


def from_table(values: Mapping[int, float] | Sequence[float], n: int | None = None,
               name: str = "table") -> OuterMeasure:
    """Set function given by an explicit table (bitmask -> value)."""
    if isinstance(values, Mapping):
        table = {int(k): float(v) for k, v in values.items()}
    else:
        table = {i: float(v) for i, v in enumerate(values)}
    if n is None:
        n = max((k.bit_length() for k in table), default=0)
    table.setdefault(0, 0.0)
    if table[0] != 0.0:
        raise ValueError("a set function must vanish on the empty set")

    def lookup(bits: int) -> float:
        try:
            return table[bits]
        except KeyError:
            raise ValueError(f"table has no value for subset {bits:#x}") from None

    return OuterMeasure(n, lookup, name)


def set_function_from_json(obj: Mapping, n: int | None = None, space_loader=None) -> OuterMeasure:
    """Build a set function from its JSON description.

    ``{"type": "table", "values": {"<hex bitmask>": float}}``,
    ``{"type": "builtin", "name": "counting|sqrt_card|card_squared"}`` or
    ``{"type": "capacity", "space": <path or inline space>}``.
    """
    kind = obj.get("type")
    if kind == "table":
        values = {int(k, 16): float(v) for k, v in obj["values"].items()}
        return from_table(values, n=obj.get("n", n))
    if kind == "builtin":
        size = obj.get("n", n)
        if size is None:
            raise ValueError("builtin set functions need the ground set size 'n'")
        builders = {"counting": counting, "sqrt_card": sqrt_card, "card_squared": card_squared}
        try:
            return builders[obj["name"]](int(size))
        except KeyError:
            raise ValueError(f"unknown builtin {obj.get('name')!r}; "
                             f"expected one of {sorted(builders)}") from None
    if kind == "capacity":
        from .capacity import capacity_outer_measure
        from .space import load_space, space_from_json

        ref = obj["space"]
        if space_loader is not None:
            space = space_loader(ref)
        elif isinstance(ref, Mapping):
            space = space_from_json(ref)
        else:
            space = load_space(ref)
        return capacity_outer_measure(space)
    raise ValueError(f"unknown set function type {kind!r}")


# -- integration ---------------------------------------------------------------

def _check_function(mu: OuterMeasure, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (mu.n,):
        raise ValueError(f"function has shape {f.shape}, expected ({mu.n},)")
    if np.isnan(f).any():
        raise ValueError("function takes NaN values")
    if (f < 0).any():
        raise ValueError("integrand must be nonnegative")
    return f


def integrate(mu: OuterMeasure, f, restrict_to=None) -> float:
    """Cavalieri integral of a nonnegative function against ``mu``.

    Over the sorted distinct positive values ``t_1 < ... < t_k`` of ``f``
    this is ``sum_i (t_i - t_{i-1}) * mu({f >= t_i})`` with ``t_0 = 0``,
    which equals ``int_0^inf mu({f > t}) dt`` exactly.
    """
    f = _check_function(mu, f)
    if restrict_to is not None:
        f = np.where(_as_ground_mask(mu, restrict_to), f, 0.0)
    total = 0.0
    prev = 0.0
    for t in np.unique(f[f > 0]):
        level = mu(f >= t)
        if math.isinf(t):
            if level > 0:
                return math.inf
            break
        total += (t - prev) * level
        prev = t
    return float(total)


def _as_ground_mask(mu: OuterMeasure, subset) -> np.ndarray:
    if isinstance(subset, np.ndarray) and subset.dtype == bool:
        return subset
    return bits_to_mask(mu.bits(subset), mu.n)


# -- submodularity --------------------------------------------------------------

class Verdict(NamedTuple):
    holds: bool
    witness: tuple[int, int] | None
    checked: int


def _table(mu: OuterMeasure, mode: str) -> np.ndarray:
    if mu.n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"{mode} mode requires |X| <= {EXHAUSTIVE_LIMIT}, got {mu.n}")
    return mu.all_values()


def is_submodular(mu: OuterMeasure, mode: str = "exhaustive", budget: int = 10_000,
                  rng: np.random.Generator | None = None, tol: float = TOL) -> Verdict:
    """Check ``mu(E | F) + mu(E & F) <= mu(E) + mu(F)``.

    ``exhaustive`` scans every pair of subsets (for ``|X| > 12`` it scans
    the equivalent family of pairs ``(S+i, S+j)``); ``sampled`` draws
    ``budget`` random pairs. A witness violates the inequality by more
    than ``tol``.
    """
    if mode == "exhaustive":
        vals = _table(mu, mode)
        n = mu.n
        N = 1 << n
        if n <= 12:
            F = np.arange(N)
            for E in range(N):
                lhs = vals[E | F] + vals[E & F]
                rhs = vals[E] + vals
                bad = np.flatnonzero(lhs > rhs + tol)
                if bad.size:
                    verdict = Verdict(False, (E, int(bad[0])), (E + 1) * N)
                    break
            else:
                verdict = Verdict(True, None, N * N)
        else:
            S = np.arange(N)
            verdict = Verdict(True, None, 0)
            checked = 0
            for i, j in itertools.combinations(range(n), 2):
                bi, bj = 1 << i, 1 << j
                base = S[(S & (bi | bj)) == 0]
                lhs = vals[base | bi | bj] + vals[base]
                rhs = vals[base | bi] + vals[base | bj]
                checked += base.size
                bad = np.flatnonzero(lhs > rhs + tol)
                if bad.size:
                    s = int(base[bad[0]])
                    verdict = Verdict(False, (s | bi, s | bj), checked)
                    break
            else:
                verdict = Verdict(True, None, checked)
    elif mode == "sampled":
        rng = np.random.default_rng() if rng is None else rng
        verdict = Verdict(True, None, budget)
        for k in range(budget):
            E = mu.bits(rng.random(mu.n) < 0.5)
            F = mu.bits(rng.random(mu.n) < 0.5)
            if mu(E | F) + mu(E & F) > mu(E) + mu(F) + tol:
                verdict = Verdict(False, (E, F), k + 1)
                break
        if verdict.holds:
            # sampling never certifies
            return verdict
    else:
        raise ValueError(f"unknown mode {mode!r}")
    mu.flags["submodular"] = ("yes", None) if verdict.holds else ("no", verdict.witness)
    return verdict


def is_monotone(mu: OuterMeasure, tol: float = TOL) -> Verdict:
    vals = _table(mu, "exhaustive")
    S = np.arange(1 << mu.n)
    for i in range(mu.n):
        bit = 1 << i
        base = S[(S & bit) == 0]
        bad = np.flatnonzero(vals[base] > vals[base | bit] + tol)
        if bad.size:
            s = int(base[bad[0]])
            mu.flags["monotone"] = ("no", (s, s | bit))
            return Verdict(False, (s, s | bit), 0)
    mu.flags["monotone"] = ("yes", None)
    return Verdict(True, None, S.size * mu.n)


def is_subadditive(mu: OuterMeasure, tol: float = TOL) -> Verdict:
    vals = _table(mu, "exhaustive")
    F = np.arange(1 << mu.n)
    for E in F:
        bad = np.flatnonzero(vals[E | F] > vals[E] + vals + tol)
        if bad.size:
            mu.flags["subadditive"] = ("no", (int(E), int(bad[0])))
            return Verdict(False, (int(E), int(bad[0])), 0)
    mu.flags["subadditive"] = ("yes", None)
    return Verdict(True, None, F.size ** 2)


# -- subadditivity of the integral ----------------------------------------------

class Violation(NamedTuple):
    f: np.ndarray
    g: np.ndarray
    integral_sum: float
    sum_of_integrals: float


def _violation(mu, f, g, tol) -> Violation | None:
    lhs = integrate(mu, f + g)
    rhs = integrate(mu, f) + integrate(mu, g)
    if lhs > rhs + tol:
        return Violation(f, g, lhs, rhs)
    return None


def _step_grid(n: int, levels: int) -> np.ndarray:
    return np.array(list(itertools.product(range(levels), repeat=n)), dtype=float)[:, ::-1]


def find_subadditivity_violation(mu: OuterMeasure, budget: int = 10_000,
                                 rng: np.random.Generator | None = None,
                                 mode: str = "search", levels: int = 4,
                                 tol: float = TOL) -> Violation | None:
    """Look for ``f, g >= 0`` with ``int (f+g) dmu > int f dmu + int g dmu``.

    ``search`` tries the indicator pair of a submodularity witness first,
    then ``budget`` random step functions with values in ``{0..levels-1}``.
    ``exhaustive`` scans every pair of such step functions and does not
    consult the submodularity checker.
    """
    if mode == "exhaustive":
        return _exhaustive_violation(mu, levels, tol)
    if mode != "search":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng() if rng is None else rng
    if mu.n <= EXHAUSTIVE_LIMIT:
        verdict = is_submodular(mu, "exhaustive", tol=tol)
    else:
        verdict = is_submodular(mu, "sampled", budget=budget, rng=rng, tol=tol)
    if verdict.witness is not None:
        E, F = verdict.witness
        f = bits_to_mask(E, mu.n).astype(float)
        g = bits_to_mask(F, mu.n).astype(float)
        found = _violation(mu, f, g, tol)
        if found is not None:
            return found
    for _ in range(budget):
        f = rng.integers(0, levels, mu.n).astype(float)
        g = rng.integers(0, levels, mu.n).astype(float)
        found = _violation(mu, f, g, tol)
        if found is not None:
            return found
    return None


def _exhaustive_violation(mu: OuterMeasure, levels: int, tol: float) -> Violation | None:
    n = mu.n
    base = 2 * levels - 1
    if base ** n > 200_000:
        raise ValueError(f"exhaustive step-function search too large for |X|={n}")
    # sums of two {0..L-1} functions have digits < 2L-1: no carries in base 2L-1
    sums = _step_grid(n, base)
    I_sum = np.array([integrate(mu, h) for h in sums])
    place = base ** np.arange(n)
    steps = _step_grid(n, levels)
    code = steps @ place
    I_step = I_sum[code.astype(np.int64)]
    idx = code.astype(np.int64)
    for a in range(len(steps)):
        lhs = I_sum[idx[a] + idx]
        bad = np.flatnonzero(lhs > I_step[a] + I_step + tol)
        if bad.size:
            b = int(bad[0])
            return Violation(steps[a].copy(), steps[b].copy(),
                             float(lhs[b]), float(I_step[a] + I_step[b]))
    return None


# -- the measure built in the proof ---------------------------------------------

@dataclass(frozen=True)
class ProofMeasure:
    """Atoms ``A_1..A_n`` (ordered) and their masses ``nu(A_i)``."""

    atoms: tuple[np.ndarray, ...]
    atom_values: np.ndarray
    levels: np.ndarray = field(repr=False)

    def prefix_values(self) -> np.ndarray:
        return np.cumsum(self.atom_values)

    def integrate(self, h) -> float:
        h = np.asarray(h, dtype=float)
        return float(sum(h[A][0] * v for A, v in zip(self.atoms, self.atom_values)))


def proof_measure(mu: OuterMeasure, f, g, tol: float = TOL) -> ProofMeasure:
    """Finite measure agreeing with ``mu`` on the prefix unions of atoms.

    Atoms are the nonempty sets ``{f = a, g = b}``, indexed by their
    smallest element and ordered by nonincreasing ``f + g`` (ties keep
    index order). ``nu`` is defined through prefix differences of ``mu``.
    """
    f = _check_function(mu, f)
    g = _check_function(mu, g)
    groups: dict[tuple[float, float], list[int]] = {}
    for x in range(mu.n):
        groups.setdefault((f[x], g[x]), []).append(x)
    atoms = list(groups.values())  # insertion order = order of smallest element
    order = sorted(range(len(atoms)), key=lambda i: (-(f[atoms[i][0]] + g[atoms[i][0]]), i))
    ordered = tuple(np.array(atoms[i]) for i in order)
    values = np.empty(len(ordered))
    prefix = 0
    prev = 0.0
    for k, A in enumerate(ordered):
        for x in A:
            prefix |= 1 << int(x)
        cur = mu(prefix)
        if math.isinf(cur):
            raise ValueError("the proof measure needs mu finite on the support")
        d = cur - prev
        if d < -tol:
            raise NonMonotoneError(f"mu decreases when atom {k + 1} is added ({d:.3g})")
        values[k] = max(d, 0.0)
        prev = cur
    levels = np.array([f[A[0]] + g[A[0]] for A in ordered])
    return ProofMeasure(ordered, values, levels)


@dataclass(frozen=True)
class ClaimNu:
    integral_mu: float
    integral_nu: float
    ordered: bool
    ordered_equality: bool
    inequality_holds: bool


def check_claim_nu(mu: OuterMeasure, f, g, h, tol: float = TOL) -> ClaimNu:
    """Compare ``int h dnu`` with ``int h dmu`` for an atom-measurable ``h``.

    ``int h dnu <= int h dmu`` for submodular ``mu``, with equality when
    ``h`` is nonincreasing along the atom order.
    """
    pm = proof_measure(mu, f, g, tol)
    h = _check_function(mu, h)
    for A in pm.atoms:
        if np.ptp(h[A]) > 0:
            raise ValueError("h is not constant on the atoms generated by f and g")
    heights = np.array([h[A[0]] for A in pm.atoms])
    ordered = bool(np.all(np.diff(heights) <= 0))
    i_mu = integrate(mu, h)
    i_nu = pm.integrate(h)
    return ClaimNu(
        integral_mu=i_mu,
        integral_nu=i_nu,
        ordered=ordered,
        ordered_equality=ordered and abs(i_mu - i_nu) <= tol * max(1.0, abs(i_mu)),
        inequality_holds=i_nu <= i_mu + tol * max(1.0, abs(i_mu)),
    )


def limsup_of_sets(sets: Sequence[Iterable], tail: str = "empty", cycle_start: int = 0) -> frozenset:
    """``limsup E_n`` of an explicit list continued by a tail rule.

    ``tail="empty"`` continues with empty sets, so the limsup is empty.
    ``tail="cyclic"`` repeats ``sets[cycle_start:]`` forever; every set
    of the cycle recurs, so the limsup is their union.
    """
    if tail == "empty":
        return frozenset()
    if tail == "cyclic":
        out: set = set()
        for E in sets[cycle_start:]:
            out.update(E)
        return frozenset(out)
    raise ValueError(f"unknown tail rule {tail!r}")
