"""Executable verifiers for the structural facts.

These check, at desk scale, the facts the library is built around: the
alternating/symmetric coincidence of layer spaces up to total order
n-2, the Vandermonde obstruction that follows from it, k-transitivity,
2-closure, the strict orbit-count condition over strict supergroups,
and the bump-average separating function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .equivlayers import layer_space, random_layer
from .net import ActivationStage, EquivStage, GInvariantNetwork, MLP, MLPStage, SumStage
from .orbits import layer_classes, orbit_count_squared
from .permgroup import PermGroup, Permutation, alternating, symmetric
from .polybasis import vandermonde_value
from .rng import SplitMix64

TWO_CLOSURE_MAX_N = 8
SUPERGROUP_MAX_N = 7


@dataclass(frozen=True)
class LayerEqualityRow:
    total_order: int
    sn_classes: int
    an_classes: int
    identical: bool


@dataclass(frozen=True)
class LayerEqualityReport:
    n: int
    rows: tuple[LayerEqualityRow, ...]
    holds_in_range: bool  # identical partitions for every total order <= n-2

    def row(self, t: int) -> LayerEqualityRow:
        return self.rows[t - 1]


def an_sn_layer_equality(n: int, max_total_order: int,
                         cap: int | None = None) -> LayerEqualityReport:
    """Compare layer partitions of [n]^t under the alternating and
    symmetric groups for t = 1..max_total_order.

    Since both partitions are canonically labeled, equality of the
    class-id arrays is equality of the partitions.
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    A, S = alternating(n), symmetric(n)
    rows = []
    holds = True
    for t in range(1, max_total_order + 1):
        pa = layer_classes(A, t, cap=cap)
        ps = layer_classes(S, t, cap=cap)
        identical = bool(np.array_equal(pa.class_id, ps.class_id))
        rows.append(LayerEqualityRow(total_order=t, sn_classes=ps.num_classes,
                                     an_classes=pa.num_classes, identical=identical))
        if t <= n - 2 and not identical:
            holds = False
    return LayerEqualityReport(n=n, rows=tuple(rows), holds_in_range=holds)


def is_k_transitive(G: PermGroup, k: int) -> bool:
    """True iff G moves any distinct k-tuple to any other.

    Checked on the layer partition: the all-distinct tuples must form a
    single class.
    """
    if k > G.n:
        raise ValueError(f"k={k} exceeds n={G.n}")
    if k == 0:
        return True
    P = layer_classes(G, k)
    ids = set()
    for t in itertools.permutations(range(G.n), k):
        ids.add(P.class_of(t))
        if len(ids) > 1:
            return False
    return len(ids) == 1


@dataclass(frozen=True)
class VandermondeReport:
    n: int
    max_order: int
    trials: int
    x0: tuple[float, ...]
    max_deviation: float        # max |F(x0) - F(swap.x0)| over the trials
    all_equal: bool             # every trial within the float-reassociation tol
    vandermonde_gap: float      # |V(x0)|: the unavoidable approximation gap
    guaranteed: bool            # equality is forced when 2*max_order <= n-2


def _random_alternating_network(n: int, order: int, rng: SplitMix64,
                                width: int = 2) -> GInvariantNetwork:
    """A random alternating-group-invariant network of the given tensor order."""
    A = alternating(n)
    sp1 = layer_space(A, 1, order, 1, width)
    sp2 = layer_space(A, order, order, width, width)
    sp3 = layer_space(A, order, 0, width, width)
    head = MLP([rng.uniforms(-1, 1, 1, width)], [rng.uniforms(-1, 1, 1)], "sigmoid")
    stages = [EquivStage(random_layer(sp1, rng)),
              ActivationStage("sigmoid"),
              EquivStage(random_layer(sp2, rng)),
              ActivationStage("sigmoid"),
              EquivStage(random_layer(sp3, rng)),
              SumStage(np.ones(width)),
              MLPStage(head)]
    return GInvariantNetwork(A, stages, order=order)


def vandermonde_obstruction(n: int, max_order: int, seed: int = 0,
                            trials: int = 100,
                            x0: tuple[float, ...] | None = None,
                            tol: float = 1e-9) -> VandermondeReport:
    """Random alternating-invariant networks of low tensor order cannot
    tell x0 from its first-two swap, while the pairwise-difference
    product changes sign there: its magnitude is the gap no such
    network can cross.

    Equality is forced whenever every layer's total order stays at or
    below n-2, i.e. 2*max_order <= n-2; beyond that range the check
    reports whatever happens (typically genuine separation).
    """
    if x0 is None:
        x0 = tuple(float(i) for i in range(1, n + 1))
    x0_arr = np.asarray(x0, dtype=np.float64)
    if len(set(x0)) != n:
        raise ValueError("x0 needs pairwise distinct coordinates")
    swap = Permutation.from_cycles(n, [(1, 2)])
    x1 = swap.apply_vector(x0_arr)
    rng = SplitMix64(seed)
    worst = 0.0
    for t in range(trials):
        net = _random_alternating_network(n, max_order, rng.spawn(f"trial-{t}"))
        dev = abs(net.forward(x0_arr) - net.forward(x1))
        worst = max(worst, dev)
    return VandermondeReport(
        n=n, max_order=max_order, trials=trials, x0=tuple(x0),
        max_deviation=worst, all_equal=worst <= tol,
        vandermonde_gap=abs(vandermonde_value(x0_arr)),
        guaranteed=2 * max_order <= n - 2)


# ------------------------------------------------------------- 2-closure

@dataclass(frozen=True)
class ClosureReport:
    group_order: int
    closure_order: int
    is_two_closed: bool
    orbit_count_squared: int
    witnesses: tuple[str, ...]  # closure elements outside the group, cycle form

    def __post_init__(self):
        assert self.is_two_closed == (self.closure_order == self.group_order)


def two_closure(G: PermGroup) -> PermGroup:
    """The largest subgroup of S_n with the same orbits on [n]^2:
    every permutation preserving the pair-class coloring.

    Brute force over all n! permutations; fine for n <= 8.
    """
    n = G.n
    if n > TWO_CLOSURE_MAX_N:
        raise ValueError(f"two_closure enumerates S_{n}; capped at n <= {TWO_CLOSURE_MAX_N}")
    coloring = layer_classes(G, 2).class_id.reshape(n, n)
    members = []
    for images in itertools.permutations(range(n)):
        arr = np.array(images)
        if np.array_equal(coloring[np.ix_(arr, arr)], coloring):
            members.append(Permutation(images))
    # find a small generating set, scanning in lex order
    gens: list[Permutation] = []
    closure = PermGroup.generate(n, gens)
    for h in members:
        if h not in closure:
            gens.append(h)
            closure = PermGroup.generate(n, gens)
    assert closure.order == len(members)
    for g in G.generators:
        assert g in closure
    return closure


def is_two_closed(G: PermGroup, max_witnesses: int = 10) -> ClosureReport:
    closure = two_closure(G)
    witnesses = [h.cycle_string() for h in closure if h not in G]
    return ClosureReport(
        group_order=G.order,
        closure_order=closure.order,
        is_two_closed=closure.order == G.order,
        orbit_count_squared=orbit_count_squared(G),
        witnesses=tuple(witnesses[:max_witnesses]))


def enumerate_supergroups(G: PermGroup, cap: int | None = None) -> list[PermGroup]:
    """All distinct single-extension closures <G, g> for g in S_n outside G.

    Orbit counts are monotone under inclusion, so a strict supergroup
    violating the strict-inequality condition forces a violating single
    extension; checking these suffices.
    """
    n = G.n
    if n > SUPERGROUP_MAX_N:
        raise ValueError(f"supergroup enumeration scans S_{n}; capped at "
                         f"n <= {SUPERGROUP_MAX_N}; pass explicit supergroups instead")
    out: list[PermGroup] = []
    seen: set[frozenset] = set()
    for images in itertools.permutations(range(n)):
        g = Permutation(images)
        if g in G:
            continue
        H = PermGroup.generate(n, list(G.generators) + [g], cap=cap or 10**6)
        key = frozenset(h.images for h in H)
        if key not in seen:
            seen.add(key)
            out.append(H)
    return out


@dataclass(frozen=True)
class SupergroupRow:
    order: int
    orbit_count: int
    strict: bool              # |[n]^2/H| < |[n]^2/G|
    generator_hint: str       # cycle form of one extending element


@dataclass(frozen=True)
class NecessaryConditionReport:
    group_order: int
    orbit_count: int
    rows: tuple[SupergroupRow, ...]
    holds: bool                       # every strict supergroup is strictly coarser
    two_closed_cross_check: bool      # verdict from the 2-closure path

    def __post_init__(self):
        assert all(r.strict == (r.orbit_count < self.orbit_count) for r in self.rows)


def necessary_condition_check(G: PermGroup,
                              supergroups: list[PermGroup] | None = None,
                              ) -> NecessaryConditionReport:
    """Check the strict orbit-count drop over strict supergroups.

    With no explicit list, single-extension closures are enumerated
    (sufficient, by monotonicity).  The verdict is cross-checked against
    the 2-closure computation; the two must agree.
    """
    base = orbit_count_squared(G)
    enumerated = supergroups is None
    if enumerated:
        supergroups = enumerate_supergroups(G)
    rows = []
    holds = True
    for H in supergroups:
        if H.n != G.n:
            raise ValueError("supergroup acts on a different point count")
        if H.order <= G.order or not G.is_subgroup_of(H):
            raise ValueError("listed group is not a strict supergroup")
        count = orbit_count_squared(H)
        strict = count < base
        if not strict:
            holds = False
        hint = next(h.cycle_string() for h in H if h not in G)
        rows.append(SupergroupRow(order=H.order, orbit_count=count,
                                  strict=strict, generator_hint=hint))
    cross = is_two_closed(G).is_two_closed
    if enumerated and holds != cross:
        raise AssertionError(
            "supergroup scan and 2-closure disagree on the verdict")
    return NecessaryConditionReport(group_order=G.order, orbit_count=base,
                                    rows=tuple(rows), holds=holds,
                                    two_closed_cross_check=cross)


# ------------------------------------------------------- separating function

@dataclass
class SeparatingFunction:
    """Group average of a bump supported on the base orbit.

    Evaluates to 1 on the G-orbit of the base point and 0 on the rest of
    the H-orbit; invariant under G by construction.
    """

    G: PermGroup
    H: PermGroup
    x0: np.ndarray
    centers: np.ndarray          # the G-orbit of x0, |G| x n
    radius: float
    witness: Permutation         # an element of H with h.x0 outside G.x0
    g_orbit_size: int
    h_orbit_size: int

    def bump(self, y: np.ndarray) -> float:
        """Sum of radial cubic-smoothstep bumps centered on the G-orbit."""
        d = np.sqrt(((self.centers - y) ** 2).sum(axis=1))
        u = np.clip(d / self.radius, 0.0, 1.0)
        return float((1.0 - (3.0 * u**2 - 2.0 * u**3)).sum())

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        total = 0.0
        for g in self.G:
            total += self.bump(g.apply_vector(x))
        return total / self.G.order


def separating_function(G: PermGroup, H: PermGroup, x0) -> SeparatingFunction:
    """Construct a continuous function invariant under G but not under H.

    Needs G strictly inside H and a base point with pairwise distinct
    coordinates so the orbit sizes equal the group orders.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (G.n,):
        raise ValueError(f"x0 must have shape ({G.n},)")
    if len(set(x0.tolist())) != G.n:
        raise ValueError("x0 needs pairwise distinct coordinates")
    if G.n != H.n or not G.is_subgroup_of(H) or H.order <= G.order:
        raise ValueError("need G strictly contained in H")

    g_orbit = {tuple(g.apply_vector(x0)) for g in G}
    h_orbit = {tuple(h.apply_vector(x0)) for h in H}
    assert len(g_orbit) == G.order and len(h_orbit) == H.order
    witness = next(h for h in H
                   if tuple(h.apply_vector(x0)) not in g_orbit)

    pts = np.array(sorted(h_orbit))
    dmin = np.inf
    for i in range(len(pts)):
        d = np.sqrt(((pts[i + 1:] - pts[i]) ** 2).sum(axis=1))
        if d.size:
            dmin = min(dmin, float(d.min()))
    centers = np.array(sorted(g_orbit))
    return SeparatingFunction(G=G, H=H, x0=x0, centers=centers,
                              radius=dmin / 3.0, witness=witness,
                              g_orbit_size=len(g_orbit),
                              h_orbit_size=len(h_orbit))
