"""Exact engine for finite permutation groups and their actions.

Everything works with explicit element lists (desk scale, orders up to a
few thousand): orbits, stabilizers, cosets, double cosets, normalizers,
and the constructive cross-section machinery the other modules build on.
No generator-based algorithms; every verdict is decided by exhaustive
enumeration so it can serve as an exact oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Mapping, Sequence

__all__ = [
    "GroupError",
    "HierarchyError",
    "Permutation",
    "PermutationGroup",
    "FiniteAction",
    "Coset",
    "CrossSectionReport",
    "ConjugacyReport",
    "Hierarchy",
    "check_cross_section",
    "coset_space",
    "double_cosets",
    "normalizer",
    "subgroup_conjugator",
    "check_global_V_exists",
    "build_hierarchy",
    "transform_cross_section",
    "equivariant_coset",
    "left_coset_action",
]


class GroupError(ValueError):
    """A group-structure precondition failed (closure, subgroup, domain)."""


class HierarchyError(GroupError):
    """A hierarchical cross section could not be built."""


@lru_cache(maxsize=None)
def _positions(domain: tuple[int, ...]) -> dict[int, int]:
    return {point: k for k, point in enumerate(domain)}


class Permutation:
    """A permutation of a finite set of integer labels.

    ``images[k]`` is the image of ``domain[k]`` (one-line notation over the
    sorted ground set).  The ground set need not start at 1: ``{2..m}`` and
    ``{m'+1..m}`` appear throughout the ranking machinery.  ``a * b`` is the
    composition "apply b first, then a".
    """

    __slots__ = ("domain", "images", "_hash")

    def __init__(self, images: Iterable[int], domain: Iterable[int] | None = None):
        images = tuple(images)
        if domain is None:
            domain = tuple(sorted(images))
        else:
            domain = tuple(domain)
        if tuple(sorted(images)) != domain:
            raise GroupError(f"{images} is not a bijection of {domain}")
        self.domain = domain
        self.images = images
        self._hash = hash((domain, images))

    @classmethod
    def identity(cls, domain: Iterable[int]) -> "Permutation":
        domain = tuple(sorted(domain))
        return cls(domain, domain)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "Permutation":
        domain = tuple(sorted(mapping))
        return cls(tuple(mapping[k] for k in domain), domain)

    def __call__(self, point: int) -> int:
        pos = _positions(self.domain).get(point)
        if pos is None:
            raise GroupError(f"point {point!r} not in ground set {self.domain}")
        return self.images[pos]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.domain != other.domain:
            raise GroupError(
                f"mismatched ground sets {self.domain} and {other.domain}"
            )
        pos = _positions(self.domain)
        images = tuple(self.images[pos[v]] for v in other.images)
        return Permutation(images, self.domain)

    def inverse(self) -> "Permutation":
        pos = _positions(self.domain)
        out = [0] * len(self.domain)
        for point, img in zip(self.domain, self.images):
            out[pos[img]] = point
        return Permutation(tuple(out), self.domain)

    def extended_to(self, domain: Iterable[int]) -> "Permutation":
        """Embed into a larger ground set, fixing the new points."""
        domain = tuple(sorted(domain))
        if not set(self.domain) <= set(domain):
            raise GroupError(f"{domain} does not contain {self.domain}")
        mapping = dict(zip(self.domain, self.images))
        return Permutation(tuple(mapping.get(k, k) for k in domain), domain)

    def restricted_to(self, domain: Iterable[int]) -> "Permutation":
        """Restrict to an invariant subset of the ground set."""
        domain = tuple(sorted(domain))
        images = tuple(self(k) for k in domain)
        if set(images) != set(domain):
            raise GroupError(f"{domain} is not invariant under {self}")
        return Permutation(images, domain)

    def cycle_count(self) -> int:
        """Number of cycles, fixed points included."""
        pos = _positions(self.domain)
        seen = [False] * len(self.domain)
        count = 0
        for start in range(len(self.domain)):
            if seen[start]:
                continue
            count += 1
            k = start
            while not seen[k]:
                seen[k] = True
                k = pos[self.images[k]]
        return count

    def is_identity(self) -> bool:
        return self.images == self.domain

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Permutation)
            and self.domain == other.domain
            and self.images == other.images
        )

    def __lt__(self, other: "Permutation") -> bool:
        return (self.domain, self.images) < (other.domain, other.images)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if self.domain == tuple(range(1, len(self.domain) + 1)):
            return f"Permutation({self.images})"
        return f"Permutation({self.images}, domain={self.domain})"


def _sort_key(p: Permutation) -> tuple[int, ...]:
    return p.images


class PermutationGroup:
    """An explicit finite group of permutations over a common ground set.

    Raw element lists are verified at construction: the identity must be
    present and the set must be closed under composition and inverse.
    Constructors that produce provably closed sets skip the quadratic check.
    """

    __slots__ = ("domain", "elements", "_set")

    def __init__(self, elements: Iterable[Permutation], *, _trusted: bool = False):
        elems = sorted(set(elements), key=_sort_key)
        if not elems:
            raise GroupError("a group needs at least the identity element")
        domain = elems[0].domain
        if any(p.domain != domain for p in elems):
            raise GroupError("elements live on different ground sets")
        self.domain = domain
        self.elements = tuple(elems)
        self._set = frozenset(elems)
        if not _trusted:
            self._verify()

    def _verify(self) -> None:
        if Permutation.identity(self.domain) not in self._set:
            raise GroupError("identity element missing")
        for p in self.elements:
            if p.inverse() not in self._set:
                raise GroupError(f"inverse of {p} missing")
        for a in self.elements:
            for b in self.elements:
                if a * b not in self._set:
                    raise GroupError(f"not closed: {a} * {b} escapes the set")

    @classmethod
    def symmetric(cls, domain: Iterable[int]) -> "PermutationGroup":
        domain = tuple(sorted(domain))
        elems = [Permutation(img, domain) for img in itertools.permutations(domain)]
        return cls(elems, _trusted=True)

    @classmethod
    def trivial(cls, domain: Iterable[int]) -> "PermutationGroup":
        return cls([Permutation.identity(domain)], _trusted=True)

    @classmethod
    def generated_by(cls, generators: Iterable[Permutation]) -> "PermutationGroup":
        gens = list(generators)
        if not gens:
            raise GroupError("need at least one generator")
        domain = gens[0].domain
        elems = {Permutation.identity(domain)}
        frontier = list(elems)
        while frontier:
            new = []
            for g in gens:
                for b in frontier:
                    c = g * b
                    if c not in elems:
                        elems.add(c)
                        new.append(c)
            frontier = new
        return cls(elems, _trusted=True)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> Permutation:
        return Permutation.identity(self.domain)

    def __contains__(self, p: Permutation) -> bool:
        return p in self._set

    def __iter__(self):
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PermutationGroup) and self._set == other._set

    def __hash__(self) -> int:
        return hash(self._set)

    def __repr__(self) -> str:
        return f"PermutationGroup(order={self.order}, domain={self.domain})"

    def is_subgroup_of(self, other: "PermutationGroup") -> bool:
        return self.domain == other.domain and self._set <= other._set

    def intersection(self, other: "PermutationGroup") -> "PermutationGroup":
        if self.domain != other.domain:
            raise GroupError("mismatched ground sets")
        return PermutationGroup(self._set & other._set, _trusted=True)

    def conjugated_by(self, g: Permutation) -> "PermutationGroup":
        g_inv = g.inverse()
        return PermutationGroup(
            (g * p * g_inv for p in self.elements), _trusted=True
        )


def _require_subgroup(G: PermutationGroup, sub: PermutationGroup, name: str) -> None:
    if not sub.is_subgroup_of(G):
        raise GroupError(f"{name} is not a subgroup of the ambient group")


class FiniteAction:
    """A finite group acting on a finite list of opaque points.

    ``act(g, x)`` must be total on group x points.  Points may be any
    hashable identifiers (ints, strings, Permutations, tuples); internally
    a dense index keeps orders deterministic.  Construction checks that the
    identity fixes every point and that each group element permutes the
    point set; the full compatibility axiom is exhaustively checkable via
    :meth:`verify_axioms` (desk scale only).
    """

    def __init__(
        self,
        group: PermutationGroup,
        points: Sequence[Hashable],
        act: Callable[[Permutation, Hashable], Hashable],
        *,
        validate: bool = True,
    ):
        self.group = group
        self.points = tuple(points)
        self.act = act
        self._index = {x: i for i, x in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise GroupError("duplicate points")
        if validate:
            e = group.identity
            for x in self.points:
                if act(e, x) != x:
                    raise GroupError(f"identity moves point {x!r}")
            pset = set(self.points)
            for g in group:
                if {act(g, x) for x in self.points} != pset:
                    raise GroupError(f"element {g} does not permute the points")

    def index_of(self, x: Hashable) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise GroupError(f"unknown point identifier {x!r}") from None

    def verify_axioms(self) -> None:
        """Exhaustive identity + compatibility check; raises on violation."""
        e = self.group.identity
        for x in self.points:
            if self.act(e, x) != x:
                raise GroupError(f"identity moves point {x!r}")
        for g in self.group:
            for h in self.group:
                gh = g * h
                for x in self.points:
                    if self.act(gh, x) != self.act(g, self.act(h, x)):
                        raise GroupError(
                            f"compatibility fails at g={g}, h={h}, x={x!r}"
                        )

    def orbit(self, x: Hashable) -> tuple[Hashable, ...]:
        """The orbit of x, as a tuple in point-index order."""
        self.index_of(x)
        hit = {self.act(g, x) for g in self.group}
        return tuple(p for p in self.points if p in hit)

    def orbits(self) -> list[tuple[Hashable, ...]]:
        """The orbit partition, in order of first appearance."""
        seen: set[Hashable] = set()
        out = []
        for x in self.points:
            if x in seen:
                continue
            orb = self.orbit(x)
            seen.update(orb)
            out.append(orb)
        return out

    def stabilizer(self, x: Hashable) -> PermutationGroup:
        self.index_of(x)
        elems = [g for g in self.group if self.act(g, x) == x]
        return PermutationGroup(elems, _trusted=True)

    def is_free(self) -> bool:
        return all(self.stabilizer(x).order == 1 for x in self.points)

    def restricted_to_subgroup(self, H: PermutationGroup) -> "FiniteAction":
        _require_subgroup(self.group, H, "H")
        return FiniteAction(H, self.points, self.act, validate=False)


@dataclass(frozen=True)
class Coset:
    """A coset block with its canonical (lex-min one-line) representative."""

    representative: Permutation
    elements: tuple[Permutation, ...]

    def __contains__(self, p: Permutation) -> bool:
        return p in self.elements

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


@dataclass
class CrossSectionReport:
    """Outcome of checking a candidate (global) cross section."""

    is_cross_section: bool
    is_global: bool
    common_stabilizer: PermutationGroup | None
    orbit_violations: list[tuple[tuple[Hashable, ...], int]] = field(
        default_factory=list
    )
    stabilizer_violations: list[tuple[Hashable, Hashable]] = field(
        default_factory=list
    )

    @property
    def violations(self) -> list:
        return list(self.orbit_violations) + list(self.stabilizer_violations)


def check_cross_section(
    action: FiniteAction, Z: Sequence[Hashable]
) -> CrossSectionReport:
    """Does Z meet every orbit exactly once, with one common stabilizer?

    ``is_cross_section`` holds iff every orbit is hit exactly once;
    ``is_global`` additionally requires all stabilizers on Z to agree as
    element sets.  Failures are enumerated instead of raised.
    """
    zset = set(Z)
    if len(zset) != len(Z):
        raise GroupError("cross-section candidate contains duplicates")
    for z in Z:
        action.index_of(z)
    orbit_violations = []
    for orb in action.orbits():
        hits = sum(1 for x in orb if x in zset)
        if hits != 1:
            orbit_violations.append((orb, hits))
    is_cs = not orbit_violations
    stab_violations: list[tuple[Hashable, Hashable]] = []
    common: PermutationGroup | None = None
    if Z:
        z0 = Z[0]
        stab0 = action.stabilizer(z0)
        for z in Z[1:]:
            if action.stabilizer(z) != stab0:
                stab_violations.append((z0, z))
        if not stab_violations:
            common = stab0
    is_global = is_cs and common is not None
    return CrossSectionReport(
        is_cross_section=is_cs,
        is_global=is_global,
        common_stabilizer=common if is_global else None,
        orbit_violations=orbit_violations,
        stabilizer_violations=stab_violations,
    )


def coset_space(
    G: PermutationGroup, G0: PermutationGroup, side: str = "left"
) -> list[Coset]:
    """Partition G into left cosets gG0 (or right cosets G0g).

    Blocks are returned sorted by their canonical representative, which is
    the lexicographic minimum of the block in one-line notation.
    """
    _require_subgroup(G, G0, "G0")
    if side not in ("left", "right"):
        raise GroupError(f"side must be 'left' or 'right', got {side!r}")
    seen: set[Permutation] = set()
    out = []
    for g in G.elements:  # sorted, so the first unseen element is the block min
        if g in seen:
            continue
        if side == "left":
            block = sorted({g * h for h in G0}, key=_sort_key)
        else:
            block = sorted({h * g for h in G0}, key=_sort_key)
        seen.update(block)
        out.append(Coset(block[0], tuple(block)))
    return out


def double_cosets(
    G: PermutationGroup, H: PermutationGroup, G0: PermutationGroup
) -> tuple[list[Coset], list[Permutation]]:
    """Partition G into double cosets HgG0 and pick canonical representatives.

    Representatives are the lex-min element of each block; the identity is
    lex-min over the whole group, so it always represents its own block.
    """
    _require_subgroup(G, H, "H")
    _require_subgroup(G, G0, "G0")
    seen: set[Permutation] = set()
    blocks = []
    reps = []
    for g in G.elements:
        if g in seen:
            continue
        block = sorted({h * g * k for h in H for k in G0}, key=_sort_key)
        seen.update(block)
        blocks.append(Coset(block[0], tuple(block)))
        reps.append(block[0])
    return blocks, reps


def normalizer(G: PermutationGroup, G0: PermutationGroup) -> PermutationGroup:
    """N = {g in G : g G0 g^-1 = G0}; always G0 <= N <= G."""
    _require_subgroup(G, G0, "G0")
    target = G0._set
    elems = [g for g in G if {g * p * g.inverse() for p in G0} == target]
    return PermutationGroup(elems, _trusted=True)


def subgroup_conjugator(
    H: PermutationGroup, A: PermutationGroup, B: PermutationGroup
) -> Permutation | None:
    """First h in H with h A h^-1 = B, or None (brute force)."""
    if A.order != B.order:
        return None
    target = B._set
    for h in H.elements:
        h_inv = h.inverse()
        if {h * a * h_inv for a in A} == target:
            return h
    return None


@dataclass
class ConjugacyReport:
    """Whether the subgroups H ∩ g'G0g'^-1 are all conjugate in H."""

    all_conjugate: bool
    representatives: tuple[Permutation, ...]
    conjugators: dict[Permutation, Permutation] | None


def _rep_stabilizer(
    H: PermutationGroup, G0: PermutationGroup, g: Permutation
) -> PermutationGroup:
    """H ∩ g G0 g^-1, the isotropy group of the coset gG0 under H."""
    g_inv = g.inverse()
    members = [h for h in H if (g_inv * h) * g in G0]
    return PermutationGroup(members, _trusted=True)


def check_global_V_exists(
    G: PermutationGroup,
    H: PermutationGroup,
    G0: PermutationGroup,
    representatives: Sequence[Permutation] | None = None,
) -> ConjugacyReport:
    """Decide whether a global cross section exists for (H, G/G0).

    True iff the subgroups H ∩ g'G0g'^-1 over double-coset representatives
    g' are pairwise conjugate in H (brute-force conjugator search).  The
    verdict does not depend on the representative choice; conjugators map
    every stabilizer onto the one at the identity's block.
    """
    if representatives is None:
        _, representatives = double_cosets(G, H, G0)
    reps = tuple(representatives)
    stabs = [_rep_stabilizer(H, G0, g) for g in reps]
    base = stabs[0]
    conjugators: dict[Permutation, Permutation] = {}
    for g, s in zip(reps, stabs):
        w = subgroup_conjugator(H, s, base)
        if w is None:
            return ConjugacyReport(False, reps, None)
        conjugators[g] = w
    return ConjugacyReport(True, reps, conjugators)


@dataclass
class Hierarchy:
    """Result of a successful two-level cross-section construction."""

    G0: PermutationGroup
    H0: PermutationGroup
    representatives: tuple[Permutation, ...]
    V: tuple[Coset, ...]
    Z: tuple[Hashable, ...]
    Z_tilde: tuple[Hashable, ...]
    z_tilde_report: CrossSectionReport


def build_hierarchy(
    action: FiniteAction,
    H: PermutationGroup,
    Z: Sequence[Hashable],
    representatives: Sequence[Permutation] | None = None,
) -> Hierarchy:
    """Build V = {g_i G0} and the decomposable cross section Z~ = G'Z.

    Z must be a global cross section for the full action.  Explicitly given
    representatives are validated strictly: one per double coset, with the
    coset isotropy groups H ∩ g_i G0 g_i^-1 all equal.  When representatives
    are omitted, the canonical (lex-min) ones are used and, if their isotropy
    groups are merely conjugate, repaired through the conjugator witnesses
    (g_i -> h_i g_i), which succeeds whenever a global V exists at all.
    Raises HierarchyError otherwise.  The returned Z~ is re-verified to be a
    global cross section for (H, X).
    """
    G = action.group
    _require_subgroup(G, H, "H")
    report = check_cross_section(action, Z)
    if not report.is_global:
        raise HierarchyError("Z is not a global cross section for the action")
    G0 = report.common_stabilizer
    assert G0 is not None

    blocks, canonical = double_cosets(G, H, G0)
    if representatives is not None:
        reps = list(representatives)
        if len(reps) != len(blocks):
            raise HierarchyError(
                f"need {len(blocks)} double-coset representatives, got {len(reps)}"
            )
        taken = []
        for r in reps:
            owners = [i for i, b in enumerate(blocks) if r in b]
            if not owners:
                raise HierarchyError(f"{r} is not an element of the group")
            taken.append(owners[0])
        if len(set(taken)) != len(blocks):
            raise HierarchyError("representatives do not cover every double coset")
        # Convention: the identity's double coset is represented inside G0,
        # so that V contains the coset G0 itself and H0 = H ∩ G0.
        id_rep = reps[taken.index(next(i for i, b in enumerate(blocks) if G.identity in b))]
        if id_rep not in G0:
            raise HierarchyError(
                "the identity's double coset must be represented by an element "
                "of G0 (so that G0 itself belongs to V)"
            )
        stabs = [_rep_stabilizer(H, G0, r) for r in reps]
        if any(s != stabs[0] for s in stabs):
            raise HierarchyError(
                "coset stabilizers H ∩ gG0g^-1 differ across the given "
                "representatives (Theorem-2 style condition violated)"
            )
    else:
        reps = list(canonical)  # reps[0] is the identity: lex-min of the group
        stabs = [_rep_stabilizer(H, G0, r) for r in reps]
        if any(s != stabs[0] for s in stabs):
            conj = check_global_V_exists(G, H, G0, reps)
            if not conj.all_conjugate:
                raise HierarchyError(
                    "no global cross section exists for (H, G/G0): the coset "
                    "stabilizers are not all conjugate in H"
                )
            assert conj.conjugators is not None
            reps = [conj.conjugators[r] * r for r in reps]
            stabs = [_rep_stabilizer(H, G0, r) for r in reps]
            assert all(s == stabs[0] for s in stabs)

    H0 = H.intersection(G0)
    assert stabs[0] == H0

    V = []
    for r in reps:
        block = sorted({r * k for k in G0}, key=_sort_key)
        V.append(Coset(block[0], tuple(block)))

    Z_tilde = tuple(action.act(r, z) for r in reps for z in Z)
    if len(set(Z_tilde)) != len(reps) * len(Z):
        raise HierarchyError("G'Z has repeated points; Z was not global")
    sub = action.restricted_to_subgroup(H)
    zt_report = check_cross_section(sub, Z_tilde)
    if not zt_report.is_global or zt_report.common_stabilizer != H0:
        raise HierarchyError("G'Z failed verification as a global cross section")
    return Hierarchy(
        G0=G0,
        H0=H0,
        representatives=tuple(reps),
        V=tuple(V),
        Z=tuple(Z),
        Z_tilde=Z_tilde,
        z_tilde_report=zt_report,
    )


def transform_cross_section(
    action: FiniteAction,
    Z: Sequence[Hashable],
    g0: Permutation,
    n_map: Callable[[Hashable], Permutation] | Mapping[Hashable, Permutation],
) -> tuple[Hashable, ...]:
    """Produce the proportional cross section Z' = {g0 n_z z : z in Z}.

    Each n_z must lie in the normalizer of the common isotropy subgroup;
    the result is verified to be a global cross section again (its common
    stabilizer is g0 G0 g0^-1).
    """
    report = check_cross_section(action, Z)
    if not report.is_global:
        raise GroupError("Z is not a global cross section")
    G0 = report.common_stabilizer
    assert G0 is not None
    N = normalizer(action.group, G0)
    lookup = n_map if callable(n_map) else n_map.__getitem__
    z_prime = []
    for z in Z:
        n_z = lookup(z)
        if n_z not in N:
            raise GroupError(f"n_z = {n_z} for z = {z!r} is outside the normalizer")
        z_prime.append(action.act(g0 * n_z, z))
    out = tuple(z_prime)
    new_report = check_cross_section(action, out)
    if not new_report.is_global:
        raise GroupError("transformed set is not a global cross section")
    return out


def equivariant_coset(
    action: FiniteAction, Z: Sequence[Hashable], x: Hashable
) -> tuple[Hashable, frozenset[Permutation]]:
    """The invariant part z(x) and the equivariant coset {g : g z(x) = x}."""
    zset = set(Z)
    orb = set(action.orbit(x))
    inter = [z for z in Z if z in orb]
    if len(inter) != 1:
        raise GroupError(f"Z meets the orbit of {x!r} {len(inter)} times")
    z = inter[0]
    coset = frozenset(g for g in action.group if action.act(g, z) == x)
    return z, coset


def left_coset_action(
    G: PermutationGroup, G0: PermutationGroup
) -> FiniteAction:
    """G acting on the left coset space G/G0 by (g, hG0) -> (gh)G0.

    Points are the canonical representatives of the cosets.
    """
    cosets = coset_space(G, G0, "left")
    rep_of: dict[Permutation, Permutation] = {}
    for c in cosets:
        for el in c.elements:
            rep_of[el] = c.representative
    points = [c.representative for c in cosets]

    def act(g: Permutation, x: Permutation) -> Permutation:
        return rep_of[g * x]

    return FiniteAction(G, points, act, validate=False)
