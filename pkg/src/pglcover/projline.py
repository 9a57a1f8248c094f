"""The projective line over GF(q) and the Mobius action of PGL(2,q).

Points carry indices 0..q: index i < q is the i-th element of GF(q) in
increasing field-index order (so 0 and 1 are the field constants 0 and 1),
and index q is the point at infinity.  The group is enumerated by ordered
triples (alpha, beta, gamma) of distinct points in lexicographic order;
rank r holds the unique map sending 0 -> alpha, 1 -> beta, inf -> gamma.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from . import gf
from .gf import FieldElement, FieldTower

ProjectivePoint = int

# Largest q for which enumerate_group materializes all q^3 - q permutations.
MATERIALIZE_MAX_Q = 64


@dataclass(frozen=True)
class Permutation:
    """A permutation of the q+1 points, stored as its image array."""

    images: tuple[int, ...]

    def __post_init__(self):
        n = len(self.images)
        seen = [False] * n
        for v in self.images:
            if not 0 <= v < n or seen[v]:
                raise ValueError("image array is not a bijection")
            seen[v] = True

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, i: int) -> int:
        return self.images[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: x -> self(other(x))."""
        return Permutation(tuple(self.images[v] for v in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, v in enumerate(self.images):
            inv[v] = i
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))


def fix_count(perm: Permutation) -> int:
    """Number of fixed points."""
    return sum(1 for i, v in enumerate(perm.images) if i == v)


def format_permutation(perm: Permutation) -> str:
    return " ".join(str(v) for v in perm.images)


def parse_permutation(line: str) -> Permutation:
    """Parse one space-separated image line; "inf" means the last point."""
    tokens = line.split()
    last = len(tokens) - 1
    return Permutation(tuple(last if t == "inf" else int(t) for t in tokens))


def write_permutations(path, perms: Iterable[Permutation]) -> None:
    with open(path, "w") as fh:
        for perm in perms:
            fh.write(format_permutation(perm) + "\n")


def read_permutations(path) -> list[Permutation]:
    with open(path) as fh:
        return [parse_permutation(line) for line in fh if line.strip()]


@dataclass(frozen=True)
class MobiusMap:
    """Normalized fractional-linear map x -> (a*x + b) / (c*x + d).

    Entries are field indices of GF(q) elements viewed inside GF(q^2); the
    first nonzero entry in the order (a, b, c, d) is 1.
    """

    a: FieldElement
    b: FieldElement
    c: FieldElement
    d: FieldElement


@dataclass(frozen=True)
class GroupTable:
    """Materialized PGL(2,q) in triple-enumeration order."""

    q: int
    perms: tuple[Permutation, ...]

    @property
    def order(self) -> int:
        return len(self.perms)

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.perms)

    def __len__(self) -> int:
        return len(self.perms)

    def checksum(self) -> str:
        h = hashlib.sha256()
        for perm in self.perms:
            h.update((format_permutation(perm) + "\n").encode())
        return h.hexdigest()

    def metadata(self) -> dict:
        return {"q": self.q, "order": self.order, "checksum_sha256": self.checksum()}


class ProjLine:
    """Projective line of a tower plus position-indexed subfield arithmetic.

    The position tables (q x q) turn the inner loops of group enumeration
    into pure integer gathers; they are built once from the certified
    GF(q^2) arithmetic and never mutated.
    """

    def __init__(self, tower: FieldTower):
        self.tower = tower
        self.q = tower.q
        self.n_points = tower.q + 1
        self.infinity = tower.q

        q = self.q
        omega = tower.subfield_elements().astype(np.int64)
        self.omega = omega                      # position -> field index
        pos_of = np.full(tower.q2, -1, dtype=np.int32)
        pos_of[omega] = np.arange(q, dtype=np.int32)
        self.pos_of = pos_of                    # field index -> position

        self.add_pos = pos_of[gf.add_vec(tower, omega[:, None], omega[None, :])]
        self.mul_pos = pos_of[gf.mul_vec(tower, omega[:, None], omega[None, :])]
        self.neg_pos = pos_of[gf.neg_vec(tower, omega)]
        inv_idx = np.concatenate(([0], [tower.inv(int(z)) for z in omega[1:]]))
        self.inv_pos = pos_of[inv_idx]          # inv_pos[0] is a dummy
        for t in (self.add_pos, self.mul_pos, self.neg_pos, self.inv_pos):
            t.setflags(write=False)
        if (self.add_pos < 0).any() or (self.mul_pos < 0).any():
            raise RuntimeError("GF(q) is not closed under the table arithmetic")

        self.group_order = (q + 1) * q * (q - 1)

    # -- points ---------------------------------------------------------------

    def element_of_point(self, x: ProjectivePoint) -> FieldElement:
        if x == self.infinity:
            raise ValueError("the point at infinity is not a field element")
        return int(self.omega[x])

    def point_of_element(self, z: FieldElement) -> ProjectivePoint:
        pos = int(self.pos_of[z])
        if pos < 0:
            raise ValueError(f"element {z} is not in GF({self.q})")
        return pos

    # -- scalar Mobius arithmetic ----------------------------------------------

    def mobius_from_matrix(self, a: FieldElement, b: FieldElement,
                           c: FieldElement, d: FieldElement) -> MobiusMap:
        """Normalize (a, b, c, d); entries must be GF(q) elements, det != 0."""
        t = self.tower
        for z in (a, b, c, d):
            if not t.in_subfield(z):
                raise ValueError(f"matrix entry {z} is not in GF({self.q})")
        det = t.sub(t.mul(a, d), t.mul(b, c))
        if det == 0:
            raise ValueError("matrix is singular")
        lead = next(z for z in (a, b, c, d) if z != 0)
        s = t.inv(lead)
        return MobiusMap(t.mul(a, s), t.mul(b, s), t.mul(c, s), t.mul(d, s))

    def apply(self, m: MobiusMap, x: ProjectivePoint) -> ProjectivePoint:
        t = self.tower
        if x == self.infinity:
            if m.c == 0:
                return self.infinity
            return self.point_of_element(t.div(m.a, m.c))
        e = self.element_of_point(x)
        den = t.add(t.mul(m.c, e), m.d)
        if den == 0:
            return self.infinity
        num = t.add(t.mul(m.a, e), m.b)
        return self.point_of_element(t.div(num, den))

    def invert(self, m: MobiusMap) -> MobiusMap:
        t = self.tower
        return self.mobius_from_matrix(m.d, t.neg(m.b), t.neg(m.c), m.a)

    def from_triple(self, alpha: ProjectivePoint, beta: ProjectivePoint,
                    gamma: ProjectivePoint) -> MobiusMap:
        """The unique map with 0 -> alpha, 1 -> beta, inf -> gamma."""
        if alpha == beta or beta == gamma or alpha == gamma:
            raise ValueError("triple points must be pairwise distinct")
        t = self.tower
        inf = self.infinity
        if alpha == inf:
            bz, gz = self.omega[beta], self.omega[gamma]
            return self.mobius_from_matrix(int(gz), t.sub(int(bz), int(gz)), 1, 0)
        if beta == inf:
            az, gz = self.omega[alpha], self.omega[gamma]
            return self.mobius_from_matrix(int(gz), t.neg(int(az)), 1, t.neg(1))
        if gamma == inf:
            az, bz = self.omega[alpha], self.omega[beta]
            return self.mobius_from_matrix(t.sub(int(bz), int(az)), int(az), 0, 1)
        az, bz, gz = (int(self.omega[v]) for v in (alpha, beta, gamma))
        ba, gb = t.sub(bz, az), t.sub(gz, bz)
        return self.mobius_from_matrix(t.mul(gz, ba), t.mul(az, gb), ba, gb)

    def perm_of(self, m: MobiusMap) -> Permutation:
        return Permutation(tuple(self.apply(m, x) for x in range(self.n_points)))

    # -- triple ranking ----------------------------------------------------------

    def triple_of_rank(self, rank: int) -> tuple[int, int, int]:
        q = self.q
        if not 0 <= rank < self.group_order:
            raise ValueError(f"rank {rank} out of range")
        alpha, rem = divmod(rank, q * (q - 1))
        bi, ci = divmod(rem, q - 1)
        beta = bi + (bi >= alpha)
        lo, hi = min(alpha, beta), max(alpha, beta)
        gamma = ci + (ci >= lo)
        gamma += gamma >= hi
        return alpha, beta, gamma

    def rank_of_triple(self, triple: tuple[int, int, int]) -> int:
        alpha, beta, gamma = triple
        q = self.q
        bi = beta - (beta > alpha)
        lo, hi = min(alpha, beta), max(alpha, beta)
        ci = gamma - (gamma > lo) - (gamma > hi)
        return alpha * q * (q - 1) + bi * (q - 1) + ci

    # -- group enumeration ----------------------------------------------------

    def iter_group(self, start: int = 0, stop: Optional[int] = None) -> Iterator[Permutation]:
        """Stream group permutations in enumeration order (no storage)."""
        stop = self.group_order if stop is None else stop
        for rank in range(start, stop):
            yield self.perm_of(self.from_triple(*self.triple_of_rank(rank)))

    def enumerate_group(self) -> GroupTable:
        if self.q > MATERIALIZE_MAX_Q:
            raise ValueError(
                f"refusing to materialize PGL(2,{self.q}) ({self.group_order} "
                f"permutations); stream with iter_group or group_image_batches")
        return GroupTable(self.q, tuple(self.iter_group()))

    # -- vectorized enumeration ----------------------------------------------

    def _triples_of_ranks(self, ranks: np.ndarray):
        q = self.q
        alpha, rem = np.divmod(ranks.astype(np.int64), q * (q - 1))
        bi, ci = np.divmod(rem, q - 1)
        beta = bi + (bi >= alpha)
        lo = np.minimum(alpha, beta)
        hi = np.maximum(alpha, beta)
        gamma = ci + (ci >= lo)
        gamma += gamma >= hi
        return alpha, beta, gamma

    def _coeffs_of_triples(self, alpha, beta, gamma):
        """Position-space matrix entries of the maps for a triple batch."""
        q = self.q
        addp, mulp, negp = self.add_pos, self.mul_pos, self.neg_pos

        def subp(u, v):
            return addp[u, negp[v]]

        # Clamp infinity (value q) before table indexing; masks pick the
        # right branch afterwards.
        af = np.minimum(alpha, q - 1)
        bf = np.minimum(beta, q - 1)
        gm = np.minimum(gamma, q - 1)
        is_a = alpha == q
        is_b = beta == q
        is_g = gamma == q

        ba = subp(bf, af)
        gb = subp(gm, bf)
        a = mulp[gm, ba]
        b = mulp[af, gb]
        c = ba
        d = gb

        one = np.ones_like(a)
        zero = np.zeros_like(a)
        neg_one = np.full_like(a, self.neg_pos[1])

        a = np.where(is_a | is_b, gm, np.where(is_g, ba, a))
        b = np.where(is_a, subp(bf, gm), np.where(is_b, negp[af], np.where(is_g, af, b)))
        c = np.where(is_a | is_b, one, np.where(is_g, zero, c))
        d = np.where(is_a, zero, np.where(is_b, neg_one, np.where(is_g, one, d)))
        return a, b, c, d

    def _images_of_coeffs(self, a, b, c, d) -> np.ndarray:
        """Image arrays (batch, q+1) of the maps given by position coefficients."""
        q = self.q
        addp, mulp = self.add_pos, self.mul_pos
        inv_safe = self.inv_pos

        xs = np.arange(q, dtype=np.int64)
        num = addp[mulp[a[:, None], xs[None, :]], b[:, None]]
        den = addp[mulp[c[:, None], xs[None, :]], d[:, None]]
        pole = den == 0
        finite = mulp[num, inv_safe[den]]
        images = np.where(pole, q, finite)

        c_zero = c == 0
        inf_img = np.where(c_zero, q, mulp[a, inv_safe[np.where(c_zero, 1, c)]])
        return np.concatenate([images, inf_img[:, None]], axis=1).astype(np.int16)

    def group_image_batches(self, start: int = 0, stop: Optional[int] = None,
                            batch_size: int = 1 << 16):
        """Yield (first_rank, images) blocks covering ranks [start, stop).

        images has shape (block, q+1) and row k is the permutation of rank
        first_rank + k; identical to iter_group output in the same order.
        """
        stop = self.group_order if stop is None else stop
        for r0 in range(start, stop, batch_size):
            ranks = np.arange(r0, min(r0 + batch_size, stop), dtype=np.int64)
            coeffs = self._coeffs_of_triples(*self._triples_of_ranks(ranks))
            yield r0, self._images_of_coeffs(*coeffs)

    def group_images(self) -> np.ndarray:
        """All group permutations as one (q^3-q, q+1) int16 array (small q)."""
        if self.q > MATERIALIZE_MAX_Q:
            raise ValueError(f"group image array too large for q={self.q}")
        blocks = [imgs for _, imgs in self.group_image_batches()]
        return np.concatenate(blocks, axis=0)
