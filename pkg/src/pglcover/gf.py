"""Arithmetic for the field tower GF(p) < GF(q) < GF(q^2).

Only the top field GF(q^2) is materialized; the middle field GF(q) is
realized as the fixed set of the q-power Frobenius inside it.  An element
with coefficient vector (a_0, ..., a_{2f-1}) over GF(p), low degree first,
is encoded as the integer sum(a_i * p^i), so indices and elements are in
bijection.  Multiplication, inversion and powering go through discrete
log / antilog tables built once per tower; addition is digit arithmetic
base p and never carries.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Optional

import numpy as np

# An element of GF(q^2) in the integer index encoding.
FieldElement = int

# Ceiling on q^2 = p^(2f); keeps every table a few MB at most.
MAX_FIELD_SIZE = 1 << 20


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_power(n: int) -> Optional[tuple[int, int]]:
    """Decompose n as p^f with p prime, or return None."""
    if n < 2:
        return None
    for p in range(2, int(math.isqrt(n)) + 1):
        if n % p == 0:
            f = 0
            m = n
            while m % p == 0:
                m //= p
                f += 1
            return (p, f) if m == 1 else None
    return (n, 1)


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors by trial division (n is small here)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# Polynomial arithmetic over GF(p), used only while bootstrapping the tables.
# Polynomials are lists of coefficients, low degree first.


def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mul_mod(a: list[int], b: list[int], red: tuple[int, ...], p: int) -> list[int]:
    """(a * b) mod (x^d + red(x)) over GF(p), inputs of degree < d = len(red)."""
    d = len(red)
    res = [0] * (2 * d - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                res[i + j] += ai * bj
    for k in range(2 * d - 2, d - 1, -1):
        c = res[k] % p
        if c:
            for i in range(d):
                res[k - d + i] -= c * red[i]
        res[k] = 0
    return [v % p for v in res[:d]]


def _poly_pow_mod(a: list[int], e: int, red: tuple[int, ...], p: int) -> list[int]:
    result = [1] + [0] * (len(red) - 1)
    base = list(a)
    while e:
        if e & 1:
            result = _poly_mul_mod(result, base, red, p)
        base = _poly_mul_mod(base, base, red, p)
        e >>= 1
    return result


def _poly_mod(a: list[int], m: list[int], p: int) -> list[int]:
    """a mod m over GF(p); m need not be monic."""
    a = _poly_trim([x % p for x in a])
    m = _poly_trim([x % p for x in m])
    inv_lead = pow(m[-1], p - 2, p) if p > 2 else m[-1]
    while len(a) >= len(m):
        c = (a[-1] * inv_lead) % p
        shift = len(a) - len(m)
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _poly_trim(a)
    return a


def _poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _poly_trim([x % p for x in a]), _poly_trim([x % p for x in b])
    while b:
        a, b = b, _poly_mod(a, b, p)
    return a


def is_irreducible(coeffs: tuple[int, ...], p: int) -> bool:
    """Irreducibility of a monic polynomial over GF(p).

    `coeffs` is the full coefficient tuple (a_0, ..., a_{d-1}, 1), low degree
    first.  Uses the x^(p^k) criterion: f of degree d is irreducible iff
    x^(p^d) == x mod f and gcd(x^(p^(d/r)) - x, f) = 1 for every prime r | d.
    """
    d = len(coeffs) - 1
    if d < 1 or coeffs[-1] != 1:
        raise ValueError("polynomial must be monic of degree >= 1")
    if d == 1:
        return True
    red = coeffs[:-1]
    x = [0, 1] + [0] * (d - 2)
    t = list(x)
    for _ in range(d):
        t = _poly_pow_mod(t, p, red, p)
    if _poly_trim(list(t)) != _poly_trim(list(x)):
        return False
    full = list(coeffs)
    for r in prime_factors(d):
        t = list(x)
        for _ in range(d // r):
            t = _poly_pow_mod(t, p, red, p)
        diff = [(ti - xi) % p for ti, xi in zip(t, x)]
        g = _poly_gcd(diff, full, p)
        if len(g) > 1:
            return False
    return True


def find_modulus(p: int, degree: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of the given degree.

    Coefficient tuples (a_0, ..., a_{d-1}) are compared low degree first,
    each coefficient as an integer, so the scan order is reproducible
    across platforms.
    """
    for lower in itertools.product(range(p), repeat=degree):
        coeffs = lower + (1,)
        if is_irreducible(coeffs, p):
            return coeffs
    raise RuntimeError(f"no irreducible polynomial of degree {degree} over GF({p})")


def _decode(z: int, p: int, width: int) -> list[int]:
    digits = []
    for _ in range(width):
        z, r = divmod(z, p)
        digits.append(r)
    return digits


def _encode(digits: Iterable[int], p: int) -> int:
    z = 0
    for d in reversed(list(digits)):
        z = z * p + d
    return z


# ---------------------------------------------------------------------------


class FieldTower:
    """GF(q^2) with log/antilog tables and GF(q) as the subfield test z^q == z.

    Instances are immutable after construction and safe to share across
    threads.  Use :func:`build_tower` instead of calling this directly.
    """

    def __init__(self, p: int, f: int, modulus: tuple[int, ...],
                 primitive: int, exp: np.ndarray, log: np.ndarray):
        self.p = p
        self.f = f
        self.q = p**f
        self.q2 = p**(2 * f)
        self.modulus = modulus
        self.primitive = primitive
        self.exp = exp          # exp[k] = primitive^k, k in [0, q^2-1)
        self.log = log          # log[z] for z != 0; log[0] is a dummy 0
        self._mult_order = self.q2 - 1
        self._minus_one = self.neg(1)
        self._subfield: Optional[np.ndarray] = None

    # -- ring operations ----------------------------------------------------

    def add(self, a: FieldElement, b: FieldElement) -> FieldElement:
        if self.p == 2:
            return a ^ b
        p = self.p
        out, scale = 0, 1
        while a or b:
            out += ((a % p + b % p) % p) * scale
            a //= p
            b //= p
            scale *= p
        return out

    def neg(self, a: FieldElement) -> FieldElement:
        if self.p == 2:
            return a
        p = self.p
        out, scale = 0, 1
        while a:
            out += ((p - a % p) % p) * scale
            a //= p
            scale *= p
        return out

    def sub(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return self.add(a, self.neg(b))

    def mul(self, a: FieldElement, b: FieldElement) -> FieldElement:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[(int(self.log[a]) + int(self.log[b])) % self._mult_order])

    def inv(self, a: FieldElement) -> FieldElement:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in GF(q^2)")
        return int(self.exp[(-int(self.log[a])) % self._mult_order])

    def div(self, a: FieldElement, b: FieldElement) -> FieldElement:
        return self.mul(a, self.inv(b))

    def pow(self, z: FieldElement, e: int) -> FieldElement:
        if z == 0:
            if e > 0:
                return 0
            if e == 0:
                return 1
            raise ZeroDivisionError("negative power of zero in GF(q^2)")
        return int(self.exp[(int(self.log[z]) * e) % self._mult_order])

    # -- structure queries ----------------------------------------------------

    @property
    def minus_one(self) -> FieldElement:
        return self._minus_one

    def element_order(self, z: FieldElement) -> int:
        """Exact multiplicative order of a nonzero element."""
        if z == 0:
            raise ValueError("zero has no multiplicative order")
        n = self._mult_order
        return n // math.gcd(n, int(self.log[z]))

    def norm(self, z: FieldElement) -> FieldElement:
        """Relative norm GF(q^2) -> GF(q), z -> z^(q+1)."""
        return self.pow(z, self.q + 1)

    def in_subfield(self, z: FieldElement) -> bool:
        """True iff z lies in GF(q), i.e. z^q == z."""
        return self.pow(z, self.q) == z

    def subfield_elements(self) -> np.ndarray:
        """The q elements of GF(q) in increasing index order."""
        if self._subfield is None:
            k = np.arange(self.q - 1, dtype=np.int64) * (self.q + 1)
            elems = np.concatenate(([0], self.exp[k]))
            elems.sort()
            self._subfield = elems.astype(np.int32)
            self._subfield.setflags(write=False)
        return self._subfield

    # -- presentation ----------------------------------------------------------

    def coeffs(self, z: FieldElement) -> tuple[int, ...]:
        """Coefficient vector over GF(p), low degree first."""
        return tuple(_decode(z, self.p, 2 * self.f))

    def element_str(self, z: FieldElement) -> str:
        terms = []
        for i, c in enumerate(self.coeffs(z)):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            elif i == 1:
                terms.append(f"{c}*x" if c != 1 else "x")
            else:
                terms.append(f"{c}*x^{i}" if c != 1 else f"x^{i}")
        return " + ".join(terms) if terms else "0"

    def summary(self) -> dict:
        """JSON-ready tower description."""
        base = canonical_base(self) if self.q % 2 == 1 else None
        return {
            "p": self.p,
            "f": self.f,
            "q": self.q,
            "field_size": self.q2,
            "modulus": list(self.modulus),
            "primitive_index": self.primitive,
            "base_index": base,
        }

    def __repr__(self) -> str:
        return f"FieldTower(p={self.p}, f={self.f}, q={self.q})"


def build_tower(p: int, f: int) -> FieldTower:
    """Build the canonical GF(p^(2f)) tower.

    The modulus is the lexicographically smallest monic irreducible of
    degree 2f over GF(p) and the primitive element is the one of smallest
    index, so two builds always agree bit for bit.
    """
    if not isinstance(p, int) or not is_prime(p):
        raise ValueError(f"p must be prime, got {p}")
    if not isinstance(f, int) or f < 1:
        raise ValueError(f"extension degree must be >= 1, got {f}")
    q2 = p**(2 * f)
    if q2 > MAX_FIELD_SIZE:
        raise ValueError(f"field size {q2} exceeds ceiling {MAX_FIELD_SIZE}")

    degree = 2 * f
    modulus = find_modulus(p, degree)
    red = modulus[:-1]
    n = q2 - 1

    primitive = None
    one = [1] + [0] * (degree - 1)
    cofactors = [n // r for r in prime_factors(n)]
    for z in range(2, q2):
        poly = _decode(z, p, degree)
        if all(_poly_pow_mod(poly, c, red, p) != one for c in cofactors):
            primitive = z
            break
    if primitive is None:
        raise RuntimeError("no primitive element found; modulus not irreducible?")

    exp = np.zeros(n, dtype=np.int32)
    log = np.zeros(q2, dtype=np.int32)
    gen = _decode(primitive, p, degree)
    cur = list(one)
    for k in range(n):
        idx = _encode(cur, p)
        exp[k] = idx
        log[idx] = k
        cur = _poly_mul_mod(cur, gen, red, p)
    if _encode(cur, p) != 1:
        raise RuntimeError("antilog table does not close; arithmetic is broken")
    if not np.array_equal(np.sort(exp), np.arange(1, q2)):
        raise RuntimeError("antilog table is not a bijection onto nonzero elements")
    exp.setflags(write=False)
    log.setflags(write=False)
    return FieldTower(p, f, modulus, primitive, exp, log)


def build_tower_for_q(q: int) -> FieldTower:
    """Build the tower for GF(q^2) given q itself."""
    pf = prime_power(q)
    if pf is None:
        raise ValueError(f"{q} is not a prime power")
    return build_tower(*pf)


# ---------------------------------------------------------------------------
# Canonical element of order 2(q+1): the seed of the norm-(-1) construction.


def elements_of_order(tower: FieldTower, order: int) -> list[FieldElement]:
    """All elements of the given multiplicative order, in index order."""
    n = tower.q2 - 1
    if order <= 0 or n % order:
        return []
    step = n // order
    idx = [int(tower.exp[step * j]) for j in range(order) if math.gcd(j, order) == 1]
    return sorted(idx)


def canonical_base(tower: FieldTower, selector: int = 0) -> FieldElement:
    """An element of order exactly 2(q+1); requires q odd.

    selector 0 picks the canonical choice primitive^((q^2-1)/(2(q+1)));
    selector k >= 1 picks the k-th admissible element in index order.
    Every valid choice has norm -1 and lies outside GF(q); both facts are
    certified here before the element is handed out.
    """
    q = tower.q
    if q % 2 == 0:
        raise ValueError("an element of order 2(q+1) requires q odd")
    target = 2 * (q + 1)
    n = tower.q2 - 1
    if selector == 0:
        z = int(tower.exp[n // target])
    else:
        admissible = elements_of_order(tower, target)
        if not 1 <= selector <= len(admissible):
            raise ValueError(
                f"selector {selector} out of range; {len(admissible)} elements of order {target}")
        z = admissible[selector - 1]
    if tower.element_order(z) != target:
        raise RuntimeError(f"element {z} does not have order {target}")
    if tower.norm(z) != tower.minus_one:
        raise RuntimeError(f"element {z} does not have norm -1")
    if tower.in_subfield(z):
        raise RuntimeError(f"element {z} unexpectedly lies in GF({q})")
    return z


# ---------------------------------------------------------------------------
# Vectorized arithmetic on index arrays, for table construction and scans.


def add_vec(tower: FieldTower, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if tower.p == 2:
        return a ^ b
    p = tower.p
    out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    scale = 1
    for _ in range(2 * tower.f):
        out += ((a // scale + b // scale) % p) * scale
        scale *= p
    return out


def neg_vec(tower: FieldTower, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    if tower.p == 2:
        return a.copy()
    p = tower.p
    out = np.zeros(a.shape, dtype=np.int64)
    scale = 1
    for _ in range(2 * tower.f):
        out += ((p - a // scale % p) % p) * scale
        scale *= p
    return out


def mul_vec(tower: FieldTower, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = tower.q2 - 1
    prod = tower.exp[(tower.log[a].astype(np.int64) + tower.log[b]) % n]
    return np.where((a == 0) | (b == 0), 0, prod)


def pow_vec(tower: FieldTower, a, e: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    n = tower.q2 - 1
    powered = tower.exp[(tower.log[a].astype(np.int64) * e) % n]
    return np.where(a == 0, 0 if e > 0 else 1, powered)
