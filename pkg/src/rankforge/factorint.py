"""Integer factorization: trial division, Brent's rho, Miller-Rabin.

Discriminants of record curves reach ~10^25, so factoring |delta| is the
bottleneck of conductor computation.  Trial division clears primes up to 10^6;
the surviving cofactors are either prime (Miller-Rabin certifies) or split by
Brent's cycle-finding rho within a configurable iteration budget.  A budget
exhaustion is never silent: IncompleteFactorization carries the partial result.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import gmpy2

TRIAL_BOUND = 10 ** 6
DEFAULT_RHO_BUDGET = 10 ** 8

# Deterministic Miller-Rabin witness set below this bound (first 13 primes).
_MR_DETERMINISTIC_BOUND = 33 * 10 ** 23
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)

_small_primes_cache: list[int] | None = None


def small_primes(bound: int = TRIAL_BOUND) -> list[int]:
    """Primes below bound via a plain sieve (cached for the default bound)."""
    global _small_primes_cache
    if bound == TRIAL_BOUND and _small_primes_cache is not None:
        return _small_primes_cache
    import numpy as np

    sieve = np.ones(bound, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(bound ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = [int(p) for p in np.nonzero(sieve)[0]]
    if bound == TRIAL_BOUND:
        _small_primes_cache = primes
    return primes


def is_probable_prime(n: int, rng: random.Random | None = None) -> bool:
    """Miller-Rabin; deterministic below 3.3e24, else 64 random bases."""
    n = int(n)
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1

    def witness(a: int) -> bool:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            return False
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                return False
        return True

    if n < _MR_DETERMINISTIC_BOUND:
        bases = _MR_BASES
    else:
        rng = rng or random.Random(0xEC)
        bases = [rng.randrange(2, n - 1) for _ in range(64)]
    return not any(witness(a % n) for a in bases if a % n not in (0,))


@dataclass
class Factorization:
    """Prime-exponent pairs plus an optional unfactored composite cofactor."""

    factors: list[tuple[int, int]] = field(default_factory=list)
    cofactor: int = 1
    sign: int = 1

    def is_complete(self) -> bool:
        return self.cofactor == 1

    def value(self) -> int:
        n = self.sign
        for p, e in self.factors:
            n *= p ** e
        return n * self.cofactor

    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def __str__(self):
        parts = [f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors]
        if self.cofactor != 1:
            parts.append(f"C{self.cofactor}")
        sign = "-" if self.sign < 0 else ""
        return sign + (" * ".join(parts) if parts else "1")


class IncompleteFactorization(ArithmeticError):
    """Budget ran out; .partial holds what was established so far."""

    def __init__(self, partial: Factorization):
        self.partial = partial
        super().__init__(f"unfactored cofactor {partial.cofactor}")


def _brent_rho(n: int, rng: random.Random, budget: int) -> tuple[int | None, int]:
    """One Brent-rho attempt on composite n; returns (factor or None, iterations used)."""
    m = gmpy2.mpz(n)
    y = gmpy2.mpz(rng.randrange(1, n))
    c = gmpy2.mpz(rng.randrange(1, n))
    g, r, q = gmpy2.mpz(1), 1, gmpy2.mpz(1)
    batch = 128
    used = 0
    while g == 1 and used < budget:
        x = y
        for _ in range(r):
            y = (y * y + c) % m
        k = 0
        while k < r and g == 1:
            ys = y
            cnt = min(batch, r - k, budget - used)
            if cnt <= 0:
                break
            for _ in range(cnt):
                y = (y * y + c) % m
                q = q * abs(x - y) % m
            g = gmpy2.gcd(q, m)
            k += cnt
            used += cnt
        r *= 2
    if g == m:
        # Backtrack one-by-one.
        g = gmpy2.mpz(1)
        while g == 1:
            ys = (ys * ys + c) % m
            g = gmpy2.gcd(abs(x - ys), m)
    if 1 < g < m:
        return int(g), used
    return None, used


def factor(n: int, budget: int = DEFAULT_RHO_BUDGET, trial_bound: int = TRIAL_BOUND) -> Factorization:
    """Factor n (sign preserved).  Raises IncompleteFactorization on budget exhaustion."""
    if n == 0:
        raise ValueError("cannot factor 0")
    sign = -1 if n < 0 else 1
    n = abs(n)
    out = Factorization(sign=sign)
    if n == 1:
        return out
    for p in small_primes(trial_bound):
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.factors.append((p, e))
    if n == 1:
        return out
    rng = random.Random(n & 0xFFFFFFFF)
    stack = [n]
    remaining = budget
    leftovers = 1
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_probable_prime(m):
            _accumulate(out.factors, m)
            continue
        # Perfect powers trip up rho; peel them first.
        root, k = _perfect_power(m)
        if k > 1:
            stack.extend([root] * k)
            continue
        d = None
        while d is None and remaining > 0:
            d, used = _brent_rho(m, rng, min(remaining, 10 ** 7))
            remaining -= used
        if d is None:
            leftovers *= m
            continue
        stack.append(d)
        stack.append(m // d)
    out.factors.sort()
    if leftovers != 1:
        out.cofactor = leftovers
        raise IncompleteFactorization(out)
    return out


def _accumulate(factors: list[tuple[int, int]], p: int):
    for i, (q, e) in enumerate(factors):
        if q == p:
            factors[i] = (q, e + 1)
            return
    factors.append((p, 1))


def _perfect_power(n: int) -> tuple[int, int]:
    """(root, k) with root^k = n and k maximal (k = 1 if n is not a power)."""
    m = gmpy2.mpz(n)
    for k in range(int(gmpy2.mpz(n).bit_length()), 1, -1):
        root, exact = gmpy2.iroot(m, k)
        if exact:
            return int(root), k
    return n, 1


def factor_for_scaling(g: int) -> list[int]:
    """Primes of g, tolerating an unfactorable cofactor.

    Used for model-minimality scaling, where a prime only matters when its
    fourth power divides c4; a cofactor surviving the default budget would
    need invariants beyond ~10^28, far outside anything the searches produce.
    """
    g = abs(g)
    if g <= 1:
        return []
    try:
        return factor(g).primes()
    except IncompleteFactorization as exc:
        return exc.partial.primes()
