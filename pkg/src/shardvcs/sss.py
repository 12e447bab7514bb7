"""Threshold secret sharing over GF(256), applied byte-wise to secrets of any length.

Uses the Rijndael reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B), so each
share carries one y-coordinate byte per secret byte and shares stay exactly as
long as the secret. Shares are 1-indexed; x = 0 would evaluate the polynomial
to the secret itself and is never issued.

    shares = split(secret, ThresholdParams(k=2, n=3), rng)
    assert combine(shares[:2]) == secret

`combine` interpolates with exactly the shares it is given. It cannot detect a
forged payload at a valid index; integrity is the job of the authenticated
encryption layer above.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

_SYSTEM_RNG = random.SystemRandom()

# GF(256) exp/log tables over generator 3.
_EXP = [0] * 512
_LOG = [0] * 256


def _mul_no_tables(a: int, b: int) -> int:
    # Russian-peasant multiply with 0x11B reduction; only used to build tables.
    p = 0
    for _ in range(8):
        if b & 1:
            p ^= a
        carry = a & 0x80
        a = (a << 1) & 0xFF
        if carry:
            a ^= 0x1B
        b >>= 1
    return p


def _build_tables() -> None:
    x = 1
    for i in range(255):
        _EXP[i] = x
        _LOG[x] = i
        x = _mul_no_tables(x, 3)
    for i in range(255, 512):
        _EXP[i] = _EXP[i - 255]


_build_tables()


def gf_mul(a: int, b: int) -> int:
    """Product of two field elements in GF(256) reduced by 0x11B."""
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return _EXP[255 - _LOG[a]]


class ReconstructionError(ValueError):
    """Too few shares to interpolate the secret uniquely."""


@dataclass(frozen=True)
class ThresholdParams:
    """(k, n): any k of the n issued shares reconstruct the secret."""

    k: int
    n: int

    def __post_init__(self) -> None:
        if not (1 <= self.k <= self.n <= 255):
            raise ValueError(f"invalid threshold params: need 1 <= k <= n <= 255, got ({self.k}, {self.n})")


DEFAULT_PARAMS = ThresholdParams(k=2, n=3)


@dataclass(frozen=True)
class Share:
    """One point set of the per-byte polynomials: x-coordinate plus y-bytes."""

    index: int
    payload: bytes

    def __post_init__(self) -> None:
        if not (1 <= self.index <= 255):
            raise ValueError(f"share index must be in 1..255, got {self.index}")
        if len(self.payload) == 0:
            raise ValueError("share payload must not be empty")

    def to_text(self) -> str:
        """Hex encoding: one index byte followed by the payload, no separators."""
        return bytes([self.index]).hex() + self.payload.hex()

    @classmethod
    def from_text(cls, text: str) -> "Share":
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise ValueError(f"share text is not valid hex: {text!r}") from exc
        if len(raw) < 2:
            raise ValueError("share text too short: need index byte plus payload")
        return cls(index=raw[0], payload=raw[1:])


def _eval_poly(coeffs: Sequence[int], x: int) -> int:
    # Horner's rule; coeffs[0] is the constant term.
    acc = 0
    for c in reversed(coeffs):
        acc = gf_mul(acc, x) ^ c
    return acc


def split(secret: bytes, params: ThresholdParams, rng: random.Random | None = None) -> list[Share]:
    """Split `secret` into n shares, any k of which reconstruct it.

    For each secret byte a fresh degree-(k-1) polynomial is drawn with that
    byte as constant term and k-1 coefficients from `rng`, then evaluated at
    x = 1..n. A seeded `rng` makes the output deterministic.
    """
    if len(secret) == 0:
        raise ValueError("cannot split an empty secret")
    if rng is None:
        rng = _SYSTEM_RNG

    payloads = [bytearray(len(secret)) for _ in range(params.n)]
    for pos, byte in enumerate(secret):
        coeffs = [byte] + [rng.randrange(256) for _ in range(params.k - 1)]
        for i in range(params.n):
            payloads[i][pos] = _eval_poly(coeffs, i + 1)
    return [Share(index=i + 1, payload=bytes(payloads[i])) for i in range(params.n)]


def combine(shares: Sequence[Share], threshold: int | None = None) -> bytes:
    """Reconstruct the secret by Lagrange interpolation at x = 0, byte-wise.

    Interpolation is exact when at least k shares of a (k, n) split are given;
    passing `threshold` lets callers enforce that precondition (fewer shares
    raise ReconstructionError instead of yielding a silently wrong secret).
    """
    if len(shares) == 0:
        raise ReconstructionError("no shares given")
    if threshold is not None and len(shares) < threshold:
        raise ReconstructionError(
            f"{len(shares)} share(s) cannot reconstruct a threshold-{threshold} secret"
        )
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate share indices: {sorted(indices)}")
    length = len(shares[0].payload)
    if any(len(s.payload) != length for s in shares):
        raise ValueError("shares have mismatched payload lengths")

    # Lagrange basis at x = 0: l_i = prod_{j != i} x_j / (x_i + x_j), in GF(256).
    weights = []
    for i, xi in enumerate(indices):
        num, den = 1, 1
        for j, xj in enumerate(indices):
            if i == j:
                continue
            num = gf_mul(num, xj)
            den = gf_mul(den, xi ^ xj)
        weights.append(gf_mul(num, gf_inv(den)))

    secret = bytearray(length)
    for pos in range(length):
        acc = 0
        for w, share in zip(weights, shares):
            acc ^= gf_mul(w, share.payload[pos])
        secret[pos] = acc
    return bytes(secret)
