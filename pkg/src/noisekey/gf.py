"""GF(2^m) arithmetic via exponent/logarithm tables.

Tables are generated from a primitive polynomial by repeated multiplication
with the generator element alpha = x. Construction fails if the polynomial
does not generate the full multiplicative cycle of 2^m - 1 elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Conventional primitive polynomial per extension degree (integer bit encoding,
# e.g. 0x11D = x^8 + x^4 + x^3 + x^2 + 1). All are verified at table build time.
PRIMITIVE_POLYS = {
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """An instantiated GF(2^m): immutable, safe to share across threads."""

    m: int
    primitive_poly: int
    exp_table: np.ndarray = field(repr=False)
    log_table: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        """Number of field elements, 2^m."""
        return 1 << self.m

    @property
    def mul_order(self) -> int:
        """Size of the multiplicative group, 2^m - 1."""
        return (1 << self.m) - 1

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp_table[(self.log_table[a] + self.log_table[b]) % self.mul_order])

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by the zero element")
        if a == 0:
            return 0
        return int(self.exp_table[(self.log_table[a] - self.log_table[b]) % self.mul_order])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("the zero element has no inverse")
        return int(self.exp_table[(-self.log_table[a]) % self.mul_order])

    def pow_alpha(self, e: int) -> int:
        """alpha^e for any integer exponent (negative exponents wrap)."""
        return int(self.exp_table[e % self.mul_order])

    def mul_vec(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product of two symbol arrays (broadcasting allowed)."""
        a = np.asarray(a)
        b = np.asarray(b)
        out = self.exp_table[(self.log_table[a] + self.log_table[b]) % self.mul_order]
        return np.where((a == 0) | (b == 0), 0, out)

    def eval_poly_at_powers(self, coeffs, power_logs: np.ndarray) -> np.ndarray:
        """Evaluate a polynomial (ascending coefficients) at alpha^power_logs[i].

        Returns one field element per entry of power_logs. Vectorized over the
        evaluation points; the polynomial is assumed short next to the point set.
        """
        coeffs = np.asarray(coeffs)
        power_logs = np.asarray(power_logs)
        nz = np.nonzero(coeffs)[0]
        if len(nz) == 0:
            return np.zeros(len(power_logs), dtype=np.int64)
        coeff_logs = self.log_table[coeffs[nz]]
        expo = (coeff_logs[:, None] + nz[:, None] * power_logs[None, :]) % self.mul_order
        return np.bitwise_xor.reduce(self.exp_table[expo], axis=0)


def build_field(m: int, primitive_poly: int | None = None) -> FieldSpec:
    """Build exp/log tables for GF(2^m).

    Raises ValueError when the polynomial has the wrong degree or is not
    primitive (the generated cycle is shorter than 2^m - 1).
    """
    if not 2 <= m <= 16:
        raise ValueError(f"extension degree must be in 2..16, got {m}")
    if primitive_poly is None:
        primitive_poly = PRIMITIVE_POLYS[m]
    if primitive_poly.bit_length() != m + 1:
        raise ValueError(
            f"polynomial 0x{primitive_poly:X} does not have degree {m}"
        )
    q = 1 << m
    exp_table = np.zeros(q - 1, dtype=np.int64)
    log_table = np.zeros(q, dtype=np.int64)
    seen = bytearray(q)
    x = 1
    for i in range(q - 1):
        if seen[x]:
            raise ValueError(
                f"0x{primitive_poly:X} is not primitive: cycle shorter than {q - 1}"
            )
        seen[x] = 1
        exp_table[i] = x
        log_table[x] = i
        x <<= 1
        if x & q:
            x ^= primitive_poly
    if x != 1:
        raise ValueError(f"0x{primitive_poly:X} is not primitive: cycle does not close")
    exp_table.setflags(write=False)
    log_table.setflags(write=False)
    return FieldSpec(m=m, primitive_poly=primitive_poly, exp_table=exp_table, log_table=log_table)


def gf_add(a: int, b: int) -> int:
    """Field addition: bitwise XOR (its own inverse)."""
    return a ^ b


def gf_mul(fld: FieldSpec, a: int, b: int) -> int:
    """Field multiplication through the exp/log tables."""
    return fld.mul(a, b)


def gf_inv(fld: FieldSpec, a: int) -> int:
    """Multiplicative inverse; raises ZeroDivisionError for 0."""
    return fld.inv(a)
