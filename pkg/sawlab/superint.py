"""Gaussian superintegrals over a finite set of M sites.

A form is a finite sum of terms: a complex coefficient, a monomial in the boson fields phi_x and
phibar_x, and an ordered product of distinct fermion generators. Generators are numbered
psi_x = 2x and psibar_x = 2x + 1 and a product is stored as a bitmask in ascending order, so
bringing two products together costs the parity of the number of crossings.

The superexpectation of F is computed by expanding exp(-psi A psibar) F, keeping the top fermion
degree, and reducing the boson polynomial by Wick's rule (permanents of the covariance C = A^-1).
The normalisation is the one for which the integral of 1 is 1.
"""
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from sawlab.config import config_db
from sawlab.errors import CapExceeded
from sawlab.report import CheckReport, residual_report

logger = logging.getLogger(__name__)

SUPERINT_CAP = config_db.defaults_db["sawlab"]["superint_cap"]
TOLERANCE = 1e-9

Key = Tuple[int, Tuple[int, ...]]
Scalar = Union[int, float, complex]


def _crossing_sign(left: int, right: int) -> int:
    """Sign of rewriting psi^left psi^right in ascending order."""
    crossings = 0
    rest = right
    while rest:
        low = rest & -rest
        crossings += bin(left >> low.bit_length()).count("1")
        rest ^= low
    return -1 if crossings % 2 else 1


def _bits(mask: int) -> List[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


@dataclass(frozen=True)
class Form:
    M: int
    terms: Mapping[Key, complex]

    # ------------------------------------------------------------------
    # generators

    @staticmethod
    def _single(M: int, mask: int, exponents: Dict[int, int], coefficient: Scalar = 1) -> "Form":
        bosons = [0] * (2 * M)
        for index, power in exponents.items():
            bosons[index] += power
        return Form(M, {(mask, tuple(bosons)): complex(coefficient)})

    @staticmethod
    def constant(M: int, value: Scalar = 1) -> "Form":
        return Form._single(M, 0, {}, value) if value else Form(M, {})

    @staticmethod
    def phi(M: int, x: int) -> "Form":
        return Form._single(M, 0, {2 * x: 1})

    @staticmethod
    def phibar(M: int, x: int) -> "Form":
        return Form._single(M, 0, {2 * x + 1: 1})

    @staticmethod
    def psi(M: int, x: int) -> "Form":
        return Form._single(M, 1 << (2 * x), {})

    @staticmethod
    def psibar(M: int, x: int) -> "Form":
        return Form._single(M, 1 << (2 * x + 1), {})

    @staticmethod
    def tau(M: int, x: int) -> "Form":
        """phi_x phibar_x + psi_x psibar_x."""
        return Form.phi(M, x) * Form.phibar(M, x) + Form.psi(M, x) * Form.psibar(M, x)

    # ------------------------------------------------------------------
    # algebra

    def _check(self, other: "Form") -> None:
        if other.M != self.M:
            raise ValueError("Forms live on different site sets", (self.M, other.M))

    def _lift(self, other) -> "Form":
        if isinstance(other, Form):
            self._check(other)
            return other
        return Form.constant(self.M, other)

    def __add__(self, other) -> "Form":
        other = self._lift(other)
        terms: Dict[Key, complex] = defaultdict(complex, self.terms)
        for key, value in other.terms.items():
            terms[key] += value
        return Form(self.M, {k: v for k, v in terms.items() if v != 0})

    __radd__ = __add__

    def __neg__(self) -> "Form":
        return Form(self.M, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other) -> "Form":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Form":
        return self._lift(other) - self

    def __mul__(self, other) -> "Form":
        if not isinstance(other, Form):
            return Form(self.M, {k: v * other for k, v in self.terms.items() if v * other != 0})
        self._check(other)
        terms: Dict[Key, complex] = defaultdict(complex)
        for (mask_a, bosons_a), value_a in self.terms.items():
            for (mask_b, bosons_b), value_b in other.terms.items():
                if mask_a & mask_b:
                    continue
                sign = _crossing_sign(mask_a, mask_b)
                bosons = tuple(p + q for p, q in zip(bosons_a, bosons_b))
                terms[(mask_a | mask_b, bosons)] += sign * value_a * value_b
        return Form(self.M, {k: v for k, v in terms.items() if v != 0})

    def __rmul__(self, other) -> "Form":
        return self * other

    def __pow__(self, exponent: int) -> "Form":
        result = Form.constant(self.M, 1)
        for _ in range(exponent):
            result = result * self
        return result

    def derivative_phi(self, x: int) -> "Form":
        """d/dphi_x, with phi_x and phibar_x independent."""
        index = 2 * x
        terms: Dict[Key, complex] = defaultdict(complex)
        for (mask, bosons), value in self.terms.items():
            power = bosons[index]
            if power:
                lowered = bosons[:index] + (power - 1,) + bosons[index + 1:]
                terms[(mask, lowered)] += power * value
        return Form(self.M, {k: v for k, v in terms.items() if v != 0})

    # ------------------------------------------------------------------
    # inspection

    def is_even(self) -> bool:
        return all(bin(mask).count("1") % 2 == 0 for mask, _ in self.terms)

    def is_close(self, other: "Form", tolerance: float = TOLERANCE) -> bool:
        difference = self - other
        return all(abs(v) < tolerance for v in difference.terms.values())

    def top_part(self) -> Dict[Tuple[int, ...], complex]:
        """Boson polynomial multiplying psi_1 psibar_1 ... psi_M psibar_M."""
        full = (1 << (2 * self.M)) - 1
        return {bosons: value for (mask, bosons), value in self.terms.items() if mask == full}


# ---------------------------------------------------------------------------
# Covariances


@dataclass(frozen=True)
class CovarianceMatrix:
    C: np.ndarray
    A: np.ndarray

    @property
    def M(self) -> int:
        return self.C.shape[0]


def covariance_from(C: Sequence[Sequence[complex]], cap: int = SUPERINT_CAP) -> CovarianceMatrix:
    """Validate C (square, positive Hermitian part) and pair it with A = C^-1."""
    C = np.array(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("Covariance must be a square matrix", C.shape)
    if C.shape[0] > cap:
        raise CapExceeded("Number of sites is above the superintegral cap", C.shape[0])
    hermitian_part = (C + C.conj().T) / 2
    if np.linalg.eigvalsh(hermitian_part).min() <= 0:
        raise ValueError("Covariance needs a positive Hermitian part", C.tolist())
    return CovarianceMatrix(C=C, A=np.linalg.inv(C))


def random_covariance(M: int, seed: int, cap: int = SUPERINT_CAP) -> CovarianceMatrix:
    """C = I + 0.3 K / ||K||_2 for a seeded complex Gaussian K."""
    if M < 1:
        raise ValueError("Need at least one site", M)
    rng = np.random.default_rng(seed)
    while True:
        K = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        C = np.eye(M) + 0.3 * K / np.linalg.norm(K, 2)
        if np.linalg.eigvalsh((C + C.conj().T) / 2).min() > 0:
            return covariance_from(C, cap)
        logger.debug("Resampling covariance for seed %d", seed)


# ---------------------------------------------------------------------------
# Wick's rule


def permanent(B: np.ndarray) -> complex:
    """Ryser's formula."""
    n = B.shape[0]
    if n == 0:
        return 1 + 0j
    total = 0j
    for size in range(1, n + 1):
        for columns in itertools.combinations(range(n), size):
            row_sums = B[:, list(columns)].sum(axis=1)
            total += (-1) ** size * complex(np.prod(row_sums))
    return (-1) ** n * total


def naive_permanent(B: np.ndarray) -> complex:
    n = B.shape[0]
    return sum((complex(np.prod([B[i, s[i]] for i in range(n)])) for s in itertools.permutations(range(n))), 0j)


def wick_permanent(C: np.ndarray, xs: Sequence[int], ys: Sequence[int]) -> complex:
    """E_C[phibar_x1 .. phibar_xk phi_y1 .. phi_yk] = perm C[xs, ys] for distinct indices."""
    C = np.asarray(C, dtype=complex)
    if len(xs) != len(ys):
        raise ValueError("Wick pairing needs as many phibar as phi", (list(xs), list(ys)))
    if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
        raise ValueError("Indices must be distinct", (list(xs), list(ys)))
    B = C[np.ix_(list(xs), list(ys))]
    value = permanent(B)
    if len(xs) <= 4:
        oracle = naive_permanent(B)
        if abs(value - oracle) > TOLERANCE * max(1.0, abs(oracle)):
            raise ArithmeticError("Permanent evaluations disagree", (value, oracle))
    return value


def boson_moment(C: np.ndarray, bosons: Tuple[int, ...]) -> complex:
    """E_C of a boson monomial; repeated fields repeat rows and columns."""
    rows = [x for x in range(len(bosons) // 2) for _ in range(bosons[2 * x + 1])]
    cols = [x for x in range(len(bosons) // 2) for _ in range(bosons[2 * x])]
    if len(rows) != len(cols):
        return 0j
    return permanent(C[np.ix_(rows, cols)]) if rows else 1 + 0j


def fermion_exponential(A: np.ndarray) -> Form:
    """exp(-psi A psibar) = prod_{x,y} (1 - A_xy psi_x psibar_y)."""
    M = A.shape[0]
    result = Form.constant(M, 1)
    for x in range(M):
        for y in range(M):
            if A[x, y] != 0:
                result = result * (1 - complex(A[x, y]) * Form.psi(M, x) * Form.psibar(M, y))
    return result


def superexpectation(cov: CovarianceMatrix, F: Form) -> complex:
    """int exp(-S_A) F with S_A = phi A phibar + psi A psibar."""
    if F.M != cov.M:
        raise ValueError("Form and covariance have different sizes", (F.M, cov.M))
    top = (fermion_exponential(cov.A) * F).top_part()
    total = sum((value * boson_moment(cov.C, bosons) for bosons, value in top.items()), 0j)
    return total * (-1) ** cov.M / complex(np.linalg.det(cov.A))


# ---------------------------------------------------------------------------
# Checks


def _inputs(cov: CovarianceMatrix, **extra) -> Dict[str, object]:
    return dict(M=cov.M, **extra)


def norm_check(cov: CovarianceMatrix) -> CheckReport:
    value = superexpectation(cov, Form.constant(cov.M, 1))
    return residual_report("grassmann.norm", _inputs(cov), abs(value - 1), TOLERANCE, value=str(value))


def wick_check(cov: CovarianceMatrix) -> CheckReport:
    """Engine expectation of phibar_x1..phibar_xk phi_y1..phi_yk against the permanent, k <= min(M, 3)."""
    worst = 0.0
    M = cov.M
    for k in range(1, min(M, 3) + 1):
        xs, ys = list(range(k)), list(range(M - 1, M - 1 - k, -1))
        F = Form.constant(M, 1)
        for x in xs:
            F = F * Form.phibar(M, x)
        for y in ys:
            F = F * Form.phi(M, y)
        worst = max(worst, abs(superexpectation(cov, F) - wick_permanent(cov.C, xs, ys)))
    return residual_report("grassmann.wick", _inputs(cov), worst, TOLERANCE)


def integration_by_parts_check(cov: CovarianceMatrix, a: int, F: Form) -> CheckReport:
    """int exp(-S_A) phibar_a F = sum_x C_ax int exp(-S_A) dF/dphi_x."""
    lhs = superexpectation(cov, Form.phibar(cov.M, a) * F)
    rhs = sum((complex(cov.C[a, x]) * superexpectation(cov, F.derivative_phi(x)) for x in range(cov.M)), 0j)
    return residual_report("grassmann.ibp", _inputs(cov, a=a), abs(lhs - rhs), TOLERANCE, lhs=str(lhs), rhs=str(rhs))


def self_avoiding_sum(C: np.ndarray, a: int, b: int, sites: Iterable[int]) -> complex:
    """sum over sequences (a, x_1, .., x_{n-1}, b) of distinct x_i in ``sites`` of prod C along the walk."""
    sites = list(sites)
    total = 0j
    for size in range(len(sites) + 1):
        for middle in itertools.permutations(sites, size):
            path = (a,) + middle + (b,)
            total += complex(np.prod([C[path[i], path[i + 1]] for i in range(len(path) - 1)]))
    return total


def saw_representation_check(cov: CovarianceMatrix, a: int, b: int) -> CheckReport:
    """sum_{walks a -> b} C^w = int exp(-S_A) phibar_a phi_b prod_{x != a, b} (1 + tau_x)."""
    M = cov.M
    if a == b:
        raise ValueError("Endpoints must differ", a)
    others = [x for x in range(M) if x not in (a, b)]
    lhs = self_avoiding_sum(cov.C, a, b, others)
    F = Form.phibar(M, a) * Form.phi(M, b)
    for x in others:
        F = F * (1 + Form.tau(M, x))
    rhs = superexpectation(cov, F)
    return residual_report("grassmann.repsaw", _inputs(cov, a=a, b=b), abs(lhs - rhs), TOLERANCE,
                           lhs=str(lhs), rhs=str(rhs))


@dataclass(frozen=True)
class LoopExpansion:
    wick: complex
    combinatorial: complex


def loop_model_expansion(C: np.ndarray, a: int, b: int, X: Sequence[int]) -> LoopExpansion:
    """E_C[phibar_a phi_b prod_{x in X} (1 + phi_x phibar_x)], by Wick and as walks in a background of loops."""
    C = np.asarray(C, dtype=complex)
    X = list(X)
    if a in X or b in X:
        raise ValueError("Loop sites must avoid the endpoints", X)
    wick = 0j
    combinatorial = 0j
    for size in range(len(X) + 1):
        for Z in itertools.combinations(X, size):
            wick += permanent(C[np.ix_([a] + list(Z), [b] + list(Z))])
            for walk_size in range(size + 1):
                for middle in itertools.permutations(Z, walk_size):
                    path = (a,) + middle + (b,)
                    weight = complex(np.prod([C[path[i], path[i + 1]] for i in range(len(path) - 1)]))
                    rest = [z for z in Z if z not in middle]
                    loops = sum((complex(np.prod([C[z, image] for z, image in zip(rest, sigma)]))
                                 for sigma in itertools.permutations(rest)), 0j)
                    combinatorial += weight * loops
    return LoopExpansion(wick=wick, combinatorial=combinatorial)


def loop_model_check(cov: CovarianceMatrix, a: int, b: int, X: Sequence[int]) -> CheckReport:
    expansion = loop_model_expansion(cov.C, a, b, X)
    return residual_report("grassmann.loops", _inputs(cov, a=a, b=b, X=",".join(map(str, X))),
                           abs(expansion.wick - expansion.combinatorial), TOLERANCE, wick=str(expansion.wick))


def determinant_identity_check(cov: CovarianceMatrix) -> CheckReport:
    """Top coefficient of (psi A psibar)^M is M! det A in the order psi_1 psibar_1 .. psi_M psibar_M,
    i.e. M! (-1)^M det A against psibar_1 psi_1 .. psibar_M psi_M."""
    M = cov.M
    quadratic = Form.constant(M, 0)
    for x in range(M):
        for y in range(M):
            quadratic = quadratic + complex(cov.A[x, y]) * Form.psi(M, x) * Form.psibar(M, y)
    top = (quadratic ** M).top_part()
    value = top.get((0,) * (2 * M), 0j)
    expected = math.factorial(M) * complex(np.linalg.det(cov.A))
    scale = max(1.0, abs(expected))
    return residual_report("grassmann.determinant", _inputs(cov), abs(value - expected) / scale, TOLERANCE,
                           reversed_order=str((-1) ** M * value))


def tau_polynomial(M: int, polynomial: Mapping[Tuple[int, ...], Scalar]) -> Form:
    """sum_e c_e prod_x tau_x^{e_x}."""
    F = Form.constant(M, 0)
    for exponents, coefficient in polynomial.items():
        if len(exponents) != M:
            raise ValueError("Exponent tuple needs one entry per site", exponents)
        term = Form.constant(M, coefficient)
        for x, power in enumerate(exponents):
            term = term * Form.tau(M, x) ** power
        F = F + term
    return F


def tau_localisation_check(cov: CovarianceMatrix, polynomial: Mapping[Tuple[int, ...], Scalar]) -> CheckReport:
    """int exp(-S_A) F(tau) = F(0) for polynomial F."""
    value = superexpectation(cov, tau_polynomial(cov.M, polynomial))
    at_zero = complex(polynomial.get((0,) * cov.M, 0))
    return residual_report("grassmann.tau", _inputs(cov), abs(value - at_zero), TOLERANCE, value=str(value))
