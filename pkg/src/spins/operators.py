"""Operator algebra for N spin-1/2 particles.

Two bases are supported. FULL is the 2^N product basis with site 0 as the
most significant qubit and bit value 0 meaning spin up (S_z = +1/2). DICKE is
the (N+1)-dimensional J = N/2 multiplet ordered by m = N/2 ... -N/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.sparse as sparse
from scipy.special import gammaln

from src.core.errors import InputError, SizeGuardError
from src.core.settings import get_settings

HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-10


class Basis(str, Enum):
    FULL = "full"
    DICKE = "dicke"


def basis_dim(n: int, basis: Basis) -> int:
    return 2**n if basis is Basis.FULL else n + 1


def check_size(n: int, basis: Basis) -> None:
    if n < 1:
        raise InputError(f"spin count must be >= 1, got {n}")
    settings = get_settings()
    limit = settings.n_max if basis is Basis.FULL else settings.dicke_n_max
    if n > limit:
        raise SizeGuardError(f"n={n} exceeds the {basis.value} basis limit {limit}")


@dataclass(frozen=True)
class SpinAxis:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if abs(float(np.linalg.norm(self.vector)) - 1.0) > 1e-12:
            raise InputError(f"spin axis {self.vector.tolist()} is not a unit vector")

    @classmethod
    def of(cls, x: float, y: float, z: float) -> SpinAxis:
        norm = float(np.sqrt(x * x + y * y + z * z))
        if norm == 0.0:
            raise InputError("spin axis cannot be the zero vector")
        return cls(x / norm, y / norm, z / norm)

    @classmethod
    def named(cls, name: str) -> SpinAxis:
        sign = -1.0 if name.startswith("-") else 1.0
        label = name.lstrip("+-").lower()
        if label not in ("x", "y", "z"):
            raise InputError(f"unknown axis {name!r}")
        comps = [0.0, 0.0, 0.0]
        comps["xyz".index(label)] = sign
        return cls(*comps)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def __neg__(self) -> SpinAxis:
        return SpinAxis(-self.x, -self.y, -self.z)


X_AXIS = SpinAxis(1.0, 0.0, 0.0)
Y_AXIS = SpinAxis(0.0, 1.0, 0.0)
Z_AXIS = SpinAxis(0.0, 0.0, 1.0)

# spin-1/2 matrices, S = sigma/2
SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
ID2 = np.eye(2, dtype=complex)


def spin_matrix(axis: SpinAxis) -> np.ndarray:
    return axis.x * SX + axis.y * SY + axis.z * SZ


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    data: np.ndarray
    basis: Basis
    n: int

    # numpy scalars on the left defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        expected = basis_dim(self.n, self.basis)
        if self.data.shape != (expected, expected):
            raise InputError(
                f"{self.basis.value} operator for n={self.n} must be {expected}x{expected}, got {self.data.shape}"
            )

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @cached_property
    def hermiticity_error(self) -> float:
        scale = max(float(np.linalg.norm(self.data)), 1.0)
        return float(np.linalg.norm(self.data - self.data.conj().T)) / scale

    @property
    def is_hermitian(self) -> bool:
        return self.hermiticity_error < HERMITIAN_RTOL

    @cached_property
    def is_diagonal(self) -> bool:
        off = self.data - np.diag(np.diag(self.data))
        return not np.any(off)

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigen-decomposition, computed once per operator."""
        from scipy.linalg import eigh

        return eigh(self.data)

    def dagger(self) -> OperatorMatrix:
        return OperatorMatrix(self.data.conj().T, self.basis, self.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def _other(self, other: OperatorMatrix) -> np.ndarray:
        if not isinstance(other, OperatorMatrix):
            return NotImplemented  # type: ignore[return-value]
        if other.basis is not self.basis or other.n != self.n:
            raise InputError(f"basis mismatch: {self.basis.value}({self.n}) vs {other.basis.value}({other.n})")
        return other.data

    def __add__(self, other: OperatorMatrix) -> OperatorMatrix:
        return OperatorMatrix(self.data + self._other(other), self.basis, self.n)

    def __sub__(self, other: OperatorMatrix) -> OperatorMatrix:
        return OperatorMatrix(self.data - self._other(other), self.basis, self.n)

    def __matmul__(self, other: OperatorMatrix) -> OperatorMatrix:
        return OperatorMatrix(self.data @ self._other(other), self.basis, self.n)

    def __mul__(self, scalar: complex) -> OperatorMatrix:
        return OperatorMatrix(self.data * scalar, self.basis, self.n)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> OperatorMatrix:
        return OperatorMatrix(self.data / scalar, self.basis, self.n)

    def __neg__(self) -> OperatorMatrix:
        return OperatorMatrix(-self.data, self.basis, self.n)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis: Basis
    n: int

    def __post_init__(self) -> None:
        expected = basis_dim(self.n, self.basis)
        if self.amplitudes.shape != (expected,):
            raise InputError(f"{self.basis.value} state for n={self.n} must have {expected} amplitudes")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: StateVector) -> complex:
        if other.basis is not self.basis or other.n != self.n:
            raise InputError("basis mismatch in overlap")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def identity(n: int, basis: Basis) -> OperatorMatrix:
    return OperatorMatrix(np.eye(basis_dim(n, basis), dtype=complex), basis, n)


def zeros(n: int, basis: Basis) -> OperatorMatrix:
    dim = basis_dim(n, basis)
    return OperatorMatrix(np.zeros((dim, dim), dtype=complex), basis, n)


def _site_sparse(op2x2: np.ndarray, site: int, n: int) -> sparse.csr_matrix:
    left = sparse.identity(2**site, dtype=complex, format="csr")
    right = sparse.identity(2 ** (n - site - 1), dtype=complex, format="csr")
    return sparse.kron(sparse.kron(left, sparse.csr_matrix(op2x2)), right, format="csr")


def embed_single(op2x2: np.ndarray, site: int, n: int) -> OperatorMatrix:
    """1 x ... x op x ... x 1 with `op` on `site` (site 0 = most significant qubit)."""
    if not 0 <= site < n:
        raise InputError(f"site {site} out of range for n={n}")
    check_size(n, Basis.FULL)
    op = np.asarray(op2x2, dtype=complex)
    if op.shape != (2, 2):
        raise InputError("single-site operator must be 2x2")
    return OperatorMatrix(_site_sparse(op, site, n).toarray(), Basis.FULL, n)


def site_spin(axis: SpinAxis, site: int, n: int) -> OperatorMatrix:
    return embed_single(spin_matrix(axis), site, n)


def pair_sum(couplings: np.ndarray, op_a: np.ndarray, op_b: np.ndarray) -> OperatorMatrix:
    """sum_{l<j} c_lj (a_l b_j + b_l a_j)/2, built sparse and densified once."""
    n = couplings.shape[0]
    check_size(n, Basis.FULL)
    sites_a = [_site_sparse(op_a, k, n) for k in range(n)]
    sites_b = sites_a if op_b is op_a else [_site_sparse(op_b, k, n) for k in range(n)]
    total = sparse.csr_matrix((2**n, 2**n), dtype=complex)
    for l in range(n):
        for j in range(l + 1, n):
            c = couplings[l, j]
            if c == 0.0:
                continue
            if op_b is op_a:
                total = total + c * (sites_a[l] @ sites_a[j])
            else:
                total = total + 0.5 * c * (sites_a[l] @ sites_b[j] + sites_b[l] @ sites_a[j])
    return OperatorMatrix(total.toarray(), Basis.FULL, n)


def _dicke_m(n: int) -> np.ndarray:
    return n / 2.0 - np.arange(n + 1)


def _dicke_jplus(n: int) -> np.ndarray:
    j = n / 2.0
    m = _dicke_m(n)[1:]
    return np.diag(np.sqrt(j * (j + 1) - m * (m + 1)).astype(complex), k=1)


def collective_op(axis: SpinAxis, n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    """J_axis = sum_k S_axis^k."""
    check_size(n, basis)
    if basis is Basis.DICKE:
        jp = _dicke_jplus(n)
        jx = (jp + jp.conj().T) / 2
        jy = (jp - jp.conj().T) / 2j
        jz = np.diag(_dicke_m(n)).astype(complex)
        return OperatorMatrix(axis.x * jx + axis.y * jy + axis.z * jz, basis, n)
    op2 = spin_matrix(axis)
    total = sparse.csr_matrix((2**n, 2**n), dtype=complex)
    for site in range(n):
        total = total + _site_sparse(op2, site, n)
    return OperatorMatrix(total.toarray(), basis, n)


def jx(n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    return collective_op(X_AXIS, n, basis)


def jy(n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    return collective_op(Y_AXIS, n, basis)


def jz(n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    return collective_op(Z_AXIS, n, basis)


def jplus(n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    return jx(n, basis) + 1j * jy(n, basis)


def jminus(n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    return jx(n, basis) - 1j * jy(n, basis)


def j_squared(n: int, basis: Basis = Basis.FULL) -> OperatorMatrix:
    ops = [jx(n, basis), jy(n, basis), jz(n, basis)]
    return ops[0] @ ops[0] + ops[1] @ ops[1] + ops[2] @ ops[2]


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    counts = np.zeros(2**n, dtype=int)
    for bit in range(n):
        counts += (idx >> bit) & 1
    return counts


def dicke_isometry(n: int) -> np.ndarray:
    """Columns are the symmetric Dicke states in the FULL basis, m descending."""
    check_size(n, Basis.FULL)
    down = _popcounts(n)
    weights = np.exp(-0.5 * (gammaln(n + 1) - gammaln(down + 1) - gammaln(n - down + 1)))
    w = np.zeros((2**n, n + 1), dtype=complex)
    w[np.arange(2**n), down] = weights
    return w


def symmetric_projector(n: int) -> OperatorMatrix:
    """Orthogonal projector onto the J = N/2 multiplet, FULL basis."""
    w = dicke_isometry(n)
    return OperatorMatrix(w @ w.conj().T, Basis.FULL, n)


def dicke_restrict(op: OperatorMatrix) -> OperatorMatrix:
    """P op P written in the symmetric (Dicke) basis."""
    if op.basis is not Basis.FULL:
        raise InputError("dicke_restrict expects a FULL basis operator")
    w = dicke_isometry(op.n)
    return OperatorMatrix(w.conj().T @ op.data @ w, Basis.DICKE, op.n)


def dicke_lift(state: StateVector) -> StateVector:
    """Embed a DICKE state into the FULL basis."""
    if state.basis is not Basis.DICKE:
        raise InputError("dicke_lift expects a DICKE basis state")
    return StateVector(dicke_isometry(state.n) @ state.amplitudes, Basis.FULL, state.n)


def _single_spin_state(axis: SpinAxis) -> np.ndarray:
    theta = float(np.arccos(np.clip(axis.z, -1.0, 1.0)))
    phi = float(np.arctan2(axis.y, axis.x))
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def coherent_state(axis: SpinAxis, n: int, basis: Basis = Basis.FULL) -> StateVector:
    """Every spin polarized along `axis`: |+axis>^(x)N."""
    check_size(n, basis)
    up, down = _single_spin_state(axis)
    if basis is Basis.FULL:
        amps = np.ones(1, dtype=complex)
        single = np.array([up, down])
        for _ in range(n):
            amps = np.kron(amps, single)
        return StateVector(amps, basis, n)
    k = np.arange(n + 1)
    log_binom = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    with np.errstate(divide="ignore"):
        log_up = np.where(n - k > 0, (n - k) * np.log(abs(up)), 0.0)
        log_down = np.where(k > 0, k * np.log(abs(down)), 0.0)
    phase = np.exp(1j * ((n - k) * np.angle(up) + k * np.angle(down)))
    return StateVector(np.exp(log_binom + log_up + log_down) * phase, basis, n)


def basis_state(index: int, n: int, basis: Basis) -> StateVector:
    amps = np.zeros(basis_dim(n, basis), dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, basis, n)


def _check_observable(state: StateVector, op: OperatorMatrix) -> None:
    if state.basis is not op.basis or state.n != op.n:
        raise InputError(f"basis mismatch: state {state.basis.value}({state.n}) vs operator {op.basis.value}({op.n})")
    if not op.is_hermitian:
        raise InputError(f"observable is not Hermitian (relative error {op.hermiticity_error:.2e})")


def expectation(state: StateVector, op: OperatorMatrix) -> float:
    _check_observable(state, op)
    value = complex(np.vdot(state.amplitudes, op.data @ state.amplitudes))
    scale = max(1.0, abs(value))
    assert abs(value.imag) < NORM_TOL * scale, f"expectation has imaginary part {value.imag:.3e}"
    return value.real


def variance(state: StateVector, op: OperatorMatrix) -> float:
    _check_observable(state, op)
    applied = op.data @ state.amplitudes
    mean = float(np.vdot(state.amplitudes, applied).real)
    second = float(np.vdot(applied, applied).real)
    return max(second - mean * mean, 0.0)
