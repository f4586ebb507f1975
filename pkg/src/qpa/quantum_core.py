"""Dense two-qubit state primitives.

Bell states are always ordered (phi+, psi-, psi+, phi-); the diagonal of a
density operator in that basis is the 4-vector (A, B, C, D) used throughout
the package.  Qubit 0 is the most significant bit of a basis index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NumericError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
SIMPLEX_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)

_S = 1 / np.sqrt(2)
# rows: |phi+>, |psi->, |psi+>, |phi->
BELL_BASIS = np.array(
    [
        [_S, 0, 0, _S],
        [0, _S, -_S, 0],
        [0, _S, _S, 0],
        [_S, 0, 0, -_S],
    ],
    dtype=complex,
)
BELL_LABELS = ("phi+", "psi-", "psi+", "phi-")


@dataclass(frozen=True)
class BellDiagonal:
    """Bell-basis diagonal (A, B, C, D) of a two-qubit state."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(v) for v in vals):
            raise DomainError(f"non-finite Bell weights {vals}")
        if min(vals) < -SIMPLEX_TOL:
            raise DomainError(f"negative Bell weight in {vals}")
        if abs(sum(vals) - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"Bell weights {vals} sum to {sum(vals)!r}, not 1")

    @classmethod
    def from_array(cls, arr: Iterable[float]) -> "BellDiagonal":
        a, b, c, d = (float(v) for v in arr)
        return cls(a, b, c, d)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=float)

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))

    def __getitem__(self, i):
        return (self.a, self.b, self.c, self.d)[i]

    def max(self) -> float:
        return max(self.a, self.b, self.c, self.d)


def as_bell_diagonal(bd) -> BellDiagonal:
    """Coerce a BellDiagonal or a length-4 sequence into a BellDiagonal."""
    if isinstance(bd, BellDiagonal):
        return bd
    arr = np.asarray(bd, dtype=float)
    if arr.shape != (4,):
        raise DomainError(f"expected 4 Bell weights, got shape {arr.shape}")
    return BellDiagonal.from_array(arr)


def werner(f: float) -> BellDiagonal:
    """Werner weights (f, (1-f)/3, (1-f)/3, (1-f)/3)."""
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"Werner fidelity {f} outside [0, 1]")
    r = (1.0 - f) / 3.0
    return BellDiagonal(f, r, r, r)


def bell_states() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (|phi+>, |psi->, |psi+>, |phi->) as complex amplitude vectors."""
    return tuple(v.copy() for v in BELL_BASIS)


def ket(bits: str) -> np.ndarray:
    """Computational basis state, e.g. ``ket("01")``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def check_density(rho, name: str = "rho") -> np.ndarray:
    """Validate a density matrix and return it as a complex ndarray.

    Raises DomainError if the matrix is not square with power-of-two
    dimension, Hermitian, unit trace and positive semidefinite.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError(f"{name} must be square, got shape {rho.shape}")
    dim = rho.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise DomainError(f"{name} dimension {dim} is not a power of two")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise DomainError(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise DomainError(f"{name} has trace {tr.real:.15g}, not 1")
    if np.linalg.eigvalsh(rho).min() < PSD_TOL:
        raise DomainError(f"{name} is not positive semidefinite")
    return rho


def _n_qubits(dim: int) -> int:
    return dim.bit_length() - 1


def bell_diagonal_to_density(bd) -> np.ndarray:
    """Return sum_k w_k |bell_k><bell_k| in the computational basis."""
    w = as_bell_diagonal(bd).as_array()
    return np.einsum("k,ki,kj->ij", w, BELL_BASIS, BELL_BASIS.conj())


def bell_coefficients(rho) -> np.ndarray:
    """Full 4x4 matrix of rho in the Bell basis (paper order)."""
    rho = np.asarray(rho, dtype=complex)
    return BELL_BASIS.conj() @ rho @ BELL_BASIS.T


def density_to_bell_diagonal(rho) -> BellDiagonal:
    """Bell-basis diagonal of a two-qubit density matrix.

    Off-diagonal Bell-basis coherences are discarded.
    """
    rho = check_density(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 density matrix, got {rho.shape}")
    w = np.real(np.diag(bell_coefficients(rho)))
    # round-off can leave ~-1e-17 on an empty weight
    w = np.where((w < 0) & (w > -SIMPLEX_TOL), 0.0, w)
    return BellDiagonal.from_array(w)


def fidelity(rho) -> float:
    """<phi+| rho |phi+>."""
    rho = check_density(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 density matrix, got {rho.shape}")
    phi = BELL_BASIS[0]
    return float(np.real(phi.conj() @ rho @ phi))


def _su2(alpha, beta, gamma):
    """Rz(alpha) Ry(beta) Rz(gamma) for broadcastable angle arrays; shape (..., 2, 2)."""
    ca, sa = np.cos(beta / 2), np.sin(beta / 2)
    ep = np.exp(-0.5j * (alpha + gamma))
    em = np.exp(-0.5j * (alpha - gamma))
    u = np.empty(np.broadcast(alpha, beta, gamma).shape + (2, 2), dtype=complex)
    u[..., 0, 0] = ep * ca
    u[..., 0, 1] = -em * sa
    u[..., 1, 0] = np.conj(em) * sa
    u[..., 1, 1] = np.conj(ep) * ca
    return u


def _overlaps(rho, params):
    # (U x 1)|phi+> reshaped to 2x2 is U / sqrt(2)
    u = _su2(params[:, 0], params[:, 1], params[:, 2]).reshape(-1, 4)
    return np.real(np.einsum("ni,ij,nj->n", u.conj(), rho, u)) / 2


def fully_entangled_fraction(
    rho, tol: float = 1e-6, grid: int = 16, max_refinements: int = 40
) -> float:
    """Maximum of <phi|rho|phi> over maximally entangled two-qubit |phi>.

    Every maximally entangled state is (U x 1)|phi+> for some U in SU(2), so
    the search runs over three Euler angles: a coarse ``grid**3`` scan,
    then repeated grids of the same size around the incumbent.  The spacing
    shrinks 10x after each grid whose best point is interior; an improving
    best point on the window edge recenters the window at the same spacing.
    """
    rho = check_density(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 density matrix, got {rho.shape}")
    if tol <= 0:
        raise DomainError("tol must be positive")

    offsets = np.arange(grid) - (grid - 1) / 2
    spans = np.array([2 * np.pi, np.pi, 2 * np.pi])
    h = spans / grid
    axes = [(np.arange(grid) + 0.5) * h[k] for k in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    vals = _overlaps(rho, pts)
    i = int(np.argmax(vals))
    best, center = float(vals[i]), pts[i]

    h = h / 10
    for _ in range(max_refinements):
        axes = [center[k] + offsets * h[k] for k in range(3)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
        vals = _overlaps(rho, pts)
        i = int(np.argmax(vals))
        improvement = float(vals[i]) - best
        if vals[i] > best:
            best, center = float(vals[i]), pts[i]
        idx = np.unravel_index(i, (grid,) * 3)
        if improvement > tol * 1e-3 and any(j in (0, grid - 1) for j in idx):
            continue  # maximum may lie outside the window: recenter, same spacing
        # quadratic error near a smooth maximum is O(h^2)
        if improvement <= tol and np.max(h) ** 2 <= tol / 100:
            return min(best, 1.0)
        h = h / 10
    raise NumericError(
        f"entangled-fraction refinement did not converge in {max_refinements} steps",
        best=best,
    )


def correlation_matrix(rho) -> np.ndarray:
    """T_ij = Tr[rho (sigma_i x sigma_j)] for i, j in (x, y, z)."""
    rho = np.asarray(rho, dtype=complex)
    return np.array(
        [[np.real(np.trace(rho @ np.kron(si, sj))) for sj in PAULIS] for si in PAULIS]
    )


def chsh_max(rho) -> float:
    """Largest CHSH expectation attainable with projective spin measurements.

    Uses 2 * sqrt(m1 + m2) with m1, m2 the two largest eigenvalues of T^T T.
    Values above 2 mean the state violates the CHSH inequality.
    """
    rho = check_density(rho)
    if rho.shape != (4, 4):
        raise DomainError(f"expected a 4x4 density matrix, got {rho.shape}")
    t = correlation_matrix(rho)
    m = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2 * np.sqrt(max(m[0] + m[1], 0.0)))


def partial_trace(rho, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (0 = most significant).

    Kept qubits appear in ascending index order in the result.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if rho.shape != (dim, dim) or dim < 2 or dim & (dim - 1):
        raise DomainError(f"rho must be square with power-of-two dimension, got {rho.shape}")
    n = _n_qubits(dim)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DomainError(f"qubit indices {keep} out of range for {n} qubits")
    if len(keep) == n:
        return rho.copy()
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for q in range(n):
        if q not in keep:
            col[q] = row[q]
    out = "".join(row[q] for q in keep) + "".join(col[q] for q in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, rho.reshape((2,) * (2 * n)))
    d = 2 ** len(keep)
    return red.reshape(d, d)


def von_neumann_entropy(rho, base: float = np.e) -> float:
    """-Tr rho log rho, in nats by default (``base=2`` for bits)."""
    rho = np.asarray(rho, dtype=complex)
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-15]
    s = float(-np.sum(lam * np.log(lam)))
    return s / np.log(base) if base != np.e else s


def shannon_entropy(p, base: float = np.e) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    s = float(-np.sum(p * np.log(p)))
    return s / np.log(base) if base != np.e else s
