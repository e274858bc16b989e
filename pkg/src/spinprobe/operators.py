"""Pauli tensor algebra and Hamiltonian assembly for the detector + spin bath.

The composite system is one detector qubit (tensor factor 0, the leftmost
and slowest-varying index) followed by N bath spins. Basis states are
ordered lexicographically with sigma_z |0> = +|0>, so |0> is the ground
state of the detector Hamiltonian -(1/2) b0z sigma_z for b0z > 0.

All matrices are dense complex numpy arrays; energies are in units of the
base splitting epsilon and hbar = 1 throughout (times in hbar/epsilon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

#: Largest number of spin-1/2 sites for which a dense composite Hamiltonian
#: may be assembled (2^14 = 16384 already means ~4 GB of complex entries).
MAX_SITES = 14


@dataclass(frozen=True)
class SpinBathModel:
    """Full parameter set of one disorder realization.

    Attributes:
        n_bath: number of bath spins N.
        b0z: detector splitting B0^z (epsilon units).
        bx, bz: one-body bath fields, arrays of length N.
        lam: detector-bath couplings lambda_i, array of length N.
        jx: pairwise intra-bath couplings, an (N, N) array that is nonzero
            only strictly above the diagonal (couplings are symmetric and
            there is no self-coupling, so a single triangle stores them all).
    """

    n_bath: int
    b0z: float
    bx: np.ndarray
    bz: np.ndarray
    lam: np.ndarray
    jx: np.ndarray

    def __post_init__(self):
        if self.n_bath < 1:
            raise ConfigError(f"n_bath must be >= 1, got {self.n_bath}")
        bx = np.asarray(self.bx, dtype=float)
        bz = np.asarray(self.bz, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        jx = np.asarray(self.jx, dtype=float)
        n = self.n_bath
        for name, arr in (("bx", bx), ("bz", bz), ("lam", lam)):
            if arr.shape != (n,):
                raise ConfigError(f"{name} must have shape ({n},), got {arr.shape}")
        if jx.shape != (n, n):
            raise ConfigError(f"jx must have shape ({n}, {n}), got {jx.shape}")
        if np.any(np.tril(jx) != 0.0):
            raise ConfigError("jx must be strictly upper triangular (i < j)")
        for name, arr in (("bx", bx), ("bz", bz), ("lam", lam), ("jx", jx)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def bath_dim(self) -> int:
        return 2**self.n_bath

    @property
    def total_dim(self) -> int:
        return 2 ** (self.n_bath + 1)

    def coupling_pairs(self):
        """Yield (i, j, J) for every stored pair coupling with i < j."""
        n = self.n_bath
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j, self.jx[i, j]


def pauli(axis: str, site: int, n_sites: int) -> np.ndarray:
    """Single-site Pauli operator embedded in an n_sites tensor product.

    Returns 1 x ... x sigma_axis x ... x 1 (2^n_sites dimensional) with the
    Pauli matrix at position `site`, counted from the leftmost factor.
    """
    if axis not in _PAULI:
        raise ConfigError(f"axis must be one of x, y, z; got {axis!r}")
    if not 0 <= site < n_sites:
        raise ConfigError(f"site {site} out of range for {n_sites} sites")
    op = _PAULI[axis]
    left = np.eye(2**site, dtype=complex)
    right = np.eye(2 ** (n_sites - site - 1), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _two_site_xx(i: int, j: int, n_sites: int) -> np.ndarray:
    """sigma_x^(i) sigma_x^(j) for i < j, built with identity blocks."""
    mid = np.eye(2 ** (j - i - 1), dtype=complex)
    core = np.kron(np.kron(SIGMA_X, mid), SIGMA_X)
    left = np.eye(2**i, dtype=complex)
    right = np.eye(2 ** (n_sites - j - 1), dtype=complex)
    return np.kron(np.kron(left, core), right)


def build_system_hamiltonian(model: SpinBathModel) -> np.ndarray:
    """Detector Hamiltonian -(1/2) b0z sigma_z on the 2-dim detector space."""
    return -0.5 * model.b0z * SIGMA_Z


def build_bath_coupling(model: SpinBathModel) -> np.ndarray:
    """Bath half of the interaction, sum_i lambda_i sigma_x^(i) on the bath space.

    The detector factor sigma_x^(0) is applied by callers that assemble the
    full interaction term.
    """
    n = model.n_bath
    out = np.zeros((model.bath_dim, model.bath_dim), dtype=complex)
    for i in range(n):
        if model.lam[i] != 0.0:
            out += model.lam[i] * pauli("x", i, n)
    return out


def build_bath_hamiltonian(model: SpinBathModel) -> np.ndarray:
    """Bath Hamiltonian: random one-body fields plus pairwise xx couplings.

    H_B = -(1/2) sum_i (bx_i sigma_x^(i) + bz_i sigma_z^(i))
          + sum_{i<j} jx_ij sigma_x^(i) sigma_x^(j)
    """
    n = model.n_bath
    out = np.zeros((model.bath_dim, model.bath_dim), dtype=complex)
    for i in range(n):
        if model.bx[i] != 0.0:
            out += (-0.5 * model.bx[i]) * pauli("x", i, n)
        if model.bz[i] != 0.0:
            out += (-0.5 * model.bz[i]) * pauli("z", i, n)
    for i, j, coupling in model.coupling_pairs():
        if coupling != 0.0:
            out += coupling * _two_site_xx(i, j, n)
    return out


def build_total_hamiltonian(model: SpinBathModel, max_sites: int = MAX_SITES) -> np.ndarray:
    """Composite Hamiltonian H_S x 1 + sigma_x^(0) x B + 1 x H_B.

    The detector is the leftmost tensor factor. Refuses to build dense
    matrices beyond `max_sites` total spins.
    """
    n_sites = model.n_bath + 1
    if n_sites > max_sites:
        raise ConfigError(
            f"{n_sites} sites exceed the dense-matrix limit of {max_sites}; "
            "raise max_sites explicitly if you really want this"
        )
    bath_eye = np.eye(model.bath_dim, dtype=complex)
    h_s = np.kron(build_system_hamiltonian(model), bath_eye)
    h_int = np.kron(SIGMA_X, build_bath_coupling(model))
    h_b = np.kron(IDENTITY_2, build_bath_hamiltonian(model))
    return h_s + h_int + h_b


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Max-norm of (H - H^dagger) relative to the max-norm of H."""
    scale = np.abs(matrix).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(matrix - matrix.conj().T).max() / scale)
