"""Design matrices as implicit linear operators with fast forward/adjoint.

Four families share one interface: dense i.i.d. Gaussian (the correctness
oracle, size-capped), per-section DFT blocks, an array of row-permuted
circulant matrices seeded by a perfect sequence, and the spatially coupled
block-Gaussian construction.  All operators are immutable after construction
and safe to share across concurrent decode runs; every application allocates
its own scratch.
"""

import math

import numpy as np

from .coupled import BaseMatrix, base_matrix
from .sequences import PerfectSequence, frank_sequence, milewski_sequence, sequence_for_length

__all__ = [
    "GaussianOperator",
    "DftBlockOperator",
    "CirculantOperator",
    "CoupledOperator",
    "gaussian_operator",
    "dft_block_operator",
    "circulant_operator",
    "sc_operator",
    "operator_from_config",
]

# Dense families exist as oracles / desk-scale constructions, not performance
# paths; refuse sizes where dense storage stops being reasonable.
GAUSSIAN_ENTRY_CAP = 1 << 22
COUPLED_ENTRY_CAP = 1 << 23


def _block_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


class DesignOperator:
    """Linear map C^{ML} -> C^n applied only through forward/adjoint."""

    family = None

    def forward(self, beta):
        raise NotImplementedError

    def adjoint(self, z):
        raise NotImplementedError

    def dense(self):
        """Dense n x ML reconstruction via adjoint on unit vectors (test scale)."""
        if self.n * self.ml > GAUSSIAN_ENTRY_CAP:
            raise ValueError(f"dense reconstruction capped at {GAUSSIAN_ENTRY_CAP} entries")
        rows = np.empty((self.n, self.ml), dtype=complex)
        e = np.zeros(self.n, dtype=complex)
        for i in range(self.n):
            e[i] = 1.0
            rows[i] = np.conj(self.adjoint(e))
            e[i] = 0.0
        return rows

    def _check_forward_input(self, beta):
        beta = np.asarray(beta)
        if beta.shape != (self.ml,):
            raise ValueError(f"expected beta of shape ({self.ml},), got {beta.shape}")
        return beta

    def _check_adjoint_input(self, z):
        z = np.asarray(z)
        if z.shape != (self.n,):
            raise ValueError(f"expected z of shape ({self.n},), got {z.shape}")
        return z


class GaussianOperator(DesignOperator):
    """i.i.d. CN(0, 1/n) design matrix, stored densely (oracle scale only)."""

    family = "gaussian"

    def __init__(self, n, L, M, seed):
        if n * L * M > GAUSSIAN_ENTRY_CAP:
            raise ValueError(
                f"gaussian family is a dense oracle; n*M*L = {n * L * M} exceeds "
                f"the cap {GAUSSIAN_ENTRY_CAP}"
            )
        self.n, self.L, self.M = n, L, M
        self.ml = L * M
        self.seed = seed
        rng = np.random.default_rng(seed)
        scale = math.sqrt(1.0 / (2.0 * n))
        self.matrix = scale * (
            rng.normal(size=(n, self.ml)) + 1j * rng.normal(size=(n, self.ml))
        )

    def forward(self, beta):
        return self.matrix @ self._check_forward_input(beta)

    def adjoint(self, z):
        return self.matrix.conj().T @ self._check_adjoint_input(z)

    def dense(self):
        return self.matrix.copy()

    def to_config(self):
        return {"family": self.family, "n": self.n, "L": self.L, "M": self.M, "seed": self.seed}


class DftBlockOperator(DesignOperator):
    """L independent blocks, each a truncated row-permuted DFT matrix.

    Block i keeps n seeded-random rows of a 2^k-point DFT (k chosen so both
    n+1 and M+1 fit), excluding the all-one first row, and the M columns after
    the all-one first column.  Entries are unit modulus; scaling by 1/sqrt(n)
    gives exactly unit-norm columns.
    """

    family = "dft"

    def __init__(self, n, L, M, seed):
        self.n, self.L, self.M = n, L, M
        self.ml = L * M
        self.seed = seed
        self.k = math.ceil(math.log2(max(n + 1, M + 1)))
        self.w = 1 << self.k
        self.cols = np.arange(1, M + 1)
        rows = np.empty((L, n), dtype=np.int64)
        for i in range(L):
            rng = _block_rng(seed, i)
            rows[i] = rng.permutation(np.arange(1, self.w))[:n]
        self.rows = rows
        self.scale = 1.0 / math.sqrt(n)

    def forward(self, beta):
        beta = self._check_forward_input(beta)
        x = np.zeros((self.L, self.w), dtype=complex)
        x[:, 1 : self.M + 1] = beta.reshape(self.L, self.M)
        y = np.fft.fft(x, axis=1)
        gathered = y[np.arange(self.L)[:, None], self.rows]
        return gathered.sum(axis=0) * self.scale

    def adjoint(self, z):
        z = self._check_adjoint_input(z)
        y = np.zeros((self.L, self.w), dtype=complex)
        y[np.arange(self.L)[:, None], self.rows] = np.conj(z)[None, :]
        x = np.conj(np.fft.fft(y, axis=1))
        return x[:, 1 : self.M + 1].ravel() * self.scale

    def to_config(self):
        return {"family": self.family, "n": self.n, "L": self.L, "M": self.M, "seed": self.seed}


class CirculantOperator(DesignOperator):
    """L_BR x L array of row-permuted, phase-weighted circulant blocks.

    The M x M circulant C has a perfect sequence as its leading row, so its
    rows and columns are exactly orthogonal.  Block (j, i) is a row permutation
    of phi_j * phi_col_i * C, scaled by 1/sqrt(n).  The phase families satisfy
    sum_j phi_j = 0 and sum_i phi_col_i = 0 with unit modulus, which forces
    every row sum and column sum of the full matrix to vanish, and with it the
    DC component of every codeword.
    """

    family = "circulant"

    def __init__(self, n, L, M, seed, sequence, phi=None, phi_col=None):
        if len(sequence) != M:
            raise ValueError(f"sequence length {len(sequence)} != M = {M}")
        if L % 2 != 0:
            raise ValueError(f"circulant family needs an even section count, got L={L}")
        if n % M != 0:
            raise ValueError(f"circulant family needs M | n, got n={n}, M={M}")
        l_br = n // M
        if l_br < 2:
            raise ValueError(f"need at least two block rows (n >= 2*M), got n={n}, M={M}")
        self.n, self.L, self.M = n, L, M
        self.ml = L * M
        self.seed = seed
        self.l_br = l_br
        self.sequence = sequence

        if phi is None:
            phi = np.exp(2j * np.pi * np.arange(l_br) / l_br)
        if phi_col is None:
            phi_col = np.where(np.arange(L) % 2 == 0, 1.0, -1.0).astype(complex)
        self.phi = self._check_phases(np.asarray(phi, dtype=complex), l_br, "phi")
        self.phi_col = self._check_phases(np.asarray(phi_col, dtype=complex), L, "phi_col")

        perms = np.empty((l_br, L, M), dtype=np.int64)
        for j in range(l_br):
            for i in range(L):
                perms[j, i] = _block_rng(seed, j, i).permutation(M)
        self.row_perms = perms
        self.inv_perms = np.argsort(perms, axis=2)
        # circulant with leading ROW theta has first COLUMN theta[(-a) mod M]
        theta = sequence.entries
        self._fft_col = np.fft.fft(theta[(-np.arange(M)) % M])
        self.scale = 1.0 / math.sqrt(n)

    @staticmethod
    def _check_phases(phases, count, name):
        if phases.shape != (count,):
            raise ValueError(f"{name} must have shape ({count},), got {phases.shape}")
        if np.abs(np.abs(phases) - 1.0).max() > 1e-12:
            raise ValueError(f"{name} entries must have unit modulus")
        if abs(phases.sum()) > 1e-9 * count:
            raise ValueError(f"{name} must sum to zero, got {phases.sum()!r}")
        return phases

    def forward(self, beta):
        beta = self._check_forward_input(beta)
        b = beta.reshape(self.L, self.M)
        u = np.fft.ifft(np.fft.fft(b, axis=1) * self._fft_col[None, :], axis=1)
        u *= self.phi_col[:, None]
        gathered = u[np.arange(self.L)[None, :, None], self.row_perms]
        y = gathered.sum(axis=1) * self.phi[:, None]
        return y.ravel() * self.scale

    def adjoint(self, z):
        z = self._check_adjoint_input(z)
        zb = z.reshape(self.l_br, self.M) * np.conj(self.phi)[:, None]
        gathered = zb[np.arange(self.l_br)[:, None, None], self.inv_perms]
        v = gathered.sum(axis=0) * np.conj(self.phi_col)[:, None]
        out = np.fft.ifft(np.fft.fft(v, axis=1) * np.conj(self._fft_col)[None, :], axis=1)
        return out.ravel() * self.scale

    def to_config(self):
        return {
            "family": self.family,
            "n": self.n,
            "L": self.L,
            "M": self.M,
            "seed": self.seed,
            "sequence": list(self.sequence.family),
            "phi": [[float(p.real), float(p.imag)] for p in self.phi],
            "phi_col": [[float(p.real), float(p.imag)] for p in self.phi_col],
        }


class CoupledOperator(DesignOperator):
    """Block matrix mirroring a base-matrix sparsity pattern.

    Block (r, c) is an M_R x M_C matrix with i.i.d. CN(0, W_rc / L) entries
    when the base-matrix weight W_rc is nonzero, and zero otherwise.  Power is
    carried by the matrix here, so coupled message vectors use unit values.
    """

    family = "sc"

    def __init__(self, base, M_R, M_C, seed, M=None, blocks=None):
        self.base = base
        self.M_R, self.M_C = M_R, M_C
        self.n = M_R * base.L_R
        self.ml = M_C * base.L_C
        self.M = M if M is not None else M_C
        if self.ml % self.M != 0:
            raise ValueError(f"ML = {self.ml} is not divisible into sections of size {self.M}")
        if M_C % self.M != 0:
            raise ValueError(
                f"sections must not straddle column blocks: M_C = {M_C} "
                f"is not a multiple of M = {self.M}"
            )
        self.L = self.ml // self.M
        self.seed = seed
        nonzero = int(np.count_nonzero(base.weights))
        if nonzero * M_R * M_C > COUPLED_ENTRY_CAP:
            raise ValueError(
                f"coupled blocks are stored densely; {nonzero * M_R * M_C} entries "
                f"exceeds the cap {COUPLED_ENTRY_CAP}"
            )
        if blocks is None:
            blocks = {}
            scale_base = 1.0 / (2.0 * self.L)
            for r in range(base.L_R):
                for c in range(base.L_C):
                    if base.weights[r, c] == 0:
                        continue
                    rng = _block_rng(seed, r, c)
                    s = math.sqrt(base.weights[r, c] * scale_base)
                    blocks[(r, c)] = s * (
                        rng.normal(size=(M_R, M_C)) + 1j * rng.normal(size=(M_R, M_C))
                    )
        self.blocks = blocks

    def block(self, r, c):
        """Dense block (r, c); zero blocks come back as None."""
        return self.blocks.get((r, c))

    def forward(self, beta):
        beta = self._check_forward_input(beta)
        y = np.zeros(self.n, dtype=complex)
        for (r, c), b in self.blocks.items():
            y[r * self.M_R : (r + 1) * self.M_R] += b @ beta[c * self.M_C : (c + 1) * self.M_C]
        return y

    def adjoint(self, z):
        z = self._check_adjoint_input(z)
        out = np.zeros(self.ml, dtype=complex)
        for (r, c), b in self.blocks.items():
            out[c * self.M_C : (c + 1) * self.M_C] += (
                b.conj().T @ z[r * self.M_R : (r + 1) * self.M_R]
            )
        return out

    def to_config(self):
        return {
            "family": self.family,
            "M_R": self.M_R,
            "M_C": self.M_C,
            "M": self.M,
            "seed": self.seed,
            "base": {"w": self.base.w, "Lambda": self.base.Lambda, "P": self.base.P},
        }


def gaussian_operator(params, seed):
    """Dense i.i.d. CN(0, 1/n) reference operator for SparcParams."""
    return GaussianOperator(params.n, params.L, params.M, seed)


def dft_block_operator(params, seed):
    """Per-section DFT-block operator for SparcParams."""
    return DftBlockOperator(params.n, params.L, params.M, seed)


def circulant_operator(params, seed, sequence=None, phi=None, phi_col=None):
    """Circulant-array operator for SparcParams.

    ``sequence`` defaults to the preferred perfect sequence of length M; both
    phase families can be overridden subject to the zero-sum / unit-modulus
    constraints.
    """
    if sequence is None:
        sequence = sequence_for_length(params.M)
    return CirculantOperator(
        params.n, params.L, params.M, seed, sequence, phi=phi, phi_col=phi_col
    )


def sc_operator(base, M_R, M_C, seed, M=None):
    """Spatially coupled operator from a base matrix (see CoupledOperator)."""
    return CoupledOperator(base, M_R, M_C, seed, M=M)


def _sequence_from_config(spec):
    kind = spec[0]
    if kind == "frank":
        return frank_sequence(spec[1])
    if kind == "milewski":
        return milewski_sequence(spec[1], spec[2])
    raise ValueError(f"unknown sequence family {kind!r}")


def operator_from_config(config):
    """Rebuild an operator from a to_config() record (experiment provenance)."""
    family = config["family"]
    if family == "gaussian":
        return GaussianOperator(config["n"], config["L"], config["M"], config["seed"])
    if family == "dft":
        return DftBlockOperator(config["n"], config["L"], config["M"], config["seed"])
    if family == "circulant":
        phi = config.get("phi")
        phi_col = config.get("phi_col")
        if phi is not None:
            phi = np.array([complex(re, im) for re, im in phi])
        if phi_col is not None:
            phi_col = np.array([complex(re, im) for re, im in phi_col])
        return CirculantOperator(
            config["n"], config["L"], config["M"], config["seed"],
            _sequence_from_config(config["sequence"]), phi=phi, phi_col=phi_col,
        )
    if family == "sc":
        b = config["base"]
        base = base_matrix(b["w"], b["Lambda"], b["P"])
        return CoupledOperator(
            base, config["M_R"], config["M_C"], config["seed"], M=config.get("M")
        )
    raise ValueError(f"unknown operator family {family!r}")
