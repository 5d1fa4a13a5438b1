import numpy as np
import pytest

import csparc as cs
from oracles import (
    circulant_oracle_matrix,
    coupled_oracle_matrix,
    dft_oracle_matrix,
)


def random_vectors(op, rng):
    beta = rng.normal(size=op.ml) + 1j * rng.normal(size=op.ml)
    z = rng.normal(size=op.n) + 1j * rng.normal(size=op.n)
    return beta, z


def make_operators():
    p = cs.SparcParams(L=8, M=16, n=128, P=1.0, sigma2=1.0)
    pc = cs.SparcParams(L=8, M=16, n=128, P=1.0, sigma2=1.0)
    base = cs.base_matrix(3, 4, 1.0)
    return [
        cs.gaussian_operator(p, 11),
        cs.dft_block_operator(p, 11),
        cs.circulant_operator(pc, 11),
        cs.sc_operator(base, 20, 32, 11, M=16),
    ]


class TestAdjointConsistency:
    @pytest.mark.parametrize("op", make_operators(), ids=lambda o: o.family)
    def test_inner_product_identity(self, op):
        rng = np.random.default_rng(0)
        for _ in range(100):
            beta, z = random_vectors(op, rng)
            lhs = np.vdot(op.forward(beta), z)
            rhs = np.vdot(beta, op.adjoint(z))
            assert abs(lhs - rhs) / abs(lhs) < 1e-10

    @pytest.mark.parametrize("op", make_operators(), ids=lambda o: o.family)
    def test_zero_maps_to_zero(self, op):
        assert np.all(op.forward(np.zeros(op.ml)) == 0)
        assert np.all(op.adjoint(np.zeros(op.n, dtype=complex)) == 0)

    @pytest.mark.parametrize("op", make_operators(), ids=lambda o: o.family)
    def test_dimension_errors(self, op):
        with pytest.raises(ValueError):
            op.forward(np.zeros(op.ml + 1))
        with pytest.raises(ValueError):
            op.adjoint(np.zeros(op.n - 1, dtype=complex))


class TestGaussian:
    def test_column_norms_concentrate(self):
        p = cs.SparcParams(L=8, M=32, n=256, P=1.0, sigma2=1.0)
        op = cs.gaussian_operator(p, 3)
        norms = np.abs(op.matrix) ** 2
        assert norms.sum(axis=0).mean() == pytest.approx(1.0, abs=0.1)

    def test_entry_variance_split(self):
        p = cs.SparcParams(L=8, M=32, n=256, P=1.0, sigma2=1.0)
        op = cs.gaussian_operator(p, 4)
        assert np.var(op.matrix.real) == pytest.approx(1 / (2 * 256), rel=0.05)
        assert np.var(op.matrix.imag) == pytest.approx(1 / (2 * 256), rel=0.05)

    def test_size_cap(self):
        p = cs.SparcParams(L=1024, M=512, n=4096, P=1.0, sigma2=1.0)
        with pytest.raises(ValueError, match="cap"):
            cs.gaussian_operator(p, 0)

    def test_forward_matches_matrix(self):
        p = cs.SparcParams(L=4, M=8, n=32, P=1.0, sigma2=1.0)
        op = cs.gaussian_operator(p, 5)
        rng = np.random.default_rng(1)
        beta, z = random_vectors(op, rng)
        assert op.forward(beta) == pytest.approx(op.matrix @ beta)
        assert op.adjoint(z) == pytest.approx(op.matrix.conj().T @ z)


class TestDftBlock:
    @pytest.mark.parametrize("L,M,n", [(8, 16, 128), (4, 32, 64), (3, 8, 100)])
    def test_fast_path_matches_oracle(self, L, M, n):
        p = cs.SparcParams(L=L, M=M, n=n, P=1.0, sigma2=1.0)
        op = cs.dft_block_operator(p, 7)
        A = dft_oracle_matrix(op)
        rng = np.random.default_rng(2)
        for _ in range(5):
            beta, z = random_vectors(op, rng)
            assert np.abs(op.forward(beta) - A @ beta).max() < 1e-9
            assert np.abs(op.adjoint(z) - A.conj().T @ z).max() < 1e-9

    def test_transform_size(self):
        p = cs.SparcParams(L=4, M=16, n=100, P=1.0, sigma2=1.0)
        op = cs.dft_block_operator(p, 0)
        assert op.w == 128  # 2^ceil(log2(max(101, 17)))

    def test_unit_norm_columns(self):
        p = cs.SparcParams(L=4, M=16, n=64, P=1.0, sigma2=1.0)
        A = dft_oracle_matrix(cs.dft_block_operator(p, 0))
        assert np.abs(np.linalg.norm(A, axis=0) - 1.0).max() < 1e-12

    def test_all_one_row_and_column_excluded(self):
        p = cs.SparcParams(L=4, M=16, n=64, P=1.0, sigma2=1.0)
        op = cs.dft_block_operator(p, 0)
        assert np.all(op.rows >= 1)
        assert np.all(op.cols >= 1)
        # before scaling, the removed row/column would be identically 1
        A = dft_oracle_matrix(op) / op.scale
        for block in np.split(A, op.L, axis=1):
            assert not np.any(np.all(np.abs(block - 1.0) < 1e-12, axis=1))
            assert not np.any(np.all(np.abs(block - 1.0) < 1e-12, axis=0))

    def test_distinct_seeds_give_distinct_outputs(self):
        p = cs.SparcParams(L=4, M=16, n=64, P=1.0, sigma2=1.0)
        op1 = cs.dft_block_operator(p, 1)
        op2 = cs.dft_block_operator(p, 2)
        assert not np.array_equal(op1.rows, op2.rows)
        beta = np.ones(op1.ml)
        assert not np.allclose(op1.forward(beta), op2.forward(beta))


class TestCirculant:
    @pytest.mark.parametrize("L,M,n", [(8, 16, 64), (4, 32, 64), (6, 8, 32)])
    def test_fast_path_matches_oracle(self, L, M, n):
        p = cs.SparcParams(L=L, M=M, n=n, P=1.0, sigma2=1.0)
        op = cs.circulant_operator(p, 13)
        A = circulant_oracle_matrix(op)
        rng = np.random.default_rng(3)
        for _ in range(5):
            beta, z = random_vectors(op, rng)
            assert np.abs(op.forward(beta) - A @ beta).max() < 1e-9
            assert np.abs(op.adjoint(z) - A.conj().T @ z).max() < 1e-9

    @pytest.mark.parametrize("L,M,n", [(8, 16, 64), (8, 32, 96), (4, 8, 32)])
    def test_exact_zero_row_and_column_sums(self, L, M, n):
        p = cs.SparcParams(L=L, M=M, n=n, P=1.0, sigma2=1.0)
        A = circulant_oracle_matrix(cs.circulant_operator(p, 1))
        assert np.abs(A.sum(axis=1)).max() < 1e-9
        assert np.abs(A.sum(axis=0)).max() < 1e-9

    def test_codewords_are_dc_free(self):
        p = cs.SparcParams(L=8, M=16, n=64, P=1.0, sigma2=1.0)
        op = cs.circulant_operator(p, 2)
        alloc = cs.flat_allocation(p.L, p.P)
        rng = np.random.default_rng(4)
        for _ in range(100):
            bits = rng.integers(0, 2, p.bits)
            x = op.forward(cs.build_message(bits, alloc, p).dense())
            assert abs(x.sum()) < 1e-8 * np.sqrt(p.n)

    def test_unit_norm_columns(self):
        p = cs.SparcParams(L=4, M=8, n=32, P=1.0, sigma2=1.0)
        A = circulant_oracle_matrix(cs.circulant_operator(p, 5))
        assert np.abs(np.linalg.norm(A, axis=0) - 1.0).max() < 1e-12

    def test_custom_phases(self):
        p = cs.SparcParams(L=4, M=8, n=32, P=1.0, sigma2=1.0)
        phi = np.array([1, 1j, -1, -1j])
        phi_col = np.array([1, -1, 1, -1], dtype=complex)
        op = cs.circulant_operator(p, 5, phi=phi, phi_col=phi_col)
        A = circulant_oracle_matrix(op)
        assert np.abs(A.sum(axis=0)).max() < 1e-9
        assert np.abs(A.sum(axis=1)).max() < 1e-9

    def test_constraint_violations(self):
        p_odd = cs.SparcParams(L=3, M=8, n=32, P=1.0, sigma2=1.0)
        with pytest.raises(ValueError, match="even"):
            cs.circulant_operator(p_odd, 0)
        p_bad_n = cs.SparcParams(L=4, M=8, n=33, P=1.0, sigma2=1.0)
        with pytest.raises(ValueError, match="M | n|multiple|M \\| n"):
            cs.circulant_operator(p_bad_n, 0)
        p = cs.SparcParams(L=4, M=8, n=32, P=1.0, sigma2=1.0)
        with pytest.raises(ValueError, match="sum to zero"):
            cs.circulant_operator(p, 0, phi=np.ones(4, dtype=complex))
        with pytest.raises(ValueError, match="unit modulus"):
            cs.circulant_operator(p, 0, phi_col=np.array([2.0, -2.0, 2.0, -2.0]))
        with pytest.raises(ValueError, match="length"):
            cs.circulant_operator(p, 0, sequence=cs.frank_sequence(2))

    def test_wrong_sequence_length_rejected(self):
        p = cs.SparcParams(L=4, M=16, n=64, P=1.0, sigma2=1.0)
        with pytest.raises(ValueError):
            cs.circulant_operator(p, 0, sequence=cs.frank_sequence(3))


class TestCoupled:
    def setup_method(self):
        self.base = cs.base_matrix(3, 4, 1.0)
        self.op = cs.sc_operator(self.base, 16, 32, 21, M=16)

    def test_fast_path_matches_oracle(self):
        A = coupled_oracle_matrix(self.op)
        rng = np.random.default_rng(5)
        beta, z = random_vectors(self.op, rng)
        assert np.abs(self.op.forward(beta) - A @ beta).max() < 1e-9
        assert np.abs(self.op.adjoint(z) - A.conj().T @ z).max() < 1e-9

    def test_zero_blocks_contribute_nothing(self):
        # base w=3, Lambda=4: block (5, 1) is zero, block (3, 1) is nonzero
        assert self.base.weights[4, 0] == 0
        assert self.base.weights[2, 0] != 0
        assert self.op.block(4, 0) is None
        assert self.op.block(2, 0) is not None
        beta = np.zeros(self.op.ml)
        beta[: self.op.M_C] = 1.0  # support on column block 0
        y = self.op.forward(beta)
        touched = np.flatnonzero(np.abs(y.reshape(self.base.L_R, -1)).sum(axis=1))
        assert np.array_equal(touched, np.flatnonzero(self.base.weights[:, 0]))

    def test_block_entry_variance(self):
        base = cs.base_matrix(2, 3, 2.0)
        op = cs.sc_operator(base, 64, 64, 9, M=16)
        L = op.L
        for (r, c), block in op.blocks.items():
            expected = base.weights[r, c] / L
            assert np.mean(np.abs(block) ** 2) == pytest.approx(expected, rel=0.15)

    def test_column_norms_match_base_prediction(self):
        A = coupled_oracle_matrix(self.op)
        norms = (np.abs(A) ** 2).sum(axis=0)
        col_block = np.repeat(np.arange(self.base.L_C), self.op.M_C)
        predicted = self.op.M_R * self.base.weights.sum(axis=0) / self.op.L
        for c in range(self.base.L_C):
            mean = norms[col_block == c].mean()
            assert mean == pytest.approx(predicted[c], rel=0.1)

    def test_section_straddle_rejected(self):
        with pytest.raises(ValueError, match="straddle"):
            cs.sc_operator(self.base, 16, 24, 0, M=16)

    def test_size_cap(self):
        base = cs.base_matrix(6, 40, 1.0)
        with pytest.raises(ValueError, match="cap"):
            cs.sc_operator(base, 256, 4096, 0, M=512)


class TestConfigRoundTrip:
    @pytest.mark.parametrize("op", make_operators(), ids=lambda o: o.family)
    def test_rebuild_reproduces_operator(self, op):
        rebuilt = cs.operator_from_config(op.to_config())
        rng = np.random.default_rng(6)
        beta, z = random_vectors(op, rng)
        assert np.array_equal(op.forward(beta), rebuilt.forward(beta))
        assert np.array_equal(op.adjoint(z), rebuilt.adjoint(z))

    def test_config_is_json_serializable(self):
        import json

        for op in make_operators():
            json.dumps(op.to_config())
