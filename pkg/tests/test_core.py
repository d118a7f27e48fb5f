import numpy as np
import pytest

from crisp import (
    DimensionMismatch,
    EmptyMatrix,
    InvalidFraction,
    NonFinite,
    PruneSpec,
    Strategy,
    TokenMatrix,
    ZeroVectorWarning,
    l2_normalize,
    validate,
)


class TestValidate:
    def test_well_formed(self):
        validate(TokenMatrix("a", [[1.0, 0.0], [0.0, 1.0]]))

    def test_empty_matrix(self):
        with pytest.raises(EmptyMatrix):
            validate(TokenMatrix("b", []))

    def test_ragged_names_row(self):
        with pytest.raises(DimensionMismatch, match="row 1"):
            validate(TokenMatrix("c", [[1.0, 0.0], [0.0]]))

    def test_nonfinite_names_row(self):
        with pytest.raises(NonFinite, match="row 2"):
            validate(TokenMatrix("d", [[1.0], [2.0], [np.nan], [4.0]]))
        with pytest.raises(NonFinite, match="row 0"):
            validate(TokenMatrix("e", [[np.inf, 0.0]]))

    def test_idempotent_and_side_effect_free(self):
        m = TokenMatrix("a", [[1.0, 2.0], [3.0, 4.0]])
        before = m.rows.copy()
        validate(m)
        validate(m)
        assert np.array_equal(m.rows, before)

    def test_rows_are_read_only(self):
        m = TokenMatrix("a", [[1.0, 2.0]])
        with pytest.raises(ValueError):
            m.rows[0, 0] = 9.0


class TestL2Normalize:
    def test_three_four_five(self):
        out = l2_normalize(TokenMatrix("a", [[3.0, 4.0]]))
        assert np.allclose(out.rows, [[0.6, 0.8]], atol=1e-12)

    def test_axis_vectors(self):
        out = l2_normalize(TokenMatrix("a", [[1.0, 0.0], [0.0, 2.0]]))
        assert np.allclose(out.rows, [[1.0, 0.0], [0.0, 1.0]], atol=1e-12)

    def test_zero_row_unchanged_with_warning(self):
        with pytest.warns(ZeroVectorWarning, match=r"\[0\]"):
            out = l2_normalize(TokenMatrix("a", [[0.0, 0.0]]))
        assert np.array_equal(out.rows, [[0.0, 0.0]])

    def test_unit_norms(self):
        rng = np.random.default_rng(0)
        out = l2_normalize(TokenMatrix("a", rng.normal(size=(20, 7))))
        assert np.allclose(np.linalg.norm(out.rows, axis=1), 1.0, atol=1e-6)

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        m = TokenMatrix("a", rng.normal(size=(10, 5)))
        once = l2_normalize(m)
        twice = l2_normalize(once)
        assert np.allclose(once.rows, twice.rows, atol=1e-6)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        rows = rng.normal(size=(6, 4))
        for c in (0.5, 3.0, 1e6):
            a = l2_normalize(TokenMatrix("a", rows))
            b = l2_normalize(TokenMatrix("a", c * rows))
            assert np.allclose(a.rows, b.rows, atol=1e-6)


class TestPruneSpec:
    @pytest.mark.parametrize(
        "text,strategy,k,fraction,normalize",
        [
            ("full", Strategy.FULL, None, None, False),
            ("tail:8", Strategy.TAIL, 8, None, False),
            ("kspace:2", Strategy.KSPACE, 2, None, False),
            ("cfixed:32", Strategy.CLUSTER_FIXED, 32, None, False),
            ("crel:0.25", Strategy.CLUSTER_RELATIVE, None, 0.25, False),
            ("cfixed:4+norm", Strategy.CLUSTER_FIXED, 4, None, True),
            ("full+norm", Strategy.FULL, None, None, True),
        ],
    )
    def test_parse(self, text, strategy, k, fraction, normalize):
        spec = PruneSpec.parse(text)
        assert spec.strategy is strategy
        assert spec.k == k
        assert spec.fraction == fraction
        assert spec.normalize == normalize

    @pytest.mark.parametrize(
        "text", ["full", "tail:8", "kspace:2", "cfixed:32", "crel:0.25", "crel:0.5+norm"]
    )
    def test_encode_round_trip(self, text):
        assert PruneSpec.parse(text).encode() == text

    @pytest.mark.parametrize("text", ["tail:0", "kspace:-1", "cfixed:x", "bogus", "full:3"])
    def test_rejects_bad_specs(self, text):
        with pytest.raises(ValueError):
            PruneSpec.parse(text)

    @pytest.mark.parametrize("fraction", [0.0, -0.5, 1.5])
    def test_rejects_bad_fraction(self, fraction):
        with pytest.raises(InvalidFraction):
            PruneSpec.parse(f"crel:{fraction}")

    def test_seed_passes_through(self):
        spec = PruneSpec.parse("cfixed:3", seed=42)
        assert spec.seed == 42
