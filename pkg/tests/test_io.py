import json

import numpy as np
import pytest

from conftest import random_contraction_operator, random_pd_kernel, witness
from rpdkit import SeededRng, build_dilation, factorize, moment_kernel, sample_paths
from rpdkit import io as fio
from rpdkit.errors import DimensionMismatch


def roundtrip(obj):
    return json.loads(fio.dumps(obj))


def test_kernel_roundtrip_exact(rng):
    k = random_pd_kernel(rng, 3, 2)
    back = fio.kernel_from_json(roundtrip(fio.kernel_to_json(k)))
    assert back.points == ("p0", "p1", "p2")
    assert back.blocks.tobytes() == k.blocks.tobytes()


def test_missing_lower_blocks_completed():
    obj = {
        "points": ["a", "b"],
        "dim": 1,
        "blocks": {
            "0,0": {"rows": 1, "cols": 1, "data": [[2, 0]]},
            "0,1": {"rows": 1, "cols": 1, "data": [[1, 1]]},
            "1,1": {"rows": 1, "cols": 1, "data": [[2, 0]]},
        },
    }
    k = fio.kernel_from_json(obj)
    assert k.blocks[1, 0, 0, 0] == 1 - 1j


def test_missing_block_pair_rejected():
    obj = {"points": ["a", "b"], "dim": 1, "blocks": {"0,0": {"rows": 1, "cols": 1, "data": [[1, 0]]}}}
    with pytest.raises(fio.FormatError):
        fio.kernel_from_json(obj)


def test_wrong_block_shape_rejected():
    obj = {"points": ["a"], "dim": 2, "blocks": {"0,0": {"rows": 1, "cols": 1, "data": [[1, 0]]}}}
    with pytest.raises(DimensionMismatch):
        fio.kernel_from_json(obj)


def test_matrix_data_length_checked():
    with pytest.raises(fio.FormatError):
        fio.matrix_from_json({"rows": 2, "cols": 2, "data": [[1, 0]]})


def test_random_kernel_roundtrip():
    rk = witness()
    back = fio.random_kernel_from_json(roundtrip(fio.random_kernel_to_json(rk)))
    np.testing.assert_array_equal(back.weights, rk.weights)
    assert back.atom_blocks.tobytes() == rk.atom_blocks.tobytes()


def test_factor_roundtrip(rng):
    f = factorize(random_pd_kernel(rng, 2, 3, rank=4))
    back = fio.factor_from_json(roundtrip(fio.factor_to_json(f)))
    assert back.rank == 4 and back.factors.tobytes() == f.factors.tobytes()


def test_operator_roundtrip(rng):
    A = random_contraction_operator(rng, d=3, n_atoms=3)
    back = fio.operator_from_json(roundtrip(fio.operator_to_json(A)))
    assert back.matrices.tobytes() == A.matrices.tobytes()
    assert back.weights.tobytes() == A.weights.tobytes()


def test_moment_kernel_and_triple_roundtrip(half_op):
    K = moment_kernel(half_op, 3)
    Kb = fio.moment_kernel_from_json(roundtrip(fio.moment_kernel_to_json(K)))
    assert Kb.max_power == 3 and Kb.blocks.tobytes() == K.blocks.tobytes()
    T = build_dilation(K)
    Tb = fio.triple_from_json(roundtrip(fio.triple_to_json(T)))
    for name in "UPWB":
        assert getattr(Tb, name).tobytes() == getattr(T, name).tobytes()
    assert Tb.trunc_depth == T.trunc_depth


def test_realization_export_shape():
    g = sample_paths(factorize(random_pd_kernel(np.random.default_rng(0), 2, 2)), 3, SeededRng(0))
    obj = roundtrip(fio.realization_to_json(g))
    assert obj["M"] == 3 and obj["points"] == ["p0", "p1"]
    assert len(obj["samples"]) == 3
    vals = np.array([complex(*z) for z in obj["samples"][1]["p1"]])
    np.testing.assert_array_equal(vals, g.samples[1, 1])


def test_convergence_csv_format():
    text = fio.convergence_csv([(1, 0.5, 0.0), (2, 0.25, 0.1)])
    assert text.splitlines() == ["m_or_M,max_abs_error,stderr_estimate", "1,0.5,0.0", "2,0.25,0.1"]


def test_write_atomic(tmp_path):
    p = tmp_path / "sub" / "x.json"
    fio.write_json(p, {"a": 1})
    assert json.loads(p.read_text()) == {"a": 1}
    assert [q.name for q in p.parent.iterdir()] == ["x.json"]
