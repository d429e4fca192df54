import hashlib
import math

import numpy as np
import pytest

from sphex.errors import FormatError, InputDataError, InvalidParameterError
from sphex.harmonics import ProblemParams
from sphex.modelio import deserialize_model, load_model, save_model, serialize_model
from sphex.regression import (
    ExpansionModel,
    build_gram,
    evaluate,
    fit,
    fit_samples,
    kernel_value,
    pinv_solve,
    sample_count,
)
from sphex.sampling import sample_uniform_sphere
from sphex.validation import make_bandlimited


def test_kernel_values():
    assert kernel_value(ProblemParams(3, 2), 1.0) == pytest.approx(9 / (4 * math.pi), rel=1e-15)
    assert kernel_value(ProblemParams(3, 0), -0.4) == pytest.approx(1 / (4 * math.pi), rel=1e-15)
    for d, q in [(2, 5), (4, 3), (6, 7)]:
        p = ProblemParams(d, q)
        assert kernel_value(p, 1.0) == pytest.approx(p.beta / p.area_d, rel=1e-14)


def test_gram_single_point():
    p = ProblemParams(3, 4)
    K = build_gram(np.array([[0.0, 0.0, 1.0]]), p).entries
    assert K.shape == (1, 1) and K[0, 0] == pytest.approx(25.0, rel=1e-15)


def test_gram_antipodal():
    w = np.array([0.6, 0.0, 0.8])
    K = build_gram(np.stack([w, -w]), ProblemParams(3, 1)).entries
    assert K[0, 1] == pytest.approx(-1.0, abs=1e-15)
    assert K[0, 0] == pytest.approx(2.0, abs=1e-15)


def test_gram_diagonal_symmetry_psd():
    p = ProblemParams(4, 5)
    pts = sample_uniform_sphere(4, 150, 0)
    K = build_gram(pts, p).entries
    np.testing.assert_allclose(np.diag(K), p.beta / 150, rtol=1e-13)
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() > -1e-12


def test_gram_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        build_gram(np.eye(3), ProblemParams(4, 2))


def test_pinv_diagonal():
    f = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(pinv_solve(0.5 * np.eye(3), f), 2 * f, rtol=1e-15)


def test_pinv_rank3():
    rng = np.random.default_rng(1)
    u, _ = np.linalg.qr(rng.normal(size=(5, 5)))
    lam = np.array([3.0, 1.5, 0.25, 0.0, 0.0])
    K = (u * lam) @ u.T
    f = u[:, :3] @ rng.normal(size=3)
    z = pinv_solve(K, f)
    assert np.linalg.norm(K @ z - f) <= 1e-10 * np.linalg.norm(f)
    ref = u[:, :3] @ ((u[:, :3].T @ f) / lam[:3])
    np.testing.assert_allclose(z, ref, atol=1e-12)
    # null-space right-hand side is annihilated
    np.testing.assert_allclose(pinv_solve(K, u[:, 4]), 0.0, atol=1e-12)


def test_fit_constant():
    p = ProblemParams(3, 4)
    m = fit(lambda x: 1.0, p, 60, 0)
    test = sample_uniform_sphere(3, 100, 9).points
    np.testing.assert_allclose(evaluate(m, test), 1.0, atol=1e-10)


def test_fit_linear():
    m = fit(lambda x: x[0], ProblemParams(3, 1), 32, 7)
    test = sample_uniform_sphere(3, 100, 9).points
    np.testing.assert_allclose(evaluate(m, test), test[:, 0], atol=1e-10)


@pytest.mark.parametrize("d,q", [(3, 6), (4, 4), (2, 8), (5, 3)])
def test_exact_recovery(d, q):
    p = ProblemParams(d, q)
    f = make_bandlimited(p, 11)
    s = 4 * p.beta * math.ceil(math.log(p.beta))
    m = fit(f, p, s, 12)
    test = sample_uniform_sphere(d, 100, 13).points
    assert np.max(np.abs(evaluate(m, test) - f(test))) <= 1e-10
    # interpolation at a sample point
    assert evaluate(m, m.points[0]) == pytest.approx(f(m.points[0]), abs=1e-9)


def test_oracle_call_count_and_order():
    seen = []
    fit(lambda x: seen.append(np.array(x)) or 0.0, ProblemParams(3, 2), 20, 5)
    np.testing.assert_array_equal(np.array(seen), sample_uniform_sphere(3, 20, 5).points)


def test_linearity_and_zero():
    p = ProblemParams(3, 3)
    pts = sample_uniform_sphere(3, 40, 0).points
    a, b = pts[:, 0], pts[:, 1] * pts[:, 2]
    ma, mb, mab = (fit_samples(pts, v, p) for v in (a, b, 2 * a - 3 * b))
    test = sample_uniform_sphere(3, 50, 1).points
    np.testing.assert_allclose(evaluate(mab, test), 2 * evaluate(ma, test) - 3 * evaluate(mb, test), atol=1e-11)
    zero = ExpansionModel(pts, np.zeros(40), p)
    assert np.all(evaluate(zero, test) == 0.0)


def test_non_finite_oracle():
    values = iter([1.0, 2.0, float("nan")] + [0.0] * 10)
    with pytest.raises(InputDataError, match="index 2"):
        fit(lambda x: next(values), ProblemParams(3, 1), 10, 0)


def test_evaluate_dimension_mismatch():
    m = fit(lambda x: 1.0, ProblemParams(3, 1), 8, 0)
    with pytest.raises(InvalidParameterError):
        evaluate(m, [1.0, 0.0])


@pytest.mark.parametrize("s", [0, -3, 2.5])
def test_fit_bad_s(s):
    with pytest.raises(InvalidParameterError):
        fit(lambda x: 1.0, ProblemParams(3, 1), s, 0)


def test_sample_count():
    assert sample_count(ProblemParams(3, 5), 0.5, 0.1) == 1957
    assert sample_count(ProblemParams(3, 0), 1.0, 1.0) == 2
    counts = [sample_count(ProblemParams(4, q), 0.3, 0.2) for q in range(10)]
    assert counts == sorted(counts)
    for bad in [(0.0, 0.1), (0.5, 0.0), (1.5, 0.1)]:
        with pytest.raises(InvalidParameterError):
            sample_count(ProblemParams(3, 5), *bad)


# -- model files ---------------------------------------------------------------

@pytest.fixture
def model():
    p = ProblemParams(3, 2)
    return fit(make_bandlimited(p, 1), p, 20, 3)


def test_serialization_frozen(model):
    blob = serialize_model(model)
    assert blob[:4] == b"SHEX"
    assert len(blob) == 4 + 28 + 8 * 20 * 4 + 8
    assert hashlib.sha256(blob).hexdigest() == "51f031e1e4d75f8c6b14a75d1998146a4d5c22b8d022d003c8319feaf6e06372"


def test_round_trip(model, tmp_path):
    back = deserialize_model(serialize_model(model))
    assert back == model
    assert back.points.tobytes() == model.points.tobytes()
    save_model(model, tmp_path / "m.shex")
    assert load_model(tmp_path / "m.shex") == model


def test_truncated(model):
    blob = serialize_model(model)
    for cut in (0, 3, 20, len(blob) - 1):
        with pytest.raises(FormatError):
            deserialize_model(blob[:cut])


def test_missing_weight_record(model):
    p = ProblemParams(3, 1)
    small = ExpansionModel(sample_uniform_sphere(3, 3, 0).points, np.ones(3), p)
    blob = serialize_model(small)
    # drop the last weight record but keep a checksum trailer
    broken = blob[:-16] + blob[-8:]
    with pytest.raises(FormatError, match="weights"):
        deserialize_model(broken)


def test_corruption_and_version(model):
    blob = bytearray(serialize_model(model))
    blob[100] ^= 1
    with pytest.raises(FormatError, match="checksum"):
        deserialize_model(bytes(blob))
    blob = bytearray(serialize_model(model))
    blob[4] = 9
    with pytest.raises(FormatError, match="version"):
        deserialize_model(bytes(blob))
    with pytest.raises(FormatError, match="magic"):
        deserialize_model(b"XXXX" + bytes(serialize_model(model))[4:])


@pytest.mark.parametrize("d,q", [(3, 4), (4, 3)])
def test_gram_spectrum_concentrates(d, q):
    # K itself, not |S^{d-1}| K, approximates a projector; at 4 beta ln beta samples the
    # top beta eigenvalues straddle 1 loosely and only settle inside [1/2, 3/2] near 16 beta ln beta
    p = ProblemParams(d, q)
    for mult, lo, hi in ((4, 0.25, 2.5), (16, 0.5, 1.5)):
        s = math.ceil(mult * p.beta * math.log(p.beta))
        lam = np.linalg.eigvalsh(build_gram(sample_uniform_sphere(d, s, 2), p).entries)[::-1]
        assert lo <= lam[p.beta - 1] and lam[0] <= hi
        assert np.max(np.abs(lam[p.beta:])) <= 1e-8
