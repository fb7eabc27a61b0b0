"""Tests for covariance-matrix files, Monte Carlo errors and reports."""

import json

import numpy as np
import pytest

from cv_entangler import certification as cert
from cv_entangler import gaussian as gs
from cv_entangler.protocols import bipartitions, protocol1_state

# the measured matrices as printed, row by row
PRINTED = {
    "gamma1": np.array(
        [
            [5.42, 0.23, 3.34, -0.73, 4.06, 0.04],
            [0.23, 19.28, 0.00, 0.00, 0.45, 17.29],
            [3.34, 0.00, 3.43, -0.54, 3.06, -0.03],
            [-0.73, 0.00, -0.54, 1.12, -0.67, 0.01],
            [4.06, 0.45, 3.06, -0.67, 4.73, 0.55],
            [0.04, 17.29, -0.03, 0.01, 0.55, 17.70],
        ]
    ),
    "gamma2": np.array(
        [
            [20.90, 1.10, 5.17, -8.59, -7.80, -1.68],
            [1.10, 25.31, -5.04, -6.76, 1.00, 14.64],
            [5.17, -5.04, 11.87, -0.45, 4.95, 4.49],
            [-8.59, -6.76, -0.45, 18.88, -8.61, 6.04],
            [-7.80, 1.00, 4.95, -8.61, 20.68, 0.80],
            [-1.68, 14.64, 4.49, 6.04, 0.80, 24.65],
        ]
    ),
}


@pytest.fixture(scope="module")
def gamma1():
    return cert.load_fixture("gamma1")


def test_fixture_values_and_label(gamma1):
    assert gamma1.label == "gamma1"
    assert gamma1.n_modes == 3
    np.testing.assert_allclose(gamma1.sigma, 0.0125)
    assert np.array_equal(gamma1.cm, gamma1.cm.T)


@pytest.mark.parametrize("name", ["gamma1", "gamma2"])
def test_fixtures_match_printed_matrices(name):
    measured = cert.load_fixture(name)
    np.testing.assert_array_equal(measured.cm, PRINTED[name])
    assert measured.label == name


def test_fixture_ac_submatrix(gamma1):
    keep = [0, 1, 4, 5]
    np.testing.assert_array_equal(gs.partial_trace(gamma1.cm, [0, 2]), PRINTED["gamma1"][np.ix_(keep, keep)])


def test_parse_identity_is_vacuum():
    measured = cert.parse_cm("1 0\n0 1\n")
    np.testing.assert_array_equal(measured.cm, gs.vacuum(1))
    assert measured.sigma is None and measured.label == ""


def test_parse_comments_label_and_sigma():
    text = "# label: demo\n# comment\n\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\nSIGMA\n" + "0.1 0.1 0.1 0.1\n" * 4
    measured = cert.parse_cm(text)
    assert measured.label == "demo"
    np.testing.assert_allclose(measured.sigma, 0.1)


@pytest.mark.parametrize(
    "text, line, column, match",
    [
        ("1 0\n0 1x\n", 2, 3, "malformed"),
        ("1 0 0\n0 1 0\n0 0 1\n", 1, None, "odd"),
        ("1 0\n0 1\n0 0\n", 3, None, "not square"),
        ("1 0\n0\n", 2, None, "entries"),
        ("# only a comment\n", None, None, "empty"),
        ("1 0\n0 1\nSIGMA\n0.1 0.1\n0.1 x\n", 5, 5, "malformed"),
    ],
)
def test_parse_errors_carry_position(text, line, column, match):
    with pytest.raises(cert.CMFormatError, match=match) as info:
        cert.parse_cm(text)
    assert info.value.line == line
    assert info.value.column == column


def test_parse_rejects_five_by_five():
    with pytest.raises(cert.CMFormatError, match="odd"):
        cert.parse_cm("\n".join(" ".join("1" if i == j else "0" for j in range(5)) for i in range(5)))


def test_parse_sigma_errors():
    with pytest.raises(cert.CMFormatError, match="SIGMA"):
        cert.parse_cm("1 0\n0 1\nSIGMA\n0.1 0.1 0.1 0.1\n" * 1 + "0.1 0.1 0.1 0.1\n" * 3)
    with pytest.raises(cert.CMFormatError, match="negative"):
        cert.parse_cm("1 0\n0 1\nSIGMA\n0.1 -0.1\n-0.1 0.1\n")


def test_asymmetric_matrix_is_symmetrized_with_warning():
    with pytest.warns(RuntimeWarning, match="asymmetric"):
        measured = cert.parse_cm("1 0.2\n0 1\n")
    np.testing.assert_array_equal(measured.cm, [[1, 0.1], [0.1, 1]])


def test_measured_cm_validation():
    with pytest.raises(ValueError):
        cert.MeasuredCM(np.eye(2), sigma=np.full((2, 2), -1.0))
    with pytest.raises(ValueError):
        cert.MeasuredCM(np.eye(2), sigma=np.array([[0.1, 0.2], [0.0, 0.1]]))
    with pytest.raises(ValueError):
        cert.MeasuredCM(np.eye(2), sigma=np.zeros((4, 4)))


def test_format_parse_round_trip():
    rng = np.random.default_rng(0)
    cm = protocol1_state(0.37)
    sigma = rng.uniform(0.002, 0.02, size=(6, 6))
    sigma = (sigma + sigma.T) / 2
    parsed = cert.parse_cm(cert.format_cm(cm, sigma, label="theory"))
    np.testing.assert_array_equal(parsed.cm, cm)
    np.testing.assert_array_equal(parsed.sigma, sigma)
    assert parsed.label == "theory"


def test_read_cm_from_file(tmp_path, gamma1):
    path = tmp_path / "copy.cm"
    path.write_text(cert.format_cm(gamma1), encoding="utf-8")
    copy = cert.read_cm(path)
    np.testing.assert_array_equal(copy.cm, gamma1.cm)
    np.testing.assert_array_equal(copy.sigma, gamma1.sigma)


def test_text_report_verdicts(gamma1):
    text = cert.render_report(cert.certify(gamma1))
    assert "entangled A|BC" in text
    assert "separable B|AC" in text
    assert "entangled C|AB" in text


def test_vacuum_report_all_zero():
    report = cert.certify(cert.MeasuredCM(gs.vacuum(3)))
    text = cert.render_report(report)
    rows = text.splitlines()[3:]
    assert len(rows) == 6
    for row in rows:
        assert row.split()[2] == "0"


def test_json_round_trip(gamma1):
    report = cert.certify(gamma1, draws=500, seed=4)
    text = cert.render_report(report, "json")
    data = json.loads(text)
    assert data["schema"] == cert.REPORT_SCHEMA and data["version"] == cert.REPORT_VERSION
    again = cert.report_from_json(text)
    assert cert.render_report(again, "json") == text
    assert again.separability == report.separability


def test_json_rejects_foreign_schema():
    with pytest.raises(ValueError):
        cert.report_from_dict({"schema": "other", "version": 1})


def test_csv_report(gamma1):
    lines = cert.render_report(cert.certify(gamma1), "csv").splitlines()
    assert lines[0].split(",") == cert.CSV_COLUMNS
    assert len(lines) == 7
    first = lines[1].split(",")
    assert first[:3] == ["A|BC", "A", "ABC"]
    assert float(first[3]) == cert.certify(gamma1).separability["A|BC"].min_eigenvalue


def test_unknown_format(gamma1):
    with pytest.raises(ValueError):
        cert.render_report(cert.certify(gamma1), "xml")


def test_monte_carlo_needs_sigma_and_draws(gamma1):
    with pytest.raises(ValueError, match="standard errors"):
        cert.monte_carlo_eigs(cert.MeasuredCM(gamma1.cm), 1000)
    with pytest.raises(ValueError, match="100"):
        cert.monte_carlo_eigs(gamma1, 50)


def test_zero_sigma_gives_zero_spread(gamma1):
    report = cert.monte_carlo_eigs(cert.MeasuredCM(gamma1.cm, sigma=np.zeros((6, 6))), 300)
    np.testing.assert_array_equal(report.mc_std, 0.0)
    np.testing.assert_array_equal(report.mc_mean, report.separability.eigenvalues())


def test_monte_carlo_deterministic_and_worker_independent(gamma1):
    a = cert.monte_carlo_samples(gamma1, 2500, seed=9, workers=1)
    b = cert.monte_carlo_samples(gamma1, 2500, seed=9, workers=3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, cert.monte_carlo_samples(gamma1, 2500, seed=10))


def test_point_estimates_independent_of_seed_and_draws(gamma1):
    a = cert.monte_carlo_eigs(gamma1, 200, seed=1).separability
    b = cert.monte_carlo_eigs(gamma1, 1000, seed=5).separability
    assert a == b == cert.certify(gamma1).separability


def _with_sigma(measured, sigma):
    return cert.MeasuredCM(measured.cm, sigma=np.full(measured.cm.shape, sigma))


def test_doubling_sigma_doubles_spread(gamma1):
    small = cert.monte_carlo_eigs(_with_sigma(gamma1, 0.002), 10_000).mc_std
    large = cert.monte_carlo_eigs(_with_sigma(gamma1, 0.004), 10_000).mc_std
    np.testing.assert_allclose(large / small, 2.0, rtol=0.1)


def first_order_std(cm, sigma, transposed, kept, h=1e-6):
    """Linearised spread: gradient of the eigenvalue over independent elements, times sigma."""
    idx = gs.quadrature_indices(kept)
    grad_sq = 0.0
    for i in range(cm.shape[0]):
        for j in range(i, cm.shape[0]):
            step = np.zeros_like(cm)
            step[i, j] = step[j, i] = h
            up = gs.min_eig_ppt((cm + step)[np.ix_(idx, idx)], transposed)
            down = gs.min_eig_ppt((cm - step)[np.ix_(idx, idx)], transposed)
            grad_sq += ((up - down) / (2 * h)) ** 2
    return sigma * np.sqrt(grad_sq)


def test_spread_matches_first_order_oracle(gamma1):
    sigma = 0.002
    report = cert.monte_carlo_eigs(_with_sigma(gamma1, sigma), 10_000)
    expected = [first_order_std(gamma1.cm, sigma, t, kept) for _, t, kept in bipartitions(3)]
    np.testing.assert_allclose(report.mc_std, expected, rtol=0.1)


def test_half_samples_agree(gamma1):
    samples = cert.monte_carlo_samples(gamma1, 10_000)
    first, second = samples[:5000].std(axis=0, ddof=1), samples[5000:].std(axis=0, ddof=1)
    np.testing.assert_allclose(first / second, 1.0, rtol=0.2)
