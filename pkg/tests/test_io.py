import json

import numpy as np
import pytest

from curvemix import BasisSpec, CurveSet, fit_robust_em
from curvemix.basis import design_matrix
from curvemix.datagen import generate_two_class
from curvemix.io import CurveParseError, emit_curves, emit_results, ingest_curves, read_labels


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_wide_minimal(tmp_path):
    p = write(tmp_path, "w.csv", "x,0,0.5,1\na,1,2,3\nb,4,5,6\n")
    data = ingest_curves(p)
    assert (data.n, data.m) == (2, 3)
    assert data.curve_ids == ["a", "b"]
    np.testing.assert_array_equal(data.y, [[1, 2, 3], [4, 5, 6]])
    assert data.true_labels is None


def test_long_order_independent(tmp_path):
    rows = [("a", 0.0, 1.0), ("a", 0.5, 2.0), ("a", 1.0, 3.0),
            ("b", 0.0, 4.0), ("b", 0.5, 5.0), ("b", 1.0, 6.0)]
    body = "\n".join(f"{c},{x},{y}" for c, x, y in rows)
    shuffled = "\n".join(f"{c},{x},{y}" for c, x, y in [rows[i] for i in (4, 2, 0, 5, 1, 3)])
    a = ingest_curves(write(tmp_path, "a.csv", "curve_id,x,y\n" + body + "\n"))
    b = ingest_curves(write(tmp_path, "b.csv", "curve_id,x,y\n" + shuffled + "\n"))
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y[np.argsort(a.curve_ids)], b.y[np.argsort(b.curve_ids)])
    np.testing.assert_array_equal(a.y, [[1, 2, 3], [4, 5, 6]])


def test_long_labels(tmp_path):
    p = write(tmp_path, "l.csv", "curve_id,x,y,label\n1,0,1,2\n1,1,2,2\n2,0,1,1\n2,1,3,1\n")
    data = ingest_curves(p)
    np.testing.assert_array_equal(data.true_labels, [2, 1])


@pytest.mark.parametrize("layout", ["long", "wide"])
def test_round_trip(tmp_path, layout):
    data = generate_two_class(4)
    path = tmp_path / f"{layout}.csv"
    emit_curves(data, path, layout=layout)
    back = ingest_curves(path)
    np.testing.assert_array_equal(back.x, data.x)
    np.testing.assert_array_equal(back.y, data.y)
    assert back.curve_ids == data.curve_ids
    if layout == "long":
        np.testing.assert_array_equal(back.true_labels, data.true_labels)


def test_round_trip_awkward_values(tmp_path):
    y = np.array([[0.1, 1 / 3, -2.5e-300], [1e300, np.pi, -0.0]])
    data = CurveSet([0.0, 1e-17, 1.0], y)
    emit_curves(data, tmp_path / "c.csv")
    np.testing.assert_array_equal(ingest_curves(tmp_path / "c.csv").y, y)


@pytest.mark.parametrize("text,line,fragment", [
    ("x,0,1\na,1,2\nb,1\n", 3, "expected 3 cells"),
    ("x,0,1\na,1,zz\n", 2, "non-numeric"),
    ("curve_id,x,y\na,0,1\na,1,2\na,0,3\n", 4, "duplicate point"),
    ("curve_id,x,y\na,0,1\na,1,2\nb,0,1\n", 4, "has 1 points"),
    ("curve_id,x,y\na,0,1\na,1,nan\n", 3, "non-finite"),
    ("foo,bar\n1,2\n", 1, "unrecognized header"),
    ("curve_id,x,y,label\na,0,1,1\na,1,2,2\n", 3, "conflicting labels"),
])
def test_parse_errors(tmp_path, text, line, fragment):
    with pytest.raises(CurveParseError) as exc:
        ingest_curves(write(tmp_path, "bad.csv", text))
    assert exc.value.line == line
    assert fragment in str(exc.value)
    assert f":{line}:" in str(exc.value)


@pytest.fixture(scope="module")
def fitted():
    data = generate_two_class(0)
    return data, fit_robust_em(data, BasisSpec.polynomial(1))


def test_emit_results(tmp_path, fitted):
    data, res = fitted
    bundle = emit_results(res, data, tmp_path / "out")

    trace = np.genfromtxt(bundle.trace, delimiter=",", names=True)
    assert bundle.trace.read_text().splitlines()[0] == "iter,K,lambda,loglik,penalized_loglik"
    assert int(trace["K"][-1]) == 2
    assert len(trace) == res.n_iter + 1

    lines = bundle.labels.read_text().splitlines()
    assert lines[0] == "curve_id,cluster,max_posterior"
    assert len(lines) == data.n + 1
    assert read_labels(bundle.labels) == dict(zip(data.curve_ids, res.labels.tolist()))

    doc = json.loads(bundle.params.read_text())
    assert doc["K"] == 2 and doc["converged"] is True
    np.testing.assert_array_equal(doc["beta"], res.params.beta)
    assert doc["basis"] == {"kind": "polynomial", "degree": 1, "interior_knots": []}

    means = np.genfromtxt(bundle.means, delimiter=",", names=True)
    assert means.dtype.names == ("x", "cluster_1", "cluster_2")
    X = np.column_stack([np.ones(50), means["x"]])
    for k in range(2):
        np.testing.assert_allclose(means[f"cluster_{k + 1}"], X @ res.params.beta[k], atol=1e-15)


def test_means_bspline(tmp_path):
    data = generate_two_class(2)
    basis = BasisSpec.bspline_uniform(2, 1, data.x)
    res = fit_robust_em(data, basis)
    bundle = emit_results(res, data, tmp_path)
    table = np.loadtxt(bundle.means, delimiter=",", skiprows=1)
    X = design_matrix(basis, table[:, 0]).values
    np.testing.assert_allclose(table[:, 1:], X @ res.params.beta.T, atol=1e-14)


def test_unwritable_directory(tmp_path, fitted):
    data, res = fitted
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit_results(res, data, blocker / "sub")


def test_read_labels_from_curve_file(tmp_path):
    data = generate_two_class(1)
    emit_curves(data, tmp_path / "c.csv")
    labels = read_labels(tmp_path / "c.csv")
    assert list(labels.values()) == data.true_labels.tolist()
    with pytest.raises(CurveParseError):
        read_labels(write(tmp_path, "nolab.csv", "x,0,1\na,1,2\n"))
