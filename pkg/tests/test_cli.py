import json

import numpy as np
import pytest

from levyaug import Example, RngState, load_model, poisson_family
from levyaug.cli import main
from levyaug.dataio import read_pseudo_dataset, write_dataset
from levyaug.families import gaussian_family
from levyaug.dataio import read_dataset


@pytest.fixture
def poisson_file(tmp_path):
    fam = poisson_family(3)
    g = RngState(71).generator()
    examples = [
        Example(x=g.poisson(3.0, size=3), y=1 + i % 2, t=9.0) for i in range(12)
    ]
    path = tmp_path / "counts.csv"
    write_dataset(path, fam, examples)
    return path


def test_thin_produces_tagged_rows(poisson_file, tmp_path):
    out = tmp_path / "pseudo.csv"
    code = main([
        "thin", "--input", str(poisson_file), "--output", str(out),
        "--alpha", "0.5", "-B", "4", "--seed", "3",
    ])
    assert code == 0
    fam, pseudo = read_pseudo_dataset(out)
    assert len(pseudo) == 48
    assert sorted({pe.origin_id for pe in pseudo}) == list(range(12))
    assert (out.parent / (out.name + ".manifest.json")).exists()


def test_thin_is_deterministic(poisson_file, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert main([
            "thin", "--input", str(poisson_file), "--output", str(out),
            "--alpha", "0.3", "-B", "2", "--seed", "11",
        ]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_thin_alpha_one_copies_features(poisson_file, tmp_path):
    out = tmp_path / "pseudo.csv"
    assert main([
        "thin", "--input", str(poisson_file), "--output", str(out),
        "--alpha", "1", "-B", "1", "--seed", "0",
    ]) == 0
    _, originals = read_dataset(poisson_file)
    _, pseudo = read_pseudo_dataset(out)
    for ex, pe in zip(originals, pseudo):
        assert np.array_equal(ex.x, pe.x_tilde)


def test_thin_exit_codes(tmp_path, poisson_file):
    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n")
    assert main([
        "thin", "--input", str(bad), "--output", str(tmp_path / "o.csv"),
        "--alpha", "0.5",
    ]) == 2

    negative = tmp_path / "neg.csv"
    negative.write_text(
        "# levyaug-dataset v1 family=poisson d=2\ny,t,x_1,x_2\n1,1.0,2,-1\n"
    )
    assert main([
        "thin", "--input", str(negative), "--output", str(tmp_path / "o.csv"),
        "--alpha", "0.5",
    ]) == 3

    assert main([
        "thin", "--input", str(poisson_file), "--output", str(tmp_path / "o.csv"),
        "--alpha", "1.7",
    ]) == 3

    assert main([
        "thin", "--input", str(poisson_file), "--output", str(tmp_path / "o.csv"),
        "--alpha", "0.5", "--family", "gamma",
    ]) == 2


def test_train_writes_model_and_cv_report(poisson_file, tmp_path):
    pseudo = tmp_path / "pseudo.csv"
    assert main([
        "thin", "--input", str(poisson_file), "--output", str(pseudo),
        "--alpha", "0.5", "-B", "6", "--seed", "5",
    ]) == 0
    model_path = tmp_path / "model.txt"
    code = main([
        "train", "--pseudo", str(pseudo), "--originals", str(poisson_file),
        "--out", str(model_path), "--ridge-lambda", "1.0,0.1,0.01", "--folds", "3",
    ])
    assert code == 0
    model, family = load_model(model_path)
    assert family == poisson_family(3)
    assert model.beta.shape == (3, 2)
    report = (tmp_path / "model.txt.cv.csv").read_text().splitlines()
    assert report[0] == "lambda,mean_heldout_loss,mean_heldout_error"
    assert len(report) == 4


def test_train_single_lambda_skips_cv(poisson_file, tmp_path):
    pseudo = tmp_path / "pseudo.csv"
    main([
        "thin", "--input", str(poisson_file), "--output", str(pseudo),
        "--alpha", "0.5", "-B", "2", "--seed", "5",
    ])
    model_path = tmp_path / "model.txt"
    assert main([
        "train", "--pseudo", str(pseudo), "--originals", str(poisson_file),
        "--out", str(model_path), "--ridge-lambda", "0.5",
    ]) == 0
    report = (tmp_path / "model.txt.cv.csv").read_text().splitlines()
    assert len(report) == 2  # header + the single lambda


def test_limit_fits_poisson_endpoint(poisson_file, tmp_path):
    model_path = tmp_path / "limit.txt"
    code = main([
        "limit", "--originals", str(poisson_file), "--family", "poisson",
        "--out", str(model_path),
    ])
    assert code == 0
    model, family = load_model(model_path)
    assert model.beta.shape == (3, 2)


def test_limit_family_mismatch_exits_2(tmp_path):
    fam = gaussian_family(2)
    spec_examples = [
        Example(x=np.array([0.1, 0.2]), y=1, t=1.0),
        Example(x=np.array([0.3, -0.2]), y=2, t=1.0),
    ]
    data = tmp_path / "gauss.csv"
    write_dataset(data, fam, spec_examples)
    assert main([
        "limit", "--originals", str(data), "--family", "poisson",
        "--out", str(tmp_path / "m.txt"),
    ]) == 2  # family mismatch against the file header


def test_simulate_reproduces_csv_byte_identical(tmp_path):
    args = [
        "simulate", "--spec", "gauss", "--out", None, "--alphas", "0,1",
        "--n-grid", "20", "--replicates", "2", "-B", "2",
        "--lambdas", "1.0,0.1", "--seed", "13", "--jobs", "1",
    ]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        argv = list(args)
        argv[4] = str(out)
        assert main(argv) == 0
    assert a.read_bytes() == b.read_bytes()
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["seed"] == 13
    assert manifest["version"]


def test_simulate_plot_output(tmp_path):
    out = tmp_path / "sweep.csv"
    svg = tmp_path / "sweep.svg"
    assert main([
        "simulate", "--spec", "gauss", "--out", str(out), "--alphas", "0.5,1",
        "--n-grid", "20", "--replicates", "2", "-B", "2",
        "--lambdas", "1.0,0.1", "--seed", "13", "--plot", str(svg), "--jobs", "1",
    ]) == 0
    assert svg.read_text().startswith("<svg")


def test_env_seed_default(poisson_file, tmp_path, monkeypatch):
    monkeypatch.setenv("LEVYAUG_SEED", "99")
    out1 = tmp_path / "env.csv"
    assert main([
        "thin", "--input", str(poisson_file), "--output", str(out1),
        "--alpha", "0.5",
    ]) == 0
    out2 = tmp_path / "explicit.csv"
    assert main([
        "thin", "--input", str(poisson_file), "--output", str(out2),
        "--alpha", "0.5", "--seed", "99",
    ]) == 0
    assert out1.read_bytes() == out2.read_bytes()
