import numpy as np
import pytest
from scipy import stats

from levyaug import (
    GaussianSimSpec,
    PoissonSimSpec,
    RngState,
    TrainConfig,
    gen_gaussian_sim,
    gen_poisson_sim,
    render_sweep_svg,
    run_alpha_sweep,
    write_sweep_csv,
)
from levyaug.simulation import _draw_atoms

from conftest import mean_close_3sigma

FAST_CFG = TrainConfig(ridge_lambda=(1.0, 0.1, 0.01))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def test_gaussian_label_marginal():
    spec = GaussianSimSpec()
    train, _ = gen_gaussian_sim(spec, 10_000, RngState(61).generator())
    ys = np.array([ex.y for ex in train])
    frac = (ys == 2).mean()
    assert abs(frac - 0.5) <= 3.0 * 0.5 / np.sqrt(len(ys))


def test_gaussian_atoms_zero_outside_signal_block():
    spec = GaussianSimSpec()
    atoms = _draw_atoms(spec, RngState(62).generator())
    assert atoms.shape == (2, 10, 100)
    assert np.all(atoms[:, :, 20:] == 0.0)
    assert np.any(atoms[:, :, :20] != 0.0)


def test_gaussian_unit_noise_around_atom():
    spec = GaussianSimSpec(atoms_per_class=1)  # single atom per class pins mu | y
    g = RngState(63).generator()
    atoms = _draw_atoms(spec, RngState(63).generator())
    train, _ = gen_gaussian_sim(spec, 10_000, g)
    x1 = np.stack([ex.x for ex in train if ex.y == 1])
    resid = x1 - atoms[0, 0]
    per_coord_var = resid.var(axis=0, ddof=1)
    assert np.abs(per_coord_var.mean() - 1.0) < 0.05
    assert all(ex.t == 1.0 for ex in train[:10])


def test_gaussian_test_set_size_is_10n_capped():
    spec = GaussianSimSpec()
    _, test = gen_gaussian_sim(spec, 30, RngState(64).generator())
    assert len(test) == 300
    _, test = gen_gaussian_sim(spec, 2000, RngState(64).generator())
    assert len(test) == 10_000


def test_poisson_expected_total_count():
    spec = PoissonSimSpec()
    train, _ = gen_poisson_sim(spec, 1000, RngState(65).generator())
    totals = np.array([ex.x.sum() for ex in train], dtype=float)
    assert abs(totals.mean() - 1000.0) / 1000.0 < 0.01
    assert all(ex.t == 1000.0 for ex in train[:10])


def test_poisson_class1_rates_match_normalization():
    spec = PoissonSimSpec()
    train, _ = gen_poisson_sim(spec, 4000, RngState(66).generator())
    x1 = np.stack([ex.x for ex in train if ex.y == 1]).astype(float)
    base = 1000.0 / (7.0 * np.e + 493.0)
    # pooled blocks (componentwise 3-sigma over 500 coords would trip on
    # multiplicity): background rate and the e-times-elevated signal block
    assert mean_close_3sigma(x1[:, 7:].ravel(), base)
    assert mean_close_3sigma(x1[:, :7].ravel(), np.e * base)


def test_poisson_class2_signal_block_is_elevated():
    spec = PoissonSimSpec()
    train, _ = gen_poisson_sim(spec, 4000, RngState(67).generator())
    x2 = np.stack([ex.x for ex in train if ex.y == 2]).astype(float)
    # tau > 0 always, so coordinates 8..14 run above the background block
    assert x2[:, 7:14].mean() > x2[:, 14:].mean()
    assert x2[:, :7].mean() == pytest.approx(x2[:, 14:].mean(), rel=0.05)


# ---------------------------------------------------------------------------
# sweep runner
# ---------------------------------------------------------------------------

def _tiny_gauss_sweep(seed=41, jobs=1):
    spec = GaussianSimSpec(d=12, n_signal=4)
    return run_alpha_sweep(
        spec,
        alphas=(0.0, 0.5, 1.0),
        n_grid=(24,),
        n_pseudo=4,
        replicates=3,
        seed=seed,
        train_cfg=FAST_CFG,
        jobs=jobs,
    )


def test_sweep_rows_cover_grid():
    res = _tiny_gauss_sweep()
    assert len(res.rows) == 9
    seen = {(r.n, r.alpha, r.replicate) for r in res.rows}
    assert len(seen) == 9
    assert all(0.0 <= r.test_error <= 1.0 for r in res.rows)
    assert not res.failures


def test_sweep_reproducible_and_schedule_independent():
    a = _tiny_gauss_sweep(jobs=1)
    b = _tiny_gauss_sweep(jobs=2)
    for ra, rb in zip(a.rows, b.rows):
        assert (ra.spec_id, ra.n, ra.alpha, ra.replicate) == (
            rb.spec_id, rb.n, rb.alpha, rb.replicate,
        )
        assert ra.test_error == rb.test_error
        assert ra.ridge_lambda == rb.ridge_lambda


def test_sweep_alpha_one_equals_direct_pipeline():
    import warnings

    from levyaug import calibrate, fit_logistic_detailed, gaussian_family
    from levyaug.logistic import predict_labels
    from levyaug.simulation import _generate
    from levyaug.thinning import ThinningConfig, generate_pseudo_examples

    spec = GaussianSimSpec(d=12, n_signal=4)
    res = _tiny_gauss_sweep()
    row = next(r for r in res.rows if r.alpha == 1.0 and r.replicate == 1)

    base = RngState(41)
    train, test = _generate(spec, 24, base.spawn(1, 24, 1))
    fam = gaussian_family(12)
    pseudo = generate_pseudo_examples(
        train, ThinningConfig(1.0, 1, base.substate(2, 24, 1, 10**9)), fam
    )
    model, report = fit_logistic_detailed(pseudo, FAST_CFG)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = calibrate(model, train)
    truth = np.array([ex.y for ex in test])
    err = float((predict_labels(model, test) != truth).mean())
    assert err == row.test_error
    assert report.chosen_lambda == row.ridge_lambda


def test_sweep_records_failed_cells_instead_of_dropping():
    # 2 origins cannot be split into 3 CV folds -> the cell fails but stays
    spec = GaussianSimSpec(d=6, n_signal=2)
    res = run_alpha_sweep(
        spec,
        alphas=(0.5,),
        n_grid=(2,),
        n_pseudo=2,
        replicates=1,
        seed=1,
        train_cfg=TrainConfig(ridge_lambda=(1.0, 0.1), n_folds=3),
    )
    assert len(res.rows) == 1
    assert np.isnan(res.rows[0].test_error)
    assert len(res.failures) == 1


def test_monotone_data_benefit_at_alpha_one():
    spec = GaussianSimSpec(d=12, n_signal=4)
    res = run_alpha_sweep(
        spec,
        alphas=(1.0,),
        n_grid=(20, 200),
        n_pseudo=1,
        replicates=8,
        seed=9,
        train_cfg=FAST_CFG,
    )
    errs = {}
    for r in res.rows:
        errs.setdefault(r.n, []).append(r.test_error)
    small, big = np.array(errs[20]), np.array(errs[200])
    # more data must not significantly increase the error
    if big.mean() > small.mean():
        p = stats.ttest_rel(big, small, alternative="greater").pvalue
        assert p > 0.05
    else:
        assert big.mean() <= small.mean()


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def test_csv_header_and_timing_modes(tmp_path):
    res = _tiny_gauss_sweep()
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    write_sweep_csv(res, p1, timing="zero")
    write_sweep_csv(res, p2, timing="zero")
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == "spec,n,alpha,replicate,test_error,lambda,wall_ms"
    assert len(lines) == 10
    assert all(line.endswith(",0") for line in lines[1:])
    write_sweep_csv(res, p1, timing="measured")
    measured = p1.read_text().splitlines()
    assert any(not line.endswith(",0") for line in measured[1:])


def test_manifest_contents():
    res = _tiny_gauss_sweep()
    m = res.manifest()
    assert m["seed"] == 41
    assert m["spec"]["d"] == 12
    assert m["alphas"] == [0.0, 0.5, 1.0]
    assert m["failures"] == []


def test_svg_render(tmp_path):
    res = _tiny_gauss_sweep()
    out = tmp_path / "sweep.svg"
    render_sweep_svg(res, out)
    text = out.read_text()
    assert text.startswith("<svg")
    assert "polyline" in text
    assert "n=24" in text
