import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sbrefactor.estimator import ScratchRefactorer, check_program, check_programs
from sbrefactor.metrics import evaluate
from sbrefactor.samples import corpus_dir, fig1a, fig5a
from sbrefactor.sb3 import dumps
from sbrefactor.scratch_ast import structural_eq

SMALL = dict(population_size=16, max_generations=15, random_state=1)


def test_params_round_trip_through_clone():
    est = ScratchRefactorer(population_size=10, kinds=("SwapStatements",))
    params = clone(est).get_params()
    assert params["population_size"] == 10
    assert params["kinds"] == ("SwapStatements",)


def test_check_program_accepts_several_inputs():
    p = fig1a()
    path = corpus_dir() / "fig1a_loop_exit.sb3"
    assert check_program(p) is p
    assert structural_eq(check_program(path), p)
    assert structural_eq(check_program(str(path)), p)
    assert structural_eq(check_program(path.read_bytes()), p)
    with pytest.raises(TypeError):
        check_program(42)
    with pytest.raises(ValueError):
        check_programs([])


def test_transform_before_fit():
    with pytest.raises(NotFittedError):
        ScratchRefactorer().transform([fig1a()])


def test_fit_transform_improves_fig1a():
    est = ScratchRefactorer(**SMALL).fit([fig1a(), fig5a()])
    assert len(est.results_) == 2 and len(est.fronts_[1]) == 0
    out = est.transform([fig1a(), fig5a()])
    assert structural_eq(out[1], fig5a())
    base, new = evaluate(fig1a()), evaluate(out[0])
    assert sum(n / b for n, b in zip(new, base)) < 3
    assert 0 < est.score([fig1a()]) < 1
    assert est.score([fig5a()]) == 1.0


def test_fit_is_deterministic():
    a = ScratchRefactorer(**SMALL).fit(fig1a()).transform(fig1a())
    b = ScratchRefactorer(**SMALL).fit(fig1a()).transform(fig1a())
    assert dumps(a[0]) == dumps(b[0])
