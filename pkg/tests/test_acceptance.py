"""Acceptance criteria, one test per criterion.

Each test prints the standard one-line verdict so a plain ``pytest -s``
run doubles as the acceptance protocol; ``calderon acceptance`` runs
the same checks from the command line.
"""


from calderon import acceptance


def _check(criterion):
    result = criterion()
    print(result.line)
    assert result.passed, result.line
    return result


def test_criterion_01_projector_algebra():
    _check(acceptance.criterion_1)


def test_criterion_02_closed_form_projector():
    _check(acceptance.criterion_2)


def test_criterion_03_symbol_orders():
    res = _check(acceptance.criterion_3)
    assert "growth_slopes" in res.data


def test_criterion_04_hardy_point():
    _check(acceptance.criterion_4)


def test_criterion_05_schatten_n2_q0():
    _check(acceptance.criterion_5)


def test_criterion_06_schatten_n2_q1():
    _check(acceptance.criterion_6)


def test_criterion_07_schatten_n3_q0():
    _check(acceptance.criterion_7)


def test_criterion_08_fredholm_indices():
    _check(acceptance.criterion_8)


def test_criterion_09_functional_calculus():
    _check(acceptance.criterion_9)


def test_criterion_10_principal_symbol_dependence():
    _check(acceptance.criterion_10)
