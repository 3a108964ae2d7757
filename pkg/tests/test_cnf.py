import logging

import pytest
from hypothesis import given, settings, strategies as st

from satfactor.cnf import (
    CnfError,
    DimacsError,
    Formula,
    Status,
    VarMap,
    evaluate,
    make_clause,
    parse_dimacs,
    parse_solver_output,
    unit_propagate,
    write_dimacs,
)

# the NAND gate z = not (x and y): (x or z)(y or z)(-x or -y or -z)
NAND = Formula(3, [(1, 3), (2, 3), (-1, -2, -3)])


class TestMakeClause:
    def test_valid(self):
        assert make_clause([1, -2, 3]) == (1, -2, 3)

    def test_empty_rejected(self):
        with pytest.raises(CnfError):
            make_clause([])

    def test_duplicate_rejected(self):
        with pytest.raises(CnfError, match="duplicate"):
            make_clause([1, 1])

    def test_tautology_rejected(self):
        with pytest.raises(CnfError, match="tautolog"):
            make_clause([1, -1])

    def test_zero_rejected(self):
        with pytest.raises(CnfError):
            make_clause([0])


class TestFormula:
    def test_out_of_range_literal(self):
        with pytest.raises(CnfError, match="out of range"):
            Formula(1, [(1, -2)])

    def test_empty_formula(self):
        assert Formula(0, []).clauses == []


class TestWriteDimacs:
    def test_single_unit(self):
        assert write_dimacs(Formula(1, [(1,)])) == "p cnf 1 1\n1 0\n"

    def test_nand_gate(self):
        text = write_dimacs(NAND)
        lines = text.splitlines()
        assert lines[0] == "p cnf 3 3"
        assert lines[1:] == ["1 3 0", "2 3 0", "-1 -2 -3 0"]

    def test_varmap_comments(self):
        vm = VarMap(p_bits=[1], q_bits=[2], out_bits=[3], sel_vars=[], targets=[5])
        text = write_dimacs(Formula(3, [(1, 2, 3)], varmap=vm))
        assert "c varmap p 0 1" in text
        assert "c varmap q 0 2" in text
        assert "c varmap out 0 3" in text
        assert "c target 0 5" in text


class TestParseDimacs:
    def test_basic(self):
        f = parse_dimacs("p cnf 2 1\n1 -2 0\n")
        assert f.num_vars == 2
        assert f.clauses == [(1, -2)]

    def test_clause_count_mismatch(self):
        with pytest.raises(DimacsError, match="clause count mismatch"):
            parse_dimacs("p cnf 2 3\n1 0\n2 0\n")

    def test_variable_out_of_range(self):
        with pytest.raises(DimacsError, match="out of range"):
            parse_dimacs("p cnf 1 1\n2 0\n")

    def test_missing_terminating_zero(self):
        with pytest.raises(DimacsError, match="terminating 0"):
            parse_dimacs("p cnf 2 1\n1 -2\n")

    def test_malformed_header(self):
        with pytest.raises(DimacsError, match="header"):
            parse_dimacs("p dnf 2 1\n1 0\n")

    def test_error_carries_line_number(self):
        with pytest.raises(DimacsError) as exc:
            parse_dimacs("c hi\np cnf 1 1\n2 0\n")
        assert exc.value.line_no == 3

    def test_clause_spanning_lines(self):
        f = parse_dimacs("p cnf 3 1\n1 2\n3 0\n")
        assert f.clauses == [(1, 2, 3)]

    def test_plain_comments_dropped(self):
        f = parse_dimacs("c nothing\np cnf 1 1\n1 0\n")
        assert f.varmap is None

    def test_varmap_round_trip(self):
        vm = VarMap(p_bits=[1, 2], q_bits=[3], out_bits=[4, 5], sel_vars=[6], targets=[35, 77])
        f = Formula(6, [(1, -3), (2, 4, 6)], varmap=vm)
        assert parse_dimacs(write_dimacs(f)) == f


def lits(num_vars):
    return st.integers(min_value=1, max_value=num_vars).flatmap(
        lambda v: st.sampled_from([v, -v])
    )


@st.composite
def formulas(draw):
    num_vars = draw(st.integers(min_value=1, max_value=12))
    n_clauses = draw(st.integers(min_value=0, max_value=20))
    clauses = []
    for _ in range(n_clauses):
        size = draw(st.integers(min_value=1, max_value=min(4, num_vars)))
        variables = draw(
            st.lists(
                st.integers(min_value=1, max_value=num_vars),
                min_size=size, max_size=size, unique=True,
            )
        )
        signs = draw(st.lists(st.booleans(), min_size=size, max_size=size))
        clauses.append(tuple(v if s else -v for v, s in zip(variables, signs)))
    return Formula(num_vars, clauses)


@settings(max_examples=150, deadline=None)
@given(formulas())
def test_dimacs_round_trip_property(formula):
    assert parse_dimacs(write_dimacs(formula)) == formula


class TestParseSolverOutput:
    def test_sat_with_model(self):
        status, assignment = parse_solver_output("s SATISFIABLE\nv 1 -2 0\n")
        assert status is Status.SAT
        assert assignment == {1: True, 2: False}

    def test_unsat(self):
        assert parse_solver_output("s UNSATISFIABLE\n") == (Status.UNSAT, None)

    def test_comment_only(self):
        assert parse_solver_output("c timeout\n") == (Status.UNKNOWN, None)

    def test_sat_without_complete_model(self, caplog):
        with caplog.at_level(logging.WARNING):
            status, assignment = parse_solver_output("s SATISFIABLE\nv 1 -2\n")
        assert status is Status.UNKNOWN
        assert assignment is None
        assert any("no 0-terminated model" in r.message for r in caplog.records)

    def test_model_spanning_lines(self):
        status, assignment = parse_solver_output("s SATISFIABLE\nv 1 2\nv -3 0\n")
        assert status is Status.SAT
        assert assignment == {1: True, 2: True, 3: False}

    def test_covers_exactly_v_line_variables(self):
        _, assignment = parse_solver_output("s SATISFIABLE\nv 5 -9 0\n")
        assert set(assignment) == {5, 9}


class TestEvaluate:
    def test_nand_satisfying(self):
        # with x true and y false the gate output z must be true
        assert evaluate(NAND, {1: True, 2: False, 3: True})

    def test_nand_violated(self):
        assert not evaluate(NAND, {1: True, 2: True, 3: True})

    def test_empty_clause_list(self):
        assert evaluate(Formula(2, []), {})

    def test_unassigned_variable(self):
        with pytest.raises(CnfError, match="unassigned"):
            evaluate(NAND, {1: True, 2: False})


class TestUnitPropagate:
    def test_chain(self):
        f = Formula(2, [(1,), (-1, 2)])
        result = unit_propagate(f)
        assert not result.conflict
        assert result.units == {1: True, 2: True}
        assert result.formula.clauses == []

    def test_conflict(self):
        result = unit_propagate(Formula(1, [(1,), (-1,)]))
        assert result.conflict

    def test_fixpoint_no_units(self):
        f = Formula(3, [(1, 2), (-2, 3)])
        result = unit_propagate(f)
        assert result.units == {}
        assert result.formula.clauses == f.clauses

    def test_preserves_variable_ids(self):
        f = Formula(5, [(3,), (-3, 5, 4)])
        result = unit_propagate(f)
        assert result.units == {3: True}
        assert result.formula.clauses == [(5, 4)]
        assert result.formula.num_vars == 5


@settings(max_examples=100, deadline=None)
@given(formulas())
def test_unit_propagation_preserves_evaluation(formula):
    import itertools

    result = unit_propagate(formula)
    if result.conflict:
        return
    for bits in itertools.product([False, True], repeat=formula.num_vars):
        assignment = {v + 1: bits[v] for v in range(formula.num_vars)}
        if any(assignment[var] != val for var, val in result.units.items()):
            continue
        assert evaluate(formula, assignment) == evaluate(result.formula, assignment)
